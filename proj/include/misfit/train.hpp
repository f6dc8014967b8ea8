#pragma once

#include <functional>
#include <string>
#include <vector>

#include "misfit/model.hpp"

namespace misfit {

// Trains the configured model on its generated dataset. Deterministic per
// seed; throws DivergenceError (with the step index) if the loss or a
// gradient goes non-finite.
Model train(const TrainConfig& cfg);
// Same, on caller-supplied training data (sizes must match the config).
Model train_on(const TrainConfig& cfg, const Dataset& data);
// Freshly initialized model, no training steps taken.
Model init_model(const TrainConfig& cfg);

struct EvalReport {
  double test_nll = 0.0;  // per-sample, constants included
  bool has_mse = false;   // deterministic GLc only (mirrors the tables' N/A)
  double test_mse = 0.0;
  double wall_seconds = 0.0;
};

// Per-sample test NLL (Bayesian models average the predictive density over
// posterior draws before the log) and, for deterministic GLc, the MSE.
EvalReport evaluate(const Model& model, const Dataset& test);
EvalReport evaluate_default(const Model& model);  // held-out test per config

struct MomentMatchReport {
  double mean_abs_err = 0.0;  // avg |mu(x) - E[y|x]| over probes
  double cov_rel_err = 0.0;   // avg relative (Frobenius) covariance error
};

// Compares a GL model's learned moments against the ground truth on
// equidistant probes with |x| <= x_abs_max.
MomentMatchReport moment_match_check(const Model& model, int probes = 29,
                                     double x_abs_max = 3.5);
// Same comparison for an arbitrary GL-style theta provider (testing hook).
MomentMatchReport moment_match_probe(
    int y_dim, const std::function<std::vector<double>(double)>& theta_fn,
    const GroundTruth& gt, int probes = 29, double x_abs_max = 3.5);

// Monte-Carlo ELBO on the full dataset: average of K reparameterized NLLs
// plus the closed-form KL. eps_seed pins the noise (common random numbers
// for finite-difference checks); when grad is non-null it receives
// d(ELBO)/d(mean, raw_scale), both halves concatenated.
double elbo_loss(const TrainConfig& cfg, const Dataset& data,
                 const MeanFieldGaussian& q, int K, std::uint64_t eps_seed,
                 std::vector<double>* grad = nullptr);

struct TableRow {
  std::string model;
  double nll_mean = 0.0, nll_sem = 0.0;
  bool has_mse = false;
  double mse_mean = 0.0, mse_sem = 0.0;
};

struct TableResult {
  std::string id;
  int seeds = 0;
  std::vector<TableRow> rows;
};

// Canonical experiment configuration behind each table cell. Valid ids:
// S1 (2D bimodal), S2 (1D unimodal), S3 (1D bimodal, 50 points).
TrainConfig table_config(const std::string& table_id, ModelClass cls,
                         bool bayes, std::uint64_t seed);

// Full pipeline per model class and seed; seeds run 1..count. threads = 0
// picks MISFIT_THREADS or the hardware count.
TableResult reproduce_table(const std::string& table_id, int seeds,
                            unsigned threads = 0);

void write_table_csv(const TableResult& table, const std::string& path);

// MISFIT_THREADS override, else hardware concurrency.
unsigned worker_count();

}  // namespace misfit
