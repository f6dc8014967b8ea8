#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "misfit/bayes.hpp"
#include "misfit/datasets.hpp"
#include "misfit/flow.hpp"
#include "misfit/mlp.hpp"

namespace misfit {

enum class ModelClass { glc, gl, fl };

ModelClass model_class_from_string(const std::string& s);
std::string to_string(ModelClass c);

// Everything needed to reproduce a run. Fields with value 0 (or empty)
// resolve to task-dependent defaults at use time.
struct TrainConfig {
  DatasetName dataset = DatasetName::unimodal1d;
  std::size_t n = 0;  // 0 -> 20 unimodal / 1000 bimodal1d / 512 bimodal2d
  std::uint64_t seed = 1;

  ModelClass model_class = ModelClass::glc;
  bool bayes = false;

  // GLc head
  double glc_sigma = 0.0;  // 0 -> task default
  bool matched_variance = false;

  // base network / hypernetwork
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::relu;

  // flow
  int flow_bins = 8;
  double flow_bound = 3.0;
  int flow_layers = 4;
  int flow_cond_hidden = 16;

  // variational posterior
  double prior_sigma = 1.0;
  int elbo_samples = 5;
  double init_q_sigma = 0.05;
  int posterior_draws = 100;

  // optimizer & schedule
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long steps = 0;           // 0 -> 3000 (1D) / 5000 (2D)
  std::size_t batch_size = 0;  // 0 -> full batch

  // held-out evaluation
  std::size_t test_n = 0;  // 0 -> 50 (1D) / 2000 (2D)
  std::uint64_t test_seed = 20260801;

  int y_dim() const { return dataset_y_dim(dataset); }
  std::size_t resolved_n() const;
  long resolved_steps() const;
  std::size_t resolved_test_n() const;
  double resolved_sigma() const;
  int theta_dim() const;   // network output width for the chosen head
  MlpSpec network() const;
  FlowConfig1D flow1d() const;
  FlowConfig2D flow2d() const;
  void validate() const;
};

// Per-x view of a model under one weight draw: closed-form moments for the
// Gaussian heads, spline state for flows. Supports density evaluation and
// common-random-number sampling (y = transform(z), z standard normal).
struct ModelSlice {
  ModelClass cls = ModelClass::glc;
  int y_dim = 1;
  // Gaussian heads: mean and covariance factor (Cholesky for 2D)
  double mu[2] = {0, 0};
  double chol[3] = {1, 0, 1};  // l11, l21, l22
  double log_det = 0.0;        // of the covariance
  FlowSlice1D flow1;
  FlowSlice2D flow2;

  double logpdf(const double* y) const;
  void sample(const double* z, double* y_out) const;
  // y range containing all but ~1e-15 of the mass, per dimension
  void support(double* lo, double* hi) const;
  double entropy_closed_form() const;  // Gaussian heads only
};

struct Model {
  TrainConfig config;
  std::vector<double> weights;   // deterministic models
  MeanFieldGaussian posterior;   // bayes models
  Normalizer normalizer;         // flows
  std::vector<std::pair<long, double>> loss_curve;  // (step, per-sample loss)

  int y_dim() const { return config.y_dim(); }
  int theta_dim() const { return config.theta_dim(); }

  // Raw network outputs theta = f(x; w).
  std::vector<double> theta(double x, const double* w) const;
  ModelSlice slice(double x, const double* w) const;
  double logpdf(double x, const double* y, const double* w) const;

  // Posterior weight draws (deterministic models: the single weight vector).
  std::vector<std::vector<double>> weight_draws(std::size_t count) const;
};

}  // namespace misfit
