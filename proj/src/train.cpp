#include "misfit/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "misfit/adam.hpp"
#include "misfit/csv.hpp"
#include "misfit/errors.hpp"
#include "misfit/gaussian.hpp"
#include "misfit/tape.hpp"

namespace misfit {

namespace {

ad::Var gauss_nll_sum(ad::Tape& tape, ModelClass cls, int y_dim,
                      ad::NodeId theta_first, int theta_dim, const double* y,
                      std::size_t rows, double sigma) {
  using ad::Var;
  Var total;
  for (std::size_t r = 0; r < rows; ++r) {
    const ad::NodeId base =
        theta_first + static_cast<ad::NodeId>(r * theta_dim);
    Var nll;
    if (cls == ModelClass::glc && y_dim == 1) {
      nll = nll_glc_1d(Var(tape, base), y[r], sigma);
    } else if (cls == ModelClass::gl && y_dim == 1) {
      nll = nll_gl_1d(Var(tape, base), Var(tape, base + 1), y[r]);
    } else if (cls == ModelClass::glc) {
      nll = nll_glc_2d(Var(tape, base), Var(tape, base + 1), y + 2 * r,
                       sigma);
    } else {
      Var th[5] = {Var(tape, base), Var(tape, base + 1), Var(tape, base + 2),
                   Var(tape, base + 3), Var(tape, base + 4)};
      nll = nll_gl_2d(th, y + 2 * r);
    }
    total = (r == 0) ? nll : total + nll;
  }
  return total;
}

// Sum of per-sample NLLs for one weight-node set over the batch.
ad::Var batch_nll_sum(ad::Tape& tape, const TrainConfig& cfg,
                      const MlpSpec& net, std::vector<ad::NodeId> weight_ids,
                      const double* bx, const double* by, std::size_t rows,
                      const Normalizer& nrm) {
  const ad::NodeId theta_first =
      tape.mlp_batch(net, std::move(weight_ids), bx, rows);
  if (cfg.model_class == ModelClass::fl) {
    if (cfg.y_dim() == 1)
      return flow1d_nll_sum(tape, theta_first, by, rows, cfg.flow1d(), nrm);
    return flow2d_nll_sum(tape, theta_first, by, rows, cfg.flow2d(), nrm);
  }
  return gauss_nll_sum(tape, cfg.model_class, cfg.y_dim(), theta_first,
                       cfg.theta_dim(), by, rows, cfg.resolved_sigma());
}

// ELBO over a full batch: leaves for psi = [mean | raw_scale] go on the tape
// first (ids 0..2P-1), then K reparameterized NLL draws plus the KL.
ad::Var build_elbo(ad::Tape& tape, const TrainConfig& cfg,
                   const MlpSpec& net, const double* psi, std::size_t P,
                   const double* bx, const double* by, std::size_t rows,
                   std::size_t full_n, int K, CounterRng& eps_rng,
                   const Normalizer& nrm) {
  for (std::size_t i = 0; i < 2 * P; ++i) tape.leaf(psi[i]);
  std::vector<double> eps(P);
  ad::Var nll_avg;
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < P; ++i) eps[i] = eps_rng.normal();
    std::vector<ad::NodeId> wids =
        reparam_weights(tape, 0, static_cast<ad::NodeId>(P), P, eps.data());
    ad::Var nll_k = batch_nll_sum(tape, cfg, net, std::move(wids), bx, by,
                                  rows, nrm);
    if (!std::isfinite(nll_k.value()))
      throw DivergenceError(
          "non-finite NLL for posterior draw " + std::to_string(k), -1);
    nll_avg = (k == 0) ? nll_k : nll_avg + nll_k;
  }
  return nll_avg * (batch_scale(full_n, rows) / static_cast<double>(K)) +
         kl_meanfield_node(tape, 0, static_cast<ad::NodeId>(P), P,
                           WeightPrior{cfg.prior_sigma});
}

}  // namespace

Model init_model(const TrainConfig& cfg0) {
  TrainConfig cfg = cfg0;
  cfg.validate();
  const MlpSpec net = cfg.network();
  CounterRng init_rng(cfg.seed, streams::kInit);
  std::vector<double> w0 = init_params(net, init_rng);
  if (cfg.model_class == ModelClass::fl) {
    // zero final layer: the flow starts as the identity on normalized
    // targets, i.e. a moment-matched Gaussian density
    std::fill(w0.begin() + net.layer_offset(net.layer_count() - 1), w0.end(),
              0.0);
  }
  Model model;
  model.config = cfg;
  if (cfg.bayes) {
    model.posterior.mean = std::move(w0);
    model.posterior.raw_scale.assign(net.param_count(),
                                     raw_scale_for_sigma(cfg.init_q_sigma));
  } else {
    model.weights = std::move(w0);
  }
  if (cfg.model_class == ModelClass::fl) {
    const Dataset data = generate(cfg.dataset, cfg.resolved_n(), cfg.seed);
    model.normalizer = fit_normalizer(data.y, cfg.y_dim());
  }
  return model;
}

Model train(const TrainConfig& cfg) {
  TrainConfig cc = cfg;
  cc.validate();
  return train_on(cc, generate(cc.dataset, cc.resolved_n(), cc.seed));
}

Model train_on(const TrainConfig& cfg0, const Dataset& data) {
  TrainConfig cfg = cfg0;
  cfg.validate();
  if (data.n != cfg.resolved_n())
    throw UserError("train_on: dataset size does not match the config");
  if (cfg.bayes && cfg.batch_size != 0 &&
      cfg.batch_size != cfg.resolved_n())
    throw UserError("variational training is full-batch");

  const MlpSpec net = cfg.network();
  const std::size_t P = net.param_count();
  const int yd = cfg.y_dim();
  const std::size_t N = data.n;
  const std::size_t B = cfg.batch_size == 0 ? N : cfg.batch_size;
  const long steps = cfg.resolved_steps();
  const double scale = batch_scale(N, B);

  Model model;
  model.config = cfg;
  if (cfg.model_class == ModelClass::fl)
    model.normalizer = fit_normalizer(data.y, yd);

  CounterRng init_rng(cfg.seed, streams::kInit);
  std::vector<double> w0 = init_params(net, init_rng);
  if (cfg.model_class == ModelClass::fl) {
    std::fill(w0.begin() + net.layer_offset(net.layer_count() - 1), w0.end(),
              0.0);
  }

  std::vector<double> bx(B), by(B * yd);
  auto fill_batch = [&](long step) {
    const std::size_t start = (static_cast<std::size_t>(step) * B) % N;
    for (std::size_t j = 0; j < B; ++j) {
      const std::size_t i = (start + j) % N;
      bx[j] = data.x[i];
      for (int d = 0; d < yd; ++d) by[j * yd + d] = data.y[i * yd + d];
    }
  };
  if (B == N) fill_batch(0);

  ad::Tape tape;
  model.loss_curve.reserve(static_cast<std::size_t>(steps));

  if (!cfg.bayes) {
    std::vector<double> w = w0, g(P);
    AdamState adam(P, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
    std::vector<ad::NodeId> wids(P);
    for (long step = 0; step < steps; ++step) {
      if (B != N) fill_batch(step);
      tape.clear();
      for (std::size_t i = 0; i < P; ++i) wids[i] = tape.leaf(w[i]);
      ad::Var nll = batch_nll_sum(tape, cfg, net, wids, bx.data(), by.data(),
                                  B, model.normalizer);
      ad::Var loss = nll * scale;
      const double lval = loss.value();
      if (!std::isfinite(lval))
        throw DivergenceError("training loss diverged", step);
      model.loss_curve.emplace_back(step, lval / static_cast<double>(N));
      try {
        tape.gradient(loss.id, 0, P, g.data());
        adam_step(adam, w, g);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.what(), step);
      }
    }
    model.weights = std::move(w);
    return model;
  }

  // variational: psi = [mean | raw_scale]
  std::vector<double> psi(2 * P);
  std::copy(w0.begin(), w0.end(), psi.begin());
  std::fill(psi.begin() + P, psi.end(),
            raw_scale_for_sigma(cfg.init_q_sigma));
  std::vector<double> g(2 * P);
  AdamState adam(2 * P, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  CounterRng eps_rng(cfg.seed, streams::kElbo);
  const int K = cfg.elbo_samples;
  for (long step = 0; step < steps; ++step) {
    tape.clear();
    ad::Var loss;
    try {
      loss = build_elbo(tape, cfg, net, psi.data(), P, bx.data(), by.data(),
                        B, N, K, eps_rng, model.normalizer);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), step);
    }
    const double lval = loss.value();
    if (!std::isfinite(lval))
      throw DivergenceError("ELBO loss diverged", step);
    model.loss_curve.emplace_back(step, lval / static_cast<double>(N));
    try {
      tape.gradient(loss.id, 0, 2 * P, g.data());
      adam_step(adam, psi, g);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), step);
    }
  }
  model.posterior.mean.assign(psi.begin(), psi.begin() + P);
  model.posterior.raw_scale.assign(psi.begin() + P, psi.end());
  return model;
}

EvalReport evaluate(const Model& model, const Dataset& test) {
  if (test.n == 0) throw UserError("evaluate: empty test set");
  const auto t0 = std::chrono::steady_clock::now();
  const int yd = model.y_dim();
  const auto draws = model.weight_draws(0);
  const std::size_t K = draws.size();

  double nll_sum = 0.0;
  std::vector<double> lps(K);
  for (std::size_t i = 0; i < test.n; ++i) {
    const double x = test.x[i];
    const double* y = test.y.data() + i * yd;
    double lp;
    if (K == 1) {
      lp = model.logpdf(x, y, draws[0].data());
    } else {
      double mx = -1e300;
      for (std::size_t k = 0; k < K; ++k) {
        lps[k] = model.logpdf(x, y, draws[k].data());
        mx = std::max(mx, lps[k]);
      }
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += std::exp(lps[k] - mx);
      lp = mx + std::log(acc / static_cast<double>(K));
    }
    nll_sum -= lp;
  }

  EvalReport rep;
  rep.test_nll = nll_sum / static_cast<double>(test.n);
  rep.has_mse = model.config.model_class == ModelClass::glc &&
                !model.config.bayes;
  if (rep.has_mse) {
    double mse = 0.0;
    for (std::size_t i = 0; i < test.n; ++i) {
      const auto th = model.theta(test.x[i], draws[0].data());
      for (int d = 0; d < yd; ++d) {
        const double dv = test.y[i * yd + d] - th[d];
        mse += dv * dv;
      }
    }
    rep.test_mse = mse / static_cast<double>(test.n);
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

EvalReport evaluate_default(const Model& model) {
  const Dataset test =
      generate_test(model.config.dataset, model.config.resolved_test_n(),
                    model.config.test_seed);
  return evaluate(model, test);
}

double elbo_loss(const TrainConfig& cfg0, const Dataset& data,
                 const MeanFieldGaussian& q, int K, std::uint64_t eps_seed,
                 std::vector<double>* grad) {
  if (K < 1) throw UserError("elbo_loss: K must be >= 1");
  TrainConfig cfg = cfg0;
  cfg.bayes = true;
  const MlpSpec net = cfg.network();
  const std::size_t P = net.param_count();
  if (q.size() != P || q.raw_scale.size() != P)
    throw UserError("elbo_loss: posterior size does not match the network");
  Normalizer nrm;
  if (cfg.model_class == ModelClass::fl)
    nrm = fit_normalizer(data.y, data.y_dim);
  std::vector<double> psi(2 * P);
  std::copy(q.mean.begin(), q.mean.end(), psi.begin());
  std::copy(q.raw_scale.begin(), q.raw_scale.end(), psi.begin() + P);
  ad::Tape tape;
  CounterRng eps_rng(eps_seed, streams::kElbo);
  ad::Var loss = build_elbo(tape, cfg, net, psi.data(), P, data.x.data(),
                            data.y.data(), data.n, data.n, K, eps_rng, nrm);
  if (grad) {
    grad->resize(2 * P);
    tape.gradient(loss.id, 0, 2 * P, grad->data());
  }
  return loss.value();
}

MomentMatchReport moment_match_probe(
    int y_dim, const std::function<std::vector<double>(double)>& theta_fn,
    const GroundTruth& gt, int probes, double x_abs_max) {
  MomentMatchReport rep;
  for (int p = 0; p < probes; ++p) {
    const double x = probes == 1
                         ? 0.0
                         : -x_abs_max + 2.0 * x_abs_max *
                                            static_cast<double>(p) /
                                            static_cast<double>(probes - 1);
    const auto th = theta_fn(x);
    double mu_gt[2], cov_gt[4];
    gt.mean(x, mu_gt);
    gt.cov(x, cov_gt);
    if (y_dim == 1) {
      rep.mean_abs_err += std::abs(th[0] - mu_gt[0]);
      const double var = std::exp(2.0 * th[1]);
      rep.cov_rel_err += std::abs(var - cov_gt[0]) / cov_gt[0];
    } else {
      const double e0 = th[0] - mu_gt[0], e1 = th[1] - mu_gt[1];
      rep.mean_abs_err += std::sqrt(e0 * e0 + e1 * e1);
      const auto c = cov_from_params(th[2], th[3], th[4]);
      const double d11 = c.s11 - cov_gt[0];
      const double d12 = c.s12 - cov_gt[1];
      const double d22 = c.s22 - cov_gt[3];
      const double num =
          std::sqrt(d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
      const double den = std::sqrt(cov_gt[0] * cov_gt[0] +
                                   2.0 * cov_gt[1] * cov_gt[1] +
                                   cov_gt[3] * cov_gt[3]);
      rep.cov_rel_err += num / den;
    }
  }
  rep.mean_abs_err /= probes;
  rep.cov_rel_err /= probes;
  return rep;
}

MomentMatchReport moment_match_check(const Model& model, int probes,
                                     double x_abs_max) {
  if (model.config.model_class != ModelClass::gl)
    throw UserError("moment_match_check applies to GL models");
  if (model.config.bayes)
    throw UserError("moment_match_check expects a deterministic model");
  const GroundTruth gt = ground_truth(model.config.dataset);
  return moment_match_probe(
      model.y_dim(),
      [&](double x) { return model.theta(x, model.weights.data()); }, gt,
      probes, x_abs_max);
}

TrainConfig table_config(const std::string& table_id, ModelClass cls,
                         bool bayes, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.model_class = cls;
  cfg.bayes = bayes;
  cfg.seed = seed;
  if (table_id == "S2") {
    cfg.dataset = DatasetName::unimodal1d;
    cfg.n = 20;
    cfg.test_n = 50;
  } else if (table_id == "S3") {
    cfg.dataset = DatasetName::bimodal1d;
    cfg.n = 50;
    cfg.test_n = 50;
  } else if (table_id == "S1") {
    cfg.dataset = DatasetName::bimodal2d;
    cfg.n = 512;
    cfg.test_n = 2000;
    if (cls == ModelClass::fl) {
      // smaller hypernetwork keeps the 10-seed reproduction within the
      // CPU-seconds budget at no measurable NLL cost
      cfg.hidden = {32, 32};
      cfg.flow_cond_hidden = 8;
      cfg.steps = 3000;
    }
  } else {
    throw UserError("unknown table id '" + table_id +
                    "'; valid ids: S1, S2, S3");
  }
  return cfg;
}

unsigned worker_count() {
  if (const char* env = std::getenv("MISFIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

TableResult reproduce_table(const std::string& table_id, int seeds,
                            unsigned threads) {
  if (seeds < 2) throw UserError("table reproduction needs seeds >= 2 (SEM)");
  std::vector<std::pair<ModelClass, bool>> variants = {
      {ModelClass::glc, false}, {ModelClass::gl, false},
      {ModelClass::fl, false}};
  if (table_id != "S1") {
    variants.push_back({ModelClass::glc, true});
    variants.push_back({ModelClass::gl, true});
    variants.push_back({ModelClass::fl, true});
  }
  // probe the id early for a clean error
  table_config(table_id, ModelClass::glc, false, 1);

  struct Job {
    std::size_t row;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < variants.size(); ++r)
    for (int s = 1; s <= seeds; ++s)
      jobs.push_back({r, static_cast<std::uint64_t>(s)});

  // one fixed held-out test set per table
  const TrainConfig probe = table_config(table_id, ModelClass::glc, false, 1);
  const Dataset test = generate_test(
      probe.dataset, probe.resolved_test_n(), probe.test_seed);

  std::vector<EvalReport> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        const auto& [row, seed] = jobs[j];
        const TrainConfig cfg = table_config(table_id, variants[row].first,
                                             variants[row].second, seed);
        results[j] = evaluate(train(cfg), test);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  unsigned n_threads = threads ? threads : worker_count();
  n_threads = std::min<unsigned>(n_threads,
                                 static_cast<unsigned>(jobs.size()));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!errors[j].empty())
      throw UserError("table job (row " + std::to_string(jobs[j].row) +
                      ", seed " + std::to_string(jobs[j].seed) +
                      ") failed: " + errors[j]);

  TableResult table;
  table.id = table_id;
  table.seeds = seeds;
  for (std::size_t r = 0; r < variants.size(); ++r) {
    TableRow row;
    row.model = (variants[r].second ? "BNN+" : "") +
                [&] {
                  switch (variants[r].first) {
                    case ModelClass::glc: return std::string("GLc");
                    case ModelClass::gl: return std::string("GL");
                    default: return std::string("FL");
                  }
                }();
    std::vector<double> nlls, mses;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].row != r) continue;
      nlls.push_back(results[j].test_nll);
      if (results[j].has_mse) mses.push_back(results[j].test_mse);
    }
    auto mean_sem = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
      return std::pair<double, double>(
          mean, sd / std::sqrt(static_cast<double>(v.size())));
    };
    std::tie(row.nll_mean, row.nll_sem) = mean_sem(nlls);
    row.has_mse = !mses.empty();
    if (row.has_mse) std::tie(row.mse_mean, row.mse_sem) = mean_sem(mses);
    table.rows.push_back(row);
  }
  return table;
}

void write_table_csv(const TableResult& table, const std::string& path) {
  CsvWriter csv(path);
  csv.row(std::vector<std::string>{"model", "nll_mean", "nll_sem", "mse_mean",
                                   "mse_sem"});
  for (const auto& r : table.rows) {
    std::vector<std::string> cells{r.model, format_double(r.nll_mean),
                                   format_double(r.nll_sem)};
    if (r.has_mse) {
      cells.push_back(format_double(r.mse_mean));
      cells.push_back(format_double(r.mse_sem));
    } else {
      cells.push_back("NA");
      cells.push_back("NA");
    }
    csv.row(cells);
  }
}

}  // namespace misfit
