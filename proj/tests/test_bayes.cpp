#include <doctest.h>

#include <cmath>
#include <vector>

#include "misfit/bayes.hpp"
#include "misfit/datasets.hpp"
#include "misfit/errors.hpp"
#include "misfit/gaussian.hpp"
#include "misfit/model.hpp"
#include "misfit/rng.hpp"
#include "misfit/train.hpp"
#include "test_util.hpp"

using namespace misfit;

TEST_CASE("degenerate posterior: sample equals the mean") {
  MeanFieldGaussian q;
  q.mean = {0.5, -2.0, 3.0};
  q.raw_scale = {-40.0, -40.0, -40.0};
  const auto w = sample_weights(q, 1);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(w[i] - q.mean[i]) < 1e-12);
}

TEST_CASE("fixed seed reproduces the weight draw") {
  MeanFieldGaussian q;
  q.mean = {0.0, 1.0};
  q.raw_scale = {0.0, 0.5};
  CHECK(sample_weights(q, 11) == sample_weights(q, 11));
  CHECK(sample_weights(q, 11) != sample_weights(q, 12));
}

TEST_CASE("sample moments match (mean, sigma_q) within 3 SE") {
  MeanFieldGaussian q;
  q.mean = {1.0, -0.5};
  q.raw_scale = {raw_scale_for_sigma(0.7), raw_scale_for_sigma(2.0)};
  const std::size_t n = 100'000;
  CounterRng rng(3, streams::kPredictive);
  std::vector<double> sum(2, 0.0), sq(2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = sample_weights(q, rng);
    for (int d = 0; d < 2; ++d) {
      sum[d] += w[d];
      sq[d] += w[d] * w[d];
    }
  }
  for (int d = 0; d < 2; ++d) {
    const double mean = sum[d] / static_cast<double>(n);
    const double var = sq[d] / static_cast<double>(n) - mean * mean;
    const double sig = q.sigma(d);
    const double se_mean = sig / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - q.mean[d]) < 3.0 * se_mean);
    const double se_var = sig * sig * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(var - sig * sig) < 3.0 * se_var);
  }
}

TEST_CASE("KL closed-form values") {
  // q = prior
  MeanFieldGaussian q;
  q.mean = {0.0, 0.0};
  q.raw_scale = {raw_scale_for_sigma(1.0), raw_scale_for_sigma(1.0)};
  CHECK(kl_meanfield_to_prior(q, {1.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));

  MeanFieldGaussian q1;
  q1.mean = {1.0};
  q1.raw_scale = {raw_scale_for_sigma(1.0)};
  CHECK(kl_meanfield_to_prior(q1, {1.0}) ==
        doctest::Approx(0.5).epsilon(1e-12));

  MeanFieldGaussian q2;
  q2.mean = {0.0};
  q2.raw_scale = {raw_scale_for_sigma(2.0)};
  CHECK(kl_meanfield_to_prior(q2, {1.0}) ==
        doctest::Approx(0.5 * (4.0 - 1.0 - std::log(4.0))).epsilon(1e-12));
}

TEST_CASE("KL is non-negative for random posterior/prior pairs") {
  CounterRng rng(4, 0);
  for (int i = 0; i < 10'000; ++i) {
    MeanFieldGaussian q;
    q.mean = {rng.uniform(-3, 3)};
    q.raw_scale = {rng.uniform(-4, 2)};
    const WeightPrior prior{std::exp(rng.uniform(-1.5, 1.5))};
    CHECK(kl_meanfield_to_prior(q, prior) >= -1e-12);
  }
}

TEST_CASE("KL tape node agrees with the closed form") {
  CounterRng rng(5, 0);
  MeanFieldGaussian q;
  for (int i = 0; i < 20; ++i) {
    q.mean.push_back(rng.uniform(-2, 2));
    q.raw_scale.push_back(rng.uniform(-3, 1));
  }
  const WeightPrior prior{1.3};
  ad::Tape t;
  for (double v : q.mean) t.leaf(v);
  for (double v : q.raw_scale) t.leaf(v);
  const ad::Var kl = kl_meanfield_node(t, 0, 20, 20, prior);
  CHECK(kl.value() ==
        doctest::Approx(kl_meanfield_to_prior(q, prior)).epsilon(1e-12));
}

namespace {

TrainConfig tiny_glc_config() {
  TrainConfig cfg;
  cfg.dataset = DatasetName::unimodal1d;
  cfg.n = 12;
  cfg.seed = 3;
  cfg.model_class = ModelClass::glc;
  cfg.bayes = true;
  cfg.hidden = {6};
  return cfg;
}

}  // namespace

TEST_CASE("ELBO with a degenerate posterior reduces to the plain NLL + KL") {
  const TrainConfig cfg = tiny_glc_config();
  const Dataset data = generate(cfg.dataset, cfg.n, cfg.seed);
  const MlpSpec net = cfg.network();
  CounterRng rng(9, streams::kInit);
  const auto w = init_params(net, rng);

  MeanFieldGaussian q;
  q.mean = w;
  q.raw_scale.assign(w.size(), -40.0);

  double det_nll = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto th = mlp_forward(net, w, {data.x[i]});
    det_nll += nll_glc_1d(th[0], data.y[i], cfg.resolved_sigma());
  }
  const double kl = kl_meanfield_to_prior(q, {cfg.prior_sigma});
  const double elbo = elbo_loss(cfg, data, q, 4, 17);
  CHECK(std::abs((elbo - kl) - det_nll) < 1e-9 * std::max(1.0, det_nll));
}

TEST_CASE("ELBO K=1 and K=64 agree within Monte-Carlo error") {
  const TrainConfig cfg = tiny_glc_config();
  const Dataset data = generate(cfg.dataset, cfg.n, cfg.seed);
  const MlpSpec net = cfg.network();
  CounterRng rng(10, streams::kInit);
  MeanFieldGaussian q;
  q.mean = init_params(net, rng);
  q.raw_scale.assign(q.mean.size(), raw_scale_for_sigma(0.05));

  const int reps = 100;
  std::vector<double> k1(reps);
  double mean1 = 0.0;
  for (int r = 0; r < reps; ++r) {
    k1[r] = elbo_loss(cfg, data, q, 1, 1000 + r);
    mean1 += k1[r];
  }
  mean1 /= reps;
  double var1 = 0.0;
  for (double v : k1) var1 += (v - mean1) * (v - mean1);
  var1 /= (reps - 1);

  double mean64 = 0.0;
  const int reps64 = 10;
  for (int r = 0; r < reps64; ++r) mean64 += elbo_loss(cfg, data, q, 64, 5000 + r);
  mean64 /= reps64;

  const double se = std::sqrt(var1 / reps + var1 / 64.0 / reps64);
  CHECK(std::abs(mean1 - mean64) < 3.0 * se);
}

TEST_CASE("ELBO gradient matches finite differences with frozen noise") {
  const TrainConfig cfg = tiny_glc_config();
  const Dataset data = generate(cfg.dataset, cfg.n, cfg.seed);
  const MlpSpec net = cfg.network();
  CounterRng rng(11, streams::kInit);
  MeanFieldGaussian q;
  q.mean = init_params(net, rng);
  q.raw_scale.assign(q.mean.size(), raw_scale_for_sigma(0.1));
  const std::size_t P = q.mean.size();

  std::vector<double> g;
  elbo_loss(cfg, data, q, 3, 99, &g);

  auto f = [&](const std::vector<double>& psi) {
    MeanFieldGaussian qq;
    qq.mean.assign(psi.begin(), psi.begin() + P);
    qq.raw_scale.assign(psi.begin() + P, psi.end());
    return elbo_loss(cfg, data, qq, 3, 99);  // same seed: frozen noise
  };
  std::vector<double> psi(2 * P);
  std::copy(q.mean.begin(), q.mean.end(), psi.begin());
  std::copy(q.raw_scale.begin(), q.raw_scale.end(), psi.begin() + P);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 2 * P; i += 11) idx.push_back(i);
  const auto fd = testutil::finite_diff(f, psi, idx);
  for (std::size_t k = 0; k < idx.size(); ++k)
    CHECK(testutil::rel_err(g[idx[k]], fd[k]) < 1e-3);
}

TEST_CASE("elbo_loss validates inputs") {
  const TrainConfig cfg = tiny_glc_config();
  const Dataset data = generate(cfg.dataset, cfg.n, cfg.seed);
  MeanFieldGaussian q;
  q.mean = {0.0};
  q.raw_scale = {0.0};
  CHECK_THROWS_AS(elbo_loss(cfg, data, q, 1, 1), UserError);  // wrong size
}
