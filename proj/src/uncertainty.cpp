#include "misfit/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "misfit/csv.hpp"
#include "misfit/errors.hpp"

namespace misfit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::size_t kEntropyGrid1D = 4096;
constexpr std::size_t kEntropyGrid2D = 512;

std::vector<ModelSlice> make_slices(const PredictiveEnsemble& e, double x) {
  std::vector<ModelSlice> s;
  s.reserve(e.n_draws());
  for (const auto& w : e.draws) s.push_back(e.model->slice(x, w.data()));
  return s;
}

// Pooled support bounds across draws, per dimension.
void pooled_support(const std::vector<ModelSlice>& slices, int y_dim,
                    double* lo, double* hi) {
  double l[2], h[2];
  for (std::size_t k = 0; k < slices.size(); ++k) {
    slices[k].support(l, h);
    for (int d = 0; d < y_dim; ++d) {
      lo[d] = k == 0 ? l[d] : std::min(lo[d], l[d]);
      hi[d] = k == 0 ? h[d] : std::max(hi[d], h[d]);
    }
  }
}

double entropy_from_slices_1d(const std::vector<ModelSlice>& slices) {
  double lo, hi;
  pooled_support(slices, 1, &lo, &hi);
  const std::size_t n = kEntropyGrid1D;
  const double dy = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> dens(n, 0.0);
  const double inv_k = 1.0 / static_cast<double>(slices.size());
  for (const auto& s : slices)
    for (std::size_t i = 0; i < n; ++i) {
      const double y = lo + dy * static_cast<double>(i);
      dens[i] += inv_k * std::exp(s.logpdf(&y));
    }
  return diff_entropy(dens, dy);
}

double entropy_grid_2d(const ModelSlice& s) {
  double lo[2], hi[2];
  s.support(lo, hi);
  const std::size_t n = kEntropyGrid2D;
  const double d0 = (hi[0] - lo[0]) / static_cast<double>(n - 1);
  const double d1 = (hi[1] - lo[1]) / static_cast<double>(n - 1);
  double h = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    double y[2];
    y[0] = lo[0] + d0 * static_cast<double>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      y[1] = lo[1] + d1 * static_cast<double>(j);
      const double lp = s.logpdf(y);
      const double p = std::exp(lp);
      const double w = wi * wj;
      mass += w * p;
      if (p > 0.0) h -= w * p * lp;
    }
  }
  mass *= d0 * d1;
  if (std::abs(mass - 1.0) > 1e-2)
    throw UserError("entropy grid badly normalized: integral = " +
                    std::to_string(mass));
  return h * d0 * d1;
}

}  // namespace

PredictiveEnsemble make_ensemble(const Model& model, std::size_t draws) {
  PredictiveEnsemble e;
  e.model = &model;
  e.variational = model.config.bayes;
  e.draws = model.weight_draws(draws);
  return e;
}

std::vector<double> predictive_density(const PredictiveEnsemble& e, double x,
                                       const std::vector<double>& y_grid) {
  if (e.model->y_dim() != 1)
    throw UserError("predictive_density expects a 1D outcome");
  const auto slices = make_slices(e, x);
  std::vector<double> dens(y_grid.size(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(slices.size());
  for (const auto& s : slices)
    for (std::size_t i = 0; i < y_grid.size(); ++i)
      dens[i] += inv_k * std::exp(s.logpdf(&y_grid[i]));
  return dens;
}

double diff_entropy(const std::vector<double>& density, double spacing) {
  if (density.size() < 2) throw UserError("diff_entropy: grid too small");
  double mass = 0.0, h = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double p = density[i];
    if (p < 0.0) throw UserError("diff_entropy: negative density");
    const double w = (i == 0 || i + 1 == density.size()) ? 0.5 : 1.0;
    mass += w * p;
    if (p > 0.0) h -= w * p * std::log(p);
  }
  mass *= spacing;
  if (std::abs(mass - 1.0) > 1e-2)
    throw UserError("diff_entropy: grid integral is " + std::to_string(mass) +
                    ", expected 1");
  return h * spacing;
}

double gaussian_entropy(double variance) {
  if (!(variance > 0.0)) throw UserError("gaussian_entropy: variance <= 0");
  return 0.5 * (kLog2Pi + 1.0 + std::log(variance));
}

double u_variance(const std::vector<std::vector<double>>& theta_draws) {
  if (theta_draws.empty()) throw UserError("u_variance: no draws");
  const std::size_t m = theta_draws.front().size();
  const std::size_t k = theta_draws.size();
  if (k == 1) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (const auto& t : theta_draws) mean += t[j];
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (const auto& t : theta_draws) {
      const double d = t[j] - mean;
      ss += d * d;
    }
    total += ss / static_cast<double>(k - 1);
  }
  return total / static_cast<double>(m);
}

double u_wasserstein(const PredictiveEnsemble& e, double x,
                     std::size_t n_samples, std::uint64_t seed) {
  if (e.model->y_dim() != 1)
    throw UserError(
        "u_wasserstein: 2D outcomes are unsupported (1D quantile coupling)");
  if (n_samples < 2) throw UserError("u_wasserstein: need >= 2 samples");
  const auto slices = make_slices(e, x);
  const std::size_t m = slices.size();

  // shared base normals (common random numbers) and component picks
  std::vector<double> z(n_samples);
  CounterRng base(seed, streams::kSampling);
  CounterRng pick(seed, streams::kSampling + 1);
  for (auto& v : z) v = base.normal();

  std::vector<double> pooled(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t c =
        std::min<std::size_t>(m - 1,
                              static_cast<std::size_t>(pick.uniform() *
                                                       static_cast<double>(m)));
    slices[c].sample(&z[i], &pooled[i]);
  }
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> a(n_samples);
  double total = 0.0;
  for (const auto& s : slices) {
    for (std::size_t i = 0; i < n_samples; ++i) s.sample(&z[i], &a[i]);
    std::sort(a.begin(), a.end());
    double w1 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i)
      w1 += std::abs(a[i] - pooled[i]);
    total += w1 / static_cast<double>(n_samples);
  }
  return total / static_cast<double>(m);
}

UncertaintyCurve uncertainty_curve(const PredictiveEnsemble& e,
                                   const std::vector<double>& x_grid,
                                   std::uint64_t seed) {
  if (x_grid.empty()) throw UserError("uncertainty_curve: empty grid");
  for (std::size_t i = 1; i < x_grid.size(); ++i)
    if (!(x_grid[i] > x_grid[i - 1]))
      throw UserError("uncertainty_curve: grid must be strictly increasing");
  const int yd = e.model->y_dim();
  if (yd == 2 && e.variational)
    throw UserError(
        "uncertainty_curve: variational ensembles are supported for 1D "
        "outcomes only");

  UncertaintyCurve c;
  c.model_class = to_string(e.model->config.model_class);
  c.variational = e.variational;
  c.x = x_grid;
  const std::size_t n = x_grid.size();
  c.entropy.resize(n);
  c.u_v.assign(n, 0.0);
  c.u_w.assign(n, 0.0);
  c.in_dist.resize(n);

  const bool gauss = e.model->config.model_class != ModelClass::fl;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_grid[i];
    c.in_dist[i] = (x >= kTrainLo && x <= kTrainHi) ? 1 : 0;

    if (e.n_draws() == 1) {
      const ModelSlice s = e.model->slice(x, e.draws.front().data());
      if (gauss)
        c.entropy[i] = s.entropy_closed_form();
      else if (yd == 1)
        c.entropy[i] = entropy_from_slices_1d({s});
      else
        c.entropy[i] = entropy_grid_2d(s);
      continue;  // deterministic: U_V = U_W = 0 exactly
    }

    const auto slices = make_slices(e, x);
    c.entropy[i] = entropy_from_slices_1d(slices);

    std::vector<std::vector<double>> thetas;
    thetas.reserve(e.n_draws());
    for (const auto& w : e.draws)
      thetas.push_back(e.model->theta(x, w.data()));
    c.u_v[i] = u_variance(thetas);
    c.u_w[i] = u_wasserstein(e, x, 2048,
                             seed + streams::kCurve + static_cast<std::uint64_t>(i));
  }
  return c;
}

void write_curve_csv(const UncertaintyCurve& curve, const std::string& path) {
  CsvWriter csv(path);
  csv.row(std::vector<std::string>{"x", "H", "U_V", "U_W", "in_dist"});
  for (std::size_t i = 0; i < curve.x.size(); ++i)
    csv.row(std::vector<double>{curve.x[i], curve.entropy[i], curve.u_v[i],
                                curve.u_w[i],
                                static_cast<double>(curve.in_dist[i])});
}

namespace {
double masked_mean(const UncertaintyCurve& c, const std::vector<double>& v,
                   double lo, double hi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    const double ax = std::abs(c.x[i]);
    if (ax >= lo && ax < hi) {
      sum += v[i];
      ++count;
    }
  }
  if (count == 0) throw UserError("empty |x| window");
  return sum / static_cast<double>(count);
}
}  // namespace

double mean_u_v(const UncertaintyCurve& c, double lo, double hi) {
  return masked_mean(c, c.u_v, lo, hi);
}

double mean_u_w(const UncertaintyCurve& c, double lo, double hi) {
  return masked_mean(c, c.u_w, lo, hi);
}

double u_v_gap(const UncertaintyCurve& a, const UncertaintyCurve& b,
               double lo, double hi) {
  if (a.model_class != b.model_class)
    throw UserError("U_V is not comparable across model classes (" +
                    a.model_class + " vs " + b.model_class + ")");
  return mean_u_v(a, lo, hi) - mean_u_v(b, lo, hi);
}

}  // namespace misfit
