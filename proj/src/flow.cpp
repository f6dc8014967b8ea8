#include "misfit/flow.hpp"

#include <cmath>

#include "misfit/errors.hpp"

namespace misfit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_std_normal(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

ad::Var log_std_normal(ad::Var z) {
  return z * z * -0.5 - 0.5 * kLog2Pi;
}

}  // namespace

Normalizer fit_normalizer(const std::vector<double>& y, int y_dim) {
  const std::size_t n = y.size() / y_dim;
  if (n == 0) throw UserError("fit_normalizer: no targets");
  Normalizer nrm;
  nrm.shift.assign(y_dim, 0.0);
  nrm.scale.assign(y_dim, 1.0);
  for (int d = 0; d < y_dim; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y[i * y_dim + d];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = y[i * y_dim + d] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    nrm.shift[d] = mean;
    nrm.scale[d] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return nrm;
}

double FlowSlice1D::logprob(double y) const {
  const double t = (y - shift) / scale;
  auto [z, ld_inv] = spline_inv(spline, t);
  return log_std_normal(z) + ld_inv - std::log(scale);
}

double FlowSlice1D::sample(double z) const {
  auto [t, ld] = spline_fwd(spline, z);
  (void)ld;
  return shift + scale * t;
}

FlowSlice1D flow_slice_1d(const MlpSpec& hyper, const double* w, double x,
                          const FlowConfig1D& cfg, const Normalizer& nrm) {
  std::vector<double> raw(hyper.output_dim);
  mlp_forward(hyper, w, &x, raw.data());
  FlowSlice1D s;
  s.spline = make_spline(raw.data(), cfg.spline);
  s.shift = nrm.shift[0];
  s.scale = nrm.scale[0];
  return s;
}

double flow_logprob_1d(const MlpSpec& hyper, const double* w, double x,
                       double y, const FlowConfig1D& cfg,
                       const Normalizer& nrm) {
  return flow_slice_1d(hyper, w, x, cfg, nrm).logprob(y);
}

std::vector<double> flow_sample_1d(const MlpSpec& hyper, const double* w,
                                   double x, const FlowConfig1D& cfg,
                                   const Normalizer& nrm, std::size_t n,
                                   std::uint64_t seed) {
  if (n == 0) throw UserError("flow_sample_1d: n must be >= 1");
  FlowSlice1D s = flow_slice_1d(hyper, w, x, cfg, nrm);
  CounterRng rng(seed, streams::kSampling);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = s.sample(rng.normal());
  return out;
}

double FlowSlice2D::logprob(const double* y) const {
  const MlpSpec cond = cfg.conditioner_spec();
  const std::size_t cond_p = cond.param_count();
  double t[2] = {(y[0] - shift[0]) / scale[0], (y[1] - shift[1]) / scale[1]};
  double acc = 0.0;
  std::vector<double> raw(cond.output_dim);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const int c = l % 2;
    const double other = t[1 - c];
    mlp_forward(cond, theta.data() + l * cond_p, &other, raw.data());
    RqSpline<double> sp = make_spline(raw.data(), cfg.spline);
    auto [z, ld_inv] = spline_inv(sp, t[c]);
    t[c] = z;
    acc += ld_inv;
  }
  return log_std_normal(t[0]) + log_std_normal(t[1]) + acc -
         std::log(scale[0]) - std::log(scale[1]);
}

void FlowSlice2D::inverse(const double* y, double* z_out) const {
  const MlpSpec cond = cfg.conditioner_spec();
  const std::size_t cond_p = cond.param_count();
  double t[2] = {(y[0] - shift[0]) / scale[0], (y[1] - shift[1]) / scale[1]};
  std::vector<double> raw(cond.output_dim);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const int c = l % 2;
    const double other = t[1 - c];
    mlp_forward(cond, theta.data() + l * cond_p, &other, raw.data());
    RqSpline<double> sp = make_spline(raw.data(), cfg.spline);
    t[c] = spline_inv(sp, t[c]).first;
  }
  z_out[0] = t[0];
  z_out[1] = t[1];
}

void FlowSlice2D::sample(const double* z, double* y_out) const {
  const MlpSpec cond = cfg.conditioner_spec();
  const std::size_t cond_p = cond.param_count();
  double t[2] = {z[0], z[1]};
  std::vector<double> raw(cond.output_dim);
  for (int l = 0; l < cfg.layers; ++l) {
    const int c = l % 2;
    const double other = t[1 - c];
    mlp_forward(cond, theta.data() + l * cond_p, &other, raw.data());
    RqSpline<double> sp = make_spline(raw.data(), cfg.spline);
    auto [v, ld] = spline_fwd(sp, t[c]);
    (void)ld;
    t[c] = v;
  }
  y_out[0] = shift[0] + scale[0] * t[0];
  y_out[1] = shift[1] + scale[1] * t[1];
}

FlowSlice2D flow_slice_2d(const MlpSpec& hyper, const double* w, double x,
                          const FlowConfig2D& cfg, const Normalizer& nrm) {
  FlowSlice2D s;
  s.cfg = cfg;
  s.theta.resize(hyper.output_dim);
  mlp_forward(hyper, w, &x, s.theta.data());
  for (int d = 0; d < 2; ++d) {
    s.shift[d] = nrm.shift[d];
    s.scale[d] = nrm.scale[d];
  }
  return s;
}

double flow_logprob_2d(const MlpSpec& hyper, const double* w, double x,
                       const double* y, const FlowConfig2D& cfg,
                       const Normalizer& nrm) {
  return flow_slice_2d(hyper, w, x, cfg, nrm).logprob(y);
}

std::vector<double> flow_sample_2d(const MlpSpec& hyper, const double* w,
                                   double x, const FlowConfig2D& cfg,
                                   const Normalizer& nrm, std::size_t n,
                                   std::uint64_t seed) {
  if (n == 0) throw UserError("flow_sample_2d: n must be >= 1");
  FlowSlice2D s = flow_slice_2d(hyper, w, x, cfg, nrm);
  CounterRng rng(seed, streams::kSampling);
  std::vector<double> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z[2] = {rng.normal(), rng.normal()};
    s.sample(z, out.data() + 2 * i);
  }
  return out;
}

ad::Var flow1d_nll_sum(ad::Tape& tape, ad::NodeId theta_first,
                       const double* y, std::size_t n_rows,
                       const FlowConfig1D& cfg, const Normalizer& nrm) {
  using ad::Var;
  const int P = cfg.spline.param_count();
  const double log_scale = std::log(nrm.scale[0]);
  Var total;
  std::vector<Var> raw(P);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (int k = 0; k < P; ++k)
      raw[k] = Var(tape, static_cast<ad::NodeId>(theta_first + r * P + k));
    RqSpline<Var> sp = make_spline(raw.data(), cfg.spline);
    const double t = (y[r] - nrm.shift[0]) / nrm.scale[0];
    auto [z, ld_inv] = spline_inv(sp, ad::make_const(tape, t));
    Var nll = -1.0 * (log_std_normal(z) + ld_inv - log_scale);
    total = (r == 0) ? nll : total + nll;
  }
  return total;
}

ad::Var flow2d_nll_sum(ad::Tape& tape, ad::NodeId theta_first,
                       const double* y, std::size_t n_rows,
                       const FlowConfig2D& cfg, const Normalizer& nrm) {
  using ad::Var;
  const MlpSpec cond = cfg.conditioner_spec();
  const std::size_t cond_p = cond.param_count();
  const std::size_t stride = cond_p * cfg.layers;
  const int P = cfg.spline.param_count();

  std::vector<Var> t0(n_rows), t1(n_rows), acc(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    t0[r] = ad::make_const(tape, (y[2 * r] - nrm.shift[0]) / nrm.scale[0]);
    t1[r] = ad::make_const(tape,
                           (y[2 * r + 1] - nrm.shift[1]) / nrm.scale[1]);
  }

  std::vector<ad::NodeId> inputs(n_rows);
  std::vector<Var> raw(P);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const int c = l % 2;
    std::vector<Var>& tc = c == 0 ? t0 : t1;
    std::vector<Var>& to = c == 0 ? t1 : t0;
    for (std::size_t r = 0; r < n_rows; ++r) inputs[r] = to[r].id;
    const ad::NodeId raw_first =
        tape.mlp_rows(cond, theta_first, stride, l * cond_p, inputs);
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (int k = 0; k < P; ++k)
        raw[k] = Var(tape, static_cast<ad::NodeId>(raw_first + r * P + k));
      RqSpline<Var> sp = make_spline(raw.data(), cfg.spline);
      auto [z, ld_inv] = spline_inv(sp, tc[r]);
      tc[r] = z;
      acc[r] = (l == cfg.layers - 1) ? ld_inv : acc[r] + ld_inv;
    }
  }

  const double log_scales = std::log(nrm.scale[0]) + std::log(nrm.scale[1]);
  Var total;
  for (std::size_t r = 0; r < n_rows; ++r) {
    Var nll = -1.0 * (log_std_normal(t0[r]) + log_std_normal(t1[r]) +
                      acc[r] - log_scales);
    total = (r == 0) ? nll : total + nll;
  }
  return total;
}

}  // namespace misfit
