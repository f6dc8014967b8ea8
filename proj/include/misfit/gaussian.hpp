#pragma once

#include <cmath>

#include "misfit/errors.hpp"
#include "misfit/tape.hpp"

namespace misfit {

constexpr double kLog2PiC = 1.8378770664093454836;

// Gaussian negative log likelihoods for the constant-variance (GLc) and
// learned-variance (GL) hypothesis classes, 1D and 2D outcomes. All values
// include their normalization constants so numbers are comparable across
// model classes. Each function is written over a generic scalar S so the
// same expression serves plain evaluation (S = double) and training on the
// tape (S = ad::Var).

template <class S>
S nll_glc_1d(S mu, double y, double sigma) {
  if (!(sigma > 0.0)) throw UserError("nll_glc_1d: sigma must be positive");
  S d = mu - y;
  return d * d * (0.5 / (sigma * sigma)) + (std::log(sigma) + 0.5 * kLog2PiC);
}

template <class S>
S nll_gl_1d(S mu, S log_sigma, double y) {
  using ad::exp;
  using std::exp;
  S d = mu - y;
  S inv_var = exp(log_sigma * -2.0);
  return d * d * inv_var * 0.5 + log_sigma + 0.5 * kLog2PiC;
}

// log(1 - tanh(t)^2), stable for any t.
template <class S>
S log_one_minus_tanh_sq(S t) {
  using ad::softplus;
  return 2.0 * 0.69314718055994530942 - 2.0 * t - 2.0 * softplus(-2.0 * t);
}

template <class S>
struct Cov2 {
  S s11, s12, s22;   // Sigma entries
  S log_det;         // ln sigma1^2 + ln sigma2^2 + ln(1 - rho^2)
  S i11, i12, i22;   // closed-form inverse
};

template <class S>
Cov2<S> cov_from_params(S log_s1, S log_s2, S rho_raw) {
  using ad::exp;
  using std::exp;
  using ad::tanh;
  using std::tanh;
  Cov2<S> c;
  S s1 = exp(log_s1);
  S s2 = exp(log_s2);
  S rho = tanh(rho_raw);
  S log_1m_rho2 = log_one_minus_tanh_sq(rho_raw);
  c.s11 = s1 * s1;
  c.s22 = s2 * s2;
  c.s12 = rho * s1 * s2;
  c.log_det = 2.0 * log_s1 + 2.0 * log_s2 + log_1m_rho2;
  // det = s11 s22 (1 - rho^2) in factored form
  S inv_det = exp(-2.0 * log_s1 - 2.0 * log_s2 - log_1m_rho2);
  c.i11 = c.s22 * inv_det;
  c.i22 = c.s11 * inv_det;
  c.i12 = -1.0 * c.s12 * inv_det;
  return c;
}

template <class S>
S nll_glc_2d(S mu1, S mu2, const double* y, double sigma) {
  if (!(sigma > 0.0)) throw UserError("nll_glc_2d: sigma must be positive");
  S d1 = mu1 - y[0];
  S d2 = mu2 - y[1];
  return (d1 * d1 + d2 * d2) * (0.5 / (sigma * sigma)) +
         (2.0 * std::log(sigma) + kLog2PiC);
}

// theta = [mu1, mu2, log sigma1, log sigma2, rho_raw]
template <class S>
S nll_gl_2d(const S* theta, const double* y) {
  Cov2<S> c = cov_from_params(theta[2], theta[3], theta[4]);
  S d1 = theta[0] - y[0];
  S d2 = theta[1] - y[1];
  S quad = d1 * d1 * c.i11 + 2.0 * d1 * d2 * c.i12 + d2 * d2 * c.i22;
  return 0.5 * c.log_det + 0.5 * quad + kLog2PiC;
}

// Minibatch scaling: (N / |B|) * sum of per-sample NLLs. With a full batch
// this is the plain sum.
inline double batch_scale(std::size_t full_n, std::size_t batch_n) {
  if (batch_n == 0) throw UserError("batch_scale: empty batch");
  return static_cast<double>(full_n) / static_cast<double>(batch_n);
}

// (N / |B|) * sum_i per_sample(i) over a batch of size batch_n.
template <class F>
double batch_loss(F&& per_sample, std::size_t batch_n, std::size_t full_n) {
  const double scale = batch_scale(full_n, batch_n);
  double total = 0.0;
  for (std::size_t i = 0; i < batch_n; ++i) total += per_sample(i);
  return scale * total;
}

enum class DatasetName;
double default_glc_sigma(DatasetName name, bool matched_variance);

}  // namespace misfit
