#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "misfit/errors.hpp"
#include "misfit/tape.hpp"

namespace misfit {

// Monotonic rational-quadratic spline on [-B, B], identity outside. K bins
// whose widths and heights come from a softmax scaled to 2B with a minimum
// bin fraction, and K+1 knot derivatives with the boundary ones pinned to 1
// so the tails join smoothly. Interior derivatives are
// eps_deriv + softplus(raw + c0) with c0 chosen so raw = 0 gives derivative
// exactly 1; all-zero raw parameters therefore produce the identity map.
struct SplineConfig {
  int bins = 8;
  double bound = 3.0;
  double eps_bin = 1e-3;
  double eps_deriv = 1e-3;

  int param_count() const { return 3 * bins - 1; }
  // softplus(c0) = 1 - eps_deriv
  double deriv_shift() const {
    return std::log(std::expm1(1.0 - eps_deriv));
  }
};

// Knot representation: K+1 x-positions, y-positions and derivatives.
template <class S>
struct RqSpline {
  std::vector<S> xk, yk, d;
  double bound = 3.0;
};

namespace detail {

// softmax scaled so entries sum to 2B with an eps floor per bin
template <class S>
void spline_knots(const S* raw, int K, const SplineConfig& cfg, S* knots) {
  using ad::exp;
  using std::exp;
  double mx = ad::value(raw[0]);
  for (int i = 1; i < K; ++i) mx = std::max(mx, ad::value(raw[i]));
  std::vector<S> e;
  e.reserve(K);
  S total = exp(raw[0] - mx);
  e.push_back(total);
  for (int i = 1; i < K; ++i) {
    e.push_back(exp(raw[i] - mx));
    total = total + e.back();
  }
  const double span = 2.0 * cfg.bound;
  const double floor_w = span * cfg.eps_bin;
  const double free_w = span * (1.0 - cfg.eps_bin * K);
  knots[0] = raw[0] * 0.0 - cfg.bound;  // typed constant -B
  for (int i = 0; i < K; ++i) {
    S w = e[i] / total * free_w + floor_w;
    knots[i + 1] = knots[i] + w;
  }
}

}  // namespace detail

template <class S>
RqSpline<S> make_spline(const S* raw, const SplineConfig& cfg) {
  using ad::softplus;
  const int K = cfg.bins;
  RqSpline<S> sp;
  sp.bound = cfg.bound;
  sp.xk.resize(K + 1);
  sp.yk.resize(K + 1);
  sp.d.resize(K + 1);
  detail::spline_knots(raw, K, cfg, sp.xk.data());
  detail::spline_knots(raw + K, K, cfg, sp.yk.data());
  const double c0 = cfg.deriv_shift();
  sp.d[0] = raw[0] * 0.0 + 1.0;
  sp.d[K] = sp.d[0];
  for (int i = 1; i < K; ++i)
    sp.d[i] = softplus(raw[2 * K + (i - 1)] + c0) + cfg.eps_deriv;
  return sp;
}

// Returns (y, log dy/dz). Identity with zero log-derivative outside the
// bound; the bin is located by scanning knot values.
template <class S>
std::pair<S, S> spline_fwd(const RqSpline<S>& sp, S z) {
  const int K = static_cast<int>(sp.xk.size()) - 1;
  const double zv = ad::value(z);
  if (zv <= -sp.bound || zv >= sp.bound) return {z, z * 0.0};
  int k = 0;
  while (k + 1 < K && zv >= ad::value(sp.xk[k + 1])) ++k;
  using ad::log;
  using std::log;
  S w = sp.xk[k + 1] - sp.xk[k];
  S h = sp.yk[k + 1] - sp.yk[k];
  S s = h / w;
  S xi = (z - sp.xk[k]) / w;
  S omxi = 1.0 - xi;
  S xi_omxi = xi * omxi;
  S t = sp.d[k + 1] + sp.d[k] - 2.0 * s;
  S denom = s + t * xi_omxi;
  S y = sp.yk[k] + h * (s * xi * xi + sp.d[k] * xi_omxi) / denom;
  S num = sp.d[k + 1] * xi * xi + 2.0 * s * xi_omxi +
          sp.d[k] * omxi * omxi;
  S log_deriv = 2.0 * log(s) + log(num) - 2.0 * log(denom);
  return {y, log_deriv};
}

// Returns (z, log dz/dy) = (z, -log dy/dz at z). Solves the per-bin
// quadratic with the numerically stable root.
template <class S>
std::pair<S, S> spline_inv(const RqSpline<S>& sp, S y) {
  const int K = static_cast<int>(sp.xk.size()) - 1;
  const double yv = ad::value(y);
  if (yv <= -sp.bound || yv >= sp.bound) return {y, y * 0.0};
  int k = 0;
  while (k + 1 < K && yv >= ad::value(sp.yk[k + 1])) ++k;
  using ad::log;
  using ad::sqrt;
  using std::log;
  using std::sqrt;
  S w = sp.xk[k + 1] - sp.xk[k];
  S h = sp.yk[k + 1] - sp.yk[k];
  S s = h / w;
  S delta = y - sp.yk[k];
  S t = sp.d[k + 1] + sp.d[k] - 2.0 * s;
  S a = h * (s - sp.d[k]) + delta * t;
  S b = h * sp.d[k] - delta * t;
  S c = -1.0 * s * delta;
  S disc = b * b - 4.0 * a * c;
  S xi = 2.0 * c / (-1.0 * b - sqrt(disc));
  S z = sp.xk[k] + xi * w;
  S omxi = 1.0 - xi;
  S xi_omxi = xi * omxi;
  S denom = s + t * xi_omxi;
  S num = sp.d[k + 1] * xi * xi + 2.0 * s * xi_omxi +
          sp.d[k] * omxi * omxi;
  S log_deriv_inv = 2.0 * log(denom) - 2.0 * log(s) - log(num);
  return {z, log_deriv_inv};
}

}  // namespace misfit
