#pragma once

#include <cstddef>
#include <vector>

namespace misfit {

// Adam with the usual bias correction. Moments are zero at t = 0; t counts
// completed steps.
struct AdamState {
  long t = 0;
  std::vector<double> m, v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n, double lr_ = 1e-3, double beta1_ = 0.9,
                     double beta2_ = 0.999, double eps_ = 1e-8)
      : m(n, 0.0), v(n, 0.0), lr(lr_), beta1(beta1_), beta2(beta2_),
        eps(eps_) {}
};

// In-place update of w. Throws DivergenceError (step = state.t + 1) on a
// non-finite gradient entry, leaving state and w untouched.
void adam_step(AdamState& state, std::vector<double>& w,
               const std::vector<double>& g);

}  // namespace misfit
