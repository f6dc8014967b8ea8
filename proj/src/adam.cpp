#include "misfit/adam.hpp"

#include <cmath>
#include <string>

#include "misfit/errors.hpp"

namespace misfit {

void adam_step(AdamState& state, std::vector<double>& w,
               const std::vector<double>& g) {
  const std::size_t n = w.size();
  if (g.size() != n || state.m.size() != n)
    throw UserError("adam_step: size mismatch (w " + std::to_string(n) +
                    ", g " + std::to_string(g.size()) + ", moments " +
                    std::to_string(state.m.size()) + ")");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(g[i]))
      throw DivergenceError(
          "adam_step: non-finite gradient at index " + std::to_string(i),
          state.t + 1);

  const long t = state.t + 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    w[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  state.t = t;
}

}  // namespace misfit
