#include <doctest.h>

#include <cmath>
#include <vector>

#include "misfit/adam.hpp"
#include "misfit/errors.hpp"

using namespace misfit;

TEST_CASE("adam: zero gradient leaves weights and moments untouched") {
  AdamState st(3);
  std::vector<double> w = {1.0, -2.0, 0.5};
  const auto w0 = w;
  adam_step(st, w, {0.0, 0.0, 0.0});
  CHECK(w == w0);
  CHECK(st.t == 1);
  CHECK(st.m == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(st.v == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("adam: first step with bias correction moves by ~lr") {
  AdamState st(1, 1e-3);
  std::vector<double> w = {0.0};
  adam_step(st, w, {0.5});
  // mhat = 0.5, vhat = 0.25 -> step = lr * 0.5 / (0.5 + eps)
  CHECK(w[0] == doctest::Approx(-1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam: two steps match the recurrence evaluated by hand") {
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  AdamState st(1, lr, b1, b2, eps);
  std::vector<double> w = {0.2};

  // oracle: direct evaluation of the update recurrences
  double m = 0.0, v = 0.0, wo = 0.2;
  const double gs[2] = {1.0, -1.0};
  for (int t = 1; t <= 2; ++t) {
    const double g = gs[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    wo -= lr * mhat / (std::sqrt(vhat) + eps);
  }

  adam_step(st, w, {1.0});
  adam_step(st, w, {-1.0});
  CHECK(w[0] == doctest::Approx(wo).epsilon(1e-15));
  CHECK(st.t == 2);
}

TEST_CASE("adam: non-finite gradient leaves state unchanged") {
  AdamState st(2);
  std::vector<double> w = {1.0, 2.0};
  adam_step(st, w, {0.1, 0.2});
  const auto w_before = w;
  const auto m_before = st.m;
  CHECK_THROWS_AS(adam_step(st, w, {0.3, std::nan("")}), DivergenceError);
  CHECK(w == w_before);
  CHECK(st.m == m_before);
  CHECK(st.t == 1);
}
