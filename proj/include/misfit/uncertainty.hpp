#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misfit/model.hpp"

namespace misfit {

// Weight draws plus the model that interprets them. Deterministic models are
// singleton ensembles; variational ones carry posterior draws.
struct PredictiveEnsemble {
  const Model* model = nullptr;
  std::vector<std::vector<double>> draws;
  bool variational = false;

  std::size_t n_draws() const { return draws.size(); }
};

// draws = 0 picks the model's configured posterior draw count.
PredictiveEnsemble make_ensemble(const Model& model, std::size_t draws = 0);

// Posterior predictive density on a y grid at one x: pointwise average of
// the per-draw densities (1D outcome).
std::vector<double> predictive_density(const PredictiveEnsemble& e, double x,
                                       const std::vector<double>& y_grid);

// Trapezoid differential entropy -sum p ln p dy, 0 ln 0 := 0. Throws
// UserError when the grid integral is off 1 by more than 1e-2.
double diff_entropy(const std::vector<double>& density, double spacing);

// Closed form 0.5 ln(2 pi e sigma^2).
double gaussian_entropy(double variance);

// Mean over parameter coordinates of the unbiased sample variance across
// draws; exactly 0 for a single draw.
double u_variance(const std::vector<std::vector<double>>& theta_draws);

// Sorted-sample W1 between each draw's conditional and the pooled posterior
// predictive, averaged over draws. Common random numbers: every draw (and
// the pooled sampler) pushes the same base normals through its transform.
// 1D outcomes only; 2D ensembles are rejected.
double u_wasserstein(const PredictiveEnsemble& e, double x,
                     std::size_t n_samples, std::uint64_t seed);

struct UncertaintyCurve {
  std::vector<double> x, entropy, u_v, u_w;
  std::vector<int> in_dist;
  std::string model_class;  // tag guarding cross-class U_V comparisons
  bool variational = false;
};

// Evaluates H, U_V, U_W on the grid. Deterministic ensembles get exact
// zeros for U_V and U_W. Per-point RNG substreams derive from
// (seed, grid index).
UncertaintyCurve uncertainty_curve(const PredictiveEnsemble& e,
                                   const std::vector<double>& x_grid,
                                   std::uint64_t seed);

void write_curve_csv(const UncertaintyCurve& curve, const std::string& path);

// Mean of U_V over grid points with lo <= |x| < hi.
double mean_u_v(const UncertaintyCurve& c, double lo, double hi);
double mean_u_w(const UncertaintyCurve& c, double lo, double hi);
// U_V difference between two curves of the same model class; throws
// UserError when the class tags differ (the measure is not comparable
// across parameter spaces).
double u_v_gap(const UncertaintyCurve& a, const UncertaintyCurve& b,
               double lo, double hi);

}  // namespace misfit
