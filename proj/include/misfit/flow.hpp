#pragma once

#include <cstdint>
#include <vector>

#include "misfit/mlp.hpp"
#include "misfit/rng.hpp"
#include "misfit/spline.hpp"
#include "misfit/tape.hpp"

namespace misfit {

// Affine target normalization (zero mean, unit variance on the training
// targets), folded into the density as a fixed layer so data lands inside
// the spline's active interval.
struct Normalizer {
  std::vector<double> shift, scale;  // one entry per outcome dimension
};

Normalizer fit_normalizer(const std::vector<double>& y, int y_dim);

// 1D conditional flow: the base network emits the 3K-1 raw spline
// parameters directly; base distribution standard normal.
struct FlowConfig1D {
  SplineConfig spline;
};

// 2D conditional flow: coupling layers alternating the transformed
// coordinate. Each layer's transformer is a 1D spline whose raw parameters
// come from a conditioner network (1 -> cond_hidden -> 3K-1, tanh) whose
// weights are emitted by the hypernetwork h(x; W).
struct FlowConfig2D {
  SplineConfig spline;
  int layers = 4;
  int cond_hidden = 16;

  MlpSpec conditioner_spec() const {
    MlpSpec s;
    s.input_dim = 1;
    s.hidden = {cond_hidden};
    s.output_dim = spline.param_count();
    s.activation = Activation::tanh;
    return s;
  }
  // hypernetwork output dimension
  int hyper_out_dim() const {
    return layers * static_cast<int>(conditioner_spec().param_count());
  }
};

// Precomputed per-x view of the 1D flow; cheap repeated density/sampling.
struct FlowSlice1D {
  RqSpline<double> spline;
  double shift = 0.0, scale = 1.0;

  double logprob(double y) const;
  double sample(double z) const;  // push a base draw through the flow
};

FlowSlice1D flow_slice_1d(const MlpSpec& hyper, const double* w, double x,
                          const FlowConfig1D& cfg, const Normalizer& nrm);

double flow_logprob_1d(const MlpSpec& hyper, const double* w, double x,
                       double y, const FlowConfig1D& cfg,
                       const Normalizer& nrm);
std::vector<double> flow_sample_1d(const MlpSpec& hyper, const double* w,
                                   double x, const FlowConfig1D& cfg,
                                   const Normalizer& nrm, std::size_t n,
                                   std::uint64_t seed);

// Per-x view of the 2D flow: the hypernetwork ran once, conditioner weights
// are fixed.
struct FlowSlice2D {
  std::vector<double> theta;  // hypernetwork output, layers * cond params
  FlowConfig2D cfg;
  double shift[2] = {0, 0}, scale[2] = {1, 1};

  double logprob(const double* y) const;
  void sample(const double* z, double* y_out) const;
  void inverse(const double* y, double* z_out) const;  // back to base space
};

FlowSlice2D flow_slice_2d(const MlpSpec& hyper, const double* w, double x,
                          const FlowConfig2D& cfg, const Normalizer& nrm);

double flow_logprob_2d(const MlpSpec& hyper, const double* w, double x,
                       const double* y, const FlowConfig2D& cfg,
                       const Normalizer& nrm);
std::vector<double> flow_sample_2d(const MlpSpec& hyper, const double* w,
                                   double x, const FlowConfig2D& cfg,
                                   const Normalizer& nrm, std::size_t n,
                                   std::uint64_t seed);

// Training-path builders. theta_first points at the hypernetwork's batch
// outputs on the tape (contiguous per sample, batch order matching y); both
// return the *sum* of per-sample negative log densities.
ad::Var flow1d_nll_sum(ad::Tape& tape, ad::NodeId theta_first,
                       const double* y, std::size_t n_rows,
                       const FlowConfig1D& cfg, const Normalizer& nrm);
ad::Var flow2d_nll_sum(ad::Tape& tape, ad::NodeId theta_first,
                       const double* y, std::size_t n_rows,
                       const FlowConfig2D& cfg, const Normalizer& nrm);

}  // namespace misfit
