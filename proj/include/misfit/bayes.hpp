#pragma once

#include <cstdint>
#include <vector>

#include "misfit/rng.hpp"
#include "misfit/tape.hpp"

namespace misfit {

// Mean-field Gaussian over the flat weight vector; scales live pre-softplus
// so they are unconstrained during optimization.
struct MeanFieldGaussian {
  std::vector<double> mean;
  std::vector<double> raw_scale;

  std::size_t size() const { return mean.size(); }
  double sigma(std::size_t i) const { return ad::softplus(raw_scale[i]); }
};

// Isotropic N(0, sigma^2 I) weight prior.
struct WeightPrior {
  double sigma = 1.0;
};

// raw_scale value that makes softplus(raw) = sigma
double raw_scale_for_sigma(double sigma);

// Reparameterized draw w = mean + softplus(raw_scale) * eps.
std::vector<double> sample_weights(const MeanFieldGaussian& q,
                                   std::uint64_t seed);
std::vector<double> sample_weights(const MeanFieldGaussian& q,
                                   CounterRng& rng);

// Closed-form KL(q || prior), always >= 0.
double kl_meanfield_to_prior(const MeanFieldGaussian& q,
                             const WeightPrior& prior);

// Tape-side pieces for ELBO training. Leaves for (mean, raw_scale) must
// already be on the tape as two contiguous ranges.
ad::Var kl_meanfield_node(ad::Tape& tape, ad::NodeId mean_first,
                          ad::NodeId raw_first, std::size_t count,
                          const WeightPrior& prior);

// Builds w_i = mean_i + softplus(raw_i) * eps_i; returns the node ids of the
// weight draw (gradient flows to both mean and raw_scale).
std::vector<ad::NodeId> reparam_weights(ad::Tape& tape, ad::NodeId mean_first,
                                        ad::NodeId raw_first,
                                        std::size_t count,
                                        const double* eps);

}  // namespace misfit
