#include "misfit/bayes.hpp"

#include <cmath>

#include "misfit/errors.hpp"

namespace misfit {

double raw_scale_for_sigma(double sigma) {
  if (!(sigma > 0.0)) throw UserError("sigma must be positive");
  return std::log(std::expm1(sigma));
}

std::vector<double> sample_weights(const MeanFieldGaussian& q,
                                   CounterRng& rng) {
  std::vector<double> w(q.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = q.mean[i] + q.sigma(i) * rng.normal();
  return w;
}

std::vector<double> sample_weights(const MeanFieldGaussian& q,
                                   std::uint64_t seed) {
  CounterRng rng(seed, streams::kPredictive);
  return sample_weights(q, rng);
}

double kl_meanfield_to_prior(const MeanFieldGaussian& q,
                             const WeightPrior& prior) {
  if (!(prior.sigma > 0.0)) throw UserError("prior sigma must be positive");
  const double log_sp = std::log(prior.sigma);
  const double inv_2sp2 = 0.5 / (prior.sigma * prior.sigma);
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double sq = q.sigma(i);
    kl += log_sp - std::log(sq) +
          (sq * sq + q.mean[i] * q.mean[i]) * inv_2sp2 - 0.5;
  }
  return kl;
}

ad::Var kl_meanfield_node(ad::Tape& tape, ad::NodeId mean_first,
                          ad::NodeId raw_first, std::size_t count,
                          const WeightPrior& prior) {
  using ad::Var;
  const double log_sp = std::log(prior.sigma);
  const double inv_2sp2 = 0.5 / (prior.sigma * prior.sigma);
  Var kl;
  for (std::size_t i = 0; i < count; ++i) {
    Var m(tape, static_cast<ad::NodeId>(mean_first + i));
    Var r(tape, static_cast<ad::NodeId>(raw_first + i));
    Var sq = ad::softplus(r);
    Var term = (log_sp - ad::log(sq)) +
               (sq * sq + m * m) * inv_2sp2 - 0.5;
    kl = (i == 0) ? term : kl + term;
  }
  return kl;
}

std::vector<ad::NodeId> reparam_weights(ad::Tape& tape, ad::NodeId mean_first,
                                        ad::NodeId raw_first,
                                        std::size_t count,
                                        const double* eps) {
  using ad::Var;
  std::vector<ad::NodeId> ids(count);
  for (std::size_t i = 0; i < count; ++i) {
    Var m(tape, static_cast<ad::NodeId>(mean_first + i));
    Var r(tape, static_cast<ad::NodeId>(raw_first + i));
    ids[i] = (m + ad::softplus(r) * eps[i]).id;
  }
  return ids;
}

}  // namespace misfit
