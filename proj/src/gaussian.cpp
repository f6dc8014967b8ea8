#include "misfit/gaussian.hpp"

#include <cmath>

#include "misfit/datasets.hpp"

namespace misfit {

// Fixed sigmas for the GLc presets. The defaults make the constant-variance
// model as well calibrated as it can be on each task; the matched preset
// uses the full mixture variance of the 1D bimodal ground truth.
double default_glc_sigma(DatasetName name, bool matched_variance) {
  if (matched_variance) {
    if (name != DatasetName::bimodal1d)
      throw UserError("matched-variance preset exists for bimodal1d only");
    return std::sqrt(ground_truth(name).mixture_variance());
  }
  switch (name) {
    case DatasetName::unimodal1d:
    case DatasetName::bimodal1d:
      return 3.0;
    case DatasetName::bimodal2d: {
      double c[4];
      ground_truth(name).cov(0.0, c);
      return std::sqrt(c[0]);  // sqrt(272.5)
    }
  }
  return 1.0;
}

}  // namespace misfit
