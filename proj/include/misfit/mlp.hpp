#pragma once

#include <cstddef>
#include <vector>

#include "misfit/rng.hpp"

namespace misfit {

enum class Activation { relu, tanh };

// Fully connected network f(x; w). The flat parameter vector is laid out
// layer-major, weights before biases: for each layer l with dimensions
// fan_in -> fan_out, first the weight matrix W_l in row-major order
// [fan_out][fan_in], then the bias b_l [fan_out]. Hidden layers apply the
// activation, the final layer is linear.
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden = {64, 64};
  int output_dim = 1;
  Activation activation = Activation::relu;

  // Number of layers including the output layer.
  std::size_t layer_count() const { return hidden.size() + 1; }
  int fan_in(std::size_t layer) const;
  int fan_out(std::size_t layer) const;
  std::size_t param_count() const;
  // Offset of layer l's weight block in the flat vector.
  std::size_t layer_offset(std::size_t layer) const;
  void validate() const;  // throws UserError on non-positive dims
};

// Glorot-uniform weights, zero biases.
std::vector<double> init_params(const MlpSpec& spec, CounterRng& rng);

// Plain forward pass, no differentiation. x has spec.input_dim entries,
// out gets spec.output_dim entries. Throws UserError on size mismatch when
// sizes are supplied.
void mlp_forward(const MlpSpec& spec, const double* w, const double* x,
                 double* out);
std::vector<double> mlp_forward(const MlpSpec& spec,
                                const std::vector<double>& w,
                                const std::vector<double>& x);

inline double apply_activation(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? z : 0.0;
  return std::tanh(z);
}

// Derivative expressed through the post-activation value.
inline double activation_deriv_from_value(Activation a, double v) {
  if (a == Activation::relu) return v > 0.0 ? 1.0 : 0.0;
  return 1.0 - v * v;
}

}  // namespace misfit
