#include "misfit/mlp.hpp"

#include <cmath>
#include <string>

#include "misfit/errors.hpp"

namespace misfit {

int MlpSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden[layer - 1];
}

int MlpSpec::fan_out(std::size_t layer) const {
  return layer == hidden.size() ? output_dim : hidden[layer];
}

std::size_t MlpSpec::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < layer_count(); ++l)
    total += static_cast<std::size_t>(fan_in(l) + 1) * fan_out(l);
  return total;
}

std::size_t MlpSpec::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(fan_in(l) + 1) * fan_out(l);
  return off;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw UserError("MlpSpec: input_dim and output_dim must be >= 1");
  for (int h : hidden)
    if (h < 1) throw UserError("MlpSpec: hidden widths must be >= 1");
}

std::vector<double> init_params(const MlpSpec& spec, CounterRng& rng) {
  spec.validate();
  std::vector<double> w(spec.param_count(), 0.0);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const int fi = spec.fan_in(l), fo = spec.fan_out(l);
    const double a = std::sqrt(6.0 / static_cast<double>(fi + fo));
    double* wl = w.data() + spec.layer_offset(l);
    for (int k = 0; k < fi * fo; ++k) wl[k] = rng.uniform(-a, a);
    // biases stay zero
  }
  return w;
}

void mlp_forward(const MlpSpec& spec, const double* w, const double* x,
                 double* out) {
  const std::size_t L = spec.layer_count();
  // two ping-pong buffers sized to the widest layer
  int widest = spec.input_dim;
  for (int h : spec.hidden) widest = std::max(widest, h);
  widest = std::max(widest, spec.output_dim);
  double buf_a[512], buf_b[512];
  std::vector<double> heap_a, heap_b;
  double *cur, *nxt;
  if (widest <= 512) {
    cur = buf_a;
    nxt = buf_b;
  } else {
    heap_a.resize(widest);
    heap_b.resize(widest);
    cur = heap_a.data();
    nxt = heap_b.data();
  }
  for (int i = 0; i < spec.input_dim; ++i) cur[i] = x[i];
  std::size_t off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const int fi = spec.fan_in(l), fo = spec.fan_out(l);
    const double* W = w + off;
    const double* b = w + off + static_cast<std::size_t>(fi) * fo;
    const bool last = (l + 1 == L);
    double* dst = last ? out : nxt;
    for (int o = 0; o < fo; ++o) {
      const double* row = W + static_cast<std::size_t>(o) * fi;
      double acc = b[o];
      for (int i = 0; i < fi; ++i) acc += row[i] * cur[i];
      dst[o] = last ? acc : apply_activation(spec.activation, acc);
    }
    off += static_cast<std::size_t>(fi + 1) * fo;
    if (!last) std::swap(cur, nxt);
  }
}

std::vector<double> mlp_forward(const MlpSpec& spec,
                                const std::vector<double>& w,
                                const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(spec.input_dim))
    throw UserError("mlp_forward: input has " + std::to_string(x.size()) +
                    " entries, spec expects " +
                    std::to_string(spec.input_dim));
  if (w.size() != spec.param_count())
    throw UserError("mlp_forward: parameter vector has " +
                    std::to_string(w.size()) + " entries, spec expects " +
                    std::to_string(spec.param_count()));
  std::vector<double> out(spec.output_dim);
  mlp_forward(spec, w.data(), x.data(), out.data());
  return out;
}

}  // namespace misfit
