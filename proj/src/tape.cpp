#include "misfit/tape.hpp"

#include <string>

#include "misfit/errors.hpp"

namespace misfit::ad {

namespace {

std::size_t hidden_sum(const MlpSpec& s) {
  std::size_t n = 0;
  for (int h : s.hidden) n += h;
  return n;
}

std::size_t hidden_offset(const MlpSpec& s, std::size_t layer) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer; ++l) n += s.hidden[l];
  return n;
}

}  // namespace

NodeId Tape::mlp_batch(const MlpSpec& spec, std::vector<NodeId> weight_ids,
                       const double* x, std::size_t rows) {
  if (weight_ids.size() != spec.param_count())
    throw UserError("mlp_batch: got " + std::to_string(weight_ids.size()) +
                    " weight nodes, spec needs " +
                    std::to_string(spec.param_count()));
  MlpEntry e;
  e.spec = spec;
  e.weight_ids = std::move(weight_ids);
  e.rows = rows;
  e.x_off = cache_.size();
  cache_.insert(cache_.end(), x, x + rows * spec.input_dim);
  forward_entry(e);
  const NodeId first = e.first_out;
  entries_.push_back(std::move(e));
  return first;
}

NodeId Tape::mlp_rows(const MlpSpec& spec, NodeId w_first,
                      std::size_t w_stride, std::size_t w_offset,
                      const std::vector<NodeId>& inputs) {
  if (spec.input_dim != 1)
    throw UserError("mlp_rows supports scalar inputs only");
  MlpEntry e;
  e.spec = spec;
  e.per_row = true;
  e.w_first = w_first;
  e.w_stride = w_stride;
  e.w_offset = w_offset;
  e.input_ids = inputs;
  e.rows = inputs.size();
  forward_entry(e);
  const NodeId first = e.first_out;
  entries_.push_back(std::move(e));
  return first;
}

void Tape::forward_entry(MlpEntry& e) {
  const MlpSpec& s = e.spec;
  const std::size_t L = s.layer_count();
  const std::size_t hsum = hidden_sum(s);
  e.act_off = cache_.size();
  cache_.resize(e.act_off + e.rows * hsum);

  const double* wbase = nullptr;
  if (!e.per_row) {
    wgather_.resize(s.param_count());
    for (std::size_t k = 0; k < wgather_.size(); ++k)
      wgather_[k] = val_[e.weight_ids[k]];
    wbase = wgather_.data();
  }

  const int d_out = s.output_dim;
  scratch_.resize(e.rows * d_out);
  double* act = cache_.data() + e.act_off;
  const double* xin = cache_.data() + e.x_off;

  for (std::size_t l = 0; l < L; ++l) {
    const int fi = s.fan_in(l), fo = s.fan_out(l);
    const bool last = (l + 1 == L);
    const std::size_t loff = s.layer_offset(l);
    for (std::size_t r = 0; r < e.rows; ++r) {
      const double* w_r =
          e.per_row ? val_.data() + e.w_first + r * e.w_stride + e.w_offset
                    : wbase;
      const double* Wl = w_r + loff;
      const double* bl = Wl + static_cast<std::size_t>(fi) * fo;
      double in_scalar = 0.0;
      const double* in;
      if (l == 0) {
        if (e.per_row) {
          in_scalar = val_[e.input_ids[r]];
          in = &in_scalar;
        } else {
          in = xin + r * s.input_dim;
        }
      } else {
        in = act + r * hsum + hidden_offset(s, l - 1);
      }
      double* out = last ? scratch_.data() + r * d_out
                         : act + r * hsum + hidden_offset(s, l);
      for (int o = 0; o < fo; ++o) {
        const double* wrow = Wl + static_cast<std::size_t>(o) * fi;
        double acc = bl[o];
        for (int i = 0; i < fi; ++i) acc += wrow[i] * in[i];
        out[o] = last ? acc : apply_activation(s.activation, acc);
      }
    }
  }

  e.first_out = static_cast<NodeId>(val_.size());
  const std::size_t n_out = e.rows * d_out;
  for (std::size_t k = 0; k < n_out; ++k) push(scratch_[k]);
  e.trigger = static_cast<NodeId>(val_.size() - 1);
}

void Tape::backward_entry(const MlpEntry& e) {
  const MlpSpec& s = e.spec;
  const std::size_t L = s.layer_count();
  const std::size_t hsum = hidden_sum(s);
  const std::size_t P = s.param_count();

  const double* wbase = nullptr;
  if (!e.per_row) {
    wgather_.resize(P);
    for (std::size_t k = 0; k < P; ++k) wgather_[k] = val_[e.weight_ids[k]];
    wbase = wgather_.data();
  }

  int hmax = 1;
  for (int h : s.hidden) hmax = std::max(hmax, h);
  // layout: delta | delta_prev | dW (batch form only)
  const std::size_t dsz = e.rows * static_cast<std::size_t>(hmax);
  scratch_.assign(2 * dsz + (e.per_row ? 0 : P), 0.0);
  double* delta = scratch_.data();
  double* delta_prev = scratch_.data() + dsz;
  double* dW = scratch_.data() + 2 * dsz;

  const double* act = cache_.data() + e.act_off;
  const double* xin = e.per_row ? nullptr : cache_.data() + e.x_off;

  for (std::size_t l = L; l-- > 0;) {
    const int fi = s.fan_in(l), fo = s.fan_out(l);
    const bool last = (l + 1 == L);
    const std::size_t loff = s.layer_offset(l);
    for (std::size_t r = 0; r < e.rows; ++r) {
      const double* w_r =
          e.per_row ? val_.data() + e.w_first + r * e.w_stride + e.w_offset
                    : wbase;
      const double* Wl = w_r + loff;
      double* dWl = e.per_row
                        ? adj_.data() + e.w_first + r * e.w_stride + e.w_offset + loff
                        : dW + loff;
      double* dbl = dWl + static_cast<std::size_t>(fi) * fo;
      double in_scalar = 0.0;
      const double* in;
      if (l == 0) {
        in = e.per_row ? (in_scalar = val_[e.input_ids[r]], &in_scalar)
                       : xin + r * s.input_dim;
      } else {
        in = act + r * hsum + hidden_offset(s, l - 1);
      }
      const double* d = last ? adj_.data() + e.first_out + r * s.output_dim
                             : delta + r * static_cast<std::size_t>(hmax);
      if (l > 0) {
        double* dp = delta_prev + r * static_cast<std::size_t>(hmax);
        for (int i = 0; i < fi; ++i) dp[i] = 0.0;
        for (int o = 0; o < fo; ++o) {
          const double g = d[o];
          dbl[o] += g;
          const double* wrow = Wl + static_cast<std::size_t>(o) * fi;
          double* dwrow = dWl + static_cast<std::size_t>(o) * fi;
          for (int i = 0; i < fi; ++i) {
            dwrow[i] += g * in[i];
            dp[i] += g * wrow[i];
          }
        }
        for (int i = 0; i < fi; ++i)
          dp[i] *= activation_deriv_from_value(s.activation, in[i]);
      } else {
        double din = 0.0;
        for (int o = 0; o < fo; ++o) {
          const double g = d[o];
          dbl[o] += g;
          const double* wrow = Wl + static_cast<std::size_t>(o) * fi;
          double* dwrow = dWl + static_cast<std::size_t>(o) * fi;
          for (int i = 0; i < fi; ++i) dwrow[i] += g * in[i];
          if (e.per_row) din += g * wrow[0];
        }
        if (e.per_row) adj_[e.input_ids[r]] += din;
      }
    }
    std::swap(delta, delta_prev);
  }

  if (!e.per_row)
    for (std::size_t k = 0; k < P; ++k) adj_[e.weight_ids[k]] += dW[k];
}

void Tape::backward(NodeId loss) {
  adj_.assign(val_.size(), 0.0);
  adj_[loss] = 1.0;
  std::size_t next_entry = entries_.size();
  for (std::size_t i = val_.size(); i-- > 0;) {
    while (next_entry > 0 && entries_[next_entry - 1].trigger == i) {
      backward_entry(entries_[next_entry - 1]);
      --next_entry;
    }
    const double g = adj_[i];
    if (g == 0.0) continue;
    if (!std::isfinite(g))
      throw DivergenceError(
          "non-finite adjoint at tape node " + std::to_string(i), -1);
    const std::uint32_t off = pool_off_[i];
    const std::uint32_t len = pool_len_[i];
    for (std::uint32_t k = 0; k < len; ++k)
      adj_[pool_parent_[off + k]] += pool_partial_[off + k] * g;
  }
}

void Tape::gradient(NodeId loss, NodeId first, std::size_t count,
                    double* out) {
  if (!std::isfinite(val_[loss]))
    throw DivergenceError("loss value is non-finite", -1);
  backward(loss);
  for (std::size_t k = 0; k < count; ++k) out[k] = adj_[first + k];
}

void Tape::clear() {
  val_.clear();
  adj_.clear();
  pool_off_.clear();
  pool_len_.clear();
  pool_parent_.clear();
  pool_partial_.clear();
  entries_.clear();
  cache_.clear();
}

}  // namespace misfit::ad
