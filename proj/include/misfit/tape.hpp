#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "misfit/mlp.hpp"

namespace misfit::ad {

using NodeId = std::uint32_t;

// Reverse-mode tape over scalar operations. Every scalar node stores its
// primal value plus the local partials w.r.t. its parents, precomputed at
// forward time, so the backward sweep is a single pass of fused
// multiply-adds in reverse creation order (which is a topological order).
//
// Fully connected networks are recorded as fused batch entries: the forward
// pass caches layer activations and the backward pass runs standard matrix
// backpropagation, accumulating into the adjoints of the weight nodes. This
// keeps the per-sample scalar work (likelihood heads, spline transforms) on
// the plain scalar tape while the dense linear algebra stays in tight loops.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  NodeId leaf(double v) { return push(v); }
  NodeId constant(double v) { return push(v); }

  NodeId unary(double v, NodeId a, double da) {
    pool_parent_.push_back(a);
    pool_partial_.push_back(da);
    return push(v, 1);
  }

  NodeId binary(double v, NodeId a, double da, NodeId b, double db) {
    pool_parent_.push_back(a);
    pool_parent_.push_back(b);
    pool_partial_.push_back(da);
    pool_partial_.push_back(db);
    return push(v, 2);
  }

  double value(NodeId id) const { return val_[id]; }
  double adjoint(NodeId id) const { return adj_[id]; }
  std::size_t size() const { return val_.size(); }

  // Fused batched network evaluation. x is row-major [rows][spec.input_dim]
  // of plain (non-differentiated) inputs; the weights are existing nodes,
  // listed in the flat layout of MlpSpec. Returns the id of the first output
  // node; outputs are contiguous, row-major [rows][spec.output_dim].
  NodeId mlp_batch(const MlpSpec& spec, std::vector<NodeId> weight_ids,
                   const double* x, std::size_t rows);

  // Fused network evaluation where every row has its own weights, read from
  // the contiguous node range starting at w_first + row * w_stride + w_offset
  // (the layout produced by a hypernetwork's mlp_batch outputs), and its own
  // single scalar input node. Requires spec.input_dim == 1. Output node
  // layout as in mlp_batch.
  NodeId mlp_rows(const MlpSpec& spec, NodeId w_first, std::size_t w_stride,
                  std::size_t w_offset, const std::vector<NodeId>& inputs);

  // Seeds d(loss)/d(loss) = 1 and sweeps the whole tape. Throws
  // DivergenceError naming the node index if a non-finite adjoint shows up.
  void backward(NodeId loss);

  // backward() plus extraction of the adjoints of `count` nodes starting at
  // `first` (the usual pattern: leaves pushed first).
  void gradient(NodeId loss, NodeId first, std::size_t count, double* out);

  void clear();

 private:
  NodeId push(double v, std::uint32_t n_parents = 0) {
    val_.push_back(v);
    pool_off_.push_back(static_cast<std::uint32_t>(pool_parent_.size() -
                                                   n_parents));
    pool_len_.push_back(n_parents);
    return static_cast<NodeId>(val_.size() - 1);
  }

  struct MlpEntry {
    MlpSpec spec;
    std::vector<NodeId> weight_ids;  // batch form; empty for row form
    NodeId w_first = 0;              // row form
    std::size_t w_stride = 0, w_offset = 0;
    std::vector<NodeId> input_ids;   // row form
    bool per_row = false;
    std::size_t rows = 0;
    std::size_t x_off = 0;     // copied inputs (batch form), in cache_
    std::size_t act_off = 0;   // hidden activations, row-major per layer
    NodeId first_out = 0;
    NodeId trigger = 0;        // last output node id
  };

  void forward_entry(MlpEntry& e);
  void backward_entry(const MlpEntry& e);
  const double* entry_weights(const MlpEntry& e, std::size_t row);

  std::vector<double> val_, adj_;
  std::vector<std::uint32_t> pool_off_, pool_len_;
  std::vector<NodeId> pool_parent_;
  std::vector<double> pool_partial_;
  std::vector<MlpEntry> entries_;
  std::vector<double> cache_;    // activations and copied inputs
  std::vector<double> scratch_;  // backward work space
  std::vector<double> wgather_;  // gathered weight values (batch form)
};

// Expression-building handle. Copies are cheap; all state lives on the tape.
struct Var {
  Tape* tape = nullptr;
  NodeId id = 0;

  Var() = default;
  Var(Tape& t, NodeId i) : tape(&t), id(i) {}
  double value() const { return tape->value(id); }
};

inline Var make_leaf(Tape& t, double v) { return {t, t.leaf(v)}; }
inline Var make_const(Tape& t, double v) { return {t, t.constant(v)}; }

inline Var operator+(Var a, Var b) {
  return {*a.tape, a.tape->binary(a.value() + b.value(), a.id, 1.0, b.id, 1.0)};
}
inline Var operator-(Var a, Var b) {
  return {*a.tape,
          a.tape->binary(a.value() - b.value(), a.id, 1.0, b.id, -1.0)};
}
inline Var operator*(Var a, Var b) {
  return {*a.tape,
          a.tape->binary(a.value() * b.value(), a.id, b.value(), b.id,
                         a.value())};
}
inline Var operator/(Var a, Var b) {
  const double bv = b.value();
  const double q = a.value() / bv;
  return {*a.tape, a.tape->binary(q, a.id, 1.0 / bv, b.id, -q / bv)};
}
inline Var operator-(Var a) {
  return {*a.tape, a.tape->unary(-a.value(), a.id, -1.0)};
}
inline Var operator+(Var a, double c) {
  return {*a.tape, a.tape->unary(a.value() + c, a.id, 1.0)};
}
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) {
  return {*a.tape, a.tape->unary(c - a.value(), a.id, -1.0)};
}
inline Var operator*(Var a, double c) {
  return {*a.tape, a.tape->unary(a.value() * c, a.id, c)};
}
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var a) {
  const double av = a.value();
  return {*a.tape, a.tape->unary(c / av, a.id, -c / (av * av))};
}

inline Var exp(Var a) {
  const double e = std::exp(a.value());
  return {*a.tape, a.tape->unary(e, a.id, e)};
}
inline Var log(Var a) {
  return {*a.tape, a.tape->unary(std::log(a.value()), a.id, 1.0 / a.value())};
}
inline Var sqrt(Var a) {
  const double s = std::sqrt(a.value());
  return {*a.tape, a.tape->unary(s, a.id, 0.5 / s)};
}
inline Var tanh(Var a) {
  const double t = std::tanh(a.value());
  return {*a.tape, a.tape->unary(t, a.id, 1.0 - t * t)};
}
inline Var softplus(Var a) {
  const double x = a.value();
  const double v = x > 30.0 ? x : std::log1p(std::exp(x));
  const double sig = x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
  return {*a.tape, a.tape->unary(v, a.id, sig)};
}
inline Var square(Var a) { return a * a; }

// Plain-double twins so numerical code can be written once and instantiated
// for both double and Var.
inline double value(double x) { return x; }
inline double value(Var x) { return x.value(); }
inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double square(double x) { return x * x; }

}  // namespace misfit::ad
