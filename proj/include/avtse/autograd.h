// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Tape-based reverse-mode differentiation over Matrix values.
//
// A Graph owns every intermediate created while evaluating an expression.
// Nodes are appended in evaluation order, so a reverse sweep over the node
// list is a valid topological order for back-propagation. Graphs are
// single-use and single-threaded; build one per forward pass.

#ifndef AVTSE_AUTOGRAD_H_
#define AVTSE_AUTOGRAD_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "avtse/tensor.h"

namespace avtse::ag {

class Graph;

class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph *graph() const { return graph_; }
  int id() const { return id_; }

  const Matrix &value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  // Convenience for 1x1 results.
  double scalar() const;

 private:
  friend class Graph;
  Var(Graph *g, int id) : graph_(g), id_(id) {}
  Graph *graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  // Receives the gradient of the node's output; accumulates into inputs.
  using BackwardFn = std::function<void(const Matrix &out_grad)>;

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  // A value that never receives a gradient.
  Var Constant(Matrix value);
  // A value whose gradient is tracked (parameters, differentiable inputs).
  Var Leaf(Matrix value);

  // Seeds d(root)/d(root) = 1 and sweeps the tape backwards. `root` must be
  // 1x1. May be called once per graph.
  void Backward(Var root);

  bool RequiresGrad(Var v) const { return nodes_[v.id()].requires_grad; }
  const Matrix &Value(Var v) const { return nodes_[v.id()].value; }
  // Gradient accumulated for `v`; zero-filled if nothing reached it.
  Matrix Grad(Var v) const;

  size_t num_nodes() const { return nodes_.size(); }

  // --- op implementer interface ---
  // Appends a node. The backward closure is kept only if some input
  // requires a gradient.
  Var Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  // Gradient accumulator for `v` or nullptr when `v` needs no gradient.
  Matrix *GradSink(Var v);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- elementwise and structural ops ----
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
Var AddConstant(Var a, const Matrix &c);
Var Relu(Var a);
Var Sigmoid(Var a);
Var Tanh(Var a);

// y = x W (+ b broadcast over rows). `b` may be an invalid Var.
Var Linear(Var x, Var w, Var b);
Var MatMul(Var a, Var b);

// Per-row normalization with learned gain/offset (1 x D each).
Var LayerNorm(Var x, Var gain, Var offset, double eps = 1e-5);

// Row gather; index -1 yields a zero row.
Var GatherRows(Var x, std::span<const int> index);

// Mean over rows: T x D -> 1 x D.
Var MeanRows(Var x);
Var Sum(Var x);
Var Mean(Var x);

// Frames a 1 x L signal into T x kernel rows with the given hop,
// T = floor((L - kernel) / stride) + 1.
Var Frame(Var signal, int kernel, int stride);
// Inverse of Frame up to window overlap: sums T x K frames placed every
// `stride` samples into a 1 x out_len signal, dropping anything past the
// end.
Var OverlapAdd(Var frames, int stride, int out_len);

// Multi-head scaled dot-product attention applied independently within
// consecutive groups of `group` rows. q, k, v are T x D with T a multiple of
// `group`. Keys whose `key_valid` entry is 0 are masked; a query with no
// valid key in its group outputs zeros. Empty `key_valid` means all valid.
Var GroupedAttention(Var q, Var k, Var v, int group, int heads,
                     std::span<const uint8_t> key_valid = {});

// ---- losses ----
// Mean of squared differences over all entries.
Var MseLoss(Var a, Var b);
// logits[t, k] = -||f_t - c_k||^2 / temperature
Var SquaredDistanceLogits(Var features, const Matrix &centroids,
                          double temperature);
// Mean over rows of -log softmax(logits)[t, target_t].
Var CrossEntropyLoss(Var logits, std::span<const int> targets);

}  // namespace avtse::ag

#endif  // AVTSE_AUTOGRAD_H_
