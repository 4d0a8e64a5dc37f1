// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AVTSE_PARAMS_H_
#define AVTSE_PARAMS_H_

#include <cstdint>
#include <map>
#include <string>

#include "avtse/autograd.h"
#include "avtse/tensor.h"

namespace avtse {

// Named parameter tensors, iterated in name order.
class ParamSet {
 public:
  using Map = std::map<std::string, Matrix>;

  void Set(const std::string &name, Matrix value);
  bool contains(const std::string &name) const { return tensors_.count(name) > 0; }
  const Matrix &at(const std::string &name) const;
  Matrix &at(const std::string &name);

  const Map &tensors() const { return tensors_; }
  Map &mutable_tensors() { return tensors_; }
  size_t num_tensors() const { return tensors_.size(); }
  // Total scalar count.
  size_t NumValues() const;
  bool AllFinite() const;
  // Stable 64-bit digest of names, shapes and bit patterns.
  uint64_t Fingerprint() const;
  // Same names and shapes.
  bool SameLayout(const ParamSet &o) const;

  bool operator==(const ParamSet &o) const = default;

 private:
  Map tensors_;
};

// Parameters placed on a graph, keyed like the ParamSet they came from.
class BoundParams {
 public:
  // Leaves when `trainable`, constants otherwise.
  BoundParams(ag::Graph &g, const ParamSet &params, bool trainable);
  ag::Var operator[](const std::string &name) const;
  // Gradients of every bound tensor, keyed by name.
  ParamSet Gradients() const;

 private:
  ag::Graph *graph_;
  std::map<std::string, ag::Var> vars_;
};

}  // namespace avtse

#endif  // AVTSE_PARAMS_H_
