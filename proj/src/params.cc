// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/params.h"

#include <cstring>

#include "avtse/error.h"
#include "avtse/rng.h"

namespace avtse {

void ParamSet::Set(const std::string &name, Matrix value) {
  tensors_[name] = std::move(value);
}

const Matrix &ParamSet::at(const std::string &name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw InvalidArgument("parameter '" + name + "' not found");
  return it->second;
}

Matrix &ParamSet::at(const std::string &name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw InvalidArgument("parameter '" + name + "' not found");
  return it->second;
}

size_t ParamSet::NumValues() const {
  size_t n = 0;
  for (const auto &[name, m] : tensors_) n += m.size();
  return n;
}

bool ParamSet::AllFinite() const {
  for (const auto &[name, m] : tensors_)
    if (!m.AllFinite()) return false;
  return true;
}

uint64_t ParamSet::Fingerprint() const {
  uint64_t h = 0x6a09e667f3bcc909ULL;
  for (const auto &[name, m] : tensors_) {
    h = MixSeed(h ^ HashString(name));
    h = MixSeed(h ^ (static_cast<uint64_t>(m.rows()) << 32 | m.cols()));
    for (double v : m.values()) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      h = MixSeed(h ^ bits);
    }
  }
  return h;
}

bool ParamSet::SameLayout(const ParamSet &o) const {
  if (tensors_.size() != o.tensors_.size()) return false;
  auto it = o.tensors_.begin();
  for (const auto &[name, m] : tensors_) {
    if (name != it->first || !m.SameShape(it->second)) return false;
    ++it;
  }
  return true;
}

BoundParams::BoundParams(ag::Graph &g, const ParamSet &params, bool trainable)
    : graph_(&g) {
  for (const auto &[name, m] : params.tensors())
    vars_.emplace(name, trainable ? g.Leaf(m) : g.Constant(m));
}

ag::Var BoundParams::operator[](const std::string &name) const {
  auto it = vars_.find(name);
  if (it == vars_.end())
    throw InvalidArgument("parameter '" + name + "' is not bound");
  return it->second;
}

ParamSet BoundParams::Gradients() const {
  ParamSet out;
  for (const auto &[name, v] : vars_) out.Set(name, graph_->Grad(v));
  return out;
}

}  // namespace avtse
