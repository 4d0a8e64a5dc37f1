// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Single-file checkpoint container.
//
// Layout: the 8-byte magic "AVTSECK\0", a little-endian uint32 format
// version, a little-endian uint64 header length, the JSON header, then every
// tensor as raw little-endian float64 in header-index order. The header
// echoes the backbone config, lists each tensor with its group, shape and
// byte offset, and optionally carries the training-state block.

#ifndef AVTSE_CHECKPOINT_H_
#define AVTSE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>

#include "avtse/backbone.h"
#include "avtse/knowledge.h"
#include "avtse/losses.h"
#include "avtse/params.h"
#include "avtse/rng.h"

namespace avtse {

constexpr uint32_t kCheckpointVersion = 1;

struct TrainState {
  int stage = 1;
  int epoch = 0;
  int64_t step = 0;
  // -inf until the first validation.
  double best_val_sisdr = -std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
  double current_lr = 1e-3;
  Rng rng;

  bool operator==(const TrainState &) const = default;
};

// Serialized engine state; opaque text.
std::string RngStateString(const Rng &rng);
Rng RngFromString(const std::string &s);

struct Checkpoint {
  BackboneConfig config;
  ModelParams model;
  // Training-only tensors; empty in inference checkpoints.
  ParamSet adapters;
  std::optional<TrainState> state;
  // Adam moments keyed like `model` and `adapters`; empty when absent.
  ParamSet adam_m;
  ParamSet adam_v;
  // Knowledge source and constraint of the producing run, if any.
  std::optional<KnowledgeSourceSpec> knowledge;
  ConstraintKind constraint = ConstraintKind::kNone;

  bool is_inference() const {
    return adapters.num_tensors() == 0 && !state && !knowledge &&
           adam_m.num_tensors() == 0 && adam_v.num_tensors() == 0;
  }
};

// Config and backbone parameters only.
Checkpoint InferenceCheckpoint(const Checkpoint &ck);

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ck);
// Throws DataError on a bad magic, unsupported version or truncation.
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace avtse

#endif  // AVTSE_CHECKPOINT_H_
