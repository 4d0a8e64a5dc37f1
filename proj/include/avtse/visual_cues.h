// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Target-speaker visual cue streams and the impairment scenarios used for
// robustness evaluation (full missing, partial occlusion, low resolution).
// Streams are per-frame embeddings, not pixels.

#ifndef AVTSE_VISUAL_CUES_H_
#define AVTSE_VISUAL_CUES_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "avtse/audio.h"
#include "avtse/rng.h"
#include "avtse/tensor.h"

namespace avtse {

constexpr double kDefaultFps = 25.0;
constexpr int kBlurWindow = 5;
constexpr double kNoiseStdScale = 0.5;
// Seed of the fixed audio-to-cue map shared by every synthetic dataset.
constexpr uint64_t kSyntheticVisualSeed = 0x5eedULL;

enum class ImpairmentKind { kFullMissing, kPartialOcclusion, kLowResolution };
enum class LowResMode { kBlur, kNoise };

struct ImpairmentSpec {
  ImpairmentKind kind = ImpairmentKind::kFullMissing;
  double ratio = 0.0;
  uint64_t seed = 0;
  LowResMode low_res_mode = LowResMode::kBlur;
  bool operator==(const ImpairmentSpec &) const = default;
};

struct VisualStream {
  Matrix frames;  // T_v x D_v
  double fps = kDefaultFps;
  std::optional<ImpairmentSpec> impairment;

  int num_frames() const { return frames.rows(); }
  int dim() const { return frames.cols(); }
  bool operator==(const VisualStream &) const = default;
};

std::string ToString(ImpairmentKind kind);
std::string ToString(LowResMode mode);
ImpairmentKind ParseImpairmentKind(const std::string &s);
LowResMode ParseLowResMode(const std::string &s);

// round(duration * fps) frames of a seeded fixed map applied to the per-frame
// log-energy envelope (and its delta) of `target`, squashed with tanh.
VisualStream DeriveSyntheticVisual(const AudioClip &target, int dim, double fps,
                                   uint64_t seed);

// [start, start + count) rows touched by `spec` on a stream of `num_frames`.
std::pair<int, int> AffectedRange(int num_frames, const ImpairmentSpec &spec);

VisualStream ApplyImpairment(const VisualStream &v, const ImpairmentSpec &spec);

// One uniform draw in [0, 1] per utterance.
double SampleImpairmentRatio(Rng &rng);

// <base>.f32 holds T_v * D_v little-endian float32 values; <base>.json holds
// {T_v, D_v, fps, impairment}.
void WriteVisualStream(const std::filesystem::path &base,
                       const VisualStream &v);
VisualStream ReadVisualStream(const std::filesystem::path &base);

}  // namespace avtse

#endif  // AVTSE_VISUAL_CUES_H_
