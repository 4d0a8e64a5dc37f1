// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Desk-scale audio-visual extraction network: a strided conv encoder, a
// chunked dual-path transformer separator with visual cross-attention, a
// sigmoid mask head and an overlap-add decoder.

#ifndef AVTSE_BACKBONE_H_
#define AVTSE_BACKBONE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avtse/audio.h"
#include "avtse/autograd.h"
#include "avtse/params.h"
#include "avtse/visual_cues.h"

namespace avtse {

struct BackboneConfig {
  int enc_kernel = 16;
  int enc_stride = 8;
  int model_dim = 64;
  int n_blocks = 2;
  int chunk_len = 50;
  int n_heads = 4;
  int visual_dim = 64;
  uint64_t seed = 0;

  int ffn_dim() const { return 2 * model_dim; }
  // Throws InvalidArgument when an invariant does not hold.
  void Validate() const;
  bool operator==(const BackboneConfig &) const = default;
};

using ModelParams = ParamSet;

ModelParams InitParams(const BackboneConfig &cfg);

// Number of encoder frames for a signal of `length` samples.
int NumEncoderFrames(int length, const BackboneConfig &cfg);

// Rectified encoder activations, T_a x model_dim with
// T_a = floor((len - enc_kernel) / enc_stride) + 1.
Matrix EncodeAudio(const AudioClip &x, const ModelParams &params,
                   const BackboneConfig &cfg);

// Row t of the result is visual row round_half_even(t (T_v - 1) / (T_a - 1)).
std::vector<int> AlignIndices(int t_v, int t_a);
Matrix AlignVisual(const VisualStream &v, int t_a);

struct ForwardOptions {
  // Bypass the mask head (mask == 1), leaving the encoder/decoder roundtrip.
  bool unit_mask = false;
};

struct ForwardOutputs {
  ag::Var estimate;  // 1 x L
  ag::Var mask;      // T_a x model_dim (invalid when unit_mask)
};

// Builds the extraction graph on `g`. The mixture is not differentiated.
ForwardOutputs Forward(ag::Graph &g, const BoundParams &params,
                       const BackboneConfig &cfg, const AudioClip &mixture,
                       const VisualStream &visual,
                       const ForwardOptions &opts = {});

// Inference: y_hat = f(x, v). Output length equals input length.
AudioClip Extract(const AudioClip &mixture, const VisualStream &visual,
                  const ModelParams &params, const BackboneConfig &cfg,
                  const ForwardOptions &opts = {});

}  // namespace avtse

#endif  // AVTSE_BACKBONE_H_
