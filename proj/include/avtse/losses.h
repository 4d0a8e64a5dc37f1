// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Training objectives: the negated SI-SDR reconstruction loss and the
// linguistic-constraint losses, combined as alpha * L_sisdr + beta * L_lc.

#ifndef AVTSE_LOSSES_H_
#define AVTSE_LOSSES_H_

#include <span>
#include <string>
#include <vector>

#include "avtse/audio.h"
#include "avtse/autograd.h"
#include "avtse/knowledge.h"
#include "avtse/params.h"

namespace avtse {

struct LossWeights {
  double alpha = 1.0;
  double beta = 10.0;

  void Validate() const;
  bool operator==(const LossWeights &) const = default;
};

enum class ConstraintKind { kNone, kPslmMse, kPslmCe, kPlmMse };

std::string ToString(ConstraintKind kind);
ConstraintKind ParseConstraintKind(const std::string &s);

struct LossReport {
  double l_sisdr = 0.0;  // negated SI-SDR, dB
  double l_lc = 0.0;
  double total = 0.0;
  ConstraintKind kind = ConstraintKind::kNone;
};

// Relative stabilizer: delta = kSiSdrEps * ||est||^2 is added to both energy
// terms, which keeps the score exactly scale invariant and bounded by
// +-SiSdrCapDb().
constexpr double kSiSdrEps = 1e-8;
double SiSdrCapDb();

// 10 log10(||s||^2 / ||e||^2) with s the projection of est onto ref.
// Throws on length mismatch or an all-zero reference.
double SiSdrDb(std::span<const double> est, std::span<const double> ref);

double SiSdrLoss(const AudioClip &est, const AudioClip &ref);
// Graph version; `est` is 1 x L, `ref` a constant 1 x L row.
ag::Var SiSdrLoss(ag::Var est, const Matrix &ref);

double LcMse(const FeatureSequence &pred, const FeatureSequence &target);
double LcCe(const Matrix &logits, const TokenSequence &tokens);
// MSE between the speech adapter applied to the frame mean of
// `pred_features` and the text adapter applied to `plm_vec`.
double LcPlm(const FeatureSequence &pred, std::span<const double> plm_vec,
             const ParamSet &adapters);
ag::Var LcPlm(ag::Var pred_features, std::span<const double> plm_vec,
              const BoundParams &adapters);

// Combines precomputed component losses; l_lc is ignored for kNone.
LossReport TotalLoss(double l_sisdr, double l_lc, ConstraintKind kind,
                     const LossWeights &w);

// Everything the constraint term needs besides the estimate itself. Targets
// come from the clean reference and are fixed for the sample.
struct ConstraintInputs {
  ConstraintKind kind = ConstraintKind::kNone;
  int sample_rate = kDefaultSampleRate;
  const SpeechKnowledgeSource *speech = nullptr;
  FeatureSequence target_features;  // pslm_mse
  const Codebook *codebook = nullptr;
  TokenSequence target_tokens;  // pslm_ce
  double temperature = 1.0;
  std::vector<double> plm_vec;  // plm_mse
};

// Builds the targets for `kind` from the reference clip and its transcript.
ConstraintInputs MakeConstraintInputs(ConstraintKind kind,
                                      const AudioClip &ref,
                                      const std::string &transcript,
                                      const SpeechKnowledgeSource *speech,
                                      const TextKnowledgeSource *text,
                                      const Codebook *codebook,
                                      double temperature = 1.0);

struct Objective {
  ag::Var total;
  ag::Var l_sisdr;
  ag::Var l_lc;  // invalid for kNone
};

// Graph objective for one sample. `adapters` is required for plm_mse only.
Objective BuildObjective(ag::Var est, const Matrix &ref,
                         const ConstraintInputs &in,
                         const BoundParams *adapters, const LossWeights &w);

// Value-level total loss for one estimate.
LossReport TotalLoss(const AudioClip &est, const AudioClip &ref,
                     const ConstraintInputs &in, const ParamSet *adapters,
                     const LossWeights &w);

}  // namespace avtse

#endif  // AVTSE_LOSSES_H_
