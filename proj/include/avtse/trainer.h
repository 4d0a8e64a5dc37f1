// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Two-stage training: stage 1 optimizes reconstruction only, stage 2 adds
// the linguistic constraint. Both use Adam with global-norm clipping,
// per-epoch validation, learning-rate halving on plateaus and early
// stopping, all driven by a single non-improvement streak.

#ifndef AVTSE_TRAINER_H_
#define AVTSE_TRAINER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avtse/backbone.h"
#include "avtse/checkpoint.h"
#include "avtse/dataset_sim.h"
#include "avtse/knowledge.h"
#include "avtse/losses.h"
#include "avtse/visual_cues.h"

namespace avtse {

struct StageConfig {
  int stage = 1;
  int max_epochs = 100;
  int patience_stop = 6;
  int patience_halve = 3;
  double lr = 1e-3;
  int batch_size = 4;
  LossWeights weights;
  ConstraintKind constraint_kind = ConstraintKind::kNone;
  uint64_t seed = 0;
  // Optimizer step budget for the stage; 0 means unbounded.
  int64_t max_steps = 0;
  double clip_norm = 5.0;
  // Validation SI-SDR must rise by more than this to count as improvement.
  double improvement_db = 0.01;
  // Softmax temperature of the token logits (pslm_ce).
  double temperature = 1.0;
  // Randomly impair training visual cues.
  bool augment_visual = false;

  void Validate() const;
  bool operator==(const StageConfig &) const = default;
};

// Improvement bookkeeping shared by lr halving and early stopping.
class PlateauSchedule {
 public:
  enum class Decision { kImproved, kPlateau, kHalved, kStop };

  explicit PlateauSchedule(const StageConfig &cfg);
  // Updates best score, streak and lr in `state`.
  Decision Observe(double val_sisdr, TrainState *state) const;

 private:
  int patience_stop_;
  int patience_halve_;
  double improvement_db_;
};

// Scales `grads` in place so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGlobalNorm(ParamSet *grads, double max_norm);

// Adam with bias correction. Moments are created lazily per tensor.
class Adam {
 public:
  Adam() = default;
  Adam(ParamSet m, ParamSet v) : m_(std::move(m)), v_(std::move(v)) {}

  // `step` is the 1-based update count used for bias correction.
  void Update(ParamSet *params, const ParamSet &grads, double lr,
              int64_t step);

  const ParamSet &m() const { return m_; }
  const ParamSet &v() const { return v_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  ParamSet m_, v_;
};

struct TrainExample {
  std::string id;
  AudioClip mixture;
  AudioClip target;
  VisualStream visual;
  std::string transcript;
  ConstraintInputs constraint;
};

// Builds examples from an in-memory catalog (no files involved).
std::vector<TrainExample> MakeExamples(const ClipCatalog &catalog,
                                       const DatasetManifest &manifest,
                                       CropMode mode, int visual_dim);

// Reads WAVs and visual streams named in a manifest stored in `dir`.
std::vector<TrainExample> LoadExamples(const DatasetManifest &manifest,
                                       const std::filesystem::path &dir);

// Frozen knowledge components needed by a constraint kind.
struct KnowledgeBundle {
  KnowledgeSourceSpec spec;
  std::unique_ptr<SpeechKnowledgeSource> speech;
  std::unique_ptr<TextKnowledgeSource> text;
  std::optional<Codebook> codebook;

  // Combined digest of every frozen component.
  uint64_t Fingerprint() const;
};

// Throws BackendMissing when a non-synthetic backend is not configured and
// InvalidArgument when pslm_ce lacks a codebook.
KnowledgeBundle MakeKnowledge(const KnowledgeSourceSpec &spec,
                              ConstraintKind kind,
                              std::optional<Codebook> codebook = std::nullopt);

// Caches the per-sample constraint targets from the clean references.
void PrepareConstraints(std::span<TrainExample> examples, ConstraintKind kind,
                        const KnowledgeBundle *knowledge, double temperature);

// Mean SI-SDR (dB) of extractions over `examples`.
double ValidateModel(const ModelParams &params, const BackboneConfig &cfg,
                     std::span<const TrainExample> examples);

// Mean losses of extractions over `examples`, whose constraint inputs must
// already be prepared.
LossReport MeanLosses(const ModelParams &params, const ParamSet &adapters,
                      const BackboneConfig &cfg,
                      std::span<const TrainExample> examples,
                      const LossWeights &w);

using Validator = std::function<double(const ModelParams &)>;

struct EpochRecord {
  int epoch = 0;
  int64_t steps = 0;
  double train_total = 0.0;
  double train_sisdr_loss = 0.0;
  double train_lc = 0.0;
  double val_si_sdr = 0.0;
  double lr = 0.0;
  int streak = 0;
};

struct StepRecord {
  int64_t step = 0;
  LossReport loss;
  double grad_norm = 0.0;
};

struct TrainResult {
  // Best snapshot by validation SI-SDR.
  Checkpoint best;
  // State after the last epoch.
  Checkpoint last;
  std::vector<EpochRecord> history;
  std::vector<StepRecord> steps;
  bool stopped_early = false;
};

// Runs one stage. Stage 1 may start from scratch (`init` null); stage 2
// requires `init`. A checkpoint carrying a state of the same stage resumes
// that run, otherwise a fresh state is started from the given parameters.
TrainResult TrainStage(const StageConfig &cfg, const BackboneConfig &backbone,
                       const Checkpoint *init,
                       std::span<const TrainExample> train,
                       const Validator &validator,
                       const KnowledgeBundle *knowledge,
                       const std::function<void(const EpochRecord &)> &on_epoch = {});

// One history.jsonl line.
std::string ToJsonLine(const EpochRecord &r);

}  // namespace avtse

#endif  // AVTSE_TRAINER_H_
