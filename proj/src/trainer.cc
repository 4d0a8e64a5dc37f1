// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/trainer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "avtse/error.h"
#include "avtse/metrics.h"
#include "json.hpp"

namespace avtse {

void StageConfig::Validate() const {
  AVTSE_REQUIRE(stage == 1 || stage == 2, "stage must be 1 or 2");
  AVTSE_REQUIRE(stage == 2 || constraint_kind == ConstraintKind::kNone,
                "stage 1 is reconstruction-only; constraint must be none, got " +
                    ToString(constraint_kind));
  AVTSE_REQUIRE(max_epochs >= 1, "max_epochs must be >= 1");
  AVTSE_REQUIRE(patience_halve >= 1 && patience_stop >= 1,
                "patience values must be >= 1");
  AVTSE_REQUIRE(patience_halve <= patience_stop,
                "patience_halve must not exceed patience_stop");
  AVTSE_REQUIRE(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  AVTSE_REQUIRE(batch_size >= 1, "batch_size must be >= 1");
  AVTSE_REQUIRE(max_steps >= 0, "max_steps must be >= 0");
  AVTSE_REQUIRE(clip_norm > 0.0, "clip_norm must be positive");
  AVTSE_REQUIRE(improvement_db >= 0.0, "improvement_db must be >= 0");
  AVTSE_REQUIRE(temperature > 0.0, "temperature must be positive");
  weights.Validate();
}

PlateauSchedule::PlateauSchedule(const StageConfig &cfg)
    : patience_stop_(cfg.patience_stop),
      patience_halve_(cfg.patience_halve),
      improvement_db_(cfg.improvement_db) {}

PlateauSchedule::Decision PlateauSchedule::Observe(double val_sisdr,
                                                   TrainState *state) const {
  if (val_sisdr > state->best_val_sisdr + improvement_db_) {
    state->best_val_sisdr = val_sisdr;
    state->epochs_since_improve = 0;
    return Decision::kImproved;
  }
  ++state->epochs_since_improve;
  if (state->epochs_since_improve >= patience_stop_) return Decision::kStop;
  if (state->epochs_since_improve % patience_halve_ == 0) {
    state->current_lr *= 0.5;
    return Decision::kHalved;
  }
  return Decision::kPlateau;
}

double ClipGlobalNorm(ParamSet *grads, double max_norm) {
  double sq = 0.0;
  for (const auto &[name, g] : grads->tensors()) sq += g.SquaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto &[name, g] : grads->mutable_tensors())
      for (double &v : g.values()) v *= s;
  }
  return norm;
}

void Adam::Update(ParamSet *params, const ParamSet &grads, double lr,
                  int64_t step) {
  AVTSE_REQUIRE(step >= 1, "Adam step count is 1-based");
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (const auto &[name, g] : grads.tensors()) {
    Matrix &p = params->at(name);
    AVTSE_REQUIRE(p.SameShape(g), "gradient shape mismatch for " + name);
    if (!m_.contains(name)) m_.Set(name, Matrix(g.rows(), g.cols()));
    if (!v_.contains(name)) v_.Set(name, Matrix(g.rows(), g.cols()));
    Matrix &m = m_.at(name);
    Matrix &v = v_.at(name);
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
}

std::vector<TrainExample> MakeExamples(const ClipCatalog &catalog,
                                       const DatasetManifest &manifest,
                                       CropMode mode, int visual_dim) {
  std::vector<TrainExample> out;
  out.reserve(manifest.entries.size());
  for (const auto &e : manifest.entries) {
    MixtureSample s = Materialize(catalog, e, manifest.duration_s, mode);
    TrainExample ex;
    ex.id = e.id;
    ex.visual = DeriveSyntheticVisual(s.target, visual_dim, kDefaultFps,
                                      kSyntheticVisualSeed);
    ex.mixture = std::move(s.mixture);
    ex.target = std::move(s.target);
    ex.transcript = e.transcript;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainExample> LoadExamples(const DatasetManifest &manifest,
                                       const std::filesystem::path &dir) {
  std::vector<TrainExample> out;
  out.reserve(manifest.entries.size());
  for (const auto &e : manifest.entries) {
    TrainExample ex;
    ex.id = e.id;
    ex.mixture = ReadWav(dir / e.mixture_path);
    ex.target = ReadWav(dir / e.target_path);
    ex.visual = ReadVisualStream(dir / e.visual_ref);
    ex.transcript = e.transcript;
    if (ex.mixture.size() != ex.target.size())
      throw DataError(e.id + ": mixture and target lengths differ");
    out.push_back(std::move(ex));
  }
  return out;
}

uint64_t KnowledgeBundle::Fingerprint() const {
  uint64_t h = HashString(ToString(spec.kind) + "/" + spec.backend_id);
  if (speech) h = MixSeed(h ^ speech->Fingerprint());
  if (text) h = MixSeed(h ^ text->Fingerprint());
  if (codebook) {
    ParamSet p;
    p.Set("codebook", codebook->centroids);
    h = MixSeed(h ^ p.Fingerprint());
  }
  return h;
}

KnowledgeBundle MakeKnowledge(const KnowledgeSourceSpec &spec,
                              ConstraintKind kind,
                              std::optional<Codebook> codebook) {
  KnowledgeBundle b;
  b.spec = spec;
  if (kind == ConstraintKind::kNone) return b;
  KnowledgeSourceSpec speech_spec = spec;
  if (speech_spec.kind == SourceKind::kPlm) speech_spec.kind = SourceKind::kPslm;
  b.speech = MakeSpeechSource(speech_spec);
  if (kind == ConstraintKind::kPslmCe) {
    AVTSE_REQUIRE(codebook.has_value(), "pslm_ce needs a fitted codebook");
    AVTSE_REQUIRE(codebook->dim() == b.speech->feature_dim(),
                  "codebook dim does not match the speech feature dim");
    b.codebook = std::move(codebook);
  }
  if (kind == ConstraintKind::kPlmMse) {
    KnowledgeSourceSpec text_spec = spec;
    if (text_spec.kind == SourceKind::kPslm) text_spec.kind = SourceKind::kPlm;
    b.text = MakeTextSource(text_spec);
  }
  return b;
}

void PrepareConstraints(std::span<TrainExample> examples, ConstraintKind kind,
                        const KnowledgeBundle *knowledge, double temperature) {
  AVTSE_REQUIRE(kind == ConstraintKind::kNone || knowledge != nullptr,
                "constraint " + ToString(kind) + " needs a knowledge source");
  for (auto &ex : examples) {
    ex.constraint = MakeConstraintInputs(
        kind, ex.target, ex.transcript,
        knowledge ? knowledge->speech.get() : nullptr,
        knowledge ? knowledge->text.get() : nullptr,
        knowledge && knowledge->codebook ? &*knowledge->codebook : nullptr,
        temperature);
  }
}

double ValidateModel(const ModelParams &params, const BackboneConfig &cfg,
                     std::span<const TrainExample> examples) {
  if (examples.empty()) throw InvalidArgument("validation split is empty");
  double sum = 0.0;
  for (const auto &ex : examples)
    sum += SiSdr(Extract(ex.mixture, ex.visual, params, cfg), ex.target);
  return sum / static_cast<double>(examples.size());
}

LossReport MeanLosses(const ModelParams &params, const ParamSet &adapters,
                      const BackboneConfig &cfg,
                      std::span<const TrainExample> examples,
                      const LossWeights &w) {
  AVTSE_REQUIRE(!examples.empty(), "no examples to evaluate");
  double l_sisdr = 0.0, l_lc = 0.0;
  const ConstraintKind kind = examples.front().constraint.kind;
  for (const auto &ex : examples) {
    ag::Graph g;
    BoundParams model(g, params, false);
    BoundParams adapt(g, adapters, false);
    ForwardOutputs out = Forward(g, model, cfg, ex.mixture, ex.visual);
    Objective obj = BuildObjective(out.estimate, ex.target.AsRow(),
                                   ex.constraint, &adapt, w);
    l_sisdr += obj.l_sisdr.scalar();
    if (obj.l_lc.valid()) l_lc += obj.l_lc.scalar();
  }
  const double n = static_cast<double>(examples.size());
  return TotalLoss(l_sisdr / n, l_lc / n, kind, w);
}

namespace {

VisualStream AugmentVisual(const VisualStream &v, Rng &rng) {
  if (Uniform01(rng) < 0.5) return v;
  ImpairmentSpec spec;
  const int pick = std::uniform_int_distribution<int>(0, 3)(rng);
  spec.kind = pick == 0   ? ImpairmentKind::kFullMissing
              : pick == 1 ? ImpairmentKind::kPartialOcclusion
                          : ImpairmentKind::kLowResolution;
  spec.low_res_mode = pick == 3 ? LowResMode::kNoise : LowResMode::kBlur;
  spec.ratio = SampleImpairmentRatio(rng);
  spec.seed = rng();
  return ApplyImpairment(v, spec);
}

struct BatchResult {
  ParamSet model_grads;
  ParamSet adapter_grads;
  double l_sisdr = 0.0;
  double l_lc = 0.0;
};

void Accumulate(ParamSet *dst, const ParamSet &src, double scale) {
  for (const auto &[name, g] : src.tensors()) {
    if (!dst->contains(name)) dst->Set(name, Matrix(g.rows(), g.cols()));
    dst->at(name).AddScaled(g, scale);
  }
}

BatchResult RunBatch(const StageConfig &cfg, const BackboneConfig &backbone,
                     const ModelParams &model, const ParamSet &adapters,
                     std::span<const TrainExample *const> batch, Rng &rng) {
  BatchResult r;
  const double scale = 1.0 / static_cast<double>(batch.size());
  const bool train_adapters = cfg.constraint_kind == ConstraintKind::kPlmMse;
  for (const TrainExample *ex : batch) {
    ag::Graph g;
    BoundParams bound(g, model, true);
    BoundParams adapt(g, adapters, train_adapters);
    const VisualStream visual =
        cfg.augment_visual ? AugmentVisual(ex->visual, rng) : ex->visual;
    ForwardOutputs out = Forward(g, bound, backbone, ex->mixture, visual);
    Objective obj = BuildObjective(out.estimate, ex->target.AsRow(),
                                   ex->constraint, &adapt, cfg.weights);
    g.Backward(obj.total);
    Accumulate(&r.model_grads, bound.Gradients(), scale);
    if (train_adapters) Accumulate(&r.adapter_grads, adapt.Gradients(), scale);
    r.l_sisdr += scale * obj.l_sisdr.scalar();
    if (obj.l_lc.valid()) r.l_lc += scale * obj.l_lc.scalar();
  }
  return r;
}

}  // namespace

TrainResult TrainStage(const StageConfig &cfg, const BackboneConfig &backbone,
                       const Checkpoint *init,
                       std::span<const TrainExample> train,
                       const Validator &validator,
                       const KnowledgeBundle *knowledge,
                       const std::function<void(const EpochRecord &)> &on_epoch) {
  cfg.Validate();
  backbone.Validate();
  if (cfg.stage == 2 && init == nullptr)
    throw InvalidArgument("stage 2 requires a checkpoint to resume from");
  AVTSE_REQUIRE(!train.empty(), "training split is empty");
  AVTSE_REQUIRE(static_cast<bool>(validator), "a validator is required");
  const ConstraintKind kind = cfg.constraint_kind;
  if (kind != ConstraintKind::kNone) {
    AVTSE_REQUIRE(knowledge != nullptr && knowledge->speech != nullptr,
                  "constraint " + ToString(kind) + " needs a knowledge source");
    AVTSE_REQUIRE(kind != ConstraintKind::kPlmMse || knowledge->text != nullptr,
                  "plm_mse needs a text source");
    AVTSE_REQUIRE(kind != ConstraintKind::kPslmCe || knowledge->codebook,
                  "pslm_ce needs a codebook");
  }
  for (const auto &ex : train)
    AVTSE_REQUIRE(ex.constraint.kind == kind,
                  "example " + ex.id + " is not prepared for constraint " +
                      ToString(kind));

  Checkpoint cur;
  cur.config = backbone;
  cur.constraint = kind;
  if (kind != ConstraintKind::kNone) cur.knowledge = knowledge->spec;
  TrainState state;
  Adam adam;
  if (init != nullptr) {
    AVTSE_REQUIRE(init->config == backbone,
                  "checkpoint backbone config differs from the run config");
    cur.model = init->model;
    if (init->state && init->state->stage == cfg.stage) {
      state = *init->state;
      cur.adapters = init->adapters;
      adam = Adam(init->adam_m, init->adam_v);
    }
  } else {
    cur.model = InitParams(backbone);
  }
  if (init == nullptr || !init->state || init->state->stage != cfg.stage) {
    state.stage = cfg.stage;
    state.current_lr = cfg.lr;
    state.rng = Rng(DeriveSeed(cfg.seed, static_cast<uint64_t>(cfg.stage)));
  }
  if (kind == ConstraintKind::kPlmMse && cur.adapters.num_tensors() == 0)
    cur.adapters = InitAdapterPair(knowledge->speech->feature_dim(),
                                   knowledge->text->dim(),
                                   DeriveSeed(cfg.seed, 101));

  const uint64_t knowledge_before = knowledge ? knowledge->Fingerprint() : 0;
  const PlateauSchedule schedule(cfg);
  TrainResult result;
  auto snapshot = [&]() {
    Checkpoint ck = cur;
    ck.state = state;
    ck.adam_m = adam.m();
    ck.adam_v = adam.v();
    return ck;
  };
  bool have_best = false;

  std::vector<const TrainExample *> order(train.size());
  const size_t bs = static_cast<size_t>(cfg.batch_size);
  auto budget_left = [&] { return cfg.max_steps == 0 || state.step < cfg.max_steps; };

  while (state.epoch < cfg.max_epochs && budget_left()) {
    // Start every epoch from the same order so that the permutation depends
    // only on the saved rng state.
    for (size_t i = 0; i < train.size(); ++i) order[i] = &train[i];
    std::shuffle(order.begin(), order.end(), state.rng);
    EpochRecord rec;
    double total = 0.0, sisdr = 0.0, lc = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size() && budget_left(); start += bs) {
      const size_t end = std::min(order.size(), start + bs);
      std::span<const TrainExample *const> batch(order.data() + start,
                                                 end - start);
      BatchResult br = RunBatch(cfg, backbone, cur.model, cur.adapters, batch,
                                state.rng);
      // One clipping budget across backbone and adapters.
      ParamSet all = br.model_grads;
      for (const auto &[name, g] : br.adapter_grads.tensors()) all.Set(name, g);
      const double norm = ClipGlobalNorm(&all, cfg.clip_norm);
      ++state.step;
      ParamSet model_grads, adapter_grads;
      for (auto &[name, g] : all.mutable_tensors())
        (cur.model.contains(name) ? model_grads : adapter_grads)
            .Set(name, std::move(g));
      adam.Update(&cur.model, model_grads, state.current_lr, state.step);
      if (adapter_grads.num_tensors() > 0)
        adam.Update(&cur.adapters, adapter_grads, state.current_lr, state.step);

      const LossReport report =
          TotalLoss(br.l_sisdr, br.l_lc, kind, cfg.weights);
      result.steps.push_back({state.step, report, norm});
      total += report.total;
      sisdr += report.l_sisdr;
      lc += report.l_lc;
      ++batches;
    }
    ++state.epoch;
    const double val = validator(cur.model);
    rec.epoch = state.epoch;
    rec.steps = state.step;
    rec.train_total = batches ? total / batches : 0.0;
    rec.train_sisdr_loss = batches ? sisdr / batches : 0.0;
    rec.train_lc = batches ? lc / batches : 0.0;
    rec.val_si_sdr = val;
    const auto decision = schedule.Observe(val, &state);
    rec.lr = state.current_lr;
    rec.streak = state.epochs_since_improve;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (decision == PlateauSchedule::Decision::kImproved) {
      result.best = snapshot();
      have_best = true;
    }
    if (decision == PlateauSchedule::Decision::kStop) {
      result.stopped_early = true;
      break;
    }
  }

  if (knowledge && knowledge->Fingerprint() != knowledge_before)
    throw std::logic_error("frozen knowledge backend was modified in training");
  result.last = snapshot();
  if (!have_best) result.best = result.last;
  return result;
}

std::string ToJsonLine(const EpochRecord &r) {
  nlohmann::ordered_json j = {{"epoch", r.epoch},
                              {"steps", r.steps},
                              {"train_total", r.train_total},
                              {"train_si_sdr_loss", r.train_sisdr_loss},
                              {"train_lc", r.train_lc},
                              {"val_si_sdr", r.val_si_sdr},
                              {"lr", r.lr},
                              {"streak", r.streak}};
  return j.dump();
}

}  // namespace avtse
