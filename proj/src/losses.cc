// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/losses.h"

#include <cmath>
#include <limits>
#include <optional>

#include "avtse/error.h"

namespace avtse {

void LossWeights::Validate() const {
  AVTSE_REQUIRE(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  AVTSE_REQUIRE(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
}

std::string ToString(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kNone: return "none";
    case ConstraintKind::kPslmMse: return "pslm_mse";
    case ConstraintKind::kPslmCe: return "pslm_ce";
    case ConstraintKind::kPlmMse: return "plm_mse";
  }
  return "unknown";
}

ConstraintKind ParseConstraintKind(const std::string &s) {
  if (s == "none") return ConstraintKind::kNone;
  if (s == "pslm_mse") return ConstraintKind::kPslmMse;
  if (s == "pslm_ce") return ConstraintKind::kPslmCe;
  if (s == "plm_mse") return ConstraintKind::kPlmMse;
  throw InvalidArgument("unknown constraint kind '" + s +
                        "' (expected none, pslm_mse, pslm_ce or plm_mse)");
}

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();
const double kDbPerNeper = 10.0 / std::log(10.0);

struct SiSdrParts {
  double dot = 0.0;       // <est, ref>
  double ref_energy = 0.0;
  double est_energy = 0.0;
  double target = 0.0;    // ||s||^2 + delta
  double residual = 0.0;  // ||e||^2 + delta
};

SiSdrParts Decompose(std::span<const double> est, std::span<const double> ref) {
  AVTSE_REQUIRE(est.size() == ref.size(),
                "SI-SDR: length mismatch " + std::to_string(est.size()) +
                    " vs " + std::to_string(ref.size()));
  SiSdrParts p;
  for (size_t i = 0; i < ref.size(); ++i) {
    p.dot += est[i] * ref[i];
    p.ref_energy += ref[i] * ref[i];
    p.est_energy += est[i] * est[i];
  }
  AVTSE_REQUIRE(p.ref_energy > 0.0, "SI-SDR: reference is all zero");
  const double a = p.dot / p.ref_energy;
  double s2 = 0.0, e2 = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double s = a * ref[i];
    const double e = est[i] - s;
    s2 += s * s;
    e2 += e * e;
  }
  const double delta = kSiSdrEps * p.est_energy + kTiny;
  p.target = s2 + delta;
  p.residual = e2 + delta;
  return p;
}

}  // namespace

double SiSdrCapDb() {
  return 10.0 * std::log10((1.0 + kSiSdrEps) / kSiSdrEps);
}

double SiSdrDb(std::span<const double> est, std::span<const double> ref) {
  const SiSdrParts p = Decompose(est, ref);
  return 10.0 * std::log10(p.target / p.residual);
}

double SiSdrLoss(const AudioClip &est, const AudioClip &ref) {
  AVTSE_REQUIRE(est.sample_rate() == ref.sample_rate(),
                "SI-SDR: sample rate mismatch");
  return -SiSdrDb(est.samples(), ref.samples());
}

ag::Var SiSdrLoss(ag::Var est, const Matrix &ref) {
  AVTSE_REQUIRE(est.rows() == 1 && ref.rows() == 1,
                "SI-SDR loss expects 1 x L rows");
  const SiSdrParts p = Decompose(est.value().values(), ref.values());
  ag::Graph *g = est.graph();
  const double loss = -10.0 * std::log10(p.target / p.residual);
  return g->Record(Matrix(1, 1, loss), {est}, [g, est, ref, p](const Matrix &dy) {
    Matrix *ge = g->GradSink(est);
    if (ge == nullptr) return;
    // d/d est of -(10/ln10) (ln N - ln D), with
    // dN = 2 s + 2 eps est and dD = 2 e + 2 eps est.
    const double a = p.dot / p.ref_energy;
    const double c = -kDbPerNeper * dy[0];
    const Matrix &x = est.value();
    for (int i = 0; i < x.cols(); ++i) {
      const double s = a * ref[i];
      const double e = x[i] - s;
      const double dn = 2.0 * s + 2.0 * kSiSdrEps * x[i];
      const double dd = 2.0 * e + 2.0 * kSiSdrEps * x[i];
      (*ge)[i] += c * (dn / p.target - dd / p.residual);
    }
  });
}

double LcMse(const FeatureSequence &pred, const FeatureSequence &target) {
  AVTSE_REQUIRE(pred.frames.SameShape(target.frames),
                "lc_mse: shape mismatch " + pred.frames.ShapeString() +
                    " vs " + target.frames.ShapeString());
  ag::Graph g;
  return ag::MseLoss(g.Constant(pred.frames), g.Constant(target.frames))
      .scalar();
}

double LcCe(const Matrix &logits, const TokenSequence &tokens) {
  AVTSE_REQUIRE(tokens.num_classes == 0 || tokens.num_classes == logits.cols(),
                "lc_ce: token classes do not match logit width");
  ag::Graph g;
  return ag::CrossEntropyLoss(g.Constant(logits), tokens.tokens).scalar();
}

ag::Var LcPlm(ag::Var pred_features, std::span<const double> plm_vec,
              const BoundParams &adapters) {
  ag::Graph *g = pred_features.graph();
  ag::Var speech =
      AdapterForward(adapters, kSpeechAdapter, ag::MeanRows(pred_features));
  ag::Var text = AdapterForward(adapters, kTextAdapter,
                                g->Constant(Matrix::RowVector(plm_vec)));
  AVTSE_REQUIRE(speech.cols() == text.cols(),
                "lc_plm: adapter output dims differ");
  return ag::MseLoss(speech, text);
}

double LcPlm(const FeatureSequence &pred, std::span<const double> plm_vec,
             const ParamSet &adapters) {
  CheckAdapterPair(adapters);
  ag::Graph g;
  BoundParams bound(g, adapters, false);
  return LcPlm(g.Constant(pred.frames), plm_vec, bound).scalar();
}

LossReport TotalLoss(double l_sisdr, double l_lc, ConstraintKind kind,
                     const LossWeights &w) {
  w.Validate();
  LossReport r;
  r.kind = kind;
  r.l_sisdr = l_sisdr;
  r.l_lc = kind == ConstraintKind::kNone ? 0.0 : l_lc;
  r.total = w.alpha * r.l_sisdr + w.beta * r.l_lc;
  return r;
}

ConstraintInputs MakeConstraintInputs(ConstraintKind kind,
                                      const AudioClip &ref,
                                      const std::string &transcript,
                                      const SpeechKnowledgeSource *speech,
                                      const TextKnowledgeSource *text,
                                      const Codebook *codebook,
                                      double temperature) {
  ConstraintInputs in;
  in.kind = kind;
  in.temperature = temperature;
  in.sample_rate = ref.sample_rate();
  if (kind == ConstraintKind::kNone) return in;
  AVTSE_REQUIRE(speech != nullptr,
                "constraint " + ToString(kind) + " needs a speech source");
  in.speech = speech;
  switch (kind) {
    case ConstraintKind::kPslmMse:
      in.target_features = speech->Features(ref);
      break;
    case ConstraintKind::kPslmCe:
      AVTSE_REQUIRE(codebook != nullptr, "pslm_ce needs a codebook");
      AVTSE_REQUIRE(temperature > 0.0, "temperature must be positive");
      in.codebook = codebook;
      in.target_tokens = Tokenize(speech->Features(ref), *codebook);
      break;
    case ConstraintKind::kPlmMse:
      AVTSE_REQUIRE(text != nullptr, "plm_mse needs a text source");
      in.plm_vec = text->Embedding(transcript);
      break;
    case ConstraintKind::kNone:
      break;
  }
  return in;
}

Objective BuildObjective(ag::Var est, const Matrix &ref,
                         const ConstraintInputs &in,
                         const BoundParams *adapters, const LossWeights &w) {
  w.Validate();
  ag::Graph *g = est.graph();
  Objective obj;
  obj.l_sisdr = SiSdrLoss(est, ref);
  obj.total = ag::Scale(obj.l_sisdr, w.alpha);
  if (in.kind == ConstraintKind::kNone) return obj;

  AVTSE_REQUIRE(in.speech != nullptr, "constraint inputs lack a speech source");
  ag::Var pred = in.speech->Features(*g, est, in.sample_rate);
  switch (in.kind) {
    case ConstraintKind::kPslmMse:
      AVTSE_REQUIRE(pred.value().SameShape(in.target_features.frames),
                    "lc_mse: predicted and target features differ in shape");
      obj.l_lc = ag::MseLoss(pred, g->Constant(in.target_features.frames));
      break;
    case ConstraintKind::kPslmCe:
      AVTSE_REQUIRE(in.codebook != nullptr, "pslm_ce needs a codebook");
      obj.l_lc = ag::CrossEntropyLoss(
          ag::SquaredDistanceLogits(pred, in.codebook->centroids,
                                    in.temperature),
          in.target_tokens.tokens);
      break;
    case ConstraintKind::kPlmMse:
      AVTSE_REQUIRE(adapters != nullptr, "plm_mse needs adapter parameters");
      obj.l_lc = LcPlm(pred, in.plm_vec, *adapters);
      break;
    case ConstraintKind::kNone:
      break;
  }
  obj.total = ag::Add(obj.total, ag::Scale(obj.l_lc, w.beta));
  return obj;
}

LossReport TotalLoss(const AudioClip &est, const AudioClip &ref,
                     const ConstraintInputs &in, const ParamSet *adapters,
                     const LossWeights &w) {
  AVTSE_REQUIRE(est.sample_rate() == ref.sample_rate(),
                "total_loss: sample rate mismatch");
  ag::Graph g;
  std::optional<BoundParams> bound;
  if (adapters != nullptr) bound.emplace(g, *adapters, false);
  Objective obj = BuildObjective(g.Constant(est.AsRow()), ref.AsRow(), in,
                                 bound ? &*bound : nullptr, w);
  return TotalLoss(obj.l_sisdr.scalar(),
                   obj.l_lc.valid() ? obj.l_lc.scalar() : 0.0, in.kind, w);
}

}  // namespace avtse
