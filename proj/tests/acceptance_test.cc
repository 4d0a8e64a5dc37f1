// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "avtse/backbone.h"
#include "avtse/checkpoint.h"
#include "avtse/commands.h"
#include "avtse/dataset_sim.h"
#include "avtse/knowledge.h"
#include "avtse/losses.h"
#include "avtse/metrics.h"
#include "avtse/trainer.h"
#include "avtse/visual_cues.h"
#include "test_util.h"

namespace avtse {
namespace {

namespace fs = std::filesystem;
using testing::RandomMatrix;
using testing::RandomVector;

struct Outcome {
  bool pass = true;
  std::string failures;
  std::ostringstream detail;

  void Check(bool ok, const std::string &what) {
    if (ok) return;
    failures += (pass ? "" : "; ") + what;
    pass = false;
  }
  std::string Summary() const {
    return pass ? detail.str() : detail.str() + " [failed: " + failures + "]";
  }
};

double OracleSiSdr(std::span<const double> est, std::span<const double> ref) {
  long double dot = 0, rr = 0, ee = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    dot += static_cast<long double>(est[i]) * ref[i];
    rr += static_cast<long double>(ref[i]) * ref[i];
    ee += static_cast<long double>(est[i]) * est[i];
  }
  long double s2 = 0, e2 = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const long double s = dot / rr * ref[i];
    const long double e = est[i] - s;
    s2 += s * s;
    e2 += e * e;
  }
  const long double delta = 1e-8L * ee + std::numeric_limits<double>::min();
  return static_cast<double>(10.0L * std::log10((s2 + delta) / (e2 + delta)));
}

std::vector<int> NearestOracle(const Matrix &frames, const Matrix &centroids) {
  std::vector<int> out(frames.rows());
  for (int t = 0; t < frames.rows(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < centroids.rows(); ++k) {
      double d = 0.0;
      for (int c = 0; c < frames.cols(); ++c) {
        const double e = frames(t, c) - centroids(k, c);
        d += e * e;
      }
      if (d < best) {
        best = d;
        out[t] = k;
      }
    }
  }
  return out;
}

// ---- 1 ----

void SiSdrOracle(Outcome *o) {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> est = RandomVector(rng, 64), ref = RandomVector(rng, 64);
    worst = std::max(worst, std::abs(SiSdrDb(est, ref) - OracleSiSdr(est, ref)));
  }
  o->Check(worst <= 1e-9, "oracle error " + std::to_string(worst));
  double worst_scale = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> est = RandomVector(rng, 64), ref = RandomVector(rng, 64);
    const double base = SiSdrDb(est, ref);
    for (double g : {0.1, 1.0, 10.0}) {
      std::vector<double> scaled = est;
      for (double &v : scaled) v *= g;
      worst_scale = std::max(worst_scale, std::abs(SiSdrDb(scaled, ref) - base));
    }
  }
  o->Check(worst_scale <= 1e-6, "scale error " + std::to_string(worst_scale));
  o->detail << "max |impl - oracle| = " << worst << " dB, max scale drift = "
            << worst_scale << " dB";
}

// ---- 2 ----

double SnrDb(const AudioClip &t, const AudioClip &i) {
  return 10.0 * std::log10(t.Power() / i.Power());
}

void MixtureSnr(Outcome *o) {
  SyntheticCatalogOptions co;
  co.seed = 7;
  const ClipCatalog catalog = GenerateSyntheticCatalog(co);
  const DatasetManifest m = BuildManifest(catalog, 100, 1.0, {-10.0, 10.0}, 11);
  double worst = 0.0, lo = 1e9, hi = -1e9;
  for (const ManifestEntry &e : m.entries) {
    const MixtureSample s = Materialize(catalog, e, m.duration_s, CropMode::kEvalHeadCrop);
    // Recover the interferer from the mixture itself.
    std::vector<double> itf(s.mixture.size());
    for (size_t n = 0; n < itf.size(); ++n)
      itf[n] = s.mixture.samples()[n] - s.target.samples()[n];
    worst = std::max(worst, std::abs(SnrDb(s.target, AudioClip(itf)) - e.snr_db));
    lo = std::min(lo, e.snr_db);
    hi = std::max(hi, e.snr_db);
    o->Check(e.snr_db >= -10.0 && e.snr_db <= 10.0, "snr out of range");
  }
  o->Check(m.entries.size() == 100, "entry count");
  o->Check(worst <= 0.01, "snr error " + std::to_string(worst));
  o->detail << "100 mixtures, requested snr in [" << lo << ", " << hi
            << "], max error " << worst << " dB";
}

// ---- 3 ----

void Quantizer(Outcome *o) {
  Rng rng(3);
  for (int k : {2, 16, 500}) {
    FeatureSequence f{RandomMatrix(rng, 1000, 8), 50.0};
    Codebook cb{RandomMatrix(rng, k, 8)};
    o->Check(Tokenize(f, cb).tokens == NearestOracle(f.frames, cb.centroids),
             "tokenize K=" + std::to_string(k));
  }
  Codebook cb{Matrix{{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}};
  FeatureSequence f{Matrix{{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.5, 0.5}}, 50.0};
  o->Check(Tokenize(f, cb).tokens == std::vector<int>({0, 0, 0, 0}), "ties");

  // k-means on the synthetic speech source features of a few clips.
  SyntheticCatalogOptions co;
  co.seed = 4;
  const ClipCatalog catalog = GenerateSyntheticCatalog(co);
  const KnowledgeSourceSpec spec;
  std::vector<FeatureSequence> feats;
  for (const CatalogClip &c : catalog) feats.push_back(PslmFeatures(c.audio, spec));
  int iterations = 0;
  for (int k : {16, 200}) {
    const CodebookFit fit = FitCodebook(feats, k, 9, 100);
    for (size_t i = 1; i < fit.objective.size(); ++i)
      o->Check(fit.objective[i] <= fit.objective[i - 1] * (1.0 + 1e-12),
               "k-means objective rose at K=" + std::to_string(k));
    o->Check(fit.objective.size() >= 2, "k-means ran a single iteration");
    iterations += fit.iterations;
  }
  o->detail << "tokenize == oracle for K in {2,16,500}, ties to lowest index, "
            << iterations << " k-means iterations non-increasing";
}

// ---- 4 ----

void LossIdentities(Outcome *o) {
  Rng rng(4);
  const FeatureSequence z{RandomMatrix(rng, 50, 64), 50.0};
  o->Check(LcMse(z, z) == 0.0, "lc_mse(z, z) != 0");
  const int k = 500;
  Matrix uniform(40, k);
  TokenSequence tokens{{}, k};
  for (int t = 0; t < 40; ++t) tokens.tokens.push_back(static_cast<int>(rng() % k));
  const double ce = LcCe(uniform, tokens);
  o->Check(std::abs(ce - std::log(500.0)) <= 1e-9, "lc_ce(uniform) = " + std::to_string(ce));

  const LossWeights w;
  o->Check(w.alpha == 1.0 && w.beta == 10.0, "default weights");
  for (ConstraintKind kind : {ConstraintKind::kPslmMse, ConstraintKind::kPslmCe,
                              ConstraintKind::kPlmMse}) {
    for (int i = 0; i < 100; ++i) {
      const double a = Gaussian(rng, 0.0, 10.0), b = std::abs(Gaussian(rng, 0.0, 1.0));
      const LossReport r = TotalLoss(a, b, kind, w);
      o->Check(r.total == 1.0 * a + 10.0 * b, "total != a + 10 b");
    }
  }
  const double a = -12.5;
  o->Check(TotalLoss(a, 3.0, ConstraintKind::kNone, w).total == a, "kNone total");
  o->detail << "lc_mse(z,z)=0, lc_ce(uniform)=" << ce << " (ln 500 = "
            << std::log(500.0) << "), total = 1*L_si + 10*L_lc exactly";
}

// ---- 5 ----

void GradientChecks(Outcome *o) {
  for (ConstraintKind kind : {ConstraintKind::kNone, ConstraintKind::kPslmMse,
                              ConstraintKind::kPslmCe, ConstraintKind::kPlmMse}) {
    testing::TinyProblem p = testing::MakeTinyProblem(kind, 21);
    const size_t n_params = p.params.NumValues() + p.adapters.NumValues();
    const testing::GradCheck r = testing::CheckTinyProblemGradient(&p, 40, 22);
    o->Check(n_params <= 2000, ToString(kind) + " has too many parameters");
    o->Check(r.checked >= 20, ToString(kind) + " checked too few");
    o->Check(r.max_rel_error < 1e-3, ToString(kind) + " rel error " +
                                         std::to_string(r.max_rel_error));
    o->detail << ToString(kind) << ": " << n_params << " params, " << r.checked
              << " coords, max rel " << r.max_rel_error << "  ";
  }
}

// ---- 6 ----

void ShapeAndImpairment(Outcome *o) {
  const BackboneConfig cfg;
  const ModelParams params = InitParams(cfg);
  Rng rng(6);
  for (int len : {cfg.enc_kernel, 16000, 16001, 64000}) {
    const AudioClip x(RandomVector(rng, len, 0.1));
    const int t_v = std::max(1, static_cast<int>(std::lround(len / 640.0)));
    VisualStream v{RandomMatrix(rng, t_v, cfg.visual_dim), kDefaultFps};
    const AudioClip y = Extract(x, v, params, cfg);
    o->Check(y.size() == x.size(), "extract length at " + std::to_string(len));
  }
  const VisualStream v{RandomMatrix(rng, 100, 16, 1.0), kDefaultFps};
  int checked = 0;
  for (ImpairmentKind kind : {ImpairmentKind::kFullMissing, ImpairmentKind::kPartialOcclusion,
                              ImpairmentKind::kLowResolution}) {
    for (int step = 0; step <= 100; ++step) {
      ImpairmentSpec spec{kind, step / 100.0, 5, LowResMode::kBlur};
      const VisualStream w = ApplyImpairment(v, spec);
      int changed = 0;
      for (int t = 0; t < 100; ++t) {
        bool differs = false;
        for (int c = 0; c < 16; ++c) differs |= w.frames(t, c) != v.frames(t, c);
        changed += differs;
        if (kind == ImpairmentKind::kFullMissing) {
          const auto [start, count] = AffectedRange(100, spec);
          if (t >= start && t < start + count)
            for (int c = 0; c < 16; ++c)
              o->Check(w.frames(t, c) == 0.0, "full_missing frame not zero");
        }
      }
      const long expected = std::lround(spec.ratio * 100);
      o->Check(changed == expected, ToString(kind) + " ratio " +
                                        std::to_string(spec.ratio) + " changed " +
                                        std::to_string(changed));
      ++checked;
    }
  }
  o->detail << "lengths {" << cfg.enc_kernel << ",16000,16001,64000} preserved, "
            << checked << " impairment settings affect round(ratio*100) frames";
}

// ---- 7 ----

void MetricIdentities(Outcome *o) {
  const AudioClip y = testing::SpeechlikeClip(7, 3.0);
  const double stoi = Stoi(y, y);
  const double bert = SpeechBertScore(y, y, KnowledgeSourceSpec());
  o->Check(std::abs(stoi - 1.0) <= 1e-6, "stoi(y,y) = " + std::to_string(stoi));
  o->Check(std::abs(bert - 1.0) <= 1e-6, "bert(y,y) = " + std::to_string(bert));
  Rng rng(7);
  std::vector<double> xs = y.samples();
  for (double &v : xs) v += Gaussian(rng, 0.0, 0.05);
  const AudioClip x(xs);
  const double d = SiSdri(x, y, x);
  o->Check(d == 0.0, "si_sdri(x,y,x) = " + std::to_string(d));
  o->detail << "stoi(y,y)=" << stoi << " bert(y,y)=" << bert << " si_sdri(x,y,x)=" << d;
}

// ---- 8 ----

void TrainingProtocol(Outcome *o) {
  using testing::MakeTinyProblem;
  // Scripted validator: improves twice, then flat forever.
  testing::TinyProblem p = MakeTinyProblem(ConstraintKind::kNone, 1);
  std::vector<TrainExample> train;
  Rng rng(8);
  for (int i = 0; i < 4; ++i) {
    TrainExample ex;
    ex.id = "ex" + std::to_string(i);
    ex.target = AudioClip(RandomVector(rng, p.target.size(), 0.3));
    std::vector<double> mix = ex.target.samples();
    for (double &v : mix) v += Gaussian(rng, 0.0, 0.3);
    ex.mixture = AudioClip(mix);
    ex.visual = p.visual;
    ex.transcript = "a b c";
    train.push_back(std::move(ex));
  }
  StageConfig cfg;
  cfg.batch_size = 2;
  cfg.lr = 1e-2;
  cfg.seed = 5;
  int calls = 0;
  const std::vector<double> script = {1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0};
  TrainResult r = TrainStage(cfg, p.cfg, nullptr, train,
                             [&](const ModelParams &) { return script.at(calls++); },
                             nullptr);
  o->Check(r.stopped_early && r.history.size() == 8, "stop after 6 flat epochs");
  if (r.history.size() == 8) {
    for (int e = 0; e < 8; ++e) {
      const double want = e < 4 ? cfg.lr : cfg.lr / 2;
      o->Check(r.history[e].lr == want, "lr at epoch " + std::to_string(e + 1));
    }
  }

  // Stage 2 with every constraint: knowledge untouched, adapters trained but
  // dropped from the inference checkpoint.
  for (ConstraintKind kind : {ConstraintKind::kPslmMse, ConstraintKind::kPslmCe,
                              ConstraintKind::kPlmMse}) {
    testing::TinyProblem q = MakeTinyProblem(kind, 3);
    std::vector<TrainExample> ex = train;
    for (auto &e : ex) {
      e.visual = q.visual;
      e.constraint = {};
    }
    PrepareConstraints(ex, kind, &q.knowledge, 1.0);
    Checkpoint init;
    init.config = q.cfg;
    init.model = q.params;
    const uint64_t before = q.knowledge.Fingerprint();
    StageConfig c2 = cfg;
    c2.stage = 2;
    c2.constraint_kind = kind;
    c2.max_epochs = 2;
    TrainResult r2 = TrainStage(
        c2, q.cfg, &init, ex,
        [&](const ModelParams &m) { return ValidateModel(m, q.cfg, ex); }, &q.knowledge);
    o->Check(q.knowledge.Fingerprint() == before, ToString(kind) + " knowledge changed");
    o->Check(r2.last.model != init.model, ToString(kind) + " model not trained");
    const Checkpoint inf = InferenceCheckpoint(r2.best);
    o->Check(inf.is_inference() && inf.adapters.num_tensors() == 0,
             ToString(kind) + " inference checkpoint has adapters");
    if (kind == ConstraintKind::kPlmMse)
      o->Check(r2.best.adapters.num_tensors() > 0, "plm_mse trained no adapters");
  }
  o->detail << "lr halved after 3 flat epochs, stop after 6; knowledge hash "
               "unchanged; inference checkpoints adapter-free";
}

// ---- 9 ----

void SmokeTrend(Outcome *o) {
  testing::TempDir dir("acceptance_smoke");
  SimulateOptions so;
  so.synthetic = true;
  so.duration_s = 1.0;
  so.visual_dim = 16;
  so.count = 16;
  so.seed = 1;
  so.out_dir = dir.path() / "train";
  CmdSimulate(so);
  so.count = 8;
  so.seed = 2;
  so.eval_crop = true;
  so.out_dir = dir.path() / "val";
  CmdSimulate(so);
  std::vector<TrainExample> train = LoadExamples(
      ReadManifest(dir.path() / "train" / "manifest.jsonl"), dir.path() / "train");
  std::vector<TrainExample> val = LoadExamples(
      ReadManifest(dir.path() / "val" / "manifest.jsonl"), dir.path() / "val");

  BackboneConfig bb;
  bb.model_dim = 32;
  bb.visual_dim = 16;
  bb.n_blocks = 1;
  bb.n_heads = 4;
  bb.chunk_len = 50;
  bb.seed = 1;
  const LossWeights w;

  StageConfig s1;
  s1.stage = 1;
  s1.batch_size = 4;
  s1.lr = 2e-3;
  s1.max_steps = 200;
  s1.seed = 1;
  const ModelParams init = InitParams(bb);
  const double before1 = MeanLosses(init, {}, bb, train, w).l_sisdr;
  Validator validator = [&](const ModelParams &m) { return ValidateModel(m, bb, val); };
  const TrainResult r1 = TrainStage(s1, bb, nullptr, train, validator, nullptr);
  const double after1 = MeanLosses(r1.last.model, {}, bb, train, w).l_sisdr;
  const double drop1 = before1 - after1;
  o->Check(drop1 >= 3.0, "stage-1 training loss fell only " + std::to_string(drop1) + " dB");

  const ConstraintKind kind = ConstraintKind::kPslmMse;
  const KnowledgeBundle knowledge = MakeKnowledge(KnowledgeSourceSpec(), kind);
  PrepareConstraints(train, kind, &knowledge, 1.0);
  PrepareConstraints(val, kind, &knowledge, 1.0);
  const Checkpoint &start = r1.best;
  const LossReport val_before = MeanLosses(start.model, {}, bb, val, w);
  const double sisdr_before = ValidateModel(start.model, bb, val);
  StageConfig s2 = s1;
  s2.stage = 2;
  s2.constraint_kind = kind;
  s2.lr = 1e-3;
  const uint64_t fp = knowledge.Fingerprint();
  const TrainResult r2 = TrainStage(s2, bb, &start, train, validator, &knowledge);
  const LossReport val_after = MeanLosses(r2.last.model, {}, bb, val, w);
  const double sisdr_after = ValidateModel(r2.last.model, bb, val);
  const double lc_drop = 1.0 - val_after.l_lc / val_before.l_lc;
  const double degrade = sisdr_before - sisdr_after;
  o->Check(lc_drop >= 0.20, "validation L_LC reduction " + std::to_string(100 * lc_drop) +
                                "% is below 20%");
  o->Check(degrade < 0.5, "validation SI-SDR degraded " + std::to_string(degrade) + " dB");
  o->Check(knowledge.Fingerprint() == fp, "knowledge changed");
  o->detail << "stage 1: train L_si " << before1 << " -> " << after1 << " ("
            << r1.last.state->step << " steps); stage 2: val L_LC "
            << val_before.l_lc << " -> " << val_after.l_lc << " (reduction "
            << 100 * lc_drop << "%), val SI-SDR " << sisdr_before << " -> " << sisdr_after << " ("
            << r2.last.state->step << " steps)";
}

// ---- 10 ----

std::map<std::string, std::string> DirBytes(const fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      out[fs::relative(e.path(), dir).string()] = testing::ReadFileBytes(e.path());
  return out;
}

void Determinism(Outcome *o) {
  testing::TempDir dir("acceptance_det");
  SimulateOptions so;
  so.synthetic = true;
  so.count = 6;
  so.duration_s = 2.0;
  so.seed = 10;
  // Two identical invocations, including the output directory, which the
  // resolved config records.
  so.out_dir = dir.path() / "sim";
  CmdSimulate(so);
  const auto a = DirBytes(so.out_dir);
  fs::remove_all(so.out_dir);
  CmdSimulate(so);
  const auto b = DirBytes(so.out_dir);
  o->Check(!a.empty() && a == b, "simulate outputs differ");

  BackboneConfig cfg;
  cfg.seed = 10;
  Checkpoint c1, c2;
  c1.config = c2.config = cfg;
  c1.model = InitParams(cfg);
  c2.model = InitParams(cfg);
  SaveCheckpoint(dir.path() / "p1.ckpt", c1);
  SaveCheckpoint(dir.path() / "p2.ckpt", c2);
  const std::string p1 = testing::ReadFileBytes(dir.path() / "p1.ckpt");
  o->Check(p1 == testing::ReadFileBytes(dir.path() / "p2.ckpt"), "init params differ");
  o->detail << a.size() << " simulate files identical; " << c1.model.NumValues()
            << " init values (" << p1.size() << " bytes) identical";
}

struct Criterion {
  int id;
  const char *name;
  double budget_s;
  std::function<void(Outcome *)> run;
};

}  // namespace
}  // namespace avtse

int main() {
  using namespace avtse;
  const std::vector<Criterion> criteria = {
      {1, "SI-SDR oracle", 5, SiSdrOracle},
      {2, "mixture SNR contract", 10, MixtureSnr},
      {3, "quantizer correctness", 30, Quantizer},
      {4, "loss identities", 5, LossIdentities},
      {5, "gradient checks", 300, GradientChecks},
      {6, "shape and impairment contracts", 30, ShapeAndImpairment},
      {7, "metric identities", 30, MetricIdentities},
      {8, "training protocol", 60, TrainingProtocol},
      {9, "end-to-end smoke trend", 600, SmokeTrend},
      {10, "determinism", 60, Determinism},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(&o);
    } catch (const std::exception &e) {
      o.Check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= c.budget_s) o.Check(false, "over the time budget");
    failures += !o.pass;
    std::printf("criterion %d %s: %s (%.1fs / %.0fs) %s\n", c.id, c.name,
                o.pass ? "PASS" : "FAIL", secs, c.budget_s, o.Summary().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
