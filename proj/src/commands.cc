// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/commands.h"

#include <fstream>
#include <iostream>

#include "avtse/backbone.h"
#include "avtse/checkpoint.h"
#include "avtse/error.h"
#include "avtse/metrics.h"
#include "avtse/trainer.h"
#include "avtse/visual_cues.h"
#include "json.hpp"

namespace avtse {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kManifestName[] = "manifest.jsonl";

void WriteJsonFile(const fs::path &path, const ordered_json &j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

fs::path ManifestDir(const fs::path &manifest) {
  return manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
}

}  // namespace

ClipCatalog ReadCatalog(const fs::path &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open catalog " + path.string());
  const fs::path dir = ManifestDir(path);
  ClipCatalog catalog;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CatalogClip c;
      c.id = j.at("id").get<std::string>();
      c.speaker = j.at("speaker").get<std::string>();
      c.language = j.value("language", std::string("other"));
      c.transcript = j.value("transcript", std::string());
      c.audio = ReadWav(dir / j.at("path").get<std::string>());
      catalog.push_back(std::move(c));
    } catch (const json::exception &ex) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " +
                      ex.what());
    }
  }
  if (catalog.empty()) throw DataError("catalog " + path.string() + " is empty");
  return catalog;
}

DatasetManifest CmdSimulate(const SimulateOptions &o) {
  AVTSE_REQUIRE(o.count >= 1, "--count must be >= 1");
  AVTSE_REQUIRE(o.duration_s > 0.0, "--duration must be positive");
  AVTSE_REQUIRE(o.snr_min_db <= o.snr_max_db, "SNR range is inverted");
  AVTSE_REQUIRE(o.visual_dim >= 1, "visual dim must be >= 1");
  AVTSE_REQUIRE(o.synthetic || !o.catalog.empty(),
                "either --synthetic or --catalog is required");

  ClipCatalog catalog;
  if (o.synthetic) {
    SyntheticCatalogOptions co;
    co.num_speakers = o.num_speakers;
    co.clips_per_speaker = o.clips_per_speaker;
    co.min_duration_s = o.duration_s;
    co.max_duration_s = 1.5 * o.duration_s;
    co.seed = DeriveSeed(o.seed, 0xca7a);
    catalog = GenerateSyntheticCatalog(co);
  } else {
    catalog = ReadCatalog(o.catalog);
  }

  DatasetManifest manifest = BuildManifest(
      catalog, o.count, o.duration_s, {o.snr_min_db, o.snr_max_db}, o.seed);
  fs::create_directories(o.out_dir);
  const CropMode mode =
      o.eval_crop ? CropMode::kEvalHeadCrop : CropMode::kTrainRandomCrop;
  for (const auto &e : manifest.entries) {
    MixtureSample s = Materialize(catalog, e, manifest.duration_s, mode);
    WriteWav(o.out_dir / e.mixture_path, s.mixture);
    WriteWav(o.out_dir / e.target_path, s.target);
    WriteWav(o.out_dir / e.interferer_path, s.interferer);
    WriteVisualStream(o.out_dir / e.visual_ref,
                      DeriveSyntheticVisual(s.target, o.visual_dim, kDefaultFps,
                                            kSyntheticVisualSeed));
  }
  WriteManifest(o.out_dir / kManifestName, manifest);
  WriteJsonFile(o.out_dir / kResolvedConfigName,
                {{"command", "simulate"},
                 {"synthetic", o.synthetic},
                 {"catalog", o.catalog.string()},
                 {"count", o.count},
                 {"duration", o.duration_s},
                 {"seed", o.seed},
                 {"snr_min_db", o.snr_min_db},
                 {"snr_max_db", o.snr_max_db},
                 {"visual_dim", o.visual_dim},
                 {"num_speakers", o.num_speakers},
                 {"clips_per_speaker", o.clips_per_speaker},
                 {"eval_crop", o.eval_crop},
                 {"out", o.out_dir.string()}});
  return manifest;
}

DatasetManifest CmdImpair(const ImpairOptions &o) {
  const ImpairmentKind kind = ParseImpairmentKind(o.kind);
  const LowResMode low_res = ParseLowResMode(o.low_res_mode);
  AVTSE_REQUIRE(o.ratio.has_value() != o.ratio_uniform,
                "exactly one of --ratio and --ratio-uniform is required");
  if (o.ratio)
    AVTSE_REQUIRE(*o.ratio >= 0.0 && *o.ratio <= 1.0,
                  "--ratio must lie in [0, 1], got " + std::to_string(*o.ratio));

  DatasetManifest manifest = ReadManifest(o.manifest);
  const fs::path src = ManifestDir(o.manifest);
  fs::create_directories(o.out_dir);
  Rng rng(DeriveSeed(o.seed, 0));
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    ManifestEntry &e = manifest.entries[i];
    ImpairmentSpec spec;
    spec.kind = kind;
    spec.low_res_mode = low_res;
    spec.ratio = o.ratio ? *o.ratio : SampleImpairmentRatio(rng);
    spec.seed = DeriveSeed(o.seed, i + 1);
    const VisualStream v = ReadVisualStream(src / e.visual_ref);
    WriteVisualStream(o.out_dir / e.visual_ref, ApplyImpairment(v, spec));
    for (const std::string *p :
         {&e.mixture_path, &e.target_path, &e.interferer_path}) {
      if (fs::equivalent(src, o.out_dir)) break;
      fs::copy_file(src / *p, o.out_dir / *p,
                    fs::copy_options::overwrite_existing);
    }
    e.impairment = ImpairmentRecord{ToString(kind), spec.ratio, spec.seed,
                                    kind == ImpairmentKind::kLowResolution
                                        ? ToString(low_res)
                                        : std::string()};
  }
  WriteManifest(o.out_dir / kManifestName, manifest);
  ordered_json cfg = {{"command", "impair"},
                      {"manifest", o.manifest.string()},
                      {"kind", o.kind},
                      {"ratio", nullptr},
                      {"ratio_uniform", o.ratio_uniform},
                      {"low_res_mode", o.low_res_mode},
                      {"seed", o.seed},
                      {"out", o.out_dir.string()}};
  if (o.ratio) cfg["ratio"] = *o.ratio;
  WriteJsonFile(o.out_dir / kResolvedConfigName, cfg);
  return manifest;
}

CodebookFit CmdFitCodebook(const FitCodebookOptions &o) {
  AVTSE_REQUIRE(o.k >= 2, "--k must be >= 2");
  AVTSE_REQUIRE(o.source.kind != SourceKind::kPlm,
                "codebooks are fitted on speech features");
  const DatasetManifest manifest = ReadManifest(o.manifest);
  const fs::path dir = ManifestDir(o.manifest);
  auto source = MakeSpeechSource(o.source);
  std::vector<FeatureSequence> features;
  for (const auto &e : manifest.entries)
    features.push_back(source->Features(ReadWav(dir / e.target_path)));
  CodebookFit fit = FitCodebook(features, o.k, o.seed, o.max_iters);
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  WriteCodebook(o.out, fit.codebook, o.source, o.seed);
  return fit;
}

void CmdTrain(const TrainOptions &o) {
  const RunConfig &rc = o.config;
  rc.train.Validate();
  rc.backbone.Validate();
  if (rc.train.stage == 2 && !o.resume)
    throw InvalidArgument("stage 2 requires --resume <checkpoint>");
  AVTSE_REQUIRE(!rc.data.train_manifest.empty(), "no training manifest given");
  AVTSE_REQUIRE(!rc.data.val_manifest.empty(), "no validation manifest given");

  std::optional<Checkpoint> init;
  if (o.resume) init = LoadCheckpoint(*o.resume);

  const ConstraintKind kind = rc.train.constraint_kind;
  std::optional<Codebook> codebook;
  if (kind == ConstraintKind::kPslmCe) {
    AVTSE_REQUIRE(!rc.data.codebook.empty(), "pslm_ce needs data.codebook");
    codebook = ReadCodebook(rc.data.codebook);
  }
  const KnowledgeBundle knowledge = MakeKnowledge(rc.knowledge, kind, codebook);

  const fs::path train_path = rc.data.train_manifest;
  const fs::path val_path = rc.data.val_manifest;
  std::vector<TrainExample> train =
      LoadExamples(ReadManifest(train_path), ManifestDir(train_path));
  std::vector<TrainExample> val =
      LoadExamples(ReadManifest(val_path), ManifestDir(val_path));
  PrepareConstraints(train, kind, &knowledge, rc.train.temperature);

  const fs::path out = rc.output_dir;
  WriteResolvedConfig(out, rc);
  std::ofstream history(out / "history.jsonl", std::ios::binary);
  if (!history) throw DataError("cannot write history.jsonl");

  const BackboneConfig backbone = rc.backbone;
  TrainResult result = TrainStage(
      rc.train, backbone, init ? &*init : nullptr, train,
      [&](const ModelParams &p) { return ValidateModel(p, backbone, val); },
      &knowledge, [&](const EpochRecord &r) {
        history << ToJsonLine(r) << '\n';
        history.flush();
        std::cerr << "epoch " << r.epoch << " steps " << r.steps
                  << " train_total " << r.train_total << " val_si_sdr "
                  << r.val_si_sdr << " lr " << r.lr << '\n';
      });
  SaveCheckpoint(out / "train_best.ckpt", result.best);
  SaveCheckpoint(out / "train_last.ckpt", result.last);
  SaveCheckpoint(out / "model.ckpt", InferenceCheckpoint(result.best));
}

void CmdEval(const EvalOptions &o) {
  const DatasetManifest manifest = ReadManifest(o.manifest);
  AVTSE_REQUIRE(!manifest.entries.empty(), "manifest has no entries");
  const fs::path dir = ManifestDir(o.manifest);
  AVTSE_REQUIRE(o.oracle || o.estimates_dir || o.checkpoint,
                "eval needs a checkpoint, --estimates or --oracle");
  std::optional<Checkpoint> ck;
  if (!o.oracle && !o.estimates_dir) ck = LoadCheckpoint(*o.checkpoint);
  auto source = MakeSpeechSource(o.knowledge);
  fs::create_directories(o.out_dir);

  std::vector<SampleMetrics> rows;
  for (const auto &e : manifest.entries) {
    const AudioClip mixture = ReadWav(dir / e.mixture_path);
    const AudioClip target = ReadWav(dir / e.target_path);
    AudioClip est;
    if (o.oracle) {
      est = target;
    } else if (o.estimates_dir) {
      const fs::path p = *o.estimates_dir / (e.id + "_est.wav");
      if (!fs::exists(p))
        throw DataError("missing estimate for sample " + e.id + ": " +
                        p.string());
      est = ReadWav(p);
    } else {
      est = Extract(mixture, ReadVisualStream(dir / e.visual_ref), ck->model,
                    ck->config);
    }
    if (est.size() != target.size())
      throw DataError("estimate for sample " + e.id + " has " +
                      std::to_string(est.size()) + " samples, expected " +
                      std::to_string(target.size()));
    if (o.write_estimates) WriteWav(o.out_dir / (e.id + "_est.wav"), est);
    rows.push_back({e.id, ComputeMetrics(est, target, mixture, *source)});
  }
  WriteReport(o.out_dir, rows);
  ordered_json cfg = {{"command", "eval"},
                      {"manifest", o.manifest.string()},
                      {"checkpoint", o.checkpoint ? o.checkpoint->string() : ""},
                      {"estimates", o.estimates_dir ? o.estimates_dir->string() : ""},
                      {"oracle", o.oracle},
                      {"knowledge", ToJson(o.knowledge)},
                      {"out", o.out_dir.string()}};
  WriteJsonFile(o.out_dir / kResolvedConfigName, cfg);
}

}  // namespace avtse
