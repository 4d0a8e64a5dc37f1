// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// avtse: simulate mixtures, impair visual cues, fit codebooks, train and
// evaluate audio-visual target speaker extraction models.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 missing backend.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "avtse/commands.h"
#include "avtse/error.h"
#include "avtse/run_config.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitBackend = 4;

void AddKnowledgeFlags(CLI::App *cmd, std::string *kind, std::string *backend,
                       int *layer, int *dim, uint64_t *seed) {
  cmd->add_option("--source", *kind, "Knowledge source kind")
      ->check(CLI::IsMember({"pslm", "plm", "synthetic"}));
  cmd->add_option("--backend", *backend, "Backend id for non-synthetic sources");
  cmd->add_option("--layer-tap", *layer, "Layer to tap");
  cmd->add_option("--feature-dim", *dim, "Feature dimension");
  cmd->add_option("--source-seed", *seed, "Synthetic source seed");
}

}  // namespace

int main(int argc, char **argv) {
  using namespace avtse;
  CLI::App app{"Audio-visual target speaker extraction toolkit"};
  app.require_subcommand(1);

  // simulate
  SimulateOptions sim;
  auto *simulate = app.add_subcommand("simulate", "Simulate two-speaker mixtures");
  simulate->add_flag("--synthetic", sim.synthetic, "Use the built-in synthetic catalog");
  simulate->add_option("--catalog", sim.catalog, "Catalog JSON-lines file");
  simulate->add_option("--count", sim.count, "Number of mixtures");
  simulate->add_option("--duration", sim.duration_s, "Clip duration in seconds");
  simulate->add_option("--seed", sim.seed, "Global seed");
  simulate->add_option("--snr-min", sim.snr_min_db, "Lowest SNR in dB");
  simulate->add_option("--snr-max", sim.snr_max_db, "Highest SNR in dB");
  simulate->add_option("--visual-dim", sim.visual_dim, "Visual feature dimension");
  simulate->add_option("--speakers", sim.num_speakers, "Synthetic speakers");
  simulate->add_option("--clips-per-speaker", sim.clips_per_speaker,
                       "Synthetic clips per speaker");
  simulate->add_flag("--eval-crop", sim.eval_crop, "Crop from the clip head");
  simulate->add_option("--out", sim.out_dir, "Output directory");

  // impair
  ImpairOptions imp;
  double ratio = 0.0;
  auto *impair = app.add_subcommand("impair", "Impair visual cue streams");
  impair->add_option("manifest", imp.manifest, "Input manifest")->required();
  impair->add_option("--kind", imp.kind,
                     "full_missing, partial_occlusion or low_resolution")
      ->required();
  auto *ratio_opt = impair->add_option("--ratio", ratio, "Affected frame ratio");
  auto *uniform_opt = impair->add_flag("--ratio-uniform", imp.ratio_uniform,
                                       "Draw a ratio per sample from U[0, 1]");
  ratio_opt->excludes(uniform_opt);
  impair->add_option("--low-res-mode", imp.low_res_mode, "blur or noise");
  impair->add_option("--seed", imp.seed, "Seed");
  impair->add_option("--out", imp.out_dir, "Output directory");

  // fit-codebook
  FitCodebookOptions fit;
  std::string fit_kind = "synthetic", fit_backend = "synthetic";
  auto *fitc = app.add_subcommand("fit-codebook", "Fit a k-means codebook");
  fitc->add_option("manifest", fit.manifest, "Manifest of training clips")->required();
  fitc->add_option("--k", fit.k, "Number of centroids");
  fitc->add_option("--seed", fit.seed, "Seed");
  fitc->add_option("--max-iters", fit.max_iters, "Lloyd iterations");
  fitc->add_option("--out", fit.out, "Output base path");
  AddKnowledgeFlags(fitc, &fit_kind, &fit_backend, &fit.source.layer_tap,
                    &fit.source.feature_dim, &fit.source.seed);

  // train
  std::string config_path, stage_constraint, resume_path, out_dir;
  std::string train_manifest, val_manifest, codebook_path;
  int stage = 0;
  int64_t max_steps = -1;
  auto *train = app.add_subcommand("train", "Train one stage");
  train->add_option("--config", config_path, "Run configuration (JSON)");
  train->add_option("--stage", stage, "Stage 1 or 2")->check(CLI::IsMember({1, 2}));
  train->add_option("--constraint", stage_constraint, "Linguistic constraint")
      ->check(CLI::IsMember({"none", "pslm_mse", "pslm_ce", "plm_mse"}));
  train->add_option("--resume", resume_path, "Checkpoint to start from");
  train->add_option("--train-manifest", train_manifest, "Training manifest");
  train->add_option("--val-manifest", val_manifest, "Validation manifest");
  train->add_option("--codebook", codebook_path, "Codebook base path");
  train->add_option("--max-steps", max_steps, "Optimizer step budget");
  train->add_option("--out", out_dir, "Output directory");

  // eval
  EvalOptions ev;
  std::string ckpt_path, est_dir;
  std::string ev_kind = "synthetic", ev_backend = "synthetic";
  auto *eval = app.add_subcommand("eval", "Evaluate estimates or a model");
  eval->add_option("manifest", ev.manifest, "Evaluation manifest")->required();
  eval->add_option("checkpoint", ckpt_path, "Inference checkpoint");
  eval->add_option("--estimates", est_dir, "Directory of <id>_est.wav files");
  eval->add_flag("--oracle", ev.oracle, "Use references as estimates");
  eval->add_flag("--write-estimates", ev.write_estimates, "Save extracted audio");
  eval->add_option("--out", ev.out_dir, "Output directory");
  AddKnowledgeFlags(eval, &ev_kind, &ev_backend, &ev.knowledge.layer_tap,
                    &ev.knowledge.feature_dim, &ev.knowledge.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) {
      CmdSimulate(sim);
    } else if (*impair) {
      if (*ratio_opt) imp.ratio = ratio;
      CmdImpair(imp);
    } else if (*fitc) {
      fit.source.kind = ParseSourceKind(fit_kind);
      fit.source.backend_id = fit_backend;
      const CodebookFit result = CmdFitCodebook(fit);
      std::cerr << "codebook K=" << result.codebook.size()
                << " iterations=" << result.iterations << " objective="
                << result.objective.back() << '\n';
    } else if (*train) {
      TrainOptions to;
      if (!config_path.empty()) to.config = LoadRunConfig(config_path);
      if (stage != 0) to.config.train.stage = stage;
      if (!stage_constraint.empty())
        to.config.train.constraint_kind = ParseConstraintKind(stage_constraint);
      if (!train_manifest.empty()) to.config.data.train_manifest = train_manifest;
      if (!val_manifest.empty()) to.config.data.val_manifest = val_manifest;
      if (!codebook_path.empty()) to.config.data.codebook = codebook_path;
      if (max_steps >= 0) to.config.train.max_steps = max_steps;
      if (!out_dir.empty()) to.config.output_dir = out_dir;
      if (!resume_path.empty()) to.resume = resume_path;
      CmdTrain(to);
    } else if (*eval) {
      ev.knowledge.kind = ParseSourceKind(ev_kind);
      ev.knowledge.backend_id = ev_backend;
      if (!ckpt_path.empty()) ev.checkpoint = ckpt_path;
      if (!est_dir.empty()) ev.estimates_dir = est_dir;
      CmdEval(ev);
    }
  } catch (const InvalidArgument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const BackendMissing &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception &e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
