// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Pipeline commands behind the avtse command-line tool. Each command writes
// its outputs plus a resolved_config.json into its output directory and
// reports failures through the InvalidArgument / DataError /
// BackendMissing exceptions, which the tool maps to exit codes 2, 3 and 4.

#ifndef AVTSE_COMMANDS_H_
#define AVTSE_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "avtse/dataset_sim.h"
#include "avtse/knowledge.h"
#include "avtse/run_config.h"

namespace avtse {

// Catalog file: JSON lines {id, speaker, language, transcript, path} with
// `path` relative to the catalog file.
ClipCatalog ReadCatalog(const std::filesystem::path &path);

struct SimulateOptions {
  bool synthetic = false;
  std::filesystem::path catalog;  // used when !synthetic
  int count = 8;
  double duration_s = 4.0;
  uint64_t seed = 0;
  double snr_min_db = -10.0;
  double snr_max_db = 10.0;
  int visual_dim = 64;
  int num_speakers = 8;
  int clips_per_speaker = 4;
  bool eval_crop = false;
  std::filesystem::path out_dir = "data";
};

// Writes manifest.jsonl (+ sidecar), <id>_{mix,tgt,itf}.wav and the
// <id>_vis visual streams into out_dir.
DatasetManifest CmdSimulate(const SimulateOptions &o);

struct ImpairOptions {
  std::filesystem::path manifest;
  std::string kind;
  std::optional<double> ratio;
  bool ratio_uniform = false;
  std::string low_res_mode = "blur";
  uint64_t seed = 0;
  std::filesystem::path out_dir = "impaired";
};

// Copies the dataset into out_dir with impaired visual streams; the output
// manifest records each sample's impairment.
DatasetManifest CmdImpair(const ImpairOptions &o);

struct FitCodebookOptions {
  std::filesystem::path manifest;
  KnowledgeSourceSpec source;
  int k = 500;
  uint64_t seed = 0;
  int max_iters = 100;
  // Output base; writes <out>.f32 and <out>.json.
  std::filesystem::path out = "codebook";
};

CodebookFit CmdFitCodebook(const FitCodebookOptions &o);

struct TrainOptions {
  RunConfig config;
  std::optional<std::filesystem::path> resume;
};

// Writes resolved_config.json, history.jsonl, train_best.ckpt (training
// state), train_last.ckpt and model.ckpt (inference checkpoint of the best
// snapshot) into config.output_dir.
void CmdTrain(const TrainOptions &o);

struct EvalOptions {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> checkpoint;
  // Directory with <id>_est.wav files; takes precedence over the model.
  std::optional<std::filesystem::path> estimates_dir;
  // Use the references as estimates.
  bool oracle = false;
  bool write_estimates = false;
  KnowledgeSourceSpec knowledge;
  std::filesystem::path out_dir = "eval";
};

void CmdEval(const EvalOptions &o);

}  // namespace avtse

#endif  // AVTSE_COMMANDS_H_
