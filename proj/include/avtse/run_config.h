// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// JSON run configuration. Every section is optional; missing keys keep
// their defaults and unknown keys are rejected.
//
//   {
//     "backbone":  {enc_kernel, enc_stride, model_dim, n_blocks, chunk_len,
//                   n_heads, visual_dim, seed},
//     "train":     {stage, max_epochs, patience_stop, patience_halve, lr,
//                   batch_size, alpha, beta, constraint, seed, max_steps,
//                   clip_norm, improvement_db, temperature, augment_visual},
//     "knowledge": {kind, backend_id, layer_tap, feature_dim, frame_rate,
//                   seed},
//     "data":      {train_manifest, val_manifest, codebook},
//     "output_dir": "..."
//   }

#ifndef AVTSE_RUN_CONFIG_H_
#define AVTSE_RUN_CONFIG_H_

#include <filesystem>
#include <string>

#include "avtse/backbone.h"
#include "avtse/knowledge.h"
#include "avtse/trainer.h"
#include "json.hpp"

namespace avtse {

struct DataPaths {
  std::string train_manifest;
  std::string val_manifest;
  std::string codebook;
  bool operator==(const DataPaths &) const = default;
};

struct RunConfig {
  BackboneConfig backbone;
  StageConfig train;
  KnowledgeSourceSpec knowledge;
  DataPaths data;
  std::string output_dir = "run";
  bool operator==(const RunConfig &) const = default;
};

inline const char kResolvedConfigName[] = "resolved_config.json";

nlohmann::ordered_json ToJson(const BackboneConfig &c);
nlohmann::ordered_json ToJson(const StageConfig &c);
nlohmann::ordered_json ToJson(const KnowledgeSourceSpec &s);
nlohmann::ordered_json ToJson(const RunConfig &c);

// Each parser starts from `base` and overrides the keys present in `j`.
BackboneConfig ParseBackboneConfig(const nlohmann::json &j,
                                   BackboneConfig base = {});
StageConfig ParseStageConfig(const nlohmann::json &j, StageConfig base = {});
KnowledgeSourceSpec ParseKnowledgeSpec(const nlohmann::json &j,
                                       KnowledgeSourceSpec base = {});
RunConfig ParseRunConfig(const nlohmann::json &j);

RunConfig LoadRunConfig(const std::filesystem::path &path);
// Writes <dir>/resolved_config.json.
void WriteResolvedConfig(const std::filesystem::path &dir, const RunConfig &c);

}  // namespace avtse

#endif  // AVTSE_RUN_CONFIG_H_
