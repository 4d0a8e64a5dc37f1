// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/run_config.h"

#include <fstream>
#include <set>

#include "avtse/error.h"

namespace avtse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void RejectUnknown(const json &j, const std::set<std::string> &known,
                   const std::string &section) {
  AVTSE_REQUIRE(j.is_object(), "config section '" + section +
                                   "' must be an object");
  for (const auto &[key, value] : j.items())
    if (!known.count(key))
      throw InvalidArgument("unknown config key '" + section + "." + key + "'");
}

template <typename T>
void Take(const json &j, const char *key, T *out, const std::string &section) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InvalidArgument("config key '" + section + "." + key +
                          "' has the wrong type");
  }
}

}  // namespace

ordered_json ToJson(const BackboneConfig &c) {
  return {{"enc_kernel", c.enc_kernel}, {"enc_stride", c.enc_stride},
          {"model_dim", c.model_dim},   {"n_blocks", c.n_blocks},
          {"chunk_len", c.chunk_len},   {"n_heads", c.n_heads},
          {"visual_dim", c.visual_dim}, {"seed", c.seed}};
}

ordered_json ToJson(const StageConfig &c) {
  return {{"stage", c.stage},
          {"max_epochs", c.max_epochs},
          {"patience_stop", c.patience_stop},
          {"patience_halve", c.patience_halve},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"alpha", c.weights.alpha},
          {"beta", c.weights.beta},
          {"constraint", ToString(c.constraint_kind)},
          {"seed", c.seed},
          {"max_steps", c.max_steps},
          {"clip_norm", c.clip_norm},
          {"improvement_db", c.improvement_db},
          {"temperature", c.temperature},
          {"augment_visual", c.augment_visual}};
}

ordered_json ToJson(const KnowledgeSourceSpec &s) {
  return {{"kind", ToString(s.kind)},       {"backend_id", s.backend_id},
          {"layer_tap", s.layer_tap},       {"feature_dim", s.feature_dim},
          {"frame_rate", s.frame_rate},     {"seed", s.seed}};
}

ordered_json ToJson(const RunConfig &c) {
  return {{"backbone", ToJson(c.backbone)},
          {"train", ToJson(c.train)},
          {"knowledge", ToJson(c.knowledge)},
          {"data",
           {{"train_manifest", c.data.train_manifest},
            {"val_manifest", c.data.val_manifest},
            {"codebook", c.data.codebook}}},
          {"output_dir", c.output_dir}};
}

BackboneConfig ParseBackboneConfig(const json &j, BackboneConfig c) {
  const std::string s = "backbone";
  RejectUnknown(j, {"enc_kernel", "enc_stride", "model_dim", "n_blocks",
                    "chunk_len", "n_heads", "visual_dim", "seed"}, s);
  Take(j, "enc_kernel", &c.enc_kernel, s);
  Take(j, "enc_stride", &c.enc_stride, s);
  Take(j, "model_dim", &c.model_dim, s);
  Take(j, "n_blocks", &c.n_blocks, s);
  Take(j, "chunk_len", &c.chunk_len, s);
  Take(j, "n_heads", &c.n_heads, s);
  Take(j, "visual_dim", &c.visual_dim, s);
  Take(j, "seed", &c.seed, s);
  c.Validate();
  return c;
}

StageConfig ParseStageConfig(const json &j, StageConfig c) {
  const std::string s = "train";
  RejectUnknown(j, {"stage", "max_epochs", "patience_stop", "patience_halve",
                    "lr", "batch_size", "alpha", "beta", "constraint", "seed",
                    "max_steps", "clip_norm", "improvement_db", "temperature",
                    "augment_visual"}, s);
  Take(j, "stage", &c.stage, s);
  Take(j, "max_epochs", &c.max_epochs, s);
  Take(j, "patience_stop", &c.patience_stop, s);
  Take(j, "patience_halve", &c.patience_halve, s);
  Take(j, "lr", &c.lr, s);
  Take(j, "batch_size", &c.batch_size, s);
  Take(j, "alpha", &c.weights.alpha, s);
  Take(j, "beta", &c.weights.beta, s);
  std::string kind;
  Take(j, "constraint", &kind, s);
  if (!kind.empty()) c.constraint_kind = ParseConstraintKind(kind);
  Take(j, "seed", &c.seed, s);
  Take(j, "max_steps", &c.max_steps, s);
  Take(j, "clip_norm", &c.clip_norm, s);
  Take(j, "improvement_db", &c.improvement_db, s);
  Take(j, "temperature", &c.temperature, s);
  Take(j, "augment_visual", &c.augment_visual, s);
  return c;
}

KnowledgeSourceSpec ParseKnowledgeSpec(const json &j, KnowledgeSourceSpec k) {
  const std::string s = "knowledge";
  RejectUnknown(j, {"kind", "backend_id", "layer_tap", "feature_dim",
                    "frame_rate", "seed"}, s);
  std::string kind;
  Take(j, "kind", &kind, s);
  if (!kind.empty()) k.kind = ParseSourceKind(kind);
  Take(j, "backend_id", &k.backend_id, s);
  Take(j, "layer_tap", &k.layer_tap, s);
  Take(j, "feature_dim", &k.feature_dim, s);
  Take(j, "frame_rate", &k.frame_rate, s);
  Take(j, "seed", &k.seed, s);
  k.Validate();
  return k;
}

RunConfig ParseRunConfig(const json &j) {
  RejectUnknown(j, {"backbone", "train", "knowledge", "data", "output_dir"},
                "config");
  RunConfig c;
  if (j.contains("backbone")) c.backbone = ParseBackboneConfig(j["backbone"]);
  if (j.contains("train")) c.train = ParseStageConfig(j["train"]);
  if (j.contains("knowledge")) c.knowledge = ParseKnowledgeSpec(j["knowledge"]);
  if (j.contains("data")) {
    const json &d = j["data"];
    RejectUnknown(d, {"train_manifest", "val_manifest", "codebook"}, "data");
    Take(d, "train_manifest", &c.data.train_manifest, "data");
    Take(d, "val_manifest", &c.data.val_manifest, "data");
    Take(d, "codebook", &c.data.codebook, "data");
  }
  Take(j, "output_dir", &c.output_dir, "config");
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception &ex) {
    throw InvalidArgument("config " + path.string() + ": " + ex.what());
  }
  return ParseRunConfig(j);
}

void WriteResolvedConfig(const std::filesystem::path &dir, const RunConfig &c) {
  std::filesystem::create_directories(dir);
  const auto path = dir / kResolvedConfigName;
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << ToJson(c).dump(2) << '\n';
}

}  // namespace avtse
