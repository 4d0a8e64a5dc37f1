// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "avtse/error.h"
#include "avtse/run_config.h"
#include "json.hpp"

namespace avtse {

using nlohmann::json;
using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'V', 'T', 'S', 'E', 'C', 'K', '\0'};

struct Group {
  const char *name;
  ParamSet Checkpoint::*member;
};
constexpr Group kGroups[] = {{"model", &Checkpoint::model},
                             {"adapter", &Checkpoint::adapters},
                             {"adam_m", &Checkpoint::adam_m},
                             {"adam_v", &Checkpoint::adam_v}};

template <typename T>
void PutLe(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(v));
}

template <typename T>
T GetLe(std::istream &is, const std::string &what) {
  T v;
  if (!is.read(reinterpret_cast<char *>(&v), sizeof(v)))
    throw DataError("checkpoint truncated while reading " + what);
  return v;
}

ordered_json StateToJson(const TrainState &s) {
  ordered_json j = {{"stage", s.stage},
                    {"epoch", s.epoch},
                    {"step", s.step},
                    {"best_val_sisdr", nullptr},
                    {"epochs_since_improve", s.epochs_since_improve},
                    {"current_lr", s.current_lr},
                    {"rng_state", RngStateString(s.rng)}};
  if (std::isfinite(s.best_val_sisdr)) j["best_val_sisdr"] = s.best_val_sisdr;
  return j;
}

TrainState StateFromJson(const json &j) {
  TrainState s;
  s.stage = j.at("stage").get<int>();
  s.epoch = j.at("epoch").get<int>();
  s.step = j.at("step").get<int64_t>();
  if (!j.at("best_val_sisdr").is_null())
    s.best_val_sisdr = j.at("best_val_sisdr").get<double>();
  s.epochs_since_improve = j.at("epochs_since_improve").get<int>();
  s.current_lr = j.at("current_lr").get<double>();
  s.rng = RngFromString(j.at("rng_state").get<std::string>());
  return s;
}

}  // namespace

std::string RngStateString(const Rng &rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng RngFromString(const std::string &s) {
  std::istringstream is(s);
  Rng rng;
  is >> rng;
  if (is.fail()) throw DataError("corrupt rng state in checkpoint");
  return rng;
}

Checkpoint InferenceCheckpoint(const Checkpoint &ck) {
  Checkpoint out;
  out.config = ck.config;
  out.model = ck.model;
  return out;
}

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ck) {
  ordered_json header;
  header["format"] = "avtse-checkpoint";
  header["config"] = ToJson(ck.config);
  header["constraint"] = ToString(ck.constraint);
  header["knowledge"] = ck.knowledge ? ordered_json(ToJson(*ck.knowledge))
                                     : ordered_json(nullptr);
  header["state"] =
      ck.state ? StateToJson(*ck.state) : ordered_json(nullptr);
  ordered_json index = ordered_json::array();
  uint64_t offset = 0;
  for (const Group &g : kGroups) {
    for (const auto &[name, m] : (ck.*g.member).tensors()) {
      index.push_back({{"group", g.name},
                       {"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"offset", offset}});
      offset += m.size() * sizeof(double);
    }
  }
  header["tensors"] = std::move(index);
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof(kMagic));
  PutLe<uint32_t>(os, kCheckpointVersion);
  PutLe<uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Group &g : kGroups)
    for (const auto &[name, m] : (ck.*g.member).tensors())
      os.write(reinterpret_cast<const char *>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(path.string() + " is not an avtse checkpoint");
  const auto version = GetLe<uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  const auto header_len = GetLe<uint64_t>(is, "header length");
  if (header_len > (1ULL << 31))
    throw DataError("checkpoint header length is implausible");
  std::string text(header_len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw DataError("checkpoint truncated in header");

  Checkpoint ck;
  try {
    const json header = json::parse(text);
    ck.config = ParseBackboneConfig(header.at("config"));
    ck.constraint = ParseConstraintKind(header.at("constraint").get<std::string>());
    if (!header.at("knowledge").is_null())
      ck.knowledge = ParseKnowledgeSpec(header.at("knowledge"));
    if (!header.at("state").is_null())
      ck.state = StateFromJson(header.at("state"));
    uint64_t expected = 0;
    for (const json &t : header.at("tensors")) {
      const std::string group = t.at("group").get<std::string>();
      const int rows = t.at("rows").get<int>();
      const int cols = t.at("cols").get<int>();
      if (rows < 0 || cols < 0 || t.at("offset").get<uint64_t>() != expected)
        throw DataError("checkpoint tensor index is inconsistent");
      Matrix m(rows, cols);
      if (!is.read(reinterpret_cast<char *>(m.data()),
                   static_cast<std::streamsize>(m.size() * sizeof(double))))
        throw DataError("checkpoint truncated in tensor data");
      expected += m.size() * sizeof(double);
      ParamSet *dst = nullptr;
      for (const Group &g : kGroups)
        if (group == g.name) dst = &(ck.*g.member);
      if (dst == nullptr)
        throw DataError("checkpoint has unknown tensor group '" + group + "'");
      dst->Set(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const json::exception &ex) {
    throw DataError("corrupt checkpoint header: " + std::string(ex.what()));
  } catch (const InvalidArgument &ex) {
    throw DataError("corrupt checkpoint header: " + std::string(ex.what()));
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw DataError("checkpoint has trailing bytes");
  return ck;
}

}  // namespace avtse
