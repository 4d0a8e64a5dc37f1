// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/knowledge.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "avtse/error.h"
#include "avtse/rng.h"
#include "json.hpp"

namespace avtse {

using nlohmann::json;

std::string ToString(SourceKind kind) {
  switch (kind) {
    case SourceKind::kPslm: return "pslm";
    case SourceKind::kPlm: return "plm";
    case SourceKind::kSynthetic: return "synthetic";
  }
  return "unknown";
}

SourceKind ParseSourceKind(const std::string &s) {
  if (s == "pslm") return SourceKind::kPslm;
  if (s == "plm") return SourceKind::kPlm;
  if (s == "synthetic") return SourceKind::kSynthetic;
  throw InvalidArgument("unknown knowledge source kind '" + s + "'");
}

void KnowledgeSourceSpec::Validate() const {
  AVTSE_REQUIRE(layer_tap >= 0, "layer_tap must be >= 0");
  AVTSE_REQUIRE(feature_dim >= 1, "feature_dim must be >= 1");
  AVTSE_REQUIRE(frame_rate > 0.0, "frame_rate must be positive");
}

FeatureSequence SpeechKnowledgeSource::Features(const AudioClip &wave) const {
  ag::Graph g;
  ag::Var f = Features(g, g.Constant(wave.AsRow()), wave.sample_rate());
  return {f.value(), frame_rate()};
}

std::vector<double> TextKnowledgeSource::Embedding(
    const std::string &transcript) const {
  const Matrix tokens = TokenFeatures(transcript);
  std::vector<double> out(tokens.cols(), 0.0);
  for (int t = 0; t < tokens.rows(); ++t)
    for (int d = 0; d < tokens.cols(); ++d) out[d] += tokens(t, d);
  for (double &v : out) v /= tokens.rows();
  return out;
}

namespace {
constexpr double kSyntheticSpeechGain = 6.0;

uint64_t DigestMatrix(uint64_t h, const Matrix &m) {
  ParamSet p;
  p.Set("m", m);
  return MixSeed(h ^ p.Fingerprint());
}
}  // namespace

SyntheticSpeechSource::SyntheticSpeechSource(const KnowledgeSourceSpec &spec,
                                             int sample_rate)
    : sample_rate_(sample_rate), frame_rate_(spec.frame_rate) {
  spec.Validate();
  AVTSE_REQUIRE(sample_rate > 0, "sample_rate must be positive");
  window_ = static_cast<int>(std::lround(sample_rate / spec.frame_rate));
  AVTSE_REQUIRE(window_ >= 1, "frame_rate exceeds the sample rate");
  Rng rng(DeriveSeed(spec.seed, static_cast<uint64_t>(spec.layer_tap)));
  projection_ = Matrix(window_, spec.feature_dim);
  const double scale = kSyntheticSpeechGain / std::sqrt(static_cast<double>(window_));
  for (double &v : projection_.values()) v = scale * Gaussian(rng);
  bias_ = Matrix(1, spec.feature_dim);
  for (double &v : bias_.values()) v = 0.1 * Gaussian(rng);
}

ag::Var SyntheticSpeechSource::Features(ag::Graph &g, ag::Var wave,
                                        int sample_rate) const {
  AVTSE_REQUIRE(sample_rate == sample_rate_,
                "synthetic speech source built for " +
                    std::to_string(sample_rate_) + " Hz, got " +
                    std::to_string(sample_rate));
  AVTSE_REQUIRE(wave.cols() >= window_, "clip shorter than one feature frame");
  ag::Var frames = ag::Frame(wave, window_, window_);
  return ag::Tanh(
      ag::Linear(frames, g.Constant(projection_), g.Constant(bias_)));
}

uint64_t SyntheticSpeechSource::Fingerprint() const {
  return DigestMatrix(DigestMatrix(HashString("synthetic-speech"), projection_),
                      bias_);
}

SyntheticTextSource::SyntheticTextSource(const KnowledgeSourceSpec &spec)
    : dim_(spec.feature_dim), seed_(spec.seed) {
  spec.Validate();
}

Matrix SyntheticTextSource::TokenFeatures(const std::string &transcript) const {
  std::istringstream is(transcript);
  std::vector<std::string> tokens;
  for (std::string w; is >> w;) tokens.push_back(w);
  AVTSE_REQUIRE(!tokens.empty(), "transcript is empty");
  Matrix out(static_cast<int>(tokens.size()), dim_);
  for (size_t t = 0; t < tokens.size(); ++t) {
    Rng rng(HashString(tokens[t], seed_));
    for (int d = 0; d < dim_; ++d) out(static_cast<int>(t), d) = Gaussian(rng);
  }
  return out;
}

uint64_t SyntheticTextSource::Fingerprint() const {
  return MixSeed(HashString("synthetic-text", seed_) ^ static_cast<uint64_t>(dim_));
}

BackendRegistry &BackendRegistry::Global() {
  static BackendRegistry registry;
  return registry;
}

void BackendRegistry::RegisterSpeech(const std::string &backend_id,
                                     SpeechFactory f) {
  speech_[backend_id] = std::move(f);
}

void BackendRegistry::RegisterText(const std::string &backend_id,
                                   TextFactory f) {
  text_[backend_id] = std::move(f);
}

std::filesystem::path BackendRegistry::ModelPath(
    const std::string &backend_id) const {
  const char *env = std::getenv("AVTSE_BACKEND_REGISTRY");
  if (env == nullptr || *env == '\0') return {};
  std::ifstream is(env);
  if (!is) return {};
  try {
    json j = json::parse(is);
    if (j.contains(backend_id) && j[backend_id].is_string())
      return j[backend_id].get<std::string>();
  } catch (const json::exception &ex) {
    throw DataError(std::string("bad backend registry ") + env + ": " + ex.what());
  }
  return {};
}

std::unique_ptr<SpeechKnowledgeSource> BackendRegistry::MakeSpeech(
    const KnowledgeSourceSpec &spec) const {
  const auto path = ModelPath(spec.backend_id);
  auto it = speech_.find(spec.backend_id);
  if (path.empty() || it == speech_.end()) throw BackendMissing(spec.backend_id);
  return it->second(path, spec);
}

std::unique_ptr<TextKnowledgeSource> BackendRegistry::MakeText(
    const KnowledgeSourceSpec &spec) const {
  const auto path = ModelPath(spec.backend_id);
  auto it = text_.find(spec.backend_id);
  if (path.empty() || it == text_.end()) throw BackendMissing(spec.backend_id);
  return it->second(path, spec);
}

std::unique_ptr<SpeechKnowledgeSource> MakeSpeechSource(
    const KnowledgeSourceSpec &spec) {
  spec.Validate();
  if (spec.kind == SourceKind::kPlm)
    throw InvalidArgument("a plm source cannot encode speech");
  if (spec.kind == SourceKind::kSynthetic)
    return std::make_unique<SyntheticSpeechSource>(spec);
  return BackendRegistry::Global().MakeSpeech(spec);
}

std::unique_ptr<TextKnowledgeSource> MakeTextSource(
    const KnowledgeSourceSpec &spec) {
  spec.Validate();
  if (spec.kind == SourceKind::kPslm)
    throw InvalidArgument("a pslm source cannot encode text");
  if (spec.kind == SourceKind::kSynthetic)
    return std::make_unique<SyntheticTextSource>(spec);
  return BackendRegistry::Global().MakeText(spec);
}

FeatureSequence PslmFeatures(const AudioClip &wave,
                             const KnowledgeSourceSpec &spec) {
  return MakeSpeechSource(spec)->Features(wave);
}

std::vector<double> PlmEmbedding(const std::string &transcript,
                                 const KnowledgeSourceSpec &spec) {
  AVTSE_REQUIRE(!transcript.empty(), "transcript is empty");
  return MakeTextSource(spec)->Embedding(transcript);
}

// ---- discrete units ----

namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Returns index of the nearest centroid (lowest index on ties) and distance.
std::pair<int, double> Nearest(std::span<const double> x, const Matrix &c) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < c.rows(); ++k) {
    const double d = SquaredDistance(x, c.row(k));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return {best, best_d};
}

}  // namespace

CodebookFit FitCodebook(std::span<const FeatureSequence> features, int k,
                        uint64_t seed, int max_iters) {
  AVTSE_REQUIRE(k >= 2, "codebook size must be >= 2");
  AVTSE_REQUIRE(max_iters >= 1, "max_iters must be >= 1");
  int dim = -1;
  size_t total = 0;
  for (const auto &f : features) {
    if (f.frames.rows() == 0) continue;
    if (dim < 0) dim = f.frames.cols();
    AVTSE_REQUIRE(f.frames.cols() == dim, "feature dimension mismatch");
    total += static_cast<size_t>(f.frames.rows());
  }
  if (total < static_cast<size_t>(k))
    throw InvalidArgument("k-means needs at least K=" + std::to_string(k) +
                          " frames, got " + std::to_string(total));
  Matrix data(static_cast<int>(total), dim);
  {
    int r = 0;
    for (const auto &f : features)
      for (int t = 0; t < f.frames.rows(); ++t, ++r)
        std::copy(f.frames.row(t).begin(), f.frames.row(t).end(),
                  data.row(r).begin());
  }
  const int n = data.rows();

  // k-means++ seeding
  Rng rng(seed);
  Matrix centroids(k, dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::copy(data.row(first).begin(), data.row(first).end(),
            centroids.row(0).begin());
  for (int c = 1; c < k; ++c) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(data.row(i), centroids.row(c - 1)));
      sum += d2[i];
    }
    int pick = 0;
    if (sum > 0.0) {
      double u = Uniform01(rng) * sum;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] <= 0.0 && pick > 0) --pick;
    } else {
      pick = std::uniform_int_distribution<int>(0, n - 1)(rng);
    }
    std::copy(data.row(pick).begin(), data.row(pick).end(),
              centroids.row(c).begin());
  }

  CodebookFit fit;
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      auto [best, d] = Nearest(data.row(i), centroids);
      objective += d;
      if (best != assign[i]) {
        assign[i] = best;
        changed = true;
      }
    }
    fit.objective.push_back(objective);
    fit.iterations = iter + 1;
    if (!changed) break;
    Matrix sums(k, dim);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      auto dst = sums.row(assign[i]);
      auto src = data.row(i);
      for (int d = 0; d < dim; ++d) dst[d] += src[d];
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (int d = 0; d < dim; ++d) centroids(c, d) = sums(c, d) / counts[c];
    }
  }
  fit.codebook.centroids = std::move(centroids);
  return fit;
}

TokenSequence Tokenize(const FeatureSequence &features, const Codebook &cb) {
  AVTSE_REQUIRE(features.frames.cols() == cb.dim(),
                "feature dim " + std::to_string(features.frames.cols()) +
                    " does not match codebook dim " + std::to_string(cb.dim()));
  TokenSequence out;
  out.num_classes = cb.size();
  out.tokens.reserve(features.frames.rows());
  for (int t = 0; t < features.frames.rows(); ++t)
    out.tokens.push_back(Nearest(features.frames.row(t), cb.centroids).first);
  return out;
}

Matrix TokenLogits(const FeatureSequence &features, const Codebook &cb,
                   double temperature) {
  ag::Graph g;
  return ag::SquaredDistanceLogits(g.Constant(features.frames), cb.centroids,
                                   temperature)
      .value();
}

void WriteCodebook(const std::filesystem::path &base, const Codebook &cb,
                   const KnowledgeSourceSpec &source, uint64_t seed) {
  std::filesystem::path bin = base, side = base;
  bin += ".f32";
  side += ".json";
  std::ofstream os(bin, std::ios::binary);
  if (!os) throw DataError("cannot write " + bin.string());
  for (double v : cb.centroids.values()) {
    const float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char *>(&f), sizeof(f));
  }
  json meta = {{"K", cb.size()},
               {"D", cb.dim()},
               {"seed", seed},
               {"source",
                {{"kind", ToString(source.kind)},
                 {"backend_id", source.backend_id},
                 {"layer_tap", source.layer_tap},
                 {"feature_dim", source.feature_dim},
                 {"frame_rate", source.frame_rate},
                 {"seed", source.seed}}}};
  std::ofstream ms(side, std::ios::binary);
  ms << meta.dump(2) << '\n';
}

Codebook ReadCodebook(const std::filesystem::path &base) {
  std::filesystem::path bin = base, side = base;
  bin += ".f32";
  side += ".json";
  std::ifstream ms(side);
  if (!ms) throw DataError("cannot open " + side.string());
  json meta;
  try {
    meta = json::parse(ms);
  } catch (const json::exception &ex) {
    throw DataError(side.string() + ": " + ex.what());
  }
  const int k = meta.at("K").get<int>();
  const int d = meta.at("D").get<int>();
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw DataError("cannot open " + bin.string());
  Codebook cb{Matrix(k, d)};
  for (double &v : cb.centroids.values()) {
    float f;
    if (!is.read(reinterpret_cast<char *>(&f), sizeof(f)))
      throw DataError(bin.string() + ": truncated codebook");
    v = f;
  }
  return cb;
}

// ---- adapters ----

ParamSet InitAdapter(const std::string &prefix, int in_dim, int hidden,
                     int out_dim, uint64_t seed) {
  AVTSE_REQUIRE(in_dim >= 1 && hidden >= 1 && out_dim >= 1,
                "adapter dimensions must be positive");
  Rng rng(seed);
  auto uniform = [&](int fan_in, int fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(fan_in, fan_out);
    for (double &v : m.values()) v = dist(rng);
    return m;
  };
  ParamSet p;
  p.Set(prefix + ".fc1.weight", uniform(in_dim, hidden));
  p.Set(prefix + ".fc1.bias", Matrix(1, hidden));
  p.Set(prefix + ".fc2.weight", uniform(hidden, out_dim));
  p.Set(prefix + ".fc2.bias", Matrix(1, out_dim));
  return p;
}

ParamSet InitAdapterPair(int speech_dim, int text_dim, uint64_t seed,
                         int hidden, int proj_dim) {
  ParamSet p = InitAdapter(kSpeechAdapter, speech_dim, hidden, proj_dim,
                           DeriveSeed(seed, 1));
  ParamSet text =
      InitAdapter(kTextAdapter, text_dim, hidden, proj_dim, DeriveSeed(seed, 2));
  for (auto &[name, m] : text.mutable_tensors()) p.Set(name, std::move(m));
  CheckAdapterPair(p);
  return p;
}

int AdapterInputDim(const ParamSet &p, const std::string &prefix) {
  return p.at(prefix + ".fc1.weight").rows();
}

int AdapterOutputDim(const ParamSet &p, const std::string &prefix) {
  return p.at(prefix + ".fc2.weight").cols();
}

void CheckAdapterPair(const ParamSet &p) {
  const int s = AdapterOutputDim(p, kSpeechAdapter);
  const int t = AdapterOutputDim(p, kTextAdapter);
  AVTSE_REQUIRE(s == t, "speech adapter projects to " + std::to_string(s) +
                            " dims but text adapter to " + std::to_string(t));
}

ag::Var AdapterForward(const BoundParams &p, const std::string &prefix,
                       ag::Var vec) {
  ag::Var w1 = p[prefix + ".fc1.weight"];
  AVTSE_REQUIRE(vec.cols() == w1.rows(),
                "adapter " + prefix + " expects dim " +
                    std::to_string(w1.rows()) + ", got " +
                    std::to_string(vec.cols()));
  ag::Var h = ag::Tanh(ag::Linear(vec, w1, p[prefix + ".fc1.bias"]));
  return ag::Linear(h, p[prefix + ".fc2.weight"], p[prefix + ".fc2.bias"]);
}

std::vector<double> AdapterForward(const ParamSet &p, const std::string &prefix,
                                   std::span<const double> vec) {
  ag::Graph g;
  BoundParams bound(g, p, false);
  ag::Var out = AdapterForward(bound, prefix, g.Constant(Matrix::RowVector(vec)));
  return {out.value().values().begin(), out.value().values().end()};
}

}  // namespace avtse
