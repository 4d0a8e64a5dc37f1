// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Knowledge sources for the linguistic constraint: frozen speech encoders
// (frame features), text encoders (pooled sentence vectors), k-means
// tokenization of speech features and the trainable adapters that map speech
// and text embeddings into a shared space.
//
// Real pretrained backends are plugins resolved through a registry; the
// built-in synthetic sources are deterministic, dependency free and
// differentiable on the speech side.

#ifndef AVTSE_KNOWLEDGE_H_
#define AVTSE_KNOWLEDGE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "avtse/audio.h"
#include "avtse/autograd.h"
#include "avtse/params.h"
#include "avtse/tensor.h"

namespace avtse {

enum class SourceKind { kPslm, kPlm, kSynthetic };

std::string ToString(SourceKind kind);
SourceKind ParseSourceKind(const std::string &s);

struct KnowledgeSourceSpec {
  SourceKind kind = SourceKind::kSynthetic;
  // e.g. HuBERT-L-L24, WavLM-L-L24, WavLM-B-L12, RoBERTa-B-L12
  std::string backend_id = "synthetic";
  int layer_tap = 0;
  int feature_dim = 64;
  double frame_rate = 50.0;  // speech side only
  uint64_t seed = 0;

  void Validate() const;
  bool operator==(const KnowledgeSourceSpec &) const = default;
};

struct FeatureSequence {
  Matrix frames;  // T_z x D_z
  double frame_rate = 50.0;
};

struct TokenSequence {
  std::vector<int> tokens;
  int num_classes = 0;
};

struct Codebook {
  Matrix centroids;  // K x D_z
  int size() const { return centroids.rows(); }
  int dim() const { return centroids.cols(); }
};

// Frozen frame-level speech encoder.
class SpeechKnowledgeSource {
 public:
  virtual ~SpeechKnowledgeSource() = default;

  // Differentiable with respect to `wave` (1 x L).
  virtual ag::Var Features(ag::Graph &g, ag::Var wave, int sample_rate) const = 0;
  virtual int feature_dim() const = 0;
  virtual double frame_rate() const = 0;
  // Digest of the frozen weights, for before/after comparisons.
  virtual uint64_t Fingerprint() const = 0;

  FeatureSequence Features(const AudioClip &wave) const;
};

// Frozen text encoder: token features at the configured layer.
class TextKnowledgeSource {
 public:
  virtual ~TextKnowledgeSource() = default;

  virtual Matrix TokenFeatures(const std::string &transcript) const = 0;
  virtual int dim() const = 0;
  virtual uint64_t Fingerprint() const = 0;

  // Mean over the token axis.
  std::vector<double> Embedding(const std::string &transcript) const;
};

// Strided framing (window = hop = sample_rate / frame_rate), a seeded fixed
// linear map to feature_dim, then tanh.
class SyntheticSpeechSource : public SpeechKnowledgeSource {
 public:
  explicit SyntheticSpeechSource(const KnowledgeSourceSpec &spec,
                                 int sample_rate = kDefaultSampleRate);

  ag::Var Features(ag::Graph &g, ag::Var wave, int sample_rate) const override;
  using SpeechKnowledgeSource::Features;
  int feature_dim() const override { return projection_.cols(); }
  double frame_rate() const override { return frame_rate_; }
  uint64_t Fingerprint() const override;
  int window() const { return window_; }

 private:
  int sample_rate_;
  int window_;
  double frame_rate_;
  Matrix projection_;  // window x D
  Matrix bias_;        // 1 x D
};

// Each whitespace token hashes (with the spec seed) to a fixed Gaussian
// vector; the sequence of those vectors is the token feature matrix.
class SyntheticTextSource : public TextKnowledgeSource {
 public:
  explicit SyntheticTextSource(const KnowledgeSourceSpec &spec);

  Matrix TokenFeatures(const std::string &transcript) const override;
  int dim() const override { return dim_; }
  uint64_t Fingerprint() const override;

 private:
  int dim_;
  uint64_t seed_;
};

// Maps backend ids to local model paths and plugin factories. Paths come from
// a JSON object {backend_id: path} named by $AVTSE_BACKEND_REGISTRY.
class BackendRegistry {
 public:
  using SpeechFactory = std::function<std::unique_ptr<SpeechKnowledgeSource>(
      const std::filesystem::path &, const KnowledgeSourceSpec &)>;
  using TextFactory = std::function<std::unique_ptr<TextKnowledgeSource>(
      const std::filesystem::path &, const KnowledgeSourceSpec &)>;

  static BackendRegistry &Global();

  void RegisterSpeech(const std::string &backend_id, SpeechFactory f);
  void RegisterText(const std::string &backend_id, TextFactory f);
  // Path configured for `backend_id`, or empty.
  std::filesystem::path ModelPath(const std::string &backend_id) const;

  std::unique_ptr<SpeechKnowledgeSource> MakeSpeech(
      const KnowledgeSourceSpec &spec) const;
  std::unique_ptr<TextKnowledgeSource> MakeText(
      const KnowledgeSourceSpec &spec) const;

 private:
  std::map<std::string, SpeechFactory> speech_;
  std::map<std::string, TextFactory> text_;
};

// Throws BackendMissing for non-synthetic specs without a configured backend.
std::unique_ptr<SpeechKnowledgeSource> MakeSpeechSource(
    const KnowledgeSourceSpec &spec);
std::unique_ptr<TextKnowledgeSource> MakeTextSource(
    const KnowledgeSourceSpec &spec);

FeatureSequence PslmFeatures(const AudioClip &wave,
                             const KnowledgeSourceSpec &spec);
std::vector<double> PlmEmbedding(const std::string &transcript,
                                 const KnowledgeSourceSpec &spec);

// ---- discrete units ----

struct CodebookFit {
  Codebook codebook;
  // Within-cluster squared distance after each assignment step.
  std::vector<double> objective;
  int iterations = 0;
};

// Lloyd's k-means with seeded k-means++ seeding. Stops after `max_iters`
// assignment steps or when no assignment changes. Empty clusters keep their
// previous centroid.
CodebookFit FitCodebook(std::span<const FeatureSequence> features, int k,
                        uint64_t seed, int max_iters);

// Nearest centroid per frame, ties to the lowest index.
TokenSequence Tokenize(const FeatureSequence &features, const Codebook &cb);

// logits[t, k] = -||frame_t - centroid_k||^2 / temperature
Matrix TokenLogits(const FeatureSequence &features, const Codebook &cb,
                   double temperature);

void WriteCodebook(const std::filesystem::path &base, const Codebook &cb,
                   const KnowledgeSourceSpec &source, uint64_t seed);
Codebook ReadCodebook(const std::filesystem::path &base);

// ---- adapters ----

constexpr int kAdapterWidth = 256;
inline const std::string kSpeechAdapter = "adapter.speech";
inline const std::string kTextAdapter = "adapter.text";

// Two affine layers with tanh between: <prefix>.fc1.{weight,bias},
// <prefix>.fc2.{weight,bias}.
ParamSet InitAdapter(const std::string &prefix, int in_dim, int hidden,
                     int out_dim, uint64_t seed);
// Speech- and text-side adapters in one set; both project to `proj_dim`.
ParamSet InitAdapterPair(int speech_dim, int text_dim, uint64_t seed,
                         int hidden = kAdapterWidth,
                         int proj_dim = kAdapterWidth);
int AdapterInputDim(const ParamSet &p, const std::string &prefix);
int AdapterOutputDim(const ParamSet &p, const std::string &prefix);
// Throws unless both adapters exist and share an output dimension.
void CheckAdapterPair(const ParamSet &p);

ag::Var AdapterForward(const BoundParams &p, const std::string &prefix,
                       ag::Var vec);
std::vector<double> AdapterForward(const ParamSet &p, const std::string &prefix,
                                   std::span<const double> vec);

}  // namespace avtse

#endif  // AVTSE_KNOWLEDGE_H_
