// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Evaluation metrics: SI-SDR, SI-SDRi, SDR, STOI and SpeechBERTScore, plus
// report aggregation and serialization.

#ifndef AVTSE_METRICS_H_
#define AVTSE_METRICS_H_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avtse/audio.h"
#include "avtse/knowledge.h"

namespace avtse {

double SiSdr(const AudioClip &est, const AudioClip &ref);
// si_sdr(est, ref) - si_sdr(mixture, ref)
double SiSdri(const AudioClip &est, const AudioClip &ref,
              const AudioClip &mixture);

// Plain energy ratio 10 log10(||ref||^2 / ||ref - est||^2); both terms carry
// delta = kSiSdrEps * ||ref||^2, so the cap matches SI-SDR's.
double Sdr(const AudioClip &est, const AudioClip &ref);

// Classic short-time objective intelligibility at 10 kHz.
namespace stoi {
constexpr int kSampleRate = 10000;
constexpr int kFrameLen = 256;
constexpr int kFftSize = 512;
constexpr int kNumBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegmentLen = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;

// Polyphase FIR resampling by up/down with a Kaiser-windowed sinc.
std::vector<double> ResamplePoly(std::span<const double> x, int up, int down);
// One-third octave band matrix, kNumBands x (kFftSize / 2 + 1).
std::vector<std::vector<double>> ThirdOctaveBands();
}  // namespace stoi

// Throws when fewer than one analysis segment of non-silent frames remains.
double Stoi(const AudioClip &est, const AudioClip &ref);

// F1 of greedy cosine matching between feature frames. Precision averages,
// over estimate frames, the best similarity to any reference frame; recall
// does the same from the reference side.
struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
BertScore SpeechBertScoreParts(const Matrix &est_frames,
                               const Matrix &ref_frames);
double SpeechBertScore(const AudioClip &est, const AudioClip &ref,
                       const SpeechKnowledgeSource &source);
double SpeechBertScore(const AudioClip &est, const AudioClip &ref,
                       const KnowledgeSourceSpec &spec);

struct MetricsReport {
  double si_sdr = 0.0;
  double si_sdri = 0.0;
  double sdr = 0.0;
  double stoi = 0.0;
  double speech_bert_score = 0.0;
};

// Column order of report.csv.
inline const std::array<std::string, 5> kReportColumns = {
    "SI-SDR", "SI-SDRi", "SDR", "STOI", "SpeechBERTScore"};

MetricsReport ComputeMetrics(const AudioClip &est, const AudioClip &ref,
                             const AudioClip &mixture,
                             const SpeechKnowledgeSource &source);

struct SampleMetrics {
  std::string id;
  MetricsReport metrics;
};

MetricsReport MeanReport(std::span<const SampleMetrics> samples);

// Writes report.json (per-sample and mean) and report.csv (one row per
// sample, then a "mean" row) into `dir`.
void WriteReport(const std::filesystem::path &dir,
                 std::span<const SampleMetrics> samples);

}  // namespace avtse

#endif  // AVTSE_METRICS_H_
