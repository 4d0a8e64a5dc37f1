// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "avtse/error.h"
#include "avtse/losses.h"
#include "json.hpp"

namespace avtse {

namespace {

void RequirePaired(const AudioClip &est, const AudioClip &ref, const char *op) {
  AVTSE_REQUIRE(est.size() == ref.size(),
                std::string(op) + ": length mismatch " +
                    std::to_string(est.size()) + " vs " +
                    std::to_string(ref.size()));
  AVTSE_REQUIRE(est.sample_rate() == ref.sample_rate(),
                std::string(op) + ": sample rate mismatch");
}

}  // namespace

double SiSdr(const AudioClip &est, const AudioClip &ref) {
  RequirePaired(est, ref, "si_sdr");
  return SiSdrDb(est.samples(), ref.samples());
}

double SiSdri(const AudioClip &est, const AudioClip &ref,
              const AudioClip &mixture) {
  return SiSdr(est, ref) - SiSdr(mixture, ref);
}

double Sdr(const AudioClip &est, const AudioClip &ref) {
  RequirePaired(est, ref, "sdr");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double r = ref.samples()[i];
    const double d = r - est.samples()[i];
    num += r * r;
    den += d * d;
  }
  AVTSE_REQUIRE(num > 0.0, "sdr: reference is all zero");
  const double delta = kSiSdrEps * num;
  return 10.0 * std::log10((num + delta) / (den + delta));
}

BertScore SpeechBertScoreParts(const Matrix &est_frames,
                               const Matrix &ref_frames) {
  AVTSE_REQUIRE(est_frames.cols() == ref_frames.cols(),
                "speech_bert_score: feature dims differ");
  AVTSE_REQUIRE(est_frames.rows() > 0 && ref_frames.rows() > 0,
                "speech_bert_score: empty feature sequence");
  auto unit_rows = [](const Matrix &m) {
    Matrix out = m;
    for (int t = 0; t < out.rows(); ++t) {
      auto r = out.row(t);
      double n = 0.0;
      for (double v : r) n += v * v;
      n = std::sqrt(n);
      for (double &v : r) v = n > 0.0 ? v / n : 0.0;
    }
    return out;
  };
  const Matrix sim = MatMulNT(unit_rows(est_frames), unit_rows(ref_frames));
  BertScore s;
  for (int i = 0; i < sim.rows(); ++i) {
    auto r = sim.row(i);
    s.precision += *std::max_element(r.begin(), r.end());
  }
  s.precision /= sim.rows();
  for (int j = 0; j < sim.cols(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < sim.rows(); ++i) best = std::max(best, sim(i, j));
    s.recall += best;
  }
  s.recall /= sim.cols();
  // The harmonic mean is only meaningful for positive P and R; otherwise the
  // weaker side is reported, which keeps the score inside [-1, 1].
  if (s.precision > 0.0 && s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  else
    s.f1 = std::min(s.precision, s.recall);
  return s;
}

double SpeechBertScore(const AudioClip &est, const AudioClip &ref,
                       const SpeechKnowledgeSource &source) {
  RequirePaired(est, ref, "speech_bert_score");
  return SpeechBertScoreParts(source.Features(est).frames,
                              source.Features(ref).frames)
      .f1;
}

double SpeechBertScore(const AudioClip &est, const AudioClip &ref,
                       const KnowledgeSourceSpec &spec) {
  return SpeechBertScore(est, ref, *MakeSpeechSource(spec));
}

MetricsReport ComputeMetrics(const AudioClip &est, const AudioClip &ref,
                             const AudioClip &mixture,
                             const SpeechKnowledgeSource &source) {
  MetricsReport m;
  m.si_sdr = SiSdr(est, ref);
  m.si_sdri = m.si_sdr - SiSdr(mixture, ref);
  m.sdr = Sdr(est, ref);
  m.stoi = Stoi(est, ref);
  m.speech_bert_score = SpeechBertScore(est, ref, source);
  return m;
}

MetricsReport MeanReport(std::span<const SampleMetrics> samples) {
  AVTSE_REQUIRE(!samples.empty(), "no samples to aggregate");
  MetricsReport mean;
  for (const auto &s : samples) {
    mean.si_sdr += s.metrics.si_sdr;
    mean.si_sdri += s.metrics.si_sdri;
    mean.sdr += s.metrics.sdr;
    mean.stoi += s.metrics.stoi;
    mean.speech_bert_score += s.metrics.speech_bert_score;
  }
  const double n = static_cast<double>(samples.size());
  mean.si_sdr /= n;
  mean.si_sdri /= n;
  mean.sdr /= n;
  mean.stoi /= n;
  mean.speech_bert_score /= n;
  return mean;
}

namespace {

nlohmann::ordered_json ToJson(const MetricsReport &m) {
  return {{kReportColumns[0], m.si_sdr},
          {kReportColumns[1], m.si_sdri},
          {kReportColumns[2], m.sdr},
          {kReportColumns[3], m.stoi},
          {kReportColumns[4], m.speech_bert_score}};
}

void WriteCsvRow(std::ostream &os, const std::string &id,
                 const MetricsReport &m) {
  os << id << ',' << m.si_sdr << ',' << m.si_sdri << ',' << m.sdr << ','
     << m.stoi << ',' << m.speech_bert_score << '\n';
}

}  // namespace

void WriteReport(const std::filesystem::path &dir,
                 std::span<const SampleMetrics> samples) {
  const MetricsReport mean = MeanReport(samples);
  std::filesystem::create_directories(dir);

  nlohmann::ordered_json j;
  j["num_samples"] = samples.size();
  j["mean"] = ToJson(mean);
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto &s : samples) {
    auto row = ToJson(s.metrics);
    row["id"] = s.id;
    j["samples"].push_back(std::move(row));
  }
  std::ofstream js(dir / "report.json");
  if (!js) throw DataError("cannot write " + (dir / "report.json").string());
  js << j.dump(2) << '\n';

  std::ofstream cs(dir / "report.csv");
  if (!cs) throw DataError("cannot write " + (dir / "report.csv").string());
  cs << std::setprecision(10) << "id";
  for (const auto &c : kReportColumns) cs << ',' << c;
  cs << '\n';
  for (const auto &s : samples) WriteCsvRow(cs, s.id, s.metrics);
  WriteCsvRow(cs, "mean", mean);
}

}  // namespace avtse
