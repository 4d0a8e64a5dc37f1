// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/dataset_sim.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "avtse/error.h"
#include "avtse/rng.h"
#include "json.hpp"

namespace avtse {

using nlohmann::json;

namespace {
constexpr double kClipPeak = 0.9;
}  // namespace

MixResult MixAtSnr(const AudioClip &target, const AudioClip &interferer,
                   double snr_db) {
  AVTSE_REQUIRE(target.size() == interferer.size(),
                "MixAtSnr: length mismatch (" + std::to_string(target.size()) +
                    " vs " + std::to_string(interferer.size()) + ")");
  AVTSE_REQUIRE(target.sample_rate() == interferer.sample_rate(),
                "MixAtSnr: sample rate mismatch");
  AVTSE_REQUIRE(std::isfinite(snr_db), "MixAtSnr: snr_db must be finite");
  const double pt = target.Power();
  const double pi = interferer.Power();
  AVTSE_REQUIRE(pt > 0.0, "MixAtSnr: target has zero power");
  AVTSE_REQUIRE(pi > 0.0, "MixAtSnr: interferer has zero power");
  const double gain = std::sqrt(pt / (pi * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> mix(target.size());
  for (size_t i = 0; i < mix.size(); ++i)
    mix[i] = target.samples()[i] + gain * interferer.samples()[i];
  return {AudioClip(std::move(mix), target.sample_rate()), gain};
}

double MeasureSnrDb(const AudioClip &target, const AudioClip &interferer) {
  return 10.0 * std::log10(target.Power() / interferer.Power());
}

AudioClip ClipOrPad(const AudioClip &clip, double duration_s, CropMode mode,
                    uint64_t seed) {
  AVTSE_REQUIRE(duration_s > 0.0, "duration must be positive");
  const auto out_len =
      static_cast<size_t>(std::llround(duration_s * clip.sample_rate()));
  AVTSE_REQUIRE(out_len >= 1, "duration shorter than one sample");
  const auto &in = clip.samples();
  std::vector<double> out(out_len, 0.0);
  if (in.size() <= out_len) {
    std::copy(in.begin(), in.end(), out.begin());
  } else {
    size_t offset = 0;
    if (mode == CropMode::kTrainRandomCrop) {
      Rng rng(seed);
      offset = std::uniform_int_distribution<size_t>(0, in.size() - out_len)(rng);
    }
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), out_len,
                out.begin());
  }
  return AudioClip(std::move(out), clip.sample_rate());
}

namespace {

struct LanguageShare {
  const char *tag;
  double share;
};

// Training-set language mix; the remainder is tagged "other".
constexpr std::array<LanguageShare, 7> kLanguageMix = {{{"en", 0.76},
                                                        {"de", 0.077},
                                                        {"fr", 0.064},
                                                        {"es", 0.014},
                                                        {"nl", 0.012},
                                                        {"it", 0.005},
                                                        {"pt", 0.0014}}};

std::string DrawLanguage(Rng &rng) {
  double u = Uniform01(rng);
  for (const auto &l : kLanguageMix) {
    if (u < l.share) return l.tag;
    u -= l.share;
  }
  return "other";
}

const std::vector<std::string> &Vocabulary(const std::string &lang) {
  static const std::map<std::string, std::vector<std::string>> kVocab = {
      {"en", {"the", "cat", "sat", "on", "a", "warm", "mat", "today", "we",
              "will", "meet", "near", "old", "bridge", "river", "light"}},
      {"de", {"der", "hund", "lief", "schnell", "nach", "hause", "heute",
              "wir", "sehen", "uns", "morgen", "wieder"}},
      {"fr", {"le", "chat", "dort", "sur", "la", "table", "nous", "allons",
              "au", "marche", "demain", "matin"}},
      {"es", {"el", "perro", "corre", "por", "la", "playa", "hoy", "vamos",
              "a", "comer", "juntos", "tarde"}},
      {"nl", {"de", "fiets", "staat", "bij", "het", "huis", "wij", "gaan",
              "naar", "zee"}},
      {"it", {"il", "gatto", "dorme", "sul", "divano", "oggi", "andiamo", "al",
              "mare", "insieme"}},
      {"pt", {"o", "menino", "corre", "na", "rua", "hoje", "vamos", "para",
              "casa", "cedo"}},
      {"other", {"ka", "lo", "mira", "sen", "tavu", "rin", "osa", "pel"}}};
  auto it = kVocab.find(lang);
  return it == kVocab.end() ? kVocab.at("other") : it->second;
}

struct Speaker {
  std::string id;
  std::string language;
  double f0 = 120.0;
  double formant_scale = 1.0;
  double loudness = 0.1;
};

// Vowel formant targets (Hz), adult average.
constexpr std::array<std::array<double, 3>, 5> kVowels = {{{730, 1090, 2440},
                                                           {270, 2290, 3010},
                                                           {300, 870, 2240},
                                                           {530, 1840, 2480},
                                                           {570, 840, 2410}}};

std::vector<double> SynthesizeUtterance(const Speaker &spk, size_t length,
                                        int sample_rate, Rng &rng,
                                        int *num_syllables) {
  std::vector<double> out(length, 0.0);
  const double sr = sample_rate;
  const double nyquist_guard = 0.45 * sr;
  size_t pos = static_cast<size_t>(0.02 * sr * Uniform01(rng));
  int syllables = 0;
  double phase = 0.0;
  double hp_state = 0.0, hp_prev = 0.0;
  while (pos < length) {
    const auto syl_len =
        static_cast<size_t>((0.12 + 0.18 * Uniform01(rng)) * sr);
    const auto gap = static_cast<size_t>((0.01 + 0.05 * Uniform01(rng)) * sr);
    const bool voiced = Uniform01(rng) < 0.8;
    const auto &vowel = kVowels[std::uniform_int_distribution<int>(
        0, static_cast<int>(kVowels.size()) - 1)(rng)];
    const double level = 0.6 + 0.4 * Uniform01(rng);
    const double vib_rate = 2.0 + 3.0 * Uniform01(rng);
    const double vib_phase = 2.0 * std::numbers::pi * Uniform01(rng);
    const double f0_syl = spk.f0 * (0.9 + 0.2 * Uniform01(rng));
    // Harmonic amplitudes from a three-resonance envelope with 6 dB/oct tilt.
    const int n_harm = std::max(1, static_cast<int>(nyquist_guard / f0_syl));
    std::vector<double> amp(n_harm);
    for (int h = 1; h <= n_harm; ++h) {
      const double f = h * f0_syl;
      double a = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double fc = vowel[k] * spk.formant_scale;
        const double bw = 60.0 + 40.0 * k;
        a += (1.0 / (k + 1)) / (1.0 + ((f - fc) / bw) * ((f - fc) / bw));
      }
      amp[h - 1] = a / h;
    }
    for (size_t i = 0; i < syl_len && pos + i < length; ++i) {
      const double t = static_cast<double>(i) / sr;
      const double env =
          level * 0.5 *
          (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                          static_cast<double>(syl_len)));
      double s = 0.0;
      if (voiced) {
        const double f0 =
            f0_syl * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * vib_rate * t +
                                            vib_phase));
        phase += 2.0 * std::numbers::pi * f0 / sr;
        if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
        for (int h = 1; h <= n_harm; ++h) s += amp[h - 1] * std::sin(h * phase);
        s += 0.02 * Gaussian(rng);
      } else {
        // one-pole high-passed noise for fricatives
        const double w = Gaussian(rng);
        hp_state = 0.9 * (hp_state + w - hp_prev);
        hp_prev = w;
        s = 0.5 * hp_state;
      }
      out[pos + i] += env * s;
    }
    pos += syl_len + gap;
    ++syllables;
  }
  double power = 0.0;
  for (double v : out) power += v * v;
  power /= static_cast<double>(length);
  if (power > 0.0) {
    double g = spk.loudness / std::sqrt(power);
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    // Keep headroom for 16-bit storage.
    g = std::min(g, kClipPeak / peak);
    for (double &v : out) v *= g;
  }
  *num_syllables = syllables;
  return out;
}

}  // namespace

ClipCatalog GenerateSyntheticCatalog(const SyntheticCatalogOptions &opts) {
  AVTSE_REQUIRE(opts.num_speakers >= 1 && opts.clips_per_speaker >= 1,
                "synthetic catalog needs at least one speaker and clip");
  AVTSE_REQUIRE(opts.min_duration_s > 0.0 &&
                    opts.max_duration_s >= opts.min_duration_s,
                "invalid synthetic clip duration range");
  ClipCatalog catalog;
  for (int s = 0; s < opts.num_speakers; ++s) {
    Rng srng(DeriveSeed(opts.seed, static_cast<uint64_t>(s)));
    Speaker spk;
    char name[32];
    std::snprintf(name, sizeof(name), "spk%03d", s);
    spk.id = name;
    spk.language = DrawLanguage(srng);
    spk.f0 = 90.0 + 160.0 * Uniform01(srng);
    spk.formant_scale = 0.85 + 0.3 * Uniform01(srng);
    spk.loudness = 0.05 + 0.1 * Uniform01(srng);
    for (int c = 0; c < opts.clips_per_speaker; ++c) {
      Rng rng(DeriveSeed(DeriveSeed(opts.seed, static_cast<uint64_t>(s)),
                         static_cast<uint64_t>(c) + 1));
      const double dur =
          opts.min_duration_s +
          (opts.max_duration_s - opts.min_duration_s) * Uniform01(rng);
      const auto len = std::max<size_t>(
          1, static_cast<size_t>(std::llround(dur * opts.sample_rate)));
      int syllables = 0;
      auto samples =
          SynthesizeUtterance(spk, len, opts.sample_rate, rng, &syllables);
      const auto &vocab = Vocabulary(spk.language);
      std::string transcript;
      const int words = std::max(1, syllables / 2);
      for (int w = 0; w < words; ++w) {
        if (w) transcript += ' ';
        transcript += vocab[std::uniform_int_distribution<size_t>(
            0, vocab.size() - 1)(rng)];
      }
      char clip_id[48];
      std::snprintf(clip_id, sizeof(clip_id), "%s_u%03d", spk.id.c_str(), c);
      catalog.push_back({clip_id, spk.id, spk.language, transcript,
                         AudioClip(std::move(samples), opts.sample_rate)});
    }
  }
  return catalog;
}

DatasetManifest BuildManifest(const ClipCatalog &catalog, int count,
                              double duration_s,
                              std::pair<double, double> snr_range,
                              uint64_t global_seed) {
  AVTSE_REQUIRE(count >= 1, "manifest count must be at least 1");
  AVTSE_REQUIRE(duration_s > 0.0, "duration must be positive");
  AVTSE_REQUIRE(snr_range.first <= snr_range.second,
                "snr range lower bound exceeds upper bound");
  std::map<std::string, std::vector<size_t>> by_speaker;
  for (size_t i = 0; i < catalog.size(); ++i)
    by_speaker[catalog[i].speaker].push_back(i);
  if (by_speaker.size() < 2)
    throw DataError("catalog needs at least 2 distinct speakers, found " +
                    std::to_string(by_speaker.size()));

  DatasetManifest manifest;
  manifest.global_seed = global_seed;
  manifest.duration_s = duration_s;
  manifest.entries.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const uint64_t entry_seed = DeriveSeed(global_seed, static_cast<uint64_t>(i));
    Rng rng(entry_seed);
    const size_t t_idx =
        std::uniform_int_distribution<size_t>(0, catalog.size() - 1)(rng);
    const CatalogClip &tgt = catalog[t_idx];
    std::vector<size_t> others;
    for (size_t j = 0; j < catalog.size(); ++j)
      if (catalog[j].speaker != tgt.speaker) others.push_back(j);
    const CatalogClip &itf = catalog[others[std::uniform_int_distribution<size_t>(
        0, others.size() - 1)(rng)]];
    const double snr = std::uniform_real_distribution<double>(
        snr_range.first, snr_range.second)(rng);

    ManifestEntry e;
    char id[32];
    std::snprintf(id, sizeof(id), "mix%06d", i);
    e.id = id;
    e.mixture_path = e.id + "_mix.wav";
    e.target_path = e.id + "_tgt.wav";
    e.interferer_path = e.id + "_itf.wav";
    e.snr_db = std::clamp(snr, snr_range.first, snr_range.second);
    e.transcript = tgt.transcript;
    e.language = tgt.language;
    e.visual_ref = e.id + "_vis";
    e.seed = entry_seed;
    e.target_clip = tgt.id;
    e.interferer_clip = itf.id;
    e.target_speaker = tgt.speaker;
    e.interferer_speaker = itf.speaker;
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

MixtureSample Materialize(const ClipCatalog &catalog,
                          const ManifestEntry &entry, double duration_s,
                          CropMode mode) {
  auto find = [&](const std::string &id) -> const CatalogClip & {
    for (const auto &c : catalog)
      if (c.id == id) return c;
    throw DataError("catalog clip '" + id + "' not found");
  };
  const CatalogClip &tgt = find(entry.target_clip);
  const CatalogClip &itf = find(entry.interferer_clip);
  AudioClip target = ClipOrPad(tgt.audio, duration_s, mode, DeriveSeed(entry.seed, 1));
  AudioClip interferer =
      ClipOrPad(itf.audio, duration_s, mode, DeriveSeed(entry.seed, 2));
  MixResult mixed = MixAtSnr(target, interferer, entry.snr_db);
  std::vector<double> scaled = interferer.samples();
  for (double &v : scaled) v *= mixed.gain;
  MixtureSample s{std::move(mixed.mixture),
                  std::move(target),
                  AudioClip(std::move(scaled), interferer.sample_rate()),
                  entry.snr_db,
                  entry.transcript,
                  entry.language,
                  entry.visual_ref,
                  entry.seed};
  return s;
}

namespace {

json EntryToJson(const ManifestEntry &e) {
  json j = {{"id", e.id},
            {"mixture_path", e.mixture_path},
            {"target_path", e.target_path},
            {"interferer_path", e.interferer_path},
            {"snr_db", e.snr_db},
            {"transcript", e.transcript},
            {"language", e.language},
            {"visual_ref", e.visual_ref},
            {"seed", e.seed},
            {"target_clip", e.target_clip},
            {"interferer_clip", e.interferer_clip},
            {"target_speaker", e.target_speaker},
            {"interferer_speaker", e.interferer_speaker}};
  if (e.impairment) {
    j["impairment"] = {{"kind", e.impairment->kind},
                       {"ratio", e.impairment->ratio},
                       {"seed", e.impairment->seed},
                       {"low_res_mode", e.impairment->low_res_mode}};
  }
  return j;
}

ManifestEntry EntryFromJson(const json &j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.mixture_path = j.at("mixture_path").get<std::string>();
  e.target_path = j.at("target_path").get<std::string>();
  e.interferer_path = j.at("interferer_path").get<std::string>();
  e.snr_db = j.at("snr_db").get<double>();
  e.transcript = j.at("transcript").get<std::string>();
  e.language = j.at("language").get<std::string>();
  e.visual_ref = j.at("visual_ref").get<std::string>();
  e.seed = j.at("seed").get<uint64_t>();
  e.target_clip = j.value("target_clip", "");
  e.interferer_clip = j.value("interferer_clip", "");
  e.target_speaker = j.value("target_speaker", "");
  e.interferer_speaker = j.value("interferer_speaker", "");
  if (j.contains("impairment")) {
    const json &im = j.at("impairment");
    e.impairment = ImpairmentRecord{
        im.at("kind").get<std::string>(), im.at("ratio").get<double>(),
        im.at("seed").get<uint64_t>(), im.value("low_res_mode", "blur")};
  }
  return e;
}

std::filesystem::path MetaPath(const std::filesystem::path &path) {
  std::filesystem::path meta = path;
  meta.replace_extension(".meta.json");
  return meta;
}

}  // namespace

std::string SerializeManifestLines(const DatasetManifest &manifest) {
  std::string out;
  for (const auto &e : manifest.entries) {
    out += EntryToJson(e).dump();
    out += '\n';
  }
  return out;
}

void WriteManifest(const std::filesystem::path &path,
                   const DatasetManifest &manifest) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write manifest " + path.string());
    os << SerializeManifestLines(manifest);
  }
  std::ofstream meta(MetaPath(path), std::ios::binary);
  if (!meta) throw DataError("cannot write manifest sidecar for " + path.string());
  meta << json{{"count", manifest.entries.size()},
               {"duration_s", manifest.duration_s},
               {"global_seed", manifest.global_seed}}
              .dump(2)
       << '\n';
}

DatasetManifest ReadManifest(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      manifest.entries.push_back(EntryFromJson(json::parse(line)));
    } catch (const json::exception &ex) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " +
                      ex.what());
    }
  }
  std::ifstream meta(MetaPath(path));
  if (meta) {
    try {
      json m = json::parse(meta);
      manifest.global_seed = m.value("global_seed", uint64_t{0});
      manifest.duration_s = m.value("duration_s", 0.0);
    } catch (const json::exception &ex) {
      throw DataError("bad manifest sidecar: " + std::string(ex.what()));
    }
  }
  return manifest;
}

}  // namespace avtse
