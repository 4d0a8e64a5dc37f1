// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Two-speaker mixture simulation: SNR-controlled summation, fixed-duration
// cropping/padding and reproducible JSON-lines manifests.

#ifndef AVTSE_DATASET_SIM_H_
#define AVTSE_DATASET_SIM_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avtse/audio.h"

namespace avtse {

struct MixResult {
  AudioClip mixture;
  // Factor applied to the interferer before summation.
  double gain = 1.0;
};

// mixture = target + gain * interferer with
// 10 log10(P(target) / P(gain * interferer)) == snr_db.
MixResult MixAtSnr(const AudioClip &target, const AudioClip &interferer,
                   double snr_db);

// 10 log10 of the ratio of mean squared amplitudes.
double MeasureSnrDb(const AudioClip &target, const AudioClip &interferer);

enum class CropMode { kTrainRandomCrop, kEvalHeadCrop };

// Output has round(duration_s * sample_rate) samples. Short inputs are
// zero-padded at the tail. Long inputs are cropped at a seeded uniform offset
// (train) or at offset 0 (eval).
AudioClip ClipOrPad(const AudioClip &clip, double duration_s, CropMode mode,
                    uint64_t seed);

struct CatalogClip {
  std::string id;
  std::string speaker;
  std::string language;
  std::string transcript;
  AudioClip audio;
};
using ClipCatalog = std::vector<CatalogClip>;

struct SyntheticCatalogOptions {
  int num_speakers = 8;
  int clips_per_speaker = 4;
  double min_duration_s = 0.8;
  double max_duration_s = 1.6;
  int sample_rate = kDefaultSampleRate;
  uint64_t seed = 0;
};

// Seeded "speech-like" clips: a glottal pulse train with a speaker-specific
// pitch, shaped by syllable envelopes and formant resonators, with unvoiced
// noise bursts. Language tags follow the training-set language mix.
ClipCatalog GenerateSyntheticCatalog(const SyntheticCatalogOptions &opts);

struct ImpairmentRecord {
  std::string kind;
  double ratio = 0.0;
  uint64_t seed = 0;
  std::string low_res_mode;
  bool operator==(const ImpairmentRecord &) const = default;
};

struct ManifestEntry {
  std::string id;
  std::string mixture_path;
  std::string target_path;
  std::string interferer_path;
  double snr_db = 0.0;
  std::string transcript;
  std::string language;
  std::string visual_ref;
  uint64_t seed = 0;
  // Source bookkeeping (catalog clip ids and their speakers).
  std::string target_clip;
  std::string interferer_clip;
  std::string target_speaker;
  std::string interferer_speaker;
  std::optional<ImpairmentRecord> impairment;

  bool operator==(const ManifestEntry &) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  uint64_t global_seed = 0;
  double duration_s = 0.0;
  bool operator==(const DatasetManifest &) const = default;
};

struct MixtureSample {
  AudioClip mixture;
  AudioClip target;
  // Already scaled, so that mixture == target + interferer.
  AudioClip interferer;
  double snr_db = 0.0;
  std::string transcript;
  std::string language;
  std::string visual_ref;
  uint64_t seed = 0;
};

// Pure function of its arguments. Entry i draws from a stream seeded with
// DeriveSeed(global_seed, i), so entries may be materialized independently.
DatasetManifest BuildManifest(const ClipCatalog &catalog, int count,
                              double duration_s,
                              std::pair<double, double> snr_range,
                              uint64_t global_seed);

MixtureSample Materialize(const ClipCatalog &catalog,
                          const ManifestEntry &entry, double duration_s,
                          CropMode mode);

// JSON-lines: one object per entry. Global fields go to a sidecar written by
// WriteManifest next to the .jsonl file (<name>.meta.json).
std::string SerializeManifestLines(const DatasetManifest &manifest);
void WriteManifest(const std::filesystem::path &path,
                   const DatasetManifest &manifest);
DatasetManifest ReadManifest(const std::filesystem::path &path);

}  // namespace avtse

#endif  // AVTSE_DATASET_SIM_H_
