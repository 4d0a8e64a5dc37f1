// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AVTSE_AUDIO_H_
#define AVTSE_AUDIO_H_

#include <filesystem>
#include <span>
#include <vector>

#include "avtse/tensor.h"

namespace avtse {

constexpr int kDefaultSampleRate = 16000;

// Mono waveform. Samples are nominally in [-1, 1]; values outside that range
// are allowed in memory and saturated only when written as PCM16.
class AudioClip {
 public:
  AudioClip() = default;
  AudioClip(std::vector<double> samples, int sample_rate = kDefaultSampleRate);

  static AudioClip Zeros(size_t length, int sample_rate = kDefaultSampleRate);

  const std::vector<double> &samples() const { return samples_; }
  std::vector<double> &mutable_samples() { return samples_; }
  int sample_rate() const { return sample_rate_; }
  size_t size() const { return samples_.size(); }
  double duration() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  // Mean squared amplitude over the whole clip.
  double Power() const;
  // 1 x L view for the autograd graph.
  Matrix AsRow() const;

  bool operator==(const AudioClip &o) const = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = kDefaultSampleRate;
};

AudioClip FromRow(const Matrix &row, int sample_rate);

// 16-bit PCM mono RIFF/WAVE.
void WriteWav(const std::filesystem::path &path, const AudioClip &clip);
AudioClip ReadWav(const std::filesystem::path &path);

}  // namespace avtse

#endif  // AVTSE_AUDIO_H_
