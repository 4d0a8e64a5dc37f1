// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "avtse/error.h"

namespace avtse {

AudioClip::AudioClip(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  AVTSE_REQUIRE(sample_rate_ > 0, "sample_rate must be positive");
  AVTSE_REQUIRE(!samples_.empty(), "audio clip must contain samples");
  for (double v : samples_)
    AVTSE_REQUIRE(std::isfinite(v), "audio clip contains non-finite sample");
}

AudioClip AudioClip::Zeros(size_t length, int sample_rate) {
  return AudioClip(std::vector<double>(length, 0.0), sample_rate);
}

double AudioClip::Power() const {
  double s = 0.0;
  for (double v : samples_) s += v * v;
  return s / static_cast<double>(samples_.size());
}

Matrix AudioClip::AsRow() const { return Matrix::RowVector(samples_); }

AudioClip FromRow(const Matrix &row, int sample_rate) {
  return AudioClip(std::vector<double>(row.values().begin(), row.values().end()),
                   sample_rate);
}

namespace {

void PutU32(std::ofstream &os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char *>(b), 4);
}

void PutU16(std::ofstream &os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char *>(b), 2);
}

uint32_t GetU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t GetU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void WriteWav(const std::filesystem::path &path, const AudioClip &clip) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  const uint32_t data_bytes = static_cast<uint32_t>(clip.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  PutU32(os, 16);
  PutU16(os, 1);  // PCM
  PutU16(os, 1);  // mono
  PutU32(os, static_cast<uint32_t>(clip.sample_rate()));
  PutU32(os, static_cast<uint32_t>(clip.sample_rate() * 2));
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  std::vector<char> buf(data_bytes);
  for (size_t i = 0; i < clip.size(); ++i) {
    const double v = std::clamp(clip.samples()[i], -1.0, 1.0);
    const auto s = static_cast<int16_t>(std::lround(v * 32767.0));
    const auto u = static_cast<uint16_t>(s);
    buf[2 * i] = static_cast<char>(u & 0xff);
    buf[2 * i + 1] = static_cast<char>(u >> 8);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw DataError("failed writing " + path.string());
}

AudioClip ReadWav(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string &why) {
    return DataError(path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");
  size_t pos = 12;
  int sample_rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const uint32_t size = GetU32(chunk + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) throw fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      const uint16_t format = GetU16(bytes.data() + body);
      const uint16_t channels = GetU16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(GetU32(bytes.data() + body + 4));
      const uint16_t bits = GetU16(bytes.data() + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw fail("only 16-bit PCM mono is supported");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      const size_t n = size / 2;
      if (n == 0) throw fail("empty data chunk");
      std::vector<double> samples(n);
      for (size_t i = 0; i < n; ++i) {
        const auto s = static_cast<int16_t>(GetU16(bytes.data() + body + 2 * i));
        samples[i] = s / 32767.0;
      }
      return AudioClip(std::move(samples), sample_rate);
    }
    pos = body + size + (size & 1);
  }
  throw fail("no data chunk");
}

}  // namespace avtse
