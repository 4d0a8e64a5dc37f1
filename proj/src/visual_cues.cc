// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/visual_cues.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "avtse/error.h"
#include "json.hpp"

namespace avtse {

using nlohmann::json;

std::string ToString(ImpairmentKind kind) {
  switch (kind) {
    case ImpairmentKind::kFullMissing: return "full_missing";
    case ImpairmentKind::kPartialOcclusion: return "partial_occlusion";
    case ImpairmentKind::kLowResolution: return "low_resolution";
  }
  return "unknown";
}

std::string ToString(LowResMode mode) {
  return mode == LowResMode::kBlur ? "blur" : "noise";
}

ImpairmentKind ParseImpairmentKind(const std::string &s) {
  if (s == "full_missing") return ImpairmentKind::kFullMissing;
  if (s == "partial_occlusion") return ImpairmentKind::kPartialOcclusion;
  if (s == "low_resolution") return ImpairmentKind::kLowResolution;
  throw InvalidArgument("unknown impairment kind '" + s +
                        "' (expected full_missing, partial_occlusion or "
                        "low_resolution)");
}

LowResMode ParseLowResMode(const std::string &s) {
  if (s == "blur") return LowResMode::kBlur;
  if (s == "noise") return LowResMode::kNoise;
  throw InvalidArgument("unknown low resolution mode '" + s + "'");
}

VisualStream DeriveSyntheticVisual(const AudioClip &target, int dim, double fps,
                                   uint64_t seed) {
  AVTSE_REQUIRE(dim >= 1, "visual dim must be >= 1");
  AVTSE_REQUIRE(fps > 0.0, "fps must be positive");
  const int frames =
      static_cast<int>(std::llround(target.duration() * fps));
  AVTSE_REQUIRE(frames >= 1, "audio shorter than one visual frame");
  const double hop = target.sample_rate() / fps;
  const auto &x = target.samples();

  std::vector<double> energy(frames);
  for (int t = 0; t < frames; ++t) {
    const auto begin = static_cast<size_t>(std::llround(t * hop));
    const auto end = static_cast<size_t>(std::llround((t + 1) * hop));
    double s = 0.0;
    for (size_t i = begin; i < end; ++i) s += i < x.size() ? x[i] * x[i] : 0.0;
    const double mean = end > begin ? s / static_cast<double>(end - begin) : 0.0;
    energy[t] = (std::log10(mean + 1e-8) + 4.0) / 4.0;
  }

  Rng rng(seed);
  Matrix w(2, dim), b(1, dim);
  for (double &v : w.values()) v = Gaussian(rng);
  for (double &v : b.values()) v = Gaussian(rng, 0.0, 0.5);

  VisualStream out;
  out.fps = fps;
  out.frames = Matrix(frames, dim);
  for (int t = 0; t < frames; ++t) {
    const double level = energy[t];
    const double delta = t > 0 ? energy[t] - energy[t - 1] : 0.0;
    for (int d = 0; d < dim; ++d)
      out.frames(t, d) = std::tanh(w(0, d) * level + w(1, d) * delta + b[d]);
  }
  return out;
}

std::pair<int, int> AffectedRange(int num_frames, const ImpairmentSpec &spec) {
  AVTSE_REQUIRE(spec.ratio >= 0.0 && spec.ratio <= 1.0,
                "impairment ratio must lie in [0, 1], got " +
                    std::to_string(spec.ratio));
  const int count =
      static_cast<int>(std::llround(spec.ratio * static_cast<double>(num_frames)));
  Rng rng(DeriveSeed(spec.seed, 0));
  const int start =
      std::uniform_int_distribution<int>(0, num_frames - count)(rng);
  return {start, count};
}

VisualStream ApplyImpairment(const VisualStream &v, const ImpairmentSpec &spec) {
  AVTSE_REQUIRE(v.num_frames() >= 1 && v.dim() >= 1, "empty visual stream");
  const auto [start, count] = AffectedRange(v.num_frames(), spec);
  VisualStream out = v;
  out.impairment = spec;
  if (count == 0) return out;
  const Matrix &in = v.frames;
  const int dim = v.dim();
  const int total = v.num_frames();

  switch (spec.kind) {
    case ImpairmentKind::kFullMissing:
      for (int t = start; t < start + count; ++t)
        std::fill(out.frames.row(t).begin(), out.frames.row(t).end(), 0.0);
      break;
    case ImpairmentKind::kPartialOcclusion: {
      Rng rng(DeriveSeed(spec.seed, 1));
      std::vector<int> coords(dim);
      std::iota(coords.begin(), coords.end(), 0);
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<size_t>((dim + 1) / 2));
      std::vector<double> obstacle(coords.size());
      for (double &o : obstacle) o = Gaussian(rng);
      for (int t = start; t < start + count; ++t)
        for (size_t c = 0; c < coords.size(); ++c)
          out.frames(t, coords[c]) = obstacle[c];
      break;
    }
    case ImpairmentKind::kLowResolution:
      if (spec.low_res_mode == LowResMode::kBlur) {
        const int half = kBlurWindow / 2;
        for (int t = start; t < start + count; ++t) {
          const int lo = std::max(0, t - half);
          const int hi = std::min(total - 1, t + half);
          for (int d = 0; d < dim; ++d) {
            double s = 0.0;
            for (int u = lo; u <= hi; ++u) s += in(u, d);
            out.frames(t, d) = s / (hi - lo + 1);
          }
        }
      } else {
        std::vector<double> stddev(dim, 0.0);
        for (int d = 0; d < dim; ++d) {
          double mean = 0.0;
          for (int t = 0; t < total; ++t) mean += in(t, d);
          mean /= total;
          double var = 0.0;
          for (int t = 0; t < total; ++t)
            var += (in(t, d) - mean) * (in(t, d) - mean);
          stddev[d] = std::sqrt(var / total);
        }
        Rng rng(DeriveSeed(spec.seed, 2));
        for (int t = start; t < start + count; ++t)
          for (int d = 0; d < dim; ++d)
            if (stddev[d] > 0.0)
              out.frames(t, d) += Gaussian(rng, 0.0, kNoiseStdScale * stddev[d]);
      }
      break;
  }
  return out;
}

double SampleImpairmentRatio(Rng &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

namespace {

json SpecToJson(const ImpairmentSpec &s) {
  return {{"kind", ToString(s.kind)},
          {"ratio", s.ratio},
          {"seed", s.seed},
          {"low_res_mode", ToString(s.low_res_mode)}};
}

}  // namespace

void WriteVisualStream(const std::filesystem::path &base,
                       const VisualStream &v) {
  static_assert(std::endian::native == std::endian::little,
                "float32 stream writer assumes a little-endian host");
  std::filesystem::path bin = base, side = base;
  bin += ".f32";
  side += ".json";
  std::ofstream os(bin, std::ios::binary);
  if (!os) throw DataError("cannot write " + bin.string());
  std::vector<float> buf(v.frames.size());
  for (size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<float>(v.frames[i]);
  os.write(reinterpret_cast<const char *>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  json meta = {{"T_v", v.num_frames()}, {"D_v", v.dim()}, {"fps", v.fps}};
  meta["impairment"] = v.impairment ? SpecToJson(*v.impairment) : json(nullptr);
  std::ofstream ms(side, std::ios::binary);
  if (!ms) throw DataError("cannot write " + side.string());
  ms << meta.dump(2) << '\n';
}

VisualStream ReadVisualStream(const std::filesystem::path &base) {
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
  const int t_v = meta.at("T_v").get<int>();
  const int d_v = meta.at("D_v").get<int>();
  VisualStream v;
  v.fps = meta.at("fps").get<double>();
  if (meta.contains("impairment") && !meta["impairment"].is_null()) {
    const json &im = meta["impairment"];
    v.impairment = ImpairmentSpec{ParseImpairmentKind(im.at("kind").get<std::string>()),
                                  im.at("ratio").get<double>(),
                                  im.at("seed").get<uint64_t>(),
                                  ParseLowResMode(im.value("low_res_mode", "blur"))};
  }
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw DataError("cannot open " + bin.string());
  std::vector<float> buf(static_cast<size_t>(t_v) * d_v);
  is.read(reinterpret_cast<char *>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw DataError(bin.string() + ": truncated visual stream");
  v.frames = Matrix(t_v, d_v);
  for (size_t i = 0; i < buf.size(); ++i) v.frames[i] = buf[i];
  return v;
}

}  // namespace avtse
