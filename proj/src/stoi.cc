// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Classic STOI: resample to 10 kHz, drop frames more than 40 dB below the
// loudest clean frame, one-third octave band envelopes, 30-frame segment
// correlations after normalization and clipping.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "avtse/error.h"
#include "avtse/metrics.h"

namespace avtse {
namespace stoi {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kKaiserBeta = 5.0;

// Matlab-style hanning(n): the zero end points of a length n + 2 window are
// dropped.
std::vector<double> Hanning(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
  return w;
}

// Low-pass FIR with cutoff `fc` (fraction of Nyquist), unit DC gain.
std::vector<double> KaiserLowPass(int taps, double fc) {
  std::vector<double> h(taps);
  const double m = (taps - 1) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  for (int n = 0; n < taps; ++n) {
    const double t = n - m;
    const double sinc =
        t == 0.0 ? 1.0 : std::sin(M_PI * fc * t) / (M_PI * fc * t);
    const double r = t / m;
    const double win =
        std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
        i0_beta;
    h[n] = fc * sinc * win;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double &v : h) v /= sum;
  return h;
}

// Frames of `len` samples every `hop`, as in the reference toolbox:
// starts in [0, size - len) for the STFT and [0, size - len] for the
// silence detector.
int CountFrames(size_t size, int len, int hop, bool inclusive) {
  if (size < static_cast<size_t>(len)) return 0;
  const size_t span = size - len;
  if (inclusive) return static_cast<int>(span / hop) + 1;
  return span == 0 ? 0 : static_cast<int>((span - 1) / hop) + 1;
}

// Removes frames whose clean-signal energy is more than `kDynRange` below
// the loudest clean frame, then overlap-adds what remains.
void RemoveSilentFrames(std::vector<double> &x, std::vector<double> &y) {
  const int len = kFrameLen, hop = kFrameLen / 2;
  const int n = CountFrames(x.size(), len, hop, true);
  const std::vector<double> w = Hanning(len);
  std::vector<double> energy(n);
  for (int f = 0; f < n; ++f) {
    double e = 0.0;
    for (int i = 0; i < len; ++i) {
      const double v = w[i] * x[f * hop + i];
      e += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double top =
      n > 0 ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<int> keep;
  for (int f = 0; f < n; ++f)
    if (top - kDynRange - energy[f] < 0.0) keep.push_back(f);
  const size_t out_len =
      keep.empty() ? 0 : (keep.size() - 1) * hop + static_cast<size_t>(len);
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (size_t k = 0; k < keep.size(); ++k) {
    const int src = keep[k] * hop;
    const size_t dst = k * hop;
    for (int i = 0; i < len; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  x.swap(xs);
  y.swap(ys);
}

// Band envelopes (bands x frames) of the windowed short-time spectrum.
std::vector<std::vector<double>> BandEnvelopes(
    const std::vector<double> &s, const std::vector<std::vector<double>> &obm) {
  const int hop = kFrameLen / 2;
  const int bins = kFftSize / 2 + 1;
  const int frames = CountFrames(s.size(), kFrameLen, hop, false);
  const std::vector<double> w = Hanning(kFrameLen);

  double *in = fftw_alloc_real(kFftSize);
  fftw_complex *out = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);

  std::vector<std::vector<double>> env(kNumBands, std::vector<double>(frames));
  std::vector<double> power(bins);
  for (int f = 0; f < frames; ++f) {
    std::fill(in, in + kFftSize, 0.0);
    for (int i = 0; i < kFrameLen; ++i) in[i] = w[i] * s[f * hop + i];
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k)
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    for (int b = 0; b < kNumBands; ++b) {
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) acc += obm[b][k] * power[k];
      env[b][f] = std::sqrt(acc);
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  return env;
}

}  // namespace

std::vector<double> ResamplePoly(std::span<const double> x, int up, int down) {
  AVTSE_REQUIRE(up > 0 && down > 0, "resample factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  const int max_rate = std::max(up, down);
  const int half = 10 * max_rate;
  std::vector<double> h = KaiserLowPass(2 * half + 1, 1.0 / max_rate);
  for (double &v : h) v *= up;

  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(n_out, 0.0);
  const long taps = static_cast<long>(h.size());
  // y[m] = sum_j h[j] * xu[m * down + half - j], xu the zero-stuffed input.
  for (long m = 0; m < n_out; ++m) {
    const long center = m * down + half;
    // Only j with (center - j) divisible by up and inside the input hit.
    long j = center % up;
    double acc = 0.0;
    for (; j < taps; j += up) {
      const long pos = center - j;
      if (pos < 0) break;
      const long src = pos / up;
      if (src < n_in) acc += h[j] * x[src];
    }
    y[m] = acc;
  }
  return y;
}

std::vector<std::vector<double>> ThirdOctaveBands() {
  const int bins = kFftSize / 2 + 1;
  std::vector<double> f(bins);
  for (int k = 0; k < bins; ++k)
    f[k] = static_cast<double>(kSampleRate) * k / kFftSize;
  auto nearest = [&](double target) {
    int best = 0;
    for (int k = 1; k < bins; ++k)
      if ((f[k] - target) * (f[k] - target) <
          (f[best] - target) * (f[best] - target))
        best = k;
    return best;
  };
  std::vector<std::vector<double>> obm(kNumBands, std::vector<double>(bins));
  for (int b = 0; b < kNumBands; ++b) {
    const int lo = nearest(kMinFreq * std::pow(2.0, (2.0 * b - 1.0) / 6.0));
    const int hi = nearest(kMinFreq * std::pow(2.0, (2.0 * b + 1.0) / 6.0));
    for (int k = lo; k < hi; ++k) obm[b][k] = 1.0;
  }
  return obm;
}

}  // namespace stoi

double Stoi(const AudioClip &est, const AudioClip &ref) {
  using namespace stoi;
  AVTSE_REQUIRE(est.size() == ref.size(), "stoi: length mismatch");
  AVTSE_REQUIRE(est.sample_rate() == ref.sample_rate(),
                "stoi: sample rate mismatch");
  std::vector<double> x = ResamplePoly(ref.samples(), kSampleRate, ref.sample_rate());
  std::vector<double> y = ResamplePoly(est.samples(), kSampleRate, est.sample_rate());
  RemoveSilentFrames(x, y);

  const auto obm = ThirdOctaveBands();
  const auto xe = BandEnvelopes(x, obm);
  const auto ye = BandEnvelopes(y, obm);
  const int frames = xe.empty() ? 0 : static_cast<int>(xe[0].size());
  if (frames < kSegmentLen)
    throw InvalidArgument("stoi: clip too short, " + std::to_string(frames) +
                          " non-silent frames < " +
                          std::to_string(kSegmentLen));

  const double clip = std::pow(10.0, -kBeta / 20.0);
  const int segments = frames - kSegmentLen + 1;
  double total = 0.0;
  std::vector<double> xs(kSegmentLen), ys(kSegmentLen);
  for (int m = 0; m < segments; ++m) {
    for (int b = 0; b < kNumBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (int t = 0; t < kSegmentLen; ++t) {
        xs[t] = xe[b][m + t];
        ys[t] = ye[b][m + t];
        nx += xs[t] * xs[t];
        ny += ys[t] * ys[t];
      }
      const double gain = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int t = 0; t < kSegmentLen; ++t) {
        ys[t] = std::min(ys[t] * gain, xs[t] * (1.0 + clip));
        mx += xs[t];
        my += ys[t];
      }
      mx /= kSegmentLen;
      my /= kSegmentLen;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (int t = 0; t < kSegmentLen; ++t) {
        const double a = xs[t] - mx, c = ys[t] - my;
        sxy += a * c;
        sxx += a * a;
        syy += c * c;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
    }
  }
  return total / (static_cast<double>(kNumBands) * segments);
}

}  // namespace avtse
