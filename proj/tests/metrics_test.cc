// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/metrics.h"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "avtse/error.h"
#include "json.hpp"
#include "test_util.h"

namespace avtse {
namespace {

using testing::RandomMatrix;
using testing::RandomVector;
using testing::SpeechlikeClip;
using testing::TempDir;

constexpr double kPi = std::numbers::pi;

AudioClip AddNoise(const AudioClip &x, double snr_db, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> n = RandomVector(rng, x.size());
  double pn = 0.0;
  for (double v : n) pn += v * v / n.size();
  const double g = std::sqrt(x.Power() / (pn * std::pow(10.0, snr_db / 10)));
  std::vector<double> y = x.samples();
  for (size_t i = 0; i < y.size(); ++i) y[i] += g * n[i];
  return AudioClip(y, x.sample_rate());
}

// ---- SI-SDR family ----

TEST(MetricsTest, SiSdrMatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> e = RandomVector(rng, 64), r = RandomVector(rng, 64);
    long double dot = 0, rr = 0, ee = 0, s2 = 0, e2 = 0;
    for (int i = 0; i < 64; ++i) {
      dot += (long double)e[i] * r[i];
      rr += (long double)r[i] * r[i];
      ee += (long double)e[i] * e[i];
    }
    for (int i = 0; i < 64; ++i) {
      const long double s = dot / rr * r[i];
      s2 += s * s;
      e2 += (e[i] - s) * (e[i] - s);
    }
    const long double d = 1e-8L * ee + std::numeric_limits<double>::min();
    const double oracle = 10.0 * std::log10((double)((s2 + d) / (e2 + d)));
    ASSERT_NEAR(SiSdr(AudioClip(e), AudioClip(r)), oracle, 1e-9);
  }
}

TEST(MetricsTest, SiSdriOfMixtureIsExactlyZero) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    AudioClip x(RandomVector(rng, 500)), y(RandomVector(rng, 500));
    EXPECT_EQ(SiSdri(x, y, x), 0.0);
  }
  AudioClip ref(RandomVector(rng, 500)), mix(RandomVector(rng, 500));
  EXPECT_NEAR(SiSdri(ref, ref, mix), SiSdrCapDb() - SiSdr(mix, ref), 1e-9);
}

TEST(MetricsTest, SdrMatchesEnergyRatio) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r = RandomVector(rng, 128), e = r;
    for (double &v : e) v += Gaussian(rng, 0, 0.5);
    long double num = 0, den = 0;
    for (int i = 0; i < 128; ++i) {
      num += (long double)r[i] * r[i];
      den += ((long double)r[i] - e[i]) * (r[i] - e[i]);
    }
    const long double d = 1e-8L * num;
    EXPECT_NEAR(Sdr(AudioClip(e), AudioClip(r)),
                (double)(10.0L * std::log10((num + d) / (den + d))), 1e-9);
  }
  AudioClip r(RandomVector(rng, 100));
  EXPECT_NEAR(Sdr(r, r), SiSdrCapDb(), 1e-9);
  EXPECT_THROW(Sdr(r, AudioClip(RandomVector(rng, 99))), InvalidArgument);
}

// ---- STOI ----

// Direct-form resampler: zero-stuff, convolve with the full Kaiser-windowed
// sinc, decimate. Same filter design, no polyphase bookkeeping.
std::vector<double> DirectResample(const std::vector<double> &x, int up, int down) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  const int max_rate = std::max(up, down);
  const int half = 10 * max_rate;
  const int taps = 2 * half + 1;
  const double fc = 1.0 / max_rate;
  std::vector<double> h(taps);
  double sum = 0;
  for (int n = 0; n < taps; ++n) {
    const double t = n - half;
    const double sinc = t == 0 ? 1.0 : std::sin(kPi * fc * t) / (kPi * fc * t);
    const double r = t / half;
    h[n] = fc * sinc * std::cyl_bessel_i(0.0, 5.0 * std::sqrt(1 - r * r)) /
           std::cyl_bessel_i(0.0, 5.0);
    sum += h[n];
  }
  for (double &v : h) v = v / sum * up;
  std::vector<double> stuffed(x.size() * up, 0.0);
  for (size_t i = 0; i < x.size(); ++i) stuffed[i * up] = x[i];
  std::vector<double> full(stuffed.size() + taps - 1, 0.0);
  for (size_t i = 0; i < stuffed.size(); ++i)
    for (int j = 0; j < taps; ++j) full[i + j] += stuffed[i] * h[j];
  const size_t n_out = (x.size() * up + down - 1) / down;
  std::vector<double> y(n_out);
  for (size_t m = 0; m < n_out; ++m) y[m] = full[m * down + half];
  return y;
}

TEST(StoiTest, ResampleMatchesDirectForm) {
  Rng rng(4);
  std::vector<double> x = RandomVector(rng, 1601);
  std::vector<double> fast = stoi::ResamplePoly(x, 10000, 16000);
  std::vector<double> slow = DirectResample(x, 5, 8);
  ASSERT_EQ(fast.size(), slow.size());
  EXPECT_EQ(fast.size(), 1001u);
  for (size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
  std::vector<double> same = stoi::ResamplePoly(x, 3, 3);
  EXPECT_EQ(same, x);
}

TEST(StoiTest, ResamplePreservesLowFrequencySine) {
  std::vector<double> x(16000);
  for (int i = 0; i < 16000; ++i) x[i] = std::sin(2 * kPi * 440.0 * i / 16000);
  std::vector<double> y = stoi::ResamplePoly(x, 10000, 16000);
  ASSERT_EQ(y.size(), 10000u);
  // The Kaiser lowpass has a passband ripple of a few tenths of a percent.
  for (int i = 200; i < 9800; ++i)
    EXPECT_NEAR(y[i], std::sin(2 * kPi * 440.0 * i / 10000), 5e-3);
}

TEST(StoiTest, ThirdOctaveBandsAreContiguousAndDisjoint) {
  auto obm = stoi::ThirdOctaveBands();
  ASSERT_EQ(obm.size(), 15u);
  std::vector<int> lo(15), hi(15);
  for (int b = 0; b < 15; ++b) {
    ASSERT_EQ(obm[b].size(), 257u);
    lo[b] = -1;
    for (int k = 0; k < 257; ++k) {
      if (obm[b][k] == 1.0) {
        if (lo[b] < 0) lo[b] = k;
        hi[b] = k + 1;
      } else {
        EXPECT_EQ(obm[b][k], 0.0);
      }
    }
    for (int k = lo[b]; k < hi[b]; ++k) EXPECT_EQ(obm[b][k], 1.0);
    if (b > 0) {
      EXPECT_EQ(lo[b], hi[b - 1]);
    }
  }
  // 150 Hz * 2^(-1/6) = 133.6 Hz is nearest to bin 7 (136.7 Hz); the top
  // edge 150 * 2^(29/6) = 4271 Hz is nearest to bin 219 (4277 Hz).
  EXPECT_EQ(lo[0], 7);
  EXPECT_EQ(hi[14], 219);
}

// Reference STOI for 10 kHz input, transcribed with a naive DFT.
double OracleStoi10k(std::vector<double> x, std::vector<double> y) {
  const int n = 256, hop = 128, nfft = 512, bins = 257, J = 15, N = 30;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2 * kPi * (i + 1) / (n + 1));
  const double eps = std::numeric_limits<double>::epsilon();
  // Silence removal.
  std::vector<int> starts;
  for (size_t s = 0; s + n <= x.size(); s += hop) starts.push_back(static_cast<int>(s));
  std::vector<double> en;
  for (int s : starts) {
    double e = 0;
    for (int i = 0; i < n; ++i) e += (w[i] * x[s + i]) * (w[i] * x[s + i]);
    en.push_back(20 * std::log10(std::sqrt(e) + eps));
  }
  const double top = *std::max_element(en.begin(), en.end());
  std::vector<int> keep;
  for (size_t f = 0; f < starts.size(); ++f)
    if (en[f] > top - 40) keep.push_back(starts[f]);
  std::vector<double> xs((keep.size() - 1) * hop + n, 0.0), ys(xs.size(), 0.0);
  for (size_t k = 0; k < keep.size(); ++k)
    for (int i = 0; i < n; ++i) {
      xs[k * hop + i] += w[i] * x[keep[k] + i];
      ys[k * hop + i] += w[i] * y[keep[k] + i];
    }
  // Band envelopes.
  auto obm = stoi::ThirdOctaveBands();
  auto envelopes = [&](const std::vector<double> &s) {
    std::vector<std::vector<double>> env(J);
    for (size_t st = 0; st + n < s.size(); st += hop) {
      std::vector<double> pw(bins);
      for (int k = 0; k < bins; ++k) {
        std::complex<double> acc = 0;
        for (int i = 0; i < n; ++i)
          acc += w[i] * s[st + i] * std::polar(1.0, -2 * kPi * k * i / nfft);
        pw[k] = std::norm(acc);
      }
      for (int b = 0; b < J; ++b) {
        double a = 0;
        for (int k = 0; k < bins; ++k) a += obm[b][k] * pw[k];
        env[b].push_back(std::sqrt(a));
      }
    }
    return env;
  };
  auto X = envelopes(xs), Y = envelopes(ys);
  const int M = static_cast<int>(X[0].size());
  const double c = std::pow(10.0, 15.0 / 20.0);
  double total = 0;
  for (int m = N - 1; m < M; ++m)
    for (int b = 0; b < J; ++b) {
      std::vector<double> xv(X[b].begin() + m - N + 1, X[b].begin() + m + 1);
      std::vector<double> yv(Y[b].begin() + m - N + 1, Y[b].begin() + m + 1);
      double nx = 0, ny = 0;
      for (int t = 0; t < N; ++t) {
        nx += xv[t] * xv[t];
        ny += yv[t] * yv[t];
      }
      for (int t = 0; t < N; ++t)
        yv[t] = std::min(yv[t] * std::sqrt(nx) / (std::sqrt(ny) + eps), xv[t] * (1 + c));
      double mx = 0, my = 0;
      for (int t = 0; t < N; ++t) {
        mx += xv[t] / N;
        my += yv[t] / N;
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int t = 0; t < N; ++t) {
        vx += (xv[t] - mx) * (xv[t] - mx);
        vy += (yv[t] - my) * (yv[t] - my);
      }
      for (int t = 0; t < N; ++t)
        cxy += (xv[t] - mx) / (std::sqrt(vx) + eps) * (yv[t] - my) / (std::sqrt(vy) + eps);
      total += cxy;
    }
  return total / (J * (M - N + 1));
}

TEST(StoiTest, MatchesNaiveDftOracleAt10k) {
  AudioClip clean16 = SpeechlikeClip(5, 1.2);
  std::vector<double> x = stoi::ResamplePoly(clean16.samples(), 10000, 16000);
  AudioClip clean(x, 10000);
  AudioClip noisy = AddNoise(clean, 0.0, 6);
  EXPECT_NEAR(Stoi(noisy, clean), OracleStoi10k(clean.samples(), noisy.samples()),
              1e-9);
}

TEST(StoiTest, IdentityAndScaleInvariance) {
  AudioClip y = SpeechlikeClip(7, 2.0);
  EXPECT_NEAR(Stoi(y, y), 1.0, 1e-6);
  AudioClip noisy = AddNoise(y, 5.0, 8);
  const double base = Stoi(noisy, y);
  for (double c : {0.5, 2.0}) {
    std::vector<double> s = noisy.samples();
    for (double &v : s) v *= c;
    EXPECT_NEAR(Stoi(AudioClip(s), y), base, 1e-9);
  }
}

TEST(StoiTest, DegradesWithNoise) {
  AudioClip y = SpeechlikeClip(9, 2.0);
  const double high = Stoi(AddNoise(y, 30.0, 1), y);
  const double mid = Stoi(AddNoise(y, 0.0, 1), y);
  const double low = Stoi(AddNoise(y, -10.0, 1), y);
  EXPECT_GT(high, 0.9);
  EXPECT_LT(mid, high);
  EXPECT_LT(low, mid);
}

TEST(StoiTest, PolarityInversionDoesNotChangeTheScore) {
  // Band envelopes are magnitudes, so a sign flip is invisible.
  AudioClip y = SpeechlikeClip(10, 2.0);
  std::vector<double> neg = y.samples();
  for (double &v : neg) v = -v;
  EXPECT_NEAR(Stoi(AudioClip(neg), y), 1.0, 1e-6);
}

TEST(StoiTest, ShortClipsAreRejected) {
  AudioClip y = SpeechlikeClip(11, 0.2);
  EXPECT_THROW(Stoi(y, y), InvalidArgument);
  AudioClip z = SpeechlikeClip(11, 2.0);
  EXPECT_THROW(Stoi(y, z), InvalidArgument);
}

// ---- SpeechBERTScore ----

TEST(BertScoreTest, HandExample) {
  // est rows: e0 = (1, 0), e1 = (0, 1); ref rows: r0 = (1, 0), r1 = (1, 1).
  Matrix est{{1, 0}, {0, 2}}, ref{{3, 0}, {1, 1}};
  BertScore s = SpeechBertScoreParts(est, ref);
  const double c = 1 / std::sqrt(2.0);
  EXPECT_NEAR(s.precision, (1 + c) / 2, 1e-15);
  EXPECT_NEAR(s.recall, (1 + c) / 2, 1e-15);
  EXPECT_NEAR(s.f1, (1 + c) / 2, 1e-15);
  Matrix one{{1, 0}};
  BertScore t = SpeechBertScoreParts(one, ref);
  EXPECT_NEAR(t.precision, 1.0, 1e-15);
  EXPECT_NEAR(t.recall, (1 + c) / 2, 1e-15);
  EXPECT_NEAR(t.f1, 2 * t.precision * t.recall / (t.precision + t.recall), 1e-15);
}

TEST(BertScoreTest, BoundedAndNegativeBranch) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    BertScore s = SpeechBertScoreParts(RandomMatrix(rng, 5, 3), RandomMatrix(rng, 7, 3));
    EXPECT_GE(s.f1, -1.0);
    EXPECT_LE(s.f1, 1.0);
  }
  Matrix a{{1, 0}}, b{{-1, 0}};
  EXPECT_NEAR(SpeechBertScoreParts(a, b).f1, -1.0, 1e-15);
}

TEST(BertScoreTest, IdentityIsOneAndNoiseLowersIt) {
  KnowledgeSourceSpec spec;
  AudioClip y = SpeechlikeClip(13, 1.0);
  EXPECT_NEAR(SpeechBertScore(y, y, spec), 1.0, 1e-6);
  const double noisy = SpeechBertScore(AddNoise(y, 0.0, 2), y, spec);
  EXPECT_LT(noisy, 1.0 - 1e-3);
  EXPECT_GT(noisy, -1.0);
}

// ---- reports ----

TEST(ReportTest, CsvAndJsonLayout) {
  TempDir dir("report");
  std::vector<SampleMetrics> s = {{"a", {1, 2, 3, 0.5, 0.25}},
                                  {"b", {3, 4, 5, 0.7, 0.75}}};
  WriteReport(dir.path(), s);
  std::ifstream cs(dir.path() / "report.csv");
  std::string header, row_a, row_b, mean;
  std::getline(cs, header);
  std::getline(cs, row_a);
  std::getline(cs, row_b);
  std::getline(cs, mean);
  EXPECT_EQ(header, "id,SI-SDR,SI-SDRi,SDR,STOI,SpeechBERTScore");
  EXPECT_EQ(row_a, "a,1,2,3,0.5,0.25");
  EXPECT_EQ(mean, "mean,2,3,4,0.6,0.5");
  std::ifstream js(dir.path() / "report.json");
  auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["num_samples"], 2);
  EXPECT_DOUBLE_EQ(j["mean"]["STOI"].get<double>(), 0.6);
  EXPECT_EQ(j["samples"][1]["id"], "b");
  EXPECT_THROW(MeanReport(std::span<const SampleMetrics>{}), InvalidArgument);
}

}  // namespace
}  // namespace avtse
