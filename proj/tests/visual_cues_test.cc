// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/visual_cues.h"

#include <cmath>

#include <gtest/gtest.h>

#include "avtse/error.h"
#include "test_util.h"

namespace avtse {
namespace {

using testing::RandomMatrix;
using testing::TempDir;

VisualStream RandomStream(int frames, int dim, uint64_t seed) {
  Rng rng(seed);
  VisualStream v;
  v.frames = RandomMatrix(rng, frames, dim);
  return v;
}

std::vector<bool> ChangedRows(const VisualStream &a, const VisualStream &b) {
  std::vector<bool> out(a.num_frames(), false);
  for (int t = 0; t < a.num_frames(); ++t)
    for (int d = 0; d < a.dim(); ++d)
      if (a.frames(t, d) != b.frames(t, d)) out[t] = true;
  return out;
}

TEST(VisualCuesTest, AffectedCountForEveryRatioStep) {
  const VisualStream v = RandomStream(100, 8, 1);
  for (int step = 0; step <= 100; ++step) {
    const double ratio = step / 100.0;
    const int expected = static_cast<int>(std::llround(ratio * 100));
    for (ImpairmentKind kind :
         {ImpairmentKind::kFullMissing, ImpairmentKind::kPartialOcclusion}) {
      ImpairmentSpec spec{kind, ratio, static_cast<uint64_t>(step), LowResMode::kBlur};
      auto [start, count] = AffectedRange(100, spec);
      EXPECT_EQ(count, expected);
      VisualStream out = ApplyImpairment(v, spec);
      std::vector<bool> changed = ChangedRows(v, out);
      int n = 0;
      for (int t = 0; t < 100; ++t) {
        const bool inside = t >= start && t < start + count;
        EXPECT_EQ(changed[t], inside) << "t=" << t << " ratio=" << ratio;
        n += changed[t];
      }
      EXPECT_EQ(n, expected);
    }
  }
}

TEST(VisualCuesTest, FullMissingFramesAreExactlyZero) {
  const VisualStream v = RandomStream(50, 6, 2);
  ImpairmentSpec spec{ImpairmentKind::kFullMissing, 1.0, 3, LowResMode::kBlur};
  VisualStream out = ApplyImpairment(v, spec);
  for (double x : out.frames.values()) EXPECT_EQ(x, 0.0);
  ASSERT_TRUE(out.impairment.has_value());
  EXPECT_EQ(*out.impairment, spec);
}

TEST(VisualCuesTest, OcclusionReplacesHalfTheCoordinatesWithOneObstacle) {
  const VisualStream v = RandomStream(40, 9, 3);
  ImpairmentSpec spec{ImpairmentKind::kPartialOcclusion, 0.5, 5, LowResMode::kBlur};
  VisualStream out = ApplyImpairment(v, spec);
  auto [start, count] = AffectedRange(40, spec);
  ASSERT_EQ(count, 20);
  int replaced = 0;
  for (int d = 0; d < 9; ++d) {
    if (out.frames(start, d) == v.frames(start, d)) continue;
    ++replaced;
    for (int t = start; t < start + count; ++t)
      EXPECT_EQ(out.frames(t, d), out.frames(start, d));
  }
  EXPECT_EQ(replaced, 5);
}

TEST(VisualCuesTest, BlurMatchesMovingAverageOracle) {
  const VisualStream v = RandomStream(30, 4, 4);
  ImpairmentSpec spec{ImpairmentKind::kLowResolution, 0.6, 8, LowResMode::kBlur};
  VisualStream out = ApplyImpairment(v, spec);
  auto [start, count] = AffectedRange(30, spec);
  for (int t = 0; t < 30; ++t)
    for (int d = 0; d < 4; ++d) {
      if (t < start || t >= start + count) {
        EXPECT_EQ(out.frames(t, d), v.frames(t, d));
        continue;
      }
      double s = 0.0;
      int n = 0;
      for (int u = t - 2; u <= t + 2; ++u)
        if (u >= 0 && u < 30) {
          s += v.frames(u, d);
          ++n;
        }
      EXPECT_NEAR(out.frames(t, d), s / n, 1e-12);
    }
}

TEST(VisualCuesTest, NoiseModeIsSeededAndLocal) {
  const VisualStream v = RandomStream(30, 4, 5);
  ImpairmentSpec spec{ImpairmentKind::kLowResolution, 0.3, 9, LowResMode::kNoise};
  VisualStream a = ApplyImpairment(v, spec), b = ApplyImpairment(v, spec);
  EXPECT_EQ(a, b);
  std::vector<bool> changed = ChangedRows(v, a);
  EXPECT_EQ(std::count(changed.begin(), changed.end(), true), 9);
  spec.seed = 10;
  EXPECT_NE(ApplyImpairment(v, spec).frames, a.frames);
}

TEST(VisualCuesTest, RejectsBadRatiosAndNames) {
  const VisualStream v = RandomStream(10, 2, 6);
  EXPECT_THROW(ApplyImpairment(v, {ImpairmentKind::kFullMissing, 1.5, 0,
                                   LowResMode::kBlur}),
               InvalidArgument);
  EXPECT_THROW(ApplyImpairment(v, {ImpairmentKind::kFullMissing, -0.1, 0,
                                   LowResMode::kBlur}),
               InvalidArgument);
  EXPECT_THROW(ParseImpairmentKind("sunglasses"), InvalidArgument);
  EXPECT_THROW(ParseLowResMode("pixelate"), InvalidArgument);
  for (auto k : {ImpairmentKind::kFullMissing, ImpairmentKind::kPartialOcclusion,
                 ImpairmentKind::kLowResolution})
    EXPECT_EQ(ParseImpairmentKind(ToString(k)), k);
}

TEST(VisualCuesTest, SampledRatiosAreUniform) {
  Rng rng(7);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double r = SampleImpairmentRatio(rng);
    ASSERT_GE(r, 0.0);
    ASSERT_LE(r, 1.0);
    sum += r;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(VisualCuesTest, SyntheticStreamShapeAndDeterminism) {
  AudioClip clip = testing::SpeechlikeClip(3, 1.0);
  VisualStream a = DeriveSyntheticVisual(clip, 16, 25.0, 42);
  EXPECT_EQ(a.num_frames(), 25);
  EXPECT_EQ(a.dim(), 16);
  for (double x : a.frames.values()) EXPECT_LT(std::abs(x), 1.0);
  EXPECT_EQ(a, DeriveSyntheticVisual(clip, 16, 25.0, 42));
  EXPECT_NE(a.frames, DeriveSyntheticVisual(clip, 16, 25.0, 43).frames);
}

TEST(VisualCuesTest, FileRoundTripKeepsFloat32Values) {
  TempDir dir("visual");
  VisualStream v = RandomStream(12, 3, 8);
  v.impairment = ImpairmentSpec{ImpairmentKind::kLowResolution, 0.25, 4,
                                LowResMode::kNoise};
  WriteVisualStream(dir.path() / "v", v);
  VisualStream back = ReadVisualStream(dir.path() / "v");
  ASSERT_EQ(back.num_frames(), 12);
  ASSERT_EQ(back.dim(), 3);
  EXPECT_EQ(back.impairment, v.impairment);
  for (size_t i = 0; i < v.frames.size(); ++i)
    EXPECT_EQ(back.frames[i], static_cast<double>(static_cast<float>(v.frames[i])));
  EXPECT_THROW(ReadVisualStream(dir.path() / "absent"), DataError);
}

}  // namespace
}  // namespace avtse
