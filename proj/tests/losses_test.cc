// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/losses.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "avtse/error.h"
#include "test_util.h"

namespace avtse {
namespace {

using testing::RandomMatrix;
using testing::RandomVector;

// Brute-force SI-SDR in extended precision: project, subtract, add the
// relative stabilizer to both energies.
double OracleSiSdr(const std::vector<double> &est, const std::vector<double> &ref) {
  long double dot = 0, rr = 0, ee = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    dot += static_cast<long double>(est[i]) * ref[i];
    rr += static_cast<long double>(ref[i]) * ref[i];
    ee += static_cast<long double>(est[i]) * est[i];
  }
  long double s2 = 0, e2 = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const long double s = dot / rr * ref[i];
    const long double e = est[i] - s;
    s2 += s * s;
    e2 += e * e;
  }
  const long double delta = 1e-8L * ee + std::numeric_limits<double>::min();
  return static_cast<double>(10.0L * std::log10((s2 + delta) / (e2 + delta)));
}

TEST(SiSdrTest, HandExamples) {
  const std::vector<double> ref = {1, 0, 0, 0}, est = {1, 1, 0, 0};
  EXPECT_NEAR(SiSdrDb(est, ref), 0.0, 1e-12);
  EXPECT_NEAR(SiSdrLoss(AudioClip(est), AudioClip(ref)), 0.0, 1e-12);
  // Orthogonal estimate: s = 0, loss at the cap.
  const std::vector<double> orth = {0, 1, 0, 0};
  EXPECT_NEAR(SiSdrLoss(AudioClip(orth), AudioClip(ref)), SiSdrCapDb(), 1e-9);
  // Identical signals: score at the cap.
  EXPECT_NEAR(SiSdrDb(ref, ref), SiSdrCapDb(), 1e-9);
  EXPECT_NEAR(SiSdrCapDb(), 80.0, 1e-6);
}

TEST(SiSdrTest, MatchesBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> est = RandomVector(rng, 64), ref = RandomVector(rng, 64);
    ASSERT_NEAR(SiSdrDb(est, ref), OracleSiSdr(est, ref), 1e-9) << trial;
  }
}

TEST(SiSdrTest, CloseToUnstabilizedDefinitionAwayFromTheCap) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ref = RandomVector(rng, 256), est = ref;
    for (double &v : est) v += Gaussian(rng, 0.0, 0.3);
    double dot = 0, rr = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
      dot += est[i] * ref[i];
      rr += ref[i] * ref[i];
    }
    double s2 = 0, e2 = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
      s2 += (dot / rr * ref[i]) * (dot / rr * ref[i]);
      e2 += (est[i] - dot / rr * ref[i]) * (est[i] - dot / rr * ref[i]);
    }
    EXPECT_NEAR(SiSdrDb(est, ref), 10 * std::log10(s2 / e2), 1e-5);
  }
}

TEST(SiSdrTest, ScaleInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> est = RandomVector(rng, 64), ref = RandomVector(rng, 64);
    const double base = SiSdrLoss(AudioClip(est), AudioClip(ref));
    for (double c : {0.1, 1.0, 10.0}) {
      std::vector<double> scaled = est;
      for (double &v : scaled) v *= c;
      EXPECT_NEAR(SiSdrLoss(AudioClip(scaled), AudioClip(ref)), base, 1e-6);
    }
  }
}

TEST(SiSdrTest, Errors) {
  EXPECT_THROW(SiSdrDb(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}),
               InvalidArgument);
  EXPECT_THROW(SiSdrDb(std::vector<double>{1, 2}, std::vector<double>{0, 0}),
               InvalidArgument);
}

TEST(SiSdrTest, GraphLossValueAndGradient) {
  Rng rng(4);
  Matrix ref = RandomMatrix(rng, 1, 50);
  Matrix est = RandomMatrix(rng, 1, 50);
  {
    ag::Graph g;
    EXPECT_NEAR(SiSdrLoss(g.Constant(est), ref).scalar(),
                -SiSdrDb(est.values(), ref.values()), 1e-12);
  }
  auto r = testing::CheckUnaryOp(
      [&](ag::Var v) { return SiSdrLoss(v, ref); }, est, 30, rng);
  EXPECT_LT(r.max_rel_error, 1e-6);
  // Near-perfect estimates, where the stabilizer matters.
  Matrix close = ref;
  for (double &v : close.values()) v += Gaussian(rng, 0.0, 1e-3);
  auto r2 = testing::CheckUnaryOp(
      [&](ag::Var v) { return SiSdrLoss(v, ref); }, close, 30, rng);
  EXPECT_LT(r2.max_rel_error, 1e-4);
}

TEST(LcMseTest, ZeroOnIdenticalAndMeanSquaredOtherwise) {
  Rng rng(5);
  FeatureSequence a{RandomMatrix(rng, 7, 5), 50.0}, b{RandomMatrix(rng, 7, 5), 50.0};
  EXPECT_EQ(LcMse(a, a), 0.0);
  double s = 0;
  for (size_t i = 0; i < a.frames.size(); ++i)
    s += (a.frames[i] - b.frames[i]) * (a.frames[i] - b.frames[i]);
  EXPECT_NEAR(LcMse(a, b), s / 35.0, 1e-14);
  FeatureSequence c{RandomMatrix(rng, 6, 5), 50.0};
  EXPECT_THROW(LcMse(a, c), InvalidArgument);
}

TEST(LcCeTest, UniformLogitsGiveLogK) {
  Rng rng(6);
  TokenSequence t;
  t.num_classes = 500;
  for (int i = 0; i < 40; ++i) t.tokens.push_back(static_cast<int>(rng() % 500));
  Matrix uniform(40, 500, 3.25);
  EXPECT_NEAR(LcCe(uniform, t), std::log(500.0), 1e-9);
  EXPECT_NEAR(std::log(500.0), 6.2146, 1e-4);
}

TEST(LcCeTest, MatchesLogSoftmaxOracle) {
  Rng rng(7);
  Matrix logits = RandomMatrix(rng, 9, 6, 3.0);
  TokenSequence t{{0, 1, 2, 3, 4, 5, 5, 0, 2}, 6};
  double expected = 0;
  for (int r = 0; r < 9; ++r) {
    long double z = 0;
    for (int k = 0; k < 6; ++k) z += std::exp(static_cast<long double>(logits(r, k)));
    expected += static_cast<double>(std::log(z) - logits(r, t.tokens[r]));
  }
  EXPECT_NEAR(LcCe(logits, t), expected / 9, 1e-12);
  // Large logits must not overflow.
  Matrix big = logits;
  for (double &v : big.values()) v += 1e4;
  EXPECT_NEAR(LcCe(big, t), expected / 9, 1e-9);
  TokenSequence wrong{{0}, 7};
  EXPECT_THROW(LcCe(Matrix(1, 6), wrong), InvalidArgument);
}

TEST(LcPlmTest, ZeroAdaptersGiveZeroLossAndGradientsCheck) {
  ParamSet zero = InitAdapterPair(4, 3, 1, 5, 2);
  for (auto &[n, m] : zero.mutable_tensors()) m.SetZero();
  Rng rng(8);
  FeatureSequence pred{RandomMatrix(rng, 6, 4), 50.0};
  std::vector<double> vec = RandomVector(rng, 3);
  EXPECT_EQ(LcPlm(pred, vec, zero), 0.0);

  ParamSet p = InitAdapterPair(4, 3, 2, 5, 2);
  // Oracle: mean-pool, both adapters, MSE.
  std::vector<double> pooled(4, 0.0);
  for (int t = 0; t < 6; ++t)
    for (int d = 0; d < 4; ++d) pooled[d] += pred.frames(t, d) / 6;
  std::vector<double> a = AdapterForward(p, kSpeechAdapter, pooled);
  std::vector<double> b = AdapterForward(p, kTextAdapter, vec);
  const double mse = ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])) / 2;
  EXPECT_NEAR(LcPlm(pred, vec, p), mse, 1e-14);

  auto r = testing::CheckUnaryOp(
      [&](ag::Var v) {
        BoundParams bp(*v.graph(), p, false);
        return LcPlm(v, vec, bp);
      },
      pred.frames, 20, rng);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(TotalLossTest, LinearCombination) {
  const LossWeights w;
  EXPECT_EQ(w.alpha, 1.0);
  EXPECT_EQ(w.beta, 10.0);
  LossReport r = TotalLoss(-12.0, 0.5, ConstraintKind::kPslmMse, w);
  EXPECT_EQ(r.total, -7.0);
  EXPECT_EQ(r.l_sisdr, -12.0);
  EXPECT_EQ(r.l_lc, 0.5);
  // kNone ignores the constraint term.
  EXPECT_EQ(TotalLoss(-12.0, 0.5, ConstraintKind::kNone, w).total, -12.0);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const double a = Gaussian(rng, 0, 20), b = std::abs(Gaussian(rng));
    EXPECT_EQ(TotalLoss(a, b, ConstraintKind::kPlmMse, w).total, a + 10.0 * b);
  }
  LossWeights bad{1.0, -1.0};
  EXPECT_THROW(TotalLoss(0.0, 0.0, ConstraintKind::kNone, bad), InvalidArgument);
}

TEST(TotalLossTest, GraphObjectiveMatchesValueForm) {
  for (ConstraintKind kind : {ConstraintKind::kNone, ConstraintKind::kPslmMse,
                              ConstraintKind::kPslmCe, ConstraintKind::kPlmMse}) {
    testing::TinyProblem p = testing::MakeTinyProblem(kind, 5);
    AudioClip est = Extract(p.mixture, p.visual, p.params, p.cfg);
    LossReport value = TotalLoss(est, p.target, p.constraint, &p.adapters, p.weights);
    EXPECT_NEAR(testing::TinyLoss(p), value.total, 1e-9) << ToString(kind);
    EXPECT_NEAR(value.total, value.l_sisdr + 10.0 * value.l_lc, 1e-12);
    if (kind == ConstraintKind::kNone) EXPECT_EQ(value.l_lc, 0.0);
    else EXPECT_GT(value.l_lc, 0.0);
  }
}

TEST(ConstraintKindTest, NamesRoundTrip) {
  for (ConstraintKind k : {ConstraintKind::kNone, ConstraintKind::kPslmMse,
                           ConstraintKind::kPslmCe, ConstraintKind::kPlmMse})
    EXPECT_EQ(ParseConstraintKind(ToString(k)), k);
  EXPECT_EQ(ToString(ConstraintKind::kPslmMse), "pslm_mse");
  EXPECT_THROW(ParseConstraintKind("ctc"), InvalidArgument);
}

}  // namespace
}  // namespace avtse
