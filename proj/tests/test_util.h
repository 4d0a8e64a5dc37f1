// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Shared fixtures for the unit and acceptance tests: random data, a
// speechlike clip, tiny models and finite-difference gradient checks.

#ifndef AVTSE_TESTS_TEST_UTIL_H_
#define AVTSE_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avtse/audio.h"
#include "avtse/autograd.h"
#include "avtse/backbone.h"
#include "avtse/knowledge.h"
#include "avtse/losses.h"
#include "avtse/rng.h"
#include "avtse/trainer.h"

namespace avtse::testing {

std::vector<double> RandomVector(Rng &rng, size_t n, double sd = 1.0);
Matrix RandomMatrix(Rng &rng, int rows, int cols, double sd = 1.0);

// First clip of a seeded synthetic catalog, cropped/padded to `seconds`.
AudioClip SpeechlikeClip(uint64_t seed, double seconds);

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag);
  ~TempDir();
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string ReadFileBytes(const std::filesystem::path &p);

// Central difference of a scalar function of one matrix, at `n` random
// coordinates, compared with an analytic gradient. Returns the worst
// relative error |a - n| / max(|a|, |n|, floor).
struct GradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
};
GradCheck CheckGradient(Matrix *x, const Matrix &analytic,
                        const std::function<double()> &f, int n, Rng &rng,
                        double h = 1e-6, double floor = 1e-6);

// Checks a unary graph op: builds `op(leaf)`, sums it against a fixed random
// weighting, and compares the analytic gradient with central differences.
GradCheck CheckUnaryOp(const std::function<ag::Var(ag::Var)> &op, Matrix x,
                       int n, Rng &rng);

// Tiny backbone (well under 2000 parameters) and a matching problem set up
// for every constraint kind with the synthetic knowledge source.
BackboneConfig TinyBackbone();

struct TinyProblem {
  BackboneConfig cfg;
  ModelParams params;
  ParamSet adapters;
  KnowledgeBundle knowledge;
  AudioClip mixture;
  AudioClip target;
  VisualStream visual;
  ConstraintInputs constraint;
  LossWeights weights;
};

TinyProblem MakeTinyProblem(ConstraintKind kind, uint64_t seed);

// Total loss of the tiny problem at the given parameters.
double TinyLoss(const TinyProblem &p);

// Gradient check of total_loss with respect to `n` random backbone (and,
// for plm_mse, adapter) coordinates.
GradCheck CheckTinyProblemGradient(TinyProblem *p, int n, uint64_t seed);

}  // namespace avtse::testing

#endif  // AVTSE_TESTS_TEST_UTIL_H_
