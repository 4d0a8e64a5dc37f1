// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/tensor.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "avtse/error.h"

namespace avtse {

namespace {
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap View(const Matrix &m) { return ConstMap(m.data(), m.rows(), m.cols()); }
MutMap View(Matrix &m) { return MutMap(m.data(), m.rows(), m.cols()); }
}  // namespace

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {
  AVTSE_REQUIRE(rows >= 0 && cols >= 0, "negative matrix dimension");
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  AVTSE_REQUIRE(data_.size() == static_cast<size_t>(rows) * cols,
                "matrix value count does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<size_t>(rows_) * cols_);
  for (const auto &r : rows) {
    AVTSE_REQUIRE(static_cast<int>(r.size()) == cols_, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::RowVector(std::span<const double> values) {
  return Matrix(1, static_cast<int>(values.size()),
                std::vector<double>(values.begin(), values.end()));
}

void Matrix::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::AddScaled(const Matrix &o, double scale) {
  AVTSE_REQUIRE(SameShape(o), "shape mismatch in AddScaled: " + ShapeString() +
                                  " vs " + o.ShapeString());
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * o.data_[i];
}

double Matrix::Sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

double Matrix::SquaredNorm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Matrix::ShapeString() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix MatMul(const Matrix &a, const Matrix &b) {
  AVTSE_REQUIRE(a.cols() == b.rows(), "MatMul shape mismatch: " +
                                          a.ShapeString() + " * " +
                                          b.ShapeString());
  Matrix out(a.rows(), b.cols());
  View(out).noalias() = View(a) * View(b);
  return out;
}

Matrix MatMulTN(const Matrix &a, const Matrix &b) {
  AVTSE_REQUIRE(a.rows() == b.rows(), "MatMulTN shape mismatch: " +
                                          a.ShapeString() + " vs " +
                                          b.ShapeString());
  Matrix out(a.cols(), b.cols());
  View(out).noalias() = View(a).transpose() * View(b);
  return out;
}

Matrix MatMulNT(const Matrix &a, const Matrix &b) {
  AVTSE_REQUIRE(a.cols() == b.cols(), "MatMulNT shape mismatch: " +
                                          a.ShapeString() + " vs " +
                                          b.ShapeString());
  Matrix out(a.rows(), b.rows());
  View(out).noalias() = View(a) * View(b).transpose();
  return out;
}

Matrix Transpose(const Matrix &a) {
  Matrix out(a.cols(), a.rows());
  View(out) = View(a).transpose();
  return out;
}

}  // namespace avtse
