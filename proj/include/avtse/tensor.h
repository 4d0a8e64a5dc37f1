// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AVTSE_TENSOR_H_
#define AVTSE_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace avtse {

// Dense row-major matrix of doubles. Vectors are 1 x n matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(int rows, int cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix RowVector(std::span<const double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }
  double &operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool SameShape(const Matrix &o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  void Fill(double v);
  void SetZero() { Fill(0.0); }
  // this += scale * o
  void AddScaled(const Matrix &o, double scale = 1.0);
  double Sum() const;
  double SquaredNorm() const;
  bool AllFinite() const;
  std::string ShapeString() const;

  bool operator==(const Matrix &o) const = default;

 private:
  size_t Index(int r, int c) const {
    return static_cast<size_t>(r) * cols_ + c;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// out = a * b
Matrix MatMul(const Matrix &a, const Matrix &b);
// out = a^T * b
Matrix MatMulTN(const Matrix &a, const Matrix &b);
// out = a * b^T
Matrix MatMulNT(const Matrix &a, const Matrix &b);
Matrix Transpose(const Matrix &a);

}  // namespace avtse

#endif  // AVTSE_TENSOR_H_
