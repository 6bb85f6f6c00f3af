#pragma once

// Dense row-major matrices of doubles plus the handful of kernels the
// gradient engine needs. Every kernel that does floating-point work takes an
// OpCounter and tallies it under a fixed cost model:
//
//   matmul (m x p)(p x q)   2*m*p*q        -> mul_adds
//   row_sq_norms (r x c)    2*r*c          -> other_flops
//   sqrt, comparison, lone add/multiply   1 -> other_flops
//
// Elementwise activation and loss evaluation is not tallied.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pergrad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OpCounter {
  std::uint64_t mul_adds = 0;
  std::uint64_t other_flops = 0;

  std::uint64_t total() const { return mul_adds + other_flops; }

  OpCounter& operator+=(const OpCounter& o) {
    mul_adds += o.mul_adds;
    other_flops += o.other_flops;
    return *this;
  }
  friend OpCounter operator+(OpCounter a, const OpCounter& b) { return a += b; }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(rows_, cols_));
    }
  }

  // Nested literal, one inner list per row. Ragged rows are rejected.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b, OpCounter& counter) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape() + " * " + b.shape());
  }
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  Matrix out(m, q);
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < m; ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = a(i, k);
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < q; ++j) out_row[j] += aik * b_row[j];
    }
  }
  counter.mul_adds += 2 * static_cast<std::uint64_t>(m) * p * q;
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

// out = a^T * b without materializing a^T. Same count as matmul(transpose(a), b).
inline Matrix matmul_tn(const Matrix& a, const Matrix& b, OpCounter& counter) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape() + "^T * " + b.shape());
  }
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  Matrix out(p, q);
  for (std::size_t r = 0; r < m; ++r) {
    auto a_row = a.row(r);
    auto b_row = b.row(r);
    for (std::size_t i = 0; i < p; ++i) {
      const double ari = a_row[i];
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < q; ++j) out_row[j] += ari * b_row[j];
    }
  }
  counter.mul_adds += 2 * static_cast<std::uint64_t>(p) * m * q;
  return out;
}

// out = a * b^T without materializing b^T. With `b_rows` set, only the
// leading b_rows rows of b take part (the result has b_rows columns).
inline Matrix matmul_nt(const Matrix& a, const Matrix& b, OpCounter& counter,
                        std::size_t b_rows = static_cast<std::size_t>(-1)) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul shape mismatch: " + a.shape() + " * " + b.shape() + "^T");
  }
  if (b_rows == static_cast<std::size_t>(-1)) b_rows = b.rows();
  if (b_rows > b.rows()) throw ShapeError("matmul_nt row limit exceeds " + b.shape());
  const std::size_t m = a.rows(), p = a.cols(), q = b_rows;
  Matrix out(m, q);
  for (std::size_t i = 0; i < m; ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < q; ++j) {
      auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  counter.mul_adds += 2 * static_cast<std::uint64_t>(m) * p * q;
  return out;
}

inline std::vector<double> row_sq_norms(const Matrix& a, OpCounter& counter) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (double v : a.row(i)) acc += v * v;
    out[i] = acc;
  }
  counter.other_flops += 2 * static_cast<std::uint64_t>(a.rows()) * a.cols();
  return out;
}

// Frobenius norm squared, counted like row_sq_norms over every entry.
inline double sq_frobenius(const Matrix& a, OpCounter& counter) {
  double acc = 0.0;
  for (double v : a.values()) acc += v * v;
  counter.other_flops += 2 * static_cast<std::uint64_t>(a.size());
  return acc;
}

inline Matrix augment_ones_column(const Matrix& a) {
  Matrix out(a.rows(), a.cols() + 1, 1.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  }
  return out;
}

inline Matrix scale_rows(const Matrix& a, std::span<const double> factors) {
  if (factors.size() != a.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) +
                     " factors for matrix " + a.shape());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (double& v : out.row(i)) v *= factors[i];
  }
  return out;
}

// Rows [first, first + count) as a fresh matrix.
inline Matrix slice_rows(const Matrix& a, std::size_t first, std::size_t count = 1) {
  if (first + count > a.rows()) {
    throw ShapeError("slice_rows out of range for " + a.shape());
  }
  std::vector<double> data(a.values().begin() + first * a.cols(),
                           a.values().begin() + (first + count) * a.cols());
  return Matrix(count, a.cols(), std::move(data));
}

// Rank-1 outer product a b^T.
inline Matrix outer(std::span<const double> a, std::span<const double> b) {
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  }
  return out;
}

}  // namespace pergrad
