#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcc/error.hpp"

namespace dcc {

// Dense row-major matrix of doubles. Rows are samples throughout.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows * cols entries

  Matrix() = default;

  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    check(data.size() == rows * cols, ErrorCode::DimMismatch,
          "matrix data length " + std::to_string(data.size()) + " != " +
              std::to_string(rows) + "x" + std::to_string(cols));
    for (double v : data)
      check(std::isfinite(v), ErrorCode::NonFinite,
            "matrix constructor rejects NaN/Inf entries");
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws) {
    Matrix m;
    m.rows = rws.size();
    m.cols = m.rows == 0 ? 0 : rws.begin()->size();
    m.data.reserve(m.rows * m.cols);
    for (const auto& r : rws) {
      check(r.size() == m.cols, ErrorCode::DimMismatch, "ragged row list");
      for (double v : r) {
        check(std::isfinite(v), ErrorCode::NonFinite,
              "matrix constructor rejects NaN/Inf entries");
        m.data.push_back(v);
      }
    }
    return m;
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool operator==(const Matrix& other) const {
    return rows == other.rows && cols == other.cols && data == other.data;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

inline double squared_norm(std::span<const double> v) { return dot(v, v); }

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

// Scales one row to unit Euclidean norm. ZeroRow on degenerate input.
inline void l2_normalize_in_place(std::span<double> row) {
  const double n = norm(row);
  check(n >= 1e-12, ErrorCode::ZeroRow,
        "row norm " + std::to_string(n) + " below 1e-12");
  const double inv = 1.0 / n;
  for (double& v : row) v *= inv;
}

inline std::vector<double> l2_normalized(std::span<const double> row) {
  std::vector<double> out(row.begin(), row.end());
  l2_normalize_in_place(out);
  return out;
}

inline Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows; ++i) l2_normalize_in_place(out.row(i));
  return out;
}

// result[i][j] = dot(a.row(i), b.row(j)); a.rows x b.rows.
inline Matrix matmul_transpose(const Matrix& a, const Matrix& b) {
  check(a.cols == b.cols, ErrorCode::DimMismatch,
        "matmul_transpose: " + std::to_string(a.cols) + " vs " +
            std::to_string(b.cols) + " columns");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) out.at(i, j) = dot(ai, b.row(j));
  }
  return out;
}

// result[i][j] = ||a_i - b_j||^2, expanded per pair in a fixed summation order.
inline Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b) {
  check(a.cols == b.cols, ErrorCode::DimMismatch,
        "pairwise_sq_euclidean: " + std::to_string(a.cols) + " vs " +
            std::to_string(b.cols) + " columns");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) {
        const double d = ai[k] - bj[k];
        acc += d * d;
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  check(a.same_shape(b), ErrorCode::DimMismatch, "max_abs_diff shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

}  // namespace dcc
