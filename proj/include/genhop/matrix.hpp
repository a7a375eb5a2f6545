#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace genhop {

/// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xn.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix scalar(double v) {
    Matrix m(1, 1);
    m.data[0] = v;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Exact integer matrix; arithmetic throws std::overflow_error instead of wrapping.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> data;

  IntMatrix() = default;
  IntMatrix(std::size_t r, std::size_t c, std::int64_t fill = 0)
      : rows(r), cols(c), data(r * c, fill) {}

  std::int64_t& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  std::int64_t operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix to_real() const {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) m.data[i] = static_cast<double>(data[i]);
    return m;
  }
};

IntMatrix checked_matmul(const IntMatrix& a, const IntMatrix& b);

}  // namespace genhop
