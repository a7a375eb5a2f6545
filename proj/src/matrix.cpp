#include "genhop/matrix.hpp"

namespace genhop {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

IntMatrix checked_matmul(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("checked_matmul: shape mismatch");
  IntMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const std::int64_t aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) {
        std::int64_t prod = 0;
        if (__builtin_mul_overflow(aik, b(k, j), &prod))
          throw std::overflow_error("checked_matmul: product overflow");
        std::int64_t sum = 0;
        if (__builtin_add_overflow(out(i, j), prod, &sum))
          throw std::overflow_error("checked_matmul: sum overflow");
        out(i, j) = sum;
      }
    }
  }
  return out;
}

}  // namespace genhop
