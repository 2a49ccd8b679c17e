#pragma once

#include <cstddef>

// Dense row-major kernels. The OpenMP variants parallelize over output rows
// only, so each output element is accumulated in the same order as the serial
// reference and the two produce bit-identical results. kernels::serial is the
// reference implementation the tests and the benchmark compare against.

namespace ottd::kernels {

namespace serial {

inline void matmul(const double* a, const double* b, double* c,
                   std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* ci = c + i * cols;
    for (std::size_t j = 0; j < cols; ++j) ci[j] = 0.0;
    const double* ai = a + i * inner;
    for (std::size_t l = 0; l < inner; ++l) {
      const double ail = ai[l];
      const double* bl = b + l * cols;
      for (std::size_t j = 0; j < cols; ++j) ci[j] += ail * bl[j];
    }
  }
}

inline void matvec(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* ai = a + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
}

// y = A^T x without forming the transpose.
inline void tmatvec(const double* a, const double* x, double* y,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* ai = a + i * cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) y[j] += xi * ai[j];
  }
}

}  // namespace serial

// Work below this many output elements is not worth a parallel region.
inline constexpr std::size_t parallel_cutoff = 16 * 1024;

void matmul(const double* a, const double* b, double* c,
            std::size_t rows, std::size_t inner, std::size_t cols);

void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols);

void tmatvec(const double* a, const double* x, double* y,
             std::size_t rows, std::size_t cols);

}  // namespace ottd::kernels
