#include "ottd/numerics/kernels.hpp"

namespace ottd::kernels {

void matmul(const double* a, const double* b, double* c,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  // Small problems skip the OpenMP machinery entirely; entering a parallel
  // region costs more than the whole product at desk scale.
  if (rows * inner * cols < parallel_cutoff) {
    serial::matmul(a, b, c, rows, inner, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
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

void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols) {
  if (rows * cols < parallel_cutoff) {
    serial::matvec(a, x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* ai = a + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
}

void tmatvec(const double* a, const double* x, double* y,
             std::size_t rows, std::size_t cols) {
  if (rows * cols < parallel_cutoff) {
    serial::tmatvec(a, x, y, rows, cols);
    return;
  }
  // Parallelize over output columns; each thread scans its own column strip,
  // keeping per-element accumulation order identical to the serial kernel.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(cols); ++jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += x[i] * a[i * cols + j];
    y[j] = s;
  }
}

}  // namespace ottd::kernels
