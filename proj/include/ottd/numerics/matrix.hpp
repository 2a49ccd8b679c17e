#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "ottd/errors.hpp"

namespace ottd {

using Vector = std::vector<double>;

// Dense row-major matrix. Values are immutable by convention once built by an
// operation; every function below returns fresh storage.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::initializer_list<double> entries) : rows(r), cols(c), a(entries) {
    if (a.size() != r * c) fail(ErrorKind::shape, "Matrix: initializer size mismatch");
  }

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  bool empty() const { return rows == 0 || cols == 0; }
  bool square() const { return rows == cols; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diag(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
};

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
Vector tmatvec(const Matrix& a, const Vector& x);  // A^T x
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);
void axpy(double alpha, const Vector& x, Vector& y);  // y += alpha x
double dot(const Vector& a, const Vector& b);

// Maximum absolute row sum / maximum absolute entry.
double inf_norm(const Matrix& a);
double inf_norm(const Vector& v);
double max_abs(const Matrix& a);

// Left/right diagonal scaling: diag(d) * A and A * diag(d).
Matrix diag_scale_rows(const Vector& d, const Matrix& a);
Matrix diag_scale_cols(const Matrix& a, const Vector& d);

}  // namespace ottd
