#include "ottd/numerics/matrix.hpp"

#include <cmath>
#include <string>

#include "ottd/numerics/kernels.hpp"

namespace ottd {

bool all_finite(const Matrix& m) {
  for (double x : m.a)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) fail(ErrorKind::invalid_input, std::string(what) + ": non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!all_finite(v)) fail(ErrorKind::invalid_input, std::string(what) + ": non-finite entries");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) fail(ErrorKind::shape, "matmul: inner dimension mismatch");
  Matrix c(a.rows, b.cols);
  kernels::matmul(a.a.data(), b.a.data(), c.a.data(), a.rows, a.cols, b.cols);
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols != x.size()) fail(ErrorKind::shape, "matvec: dimension mismatch");
  Vector y(a.rows);
  kernels::matvec(a.a.data(), x.data(), y.data(), a.rows, a.cols);
  return y;
}

Vector tmatvec(const Matrix& a, const Vector& x) {
  if (a.rows != x.size()) fail(ErrorKind::shape, "tmatvec: dimension mismatch");
  Vector y(a.cols);
  kernels::tmatvec(a.a.data(), x.data(), y.data(), a.rows, a.cols);
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) fail(ErrorKind::shape, "add: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] += b.a[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) fail(ErrorKind::shape, "sub: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] -= b.a[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& x : c.a) x *= s;
  return c;
}

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "add: length mismatch");
  Vector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Vector sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "sub: length mismatch");
  Vector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Vector scale(const Vector& a, double s) {
  Vector c = a;
  for (double& x : c) x *= s;
  return c;
}

void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) fail(ErrorKind::shape, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    const double* r = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) s += std::fabs(r[j]);
    if (s > best) best = s;
  }
  return best;
}

double inf_norm(const Vector& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::fabs(x));
  return best;
}

double max_abs(const Matrix& a) {
  double best = 0.0;
  for (double x : a.a) best = std::max(best, std::fabs(x));
  return best;
}

Matrix diag_scale_rows(const Vector& d, const Matrix& a) {
  if (d.size() != a.rows) fail(ErrorKind::shape, "diag_scale_rows: dimension mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) *= d[i];
  return c;
}

Matrix diag_scale_cols(const Matrix& a, const Vector& d) {
  if (d.size() != a.cols) fail(ErrorKind::shape, "diag_scale_cols: dimension mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) *= d[j];
  return c;
}

}  // namespace ottd
