#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "ottd/numerics/matrix.hpp"

namespace ottd {

struct Svd {
  Matrix u;        // m x r, orthonormal columns
  Vector sigma;    // r, descending
  Matrix v;        // n x r, orthonormal columns
};

// One-sided Jacobi SVD (full accuracy at desk scale).
Svd svd(const Matrix& a);
Vector singular_values(const Matrix& a);
double spectral_norm(const Matrix& a);  // sigma_max

// Moore-Penrose pseudoinverse. Singular values below rcond * sigma_max are
// treated as zero; rcond < 0 selects the default eps * max(rows, cols).
Matrix pinv(const Matrix& a, double rcond = -1.0);

// Eigenvalues of a general square matrix: balance + Householder Hessenberg +
// Francis double-shift QR. Eigenvalues only, unordered.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

// Largest eigenvalue magnitude, nonnegative.
double spectral_radius(const Matrix& a);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Vector sym_eigenvalues(const Matrix& s);

// Smallest eigenvalue of M M^T D with D diagonal positive, computed through
// the symmetric similar matrix D^{1/2} M M^T D^{1/2}. Throws degenerate-model
// on rank-deficient M.
double min_eig_mmtd(const Matrix& m, const Matrix& d);
// Smallest and largest eigenvalue of M M^T D, same route.
std::pair<double, double> eig_range_mmtd(const Matrix& m, const Matrix& d);

// Solve A x = b by partial-pivot LU. Throws singular-system when a pivot
// falls below tol * max|A| (tol < 0 selects 100 * eps * n).
Vector linear_solve(const Matrix& a, const Vector& b, double tol = -1.0);
Matrix inverse(const Matrix& a, double tol = -1.0);

// Stationary distribution d of a row-stochastic P: d^T P = d^T, d >= 0,
// sum d = 1. Null-space extraction via SVD with a power-iteration fallback;
// throws multiplicity when the stationary distribution is not unique.
Vector stationary_distribution(const Matrix& p, double residual_tol = 1e-10);

// Power-iteration estimate of the spectral radius; the independent oracle the
// property suite checks spectral_radius against, and its fallback.
double power_iteration_radius(const Matrix& a, std::size_t iters = 20000, std::uint64_t seed = 1234,
                              double tol = 1e-12);

}  // namespace ottd
