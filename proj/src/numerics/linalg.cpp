#include "ottd/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "ottd/rng.hpp"

namespace ottd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sign_like(double magnitude, double sign_source) {
  return sign_source >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

}  // namespace

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

Svd svd(const Matrix& a) {
  if (a.empty()) fail(ErrorKind::invalid_input, "svd: empty matrix");
  require_finite(a, "svd");
  if (a.rows < a.cols) {
    Svd t = svd(transpose(a));
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const std::size_t m = a.rows, n = a.cols;
  Matrix u = a;
  Matrix v = Matrix::identity(n);

  auto col_dot = [&](const Matrix& x, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) s += x(i, p) * x(i, q);
    return s;
  };
  auto rotate_cols = [&](Matrix& x, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double xp = x(i, p), xq = x(i, q);
      x(i, p) = c * xp - s * xq;
      x(i, q) = s * xp + c * xq;
    }
  };

  const std::size_t max_sweeps = 60;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double app = col_dot(u, p, p);
        const double aqq = col_dot(u, q, q);
        const double apq = col_dot(u, p, q);
        if (std::fabs(apq) <= 1e-30 || std::fabs(apq) <= kEps * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = sign_like(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_cols(u, p, q, c, s);
        rotate_cols(v, p, q, c, s);
      }
    }
    if (!rotated) break;
  }

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += u(i, j) * u(i, j);
    sigma[j] = std::sqrt(s);
    if (sigma[j] > 0.0)
      for (std::size_t i = 0; i < m; ++i) u(i, j) /= sigma[j];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.sigma[j] = sigma[order[j]];
    for (std::size_t i = 0; i < m; ++i) out.u(i, j) = u(i, order[j]);
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, order[j]);
  }
  return out;
}

Vector singular_values(const Matrix& a) { return svd(a).sigma; }

double spectral_norm(const Matrix& a) {
  const Vector s = singular_values(a);
  return s.empty() ? 0.0 : s.front();
}

Matrix pinv(const Matrix& a, double rcond) {
  if (a.empty()) fail(ErrorKind::invalid_input, "pinv: empty matrix");
  require_finite(a, "pinv");
  if (rcond < 0.0) rcond = kEps * static_cast<double>(std::max(a.rows, a.cols));
  const Svd d = svd(a);
  const double cutoff = rcond * (d.sigma.empty() ? 0.0 : d.sigma.front());
  // A+ = V diag(1/sigma) U^T over retained singular values.
  Matrix out(a.cols, a.rows);
  for (std::size_t j = 0; j < d.sigma.size(); ++j) {
    if (d.sigma[j] <= cutoff || d.sigma[j] == 0.0) continue;
    const double inv = 1.0 / d.sigma[j];
    for (std::size_t r = 0; r < a.cols; ++r) {
      const double vrj = d.v(r, j) * inv;
      for (std::size_t c = 0; c < a.rows; ++c) out(r, c) += vrj * d.u(c, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric Jacobi eigenvalues
// ---------------------------------------------------------------------------

Vector sym_eigenvalues(const Matrix& s0) {
  if (!s0.square()) fail(ErrorKind::shape, "sym_eigenvalues: matrix not square");
  require_finite(s0, "sym_eigenvalues");
  Matrix s = s0;
  const std::size_t n = s.rows;
  for (std::size_t sweep = 0; sweep < 80; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (std::sqrt(off) <= 1e-15 * (1.0 + max_abs(s))) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(s(p, q)) <= 1e-300) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = sign_like(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double si = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = s(i, p), xq = s(i, q);
          s(i, p) = c * xp - si * xq;
          s(i, q) = si * xp + c * xq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = s(p, i), xq = s(q, i);
          s(p, i) = c * xp - si * xq;
          s(q, i) = si * xp + c * xq;
        }
      }
    }
  }
  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = s(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double min_eig_mmtd(const Matrix& m, const Matrix& d) {
  if (!d.square() || d.rows != m.rows) fail(ErrorKind::shape, "min_eig_mmtd: shape mismatch");
  Vector sqrt_d(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j)
      if (i != j && std::fabs(d(i, j)) > 1e-14) fail(ErrorKind::invalid_input, "min_eig_mmtd: D not diagonal");
    if (d(i, i) <= 0.0) fail(ErrorKind::invalid_input, "min_eig_mmtd: D diagonal must be positive");
    sqrt_d[i] = std::sqrt(d(i, i));
  }
  const Vector sv = singular_values(m);
  if (sv.empty() || sv.back() <= kEps * static_cast<double>(std::max(m.rows, m.cols)) * sv.front() ||
      m.rows > m.cols)
    fail(ErrorKind::degenerate_model, "min_eig_mmtd: M is rank deficient");
  const Matrix mmt = matmul(m, transpose(m));
  const Matrix s = diag_scale_cols(diag_scale_rows(sqrt_d, mmt), sqrt_d);
  return sym_eigenvalues(s).front();
}

std::pair<double, double> eig_range_mmtd(const Matrix& m, const Matrix& d) {
  Vector sqrt_d(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    if (d(i, i) <= 0.0) fail(ErrorKind::invalid_input, "eig_range_mmtd: D diagonal must be positive");
    sqrt_d[i] = std::sqrt(d(i, i));
  }
  const Matrix mmt = matmul(m, transpose(m));
  const Matrix s = diag_scale_cols(diag_scale_rows(sqrt_d, mmt), sqrt_d);
  const Vector eig = sym_eigenvalues(s);
  return {eig.front(), eig.back()};
}

// ---------------------------------------------------------------------------
// General eigenvalues: balance + Householder Hessenberg + Francis QR
// ---------------------------------------------------------------------------

namespace {

void balance(Matrix& a) {
  const std::size_t n = a.rows;
  const double radix = 2.0, sq = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::fabs(a(j, i));
        r += std::fabs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sq;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double ginv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= ginv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Orthogonal reduction to upper Hessenberg form, in place.
void hessenberg(Matrix& a) {
  const std::size_t n = a.rows;
  if (n < 3) return;
  Vector v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm <= 1e-300) continue;
    const double alpha = a(k + 1, k) >= 0.0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = a(i, k);
      if (i == k + 1) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 <= 1e-300) continue;
    const double beta = 2.0 / vnorm2;
    // A <- (I - beta v v^T) A : rows k+1..n-1
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // A <- A (I - beta v v^T) : cols k+1..n-1
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    a(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
// Classic hqr scheme (EISPACK lineage), 0-based.
bool hqr(Matrix& a, std::vector<std::complex<double>>& w) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows);
  w.assign(a.rows, {0.0, 0.0});
  auto A = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double& {
    return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  double anorm = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(i - 1, 0); j < n; ++j) anorm += std::fabs(A(i, j));
  if (anorm == 0.0) return true;

  std::ptrdiff_t nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    std::size_t its = 0;
    std::ptrdiff_t l;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::fabs(A(l - 1, l - 1)) + std::fabs(A(l, l));
        if (s == 0.0) s = anorm;
        if (std::fabs(A(l, l - 1)) <= kEps * s) {
          A(l, l - 1) = 0.0;
          break;
        }
      }
      if (l < 0) l = 0;
      double x = A(nn, nn);
      if (l == nn) {
        w[static_cast<std::size_t>(nn)] = {x + t, 0.0};
        --nn;
      } else {
        double y = A(nn - 1, nn - 1);
        double wv = A(nn, nn - 1) * A(nn - 1, nn);
        if (l == nn - 1) {
          double p = 0.5 * (y - x);
          double q = p * p + wv;
          double z = std::sqrt(std::fabs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_like(z, p);
            double e1 = x + z;
            double e2 = (z != 0.0) ? x - wv / z : x + z;
            w[static_cast<std::size_t>(nn - 1)] = {e1, 0.0};
            w[static_cast<std::size_t>(nn)] = {e2, 0.0};
          } else {
            w[static_cast<std::size_t>(nn - 1)] = {x + p, -z};
            w[static_cast<std::size_t>(nn)] = {x + p, z};
          }
          nn -= 2;
        } else {
          if (its == 60) return false;
          if (its == 10 || its == 20 || its == 30 || its == 40 || its == 50) {
            t += x;
            for (std::ptrdiff_t i = 0; i <= nn; ++i) A(i, i) -= x;
            double s = std::fabs(A(nn, nn - 1)) + std::fabs(A(nn - 1, nn - 2));
            y = x = 0.75 * s;
            wv = -0.4375 * s * s;
          }
          ++its;
          std::ptrdiff_t m;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (m = nn - 2; m >= l; --m) {
            z = A(m, m);
            const double rr = x - z;
            const double ss = y - z;
            p = (rr * ss - wv) / A(m + 1, m) + A(m, m + 1);
            q = A(m + 1, m + 1) - z - rr - ss;
            r = A(m + 2, m + 1);
            const double scale = std::fabs(p) + std::fabs(q) + std::fabs(r);
            p /= scale;
            q /= scale;
            r /= scale;
            if (m == l) break;
            const double u = std::fabs(A(m, m - 1)) * (std::fabs(q) + std::fabs(r));
            const double v = std::fabs(p) * (std::fabs(A(m - 1, m - 1)) + std::fabs(z) + std::fabs(A(m + 1, m + 1)));
            if (u <= kEps * v) break;
          }
          if (m < l) m = l;
          for (std::ptrdiff_t i = m + 2; i <= nn; ++i) {
            A(i, i - 2) = 0.0;
            if (i != m + 2) A(i, i - 3) = 0.0;
          }
          for (std::ptrdiff_t k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = A(k, k - 1);
              q = A(k + 1, k - 1);
              r = (k != nn - 1) ? A(k + 2, k - 1) : 0.0;
              x = std::fabs(p) + std::fabs(q) + std::fabs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            double s = sign_like(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) A(k, k - 1) = -A(k, k - 1);
            } else {
              A(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (std::ptrdiff_t j = k; j <= nn; ++j) {
              double pp = A(k, j) + q * A(k + 1, j);
              if (k != nn - 1) {
                pp += r * A(k + 2, j);
                A(k + 2, j) -= pp * z;
              }
              A(k + 1, j) -= pp * y;
              A(k, j) -= pp * x;
            }
            const std::ptrdiff_t mmin = std::min(nn, k + 3);
            for (std::ptrdiff_t i = l; i <= mmin; ++i) {
              double pp = x * A(i, k) + y * A(i, k + 1);
              if (k != nn - 1) {
                pp += z * A(i, k + 2);
                A(i, k + 2) -= pp * r;
              }
              A(i, k + 1) -= pp * q;
              A(i, k) -= pp;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return true;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& a0) {
  if (!a0.square()) fail(ErrorKind::shape, "eigenvalues: matrix not square");
  require_finite(a0, "eigenvalues");
  const std::size_t n = a0.rows;
  std::vector<std::complex<double>> w;
  if (n == 0) return w;
  if (n == 1) return {{a0(0, 0), 0.0}};
  Matrix a = a0;
  balance(a);
  hessenberg(a);
  if (!hqr(a, w)) fail(ErrorKind::precondition, "eigenvalues: QR iteration failed to converge");
  return w;
}

double spectral_radius(const Matrix& a) {
  if (!a.square()) fail(ErrorKind::shape, "spectral_radius: matrix not square");
  if (a.rows == 0) return 0.0;
  double best = 0.0;
  for (const auto& z : eigenvalues(a)) best = std::max(best, std::abs(z));
  return best;
}

// ---------------------------------------------------------------------------
// LU solve
// ---------------------------------------------------------------------------

namespace {

struct Lu {
  Matrix lu;
  std::vector<std::size_t> piv;
};

Lu lu_factor(const Matrix& a, double tol) {
  if (!a.square()) fail(ErrorKind::shape, "linear_solve: matrix not square");
  require_finite(a, "linear_solve");
  const std::size_t n = a.rows;
  if (tol < 0.0) tol = 100.0 * kEps * static_cast<double>(n);
  const double scale = std::max(max_abs(a), 1e-300);
  Lu f{a, {}};
  f.piv.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(f.lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::fabs(f.lu(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best <= tol * scale) fail(ErrorKind::singular_system, "linear_solve: matrix is singular to tolerance");
    f.piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
    const double inv = 1.0 / f.lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = f.lu(i, k) * inv;
      f.lu(i, k) = l;
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
    }
  }
  return f;
}

Vector lu_solve(const Lu& f, Vector b) {
  const std::size_t n = f.lu.rows;
  // All row interchanges first (the stored L is consistent with the final
  // permutation), then the triangular solves.
  for (std::size_t k = 0; k < n; ++k) std::swap(b[k], b[f.piv[k]]);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
  for (std::size_t k = n; k-- > 0;) {
    for (std::size_t j = k + 1; j < n; ++j) b[k] -= f.lu(k, j) * b[j];
    b[k] /= f.lu(k, k);
  }
  return b;
}

}  // namespace

Vector linear_solve(const Matrix& a, const Vector& b, double tol) {
  if (a.rows != b.size()) fail(ErrorKind::shape, "linear_solve: rhs length mismatch");
  require_finite(b, "linear_solve rhs");
  return lu_solve(lu_factor(a, tol), b);
}

Matrix inverse(const Matrix& a, double tol) {
  const Lu f = lu_factor(a, tol);
  const std::size_t n = a.rows;
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    const Vector x = lu_solve(f, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
  }
  return inv;
}

// ---------------------------------------------------------------------------
// Stationary distribution
// ---------------------------------------------------------------------------

namespace {

double stationary_residual(const Matrix& p, const Vector& d) {
  const Vector dp = tmatvec(p, d);
  double r = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, std::fabs(dp[i] - d[i]));
  return r;
}

}  // namespace

Vector stationary_distribution(const Matrix& p, double residual_tol) {
  if (!p.square()) fail(ErrorKind::shape, "stationary_distribution: matrix not square");
  require_finite(p, "stationary_distribution");
  const std::size_t n = p.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) < -1e-12) fail(ErrorKind::invalid_input, "stationary_distribution: negative entry");
      s += p(i, j);
    }
    if (std::fabs(s - 1.0) > 1e-9) fail(ErrorKind::invalid_input, "stationary_distribution: rows must sum to 1");
  }
  if (n == 1) return Vector{1.0};

  // Eigen route: null space of P^T - I.
  Matrix b = transpose(p);
  for (std::size_t i = 0; i < n; ++i) b(i, i) -= 1.0;
  const Svd dec = svd(b);
  const double smax = dec.sigma.front();
  const double s_min = dec.sigma[n - 1];
  const double s_second = dec.sigma[n - 2];
  const double null_tol = 1e-8 * std::max(1.0, smax);
  if (s_second <= null_tol)
    fail(ErrorKind::multiplicity, "stationary_distribution: stationary distribution is not unique");
  if (s_min <= null_tol) {
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = dec.v(i, n - 1);
    double sum = std::accumulate(d.begin(), d.end(), 0.0);
    if (std::fabs(sum) > 1e-12) {
      for (double& x : d) x /= sum;
      bool ok = true;
      for (double& x : d) {
        if (x < -1e-9) ok = false;
        if (x < 0.0) x = 0.0;
      }
      if (ok) {
        double renorm = std::accumulate(d.begin(), d.end(), 0.0);
        for (double& x : d) x /= renorm;
        if (stationary_residual(p, d) <= residual_tol) return d;
      }
    }
  }

  // Power-iteration fallback.
  Vector d(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < 500000; ++it) {
    Vector next = tmatvec(p, d);
    double sum = std::accumulate(next.begin(), next.end(), 0.0);
    for (double& x : next) x /= sum;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::fabs(next[i] - d[i]));
    d = std::move(next);
    if (diff <= 1e-15) break;
  }
  if (stationary_residual(p, d) <= residual_tol) return d;
  fail(ErrorKind::multiplicity, "stationary_distribution: no unique stationary distribution within tolerance");
}

double power_iteration_radius(const Matrix& a, std::size_t iters, std::uint64_t seed, double tol) {
  if (!a.square()) fail(ErrorKind::shape, "power_iteration_radius: matrix not square");
  const std::size_t n = a.rows;
  if (n == 0) return 0.0;
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.normal();
  double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;
  double lambda = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    Vector w = matvec(a, v);
    const double wn = std::sqrt(dot(w, w));
    if (wn <= 1e-300) return 0.0;
    const double next = wn;
    for (double& x : w) x /= wn;
    const bool settled = std::fabs(next - lambda) <= tol * std::max(1.0, std::fabs(next));
    lambda = next;
    v = std::move(w);
    if (settled && it > 50) break;
  }
  return lambda;
}

}  // namespace ottd
