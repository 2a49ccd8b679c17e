#include <doctest.h>

#include <cmath>
#include <functional>

#include "ottd/bounds.hpp"
#include "ottd/envs.hpp"
#include "ottd/learners.hpp"
#include "ottd/numerics/linalg.hpp"
#include "ottd/rng.hpp"

using namespace ottd;

TEST_CASE("minimax_theta examples") {
  // Representable target: zero residual.
  Matrix phi(3, 2, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  const Vector q = matvec(phi, Vector{0.7, -0.3});
  const Vector th = minimax_theta(phi, q);
  const Vector v = matvec(phi, th);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::fabs(v[i] - q[i]) <= 1e-9);

  // Phi = [1;1], q = [0;2]: theta* = 1, residual 1.
  const Matrix ones(2, 1, {1.0, 1.0});
  const Vector th1 = minimax_theta(ones, Vector{0.0, 2.0});
  CHECK(th1[0] == doctest::Approx(1.0).epsilon(1e-9));

  // Tabular: theta* = q.
  const Vector th2 = minimax_theta(Matrix::identity(3), Vector{0.5, -1.0, 2.0});
  CHECK(th2[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(th2[1] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(th2[2] == doctest::Approx(2.0).epsilon(1e-9));
}

namespace {

double cheb_value(const Matrix& phi, const Vector& theta, const Vector& q) {
  const Vector v = matvec(phi, theta);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::fabs(v[i] - q[i]));
  return r;
}

// Brute-force Chebyshev oracle: enumerate candidate vertices where d+1
// residuals are active with alternating-free signs, keep the best feasible.
double cheb_oracle(const Matrix& phi, const Vector& q) {
  const std::size_t n = phi.rows, d = phi.cols;
  double best = cheb_value(phi, Vector(d, 0.0), q);
  std::vector<std::size_t> idx(d + 1);
  std::vector<bool> pick(n, false);
  // enumerate subsets of size d+1
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t chosen) {
    if (chosen == d + 1) {
      const std::size_t m = d + 1;
      for (std::size_t signs = 0; signs < (1u << m); ++signs) {
        Matrix a(m, m);
        Vector b(m);
        for (std::size_t r = 0; r < m; ++r) {
          const double sgn = (signs >> r) & 1 ? -1.0 : 1.0;
          for (std::size_t c = 0; c < d; ++c) a(r, c) = phi(idx[r], c);
          a(r, d) = -sgn;
          b[r] = q[idx[r]];
        }
        try {
          const Vector sol = linear_solve(a, b);
          Vector theta(sol.begin(), sol.begin() + d);
          best = std::min(best, cheb_value(phi, theta, q));
        } catch (const Error&) {
        }
      }
      return;
    }
    if (start == n) return;
    if (n - start < d + 1 - chosen) return;
    idx[chosen] = start;
    rec(start + 1, chosen + 1);
    rec(start + 1, chosen);
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("minimax_theta matches the vertex-enumeration oracle") {
  Rng rng(30);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + rng.index(3);
    const std::size_t d = 1 + rng.index(2);
    Matrix phi(n, d);
    for (double& x : phi.a) x = rng.normal();
    Vector q(n);
    for (double& x : q) x = rng.normal();
    const double lp = cheb_value(phi, minimax_theta(phi, q), q);
    const double oracle = cheb_oracle(phi, q);
    CHECK(lp <= oracle + 1e-6);
    CHECK(lp >= oracle - 1e-6);
  }
}

TEST_CASE("bound_ottd on tabular full coverage") {
  // Tabular features, full coverage, representable values: only eps_stat left.
  Mdp m(2, 1, 0.9);
  m.p(0, 0, 1) = 1.0;
  m.p(1, 0, 0) = 1.0;
  m.r(0, 0) = 0.5;
  m.r(1, 0) = -0.25;
  const Policy pi = Policy::uniform(2, 1);
  const FeatureMatrix phi(Matrix::identity(2));
  const TransitionDataset ds = collect_iid(m, Vector{0.5, 0.5}, pi, 60, 3);
  const BuildResult built = build_empirical(ds, phi, pi, pi, CorrectionMode::sample_target_action, 0.9);
  REQUIRE(built.model.k == 2);
  const Vector q = true_q(m, pi);
  const BoundReport r = bound_ottd(built.model, phi.phi, q, 0.1);
  CHECK(r.eps_projection <= 1e-9);
  CHECK(r.eps_approx <= 1e-9);
  CHECK(r.eps_stat > 0.0);
  REQUIRE(r.actual_error.has_value());
  CHECK(*r.actual_error <= r.total);

  EmpiricalModel no_counts = built.model;
  no_counts.counts.assign(no_counts.counts.size(), 0);
  CHECK_THROWS_AS((void)bound_ottd(no_counts, phi.phi, q, 0.1), Error);
}

TEST_CASE("bound_expected inequality") {
  // Representable q: both sides zero.
  Matrix phi(2, 2, {1.0, 0.0, 0.0, 1.0});
  const ExpectedBound eb = bound_expected(phi, Vector{0.3, -0.7}, 0.9);
  CHECK(eb.lhs <= 1e-12);
  CHECK(eb.bound <= 1e-9);

  // Random under-parameterized instances: inequality holds.
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 3 + rng.index(4);
    const std::size_t d = 1 + rng.index(n - 1);
    Matrix f(n, d);
    for (double& x : f.a) x = rng.normal();
    Vector q(n);
    for (double& x : q) x = rng.normal();
    const double gamma = rng.uniform(0.5, 0.95);
    const ExpectedBound b = bound_expected(f, q, gamma);
    CHECK(b.lhs <= b.bound + 1e-9);
  }
}

TEST_CASE("bound_nis_episodic rho scaling") {
  Mdp m(2, 1, 0.9);
  m.p(0, 0, 1) = 1.0;
  m.p(1, 0, 1) = 1.0;
  m.r(0, 0) = 0.5;
  const Policy pi = Policy::uniform(2, 1);
  const FeatureMatrix phi(Matrix::identity(2));
  const TransitionDataset ds = collect_trajectories(m, pi, Vector{1.0, 0.0}, 8, 4, {1}, 5);
  const BuildResult built = build_empirical(ds, phi, pi, pi, CorrectionMode::nis, 0.9);
  const Vector q = true_q(m, pi);

  // pi == mu: rho_M = 1 and the stat term uses max{rho_M - 1, 1} = 1.
  REQUIRE(built.nis.has_value());
  CHECK(built.nis->rho_m == doctest::Approx(1.0));
  const BoundReport base = bound_nis_episodic(built.model, *built.nis, phi.phi, q, 0.1);

  NisModel inflated = *built.nis;
  inflated.rho_m = 3.0;
  const BoundReport scaled = bound_nis_episodic(built.model, inflated, phi.phi, q, 0.1);
  CHECK(scaled.eps_stat == doctest::Approx(6.0 * base.eps_stat).epsilon(1e-12));
  CHECK(scaled.eps_projection == doctest::Approx(base.eps_projection));
  CHECK(scaled.eps_approx == doctest::Approx(base.eps_approx));
}

TEST_CASE("bound_continuing weights the loop penalty by stationary mass") {
  // Ergodic 3-state chain.
  Mdp m(3, 1, 0.9);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t s2 = 0; s2 < 3; ++s2) m.p(s, 0, s2) = s2 == (s + 1) % 3 ? 0.7 : 0.15;
    m.r(s, 0) = 0.2 * static_cast<double>(s) - 0.1;
  }
  const Policy pi = Policy::uniform(3, 1);
  const FeatureMatrix phi(Matrix::identity(3));
  const TransitionDataset ds = collect_trajectories(m, pi, Vector{1.0 / 3, 1.0 / 3, 1.0 / 3}, 12, 6, {}, 9);
  const BuildResult built = build_empirical(ds, phi, pi, pi, CorrectionMode::nis, 0.9);
  const Vector q = true_q(m, pi);
  const BoundReport r = bound_continuing(built.model, *built.nis, phi.phi, q, m, pi, 0.1);
  CHECK(r.norm_kind == NormKind::d_pi_weighted);
  CHECK(r.total > 0.0);
  REQUIRE(r.actual_error.has_value());
  CHECK(*r.actual_error <= r.total);
  CHECK(r.detail.find("loop_mass=") != std::string::npos);
}
