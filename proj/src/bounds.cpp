#include "ottd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ottd/learners.hpp"
#include "ottd/numerics/linalg.hpp"

namespace ottd {

namespace {

// Dense primal simplex for min t s.t. -t <= Phi theta - q <= t. Variables
// [theta+ (d), theta- (d), t] >= 0 plus one slack per constraint. The t column
// is -1 in every row, so a single pivot on the most-negative-rhs row yields a
// feasible basis and no artificial variables are needed.
Vector chebyshev_lp(const Matrix& phi, const Vector& q) {
  const std::size_t n = phi.rows, d = phi.cols;
  const std::size_t ncon = 2 * n;
  const std::size_t nvar = 2 * d + 1;
  const std::size_t ntot = nvar + ncon;
  const std::size_t tcol = 2 * d;

  Matrix t(ncon + 1, ntot + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      t(i, j) = phi(i, j);
      t(i, d + j) = -phi(i, j);
      t(n + i, j) = -phi(i, j);
      t(n + i, d + j) = phi(i, j);
    }
    t(i, tcol) = -1.0;
    t(n + i, tcol) = -1.0;
    t(i, nvar + i) = 1.0;
    t(n + i, nvar + n + i) = 1.0;
    t(i, ntot) = q[i];
    t(n + i, ntot) = -q[i];
  }
  // Objective row: min t.
  t(ncon, tcol) = 1.0;

  std::vector<std::size_t> basis(ncon);
  for (std::size_t i = 0; i < ncon; ++i) basis[i] = nvar + i;

  auto pivot = [&](std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / t(pr, pc);
    for (std::size_t j = 0; j <= ntot; ++j) t(pr, j) *= inv;
    for (std::size_t i = 0; i <= ncon; ++i) {
      if (i == pr) continue;
      const double f = t(i, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= ntot; ++j) t(i, j) -= f * t(pr, j);
    }
    if (pr < ncon) basis[pr] = pc;
  };

  // Make the basis feasible: bring t in on the most negative rhs row.
  std::size_t worst = ncon;
  double worst_rhs = -1e-12;
  for (std::size_t i = 0; i < ncon; ++i)
    if (t(i, ntot) < worst_rhs) {
      worst_rhs = t(i, ntot);
      worst = i;
    }
  if (worst < ncon) pivot(worst, tcol);

  const std::size_t max_iters = 20000 + 40 * ntot;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const bool bland = iter > 5000;
    std::size_t enter = ntot;
    double best = -1e-9;
    for (std::size_t j = 0; j < ntot; ++j) {
      const double rc = t(ncon, j);
      if (rc < best) {
        best = rc;
        enter = j;
        if (bland) break;
      }
    }
    if (enter == ntot) break;  // optimal
    std::size_t leave = ncon;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ncon; ++i) {
      const double cij = t(i, enter);
      if (cij <= 1e-11) continue;
      const double ratio = t(i, ntot) / cij;
      if (ratio < best_ratio - 1e-12 || (std::fabs(ratio - best_ratio) <= 1e-12 &&
                                         (leave == ncon || basis[i] < basis[leave]))) {
        best_ratio = ratio;
        leave = i;
      }
    }
    if (leave == ncon) fail(ErrorKind::precondition, "minimax_theta: LP unbounded");
    pivot(leave, enter);
  }

  Vector x(nvar, 0.0);
  for (std::size_t i = 0; i < ncon; ++i)
    if (basis[i] < nvar) x[basis[i]] = t(i, ntot);
  Vector theta(d);
  for (std::size_t j = 0; j < d; ++j) theta[j] = x[j] - x[d + j];
  return theta;
}

double cheb_residual(const Matrix& phi, const Vector& theta, const Vector& q) {
  const Vector v = matvec(phi, theta);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::fabs(v[i] - q[i]));
  return r;
}

long min_count(const EmpiricalModel& model) {
  long mn = std::numeric_limits<long>::max();
  for (long c : model.counts) mn = std::min(mn, c);
  return mn;
}

Vector dpi_sqrt(const Vector& d_pi) {
  Vector s(d_pi.size());
  for (std::size_t i = 0; i < d_pi.size(); ++i) s[i] = std::sqrt(std::max(d_pi[i], 0.0));
  return s;
}

double weighted_vec_norm(const Vector& x, const Vector& d_pi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += d_pi[i] * x[i] * x[i];
  return std::sqrt(acc);
}

// Induced D_pi norm: || D^{1/2} A D^{-1/2} ||_2, on the support of d_pi.
double weighted_mat_norm(const Matrix& a, const Vector& d_pi) {
  Matrix scaled = a;
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double si = std::sqrt(std::max(d_pi[i], 1e-15));
    for (std::size_t j = 0; j < a.cols; ++j) {
      const double sj = std::sqrt(std::max(d_pi[j], 1e-15));
      scaled(i, j) = a(i, j) * si / sj;
    }
  }
  return spectral_norm(scaled);
}

Vector weighted_least_squares(const Matrix& phi, const Vector& q, const Vector& d_pi) {
  const Vector s = dpi_sqrt(d_pi);
  const Matrix sphi = diag_scale_rows(s, phi);
  Vector sq(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) sq[i] = s[i] * q[i];
  return matvec(pinv(sphi), sq);
}

}  // namespace

Vector minimax_theta(const Matrix& phi, const Vector& q) {
  if (phi.rows != q.size()) fail(ErrorKind::shape, "minimax_theta: dimension mismatch");
  require_finite(phi, "minimax_theta");
  require_finite(q, "minimax_theta");
  return chebyshev_lp(phi, q);
}

std::string format_report(const BoundReport& r) {
  std::ostringstream os;
  os << "eps_stat=" << r.eps_stat << " eps_projection=" << r.eps_projection << " eps_approx=" << r.eps_approx
     << " total=" << r.total << " delta=" << r.delta
     << " norm=" << (r.norm_kind == NormKind::infinity ? "infinity" : "d_pi_weighted");
  if (r.actual_error) os << " actual_error=" << *r.actual_error;
  if (!r.detail.empty()) os << " (" << r.detail << ")";
  return os.str();
}

BoundReport bound_ottd(const EmpiricalModel& model, const Matrix& phi, const Vector& q_true, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::invalid_input, "bound_ottd: delta must be in (0,1)");
  if (phi.rows != model.n_states * model.n_actions || phi.cols != model.M.cols)
    fail(ErrorKind::shape, "bound_ottd: feature shape mismatch");
  const long mn = min_count(model);
  if (model.counts.empty() || mn <= 0) fail(ErrorKind::degenerate_data, "bound_ottd: zero transition counts");
  const double gamma = model.gamma;
  const Matrix mp = pinv(model.M);
  const Matrix phi_mp = matmul(phi, mp);
  const double c = inf_norm(phi_mp);
  const double log_term = std::log(2.0 * static_cast<double>(model.k) * static_cast<double>(model.n_actions) / delta);

  BoundReport r;
  r.delta = delta;
  r.norm_kind = NormKind::infinity;
  r.theta_star = minimax_theta(phi, q_true);
  r.eps_stat = c / ((1.0 - gamma) * (1.0 - gamma)) * std::sqrt(log_term / (2.0 * static_cast<double>(mn)));

  Vector perp_val = matvec(phi, r.theta_star);
  const Vector proj = matvec(phi_mp, matvec(model.M, r.theta_star));
  for (std::size_t i = 0; i < perp_val.size(); ++i) perp_val[i] -= proj[i];
  r.eps_projection = c / (1.0 - gamma) * inf_norm(perp_val);
  r.eps_approx = 2.0 * c / (1.0 - gamma) * cheb_residual(phi, r.theta_star, q_true);
  r.total = r.eps_stat + r.eps_projection + r.eps_approx;

  const FixedPoint fp = fixed_point_ottd(model, Vector(model.M.cols, 0.0));
  r.actual_error = cheb_residual(phi, fp.theta, q_true);
  if (!fp.condition_ok) r.detail = fp.note;
  return r;
}

ExpectedBound bound_expected(const Matrix& phi, const Vector& q_true, double gamma) {
  if (phi.rows != q_true.size()) fail(ErrorKind::shape, "bound_expected: dimension mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::invalid_input, "bound_expected: gamma out of range");
  // Fixed-point values Phi Phi+ q equal the orthogonal projection of q.
  const Vector proj = matvec(phi, matvec(pinv(phi), q_true));
  double lhs = 0.0;
  for (std::size_t i = 0; i < q_true.size(); ++i) lhs = std::max(lhs, std::fabs(proj[i] - q_true[i]));
  const Vector theta_star = minimax_theta(phi, q_true);
  const double bound = 2.0 / (1.0 - gamma) * cheb_residual(phi, theta_star, q_true);
  if (lhs > bound + 1e-9)
    fail(ErrorKind::precondition, "bound_expected: Cor 3.4 inequality violated (numerical defect)");
  return {lhs, bound};
}

BoundReport bound_nis_episodic(const EmpiricalModel& model, const NisModel& nis, const Matrix& phi,
                               const Vector& q_true, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::invalid_input, "bound_nis_episodic: delta out of range");
  const long mn = min_count(model);
  if (model.counts.empty() || mn <= 0)
    fail(ErrorKind::degenerate_data, "bound_nis_episodic: zero transition counts");
  const double gamma = model.gamma;
  const Matrix mp = pinv(model.M);
  const Matrix phi_mp = matmul(phi, mp);
  const double c = inf_norm(phi_mp);
  const double log_term = std::log(4.0 * static_cast<double>(model.k) * static_cast<double>(model.n_actions) / delta);
  const double rho_factor = nis.rho_m * std::max(nis.rho_m - 1.0, 1.0);

  BoundReport r;
  r.delta = delta;
  r.norm_kind = NormKind::infinity;
  r.theta_star = minimax_theta(phi, q_true);
  r.eps_stat = c * rho_factor * log_term / ((1.0 - gamma) * (1.0 - gamma) * std::sqrt(static_cast<double>(mn)));

  Vector perp_val = matvec(phi, r.theta_star);
  const Vector proj = matvec(phi_mp, matvec(model.M, r.theta_star));
  for (std::size_t i = 0; i < perp_val.size(); ++i) perp_val[i] -= proj[i];
  r.eps_projection = c / (1.0 - gamma) * inf_norm(perp_val);
  r.eps_approx = 2.0 * c / (1.0 - gamma) * cheb_residual(phi, r.theta_star, q_true);
  r.total = r.eps_stat + r.eps_projection + r.eps_approx;

  const FixedPoint fp = fixed_point_nis(model, nis, Vector(model.M.cols, 0.0));
  r.actual_error = cheb_residual(phi, fp.theta, q_true);
  if (!fp.condition_ok) r.detail = fp.note;
  return r;
}

BoundReport bound_continuing(const EmpiricalModel& model, const NisModel& nis, const Matrix& phi,
                             const Vector& q_true, const Mdp& mdp, const Policy& pi, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::invalid_input, "bound_continuing: delta out of range");
  const long mn = min_count(model);
  if (model.counts.empty() || mn <= 0) fail(ErrorKind::degenerate_data, "bound_continuing: zero transition counts");
  const double gamma = model.gamma;
  const Matrix p_pi = state_action_transition(mdp, pi);
  const Vector d_pi = stationary_distribution(p_pi);  // multiplicity error propagates

  const Matrix mp = pinv(model.M);
  const Matrix phi_mp_h = matmul(matmul(phi, mp), model.H);
  const double c = weighted_mat_norm(phi_mp_h, d_pi);
  const double p_nis_norm = weighted_mat_norm(nis.Phat, d_pi);
  const double log_term = std::log(4.0 * static_cast<double>(model.k) * static_cast<double>(model.n_actions) / delta);
  const double rho_factor = nis.rho_m * std::max(nis.rho_m - 1.0, 1.0);

  // Stationary mass sitting on pairs whose estimates were contaminated by an
  // artificial loop transition.
  double loop_mass = 0.0;
  for (std::size_t j = 0; j < model.k; ++j)
    if (model.pair_has_loop[j]) loop_mass += d_pi[model.seen_pairs[j]];
  const double loop_root = std::sqrt(loop_mass);

  BoundReport r;
  r.delta = delta;
  r.norm_kind = NormKind::d_pi_weighted;
  r.theta_star = weighted_least_squares(phi, q_true, d_pi);

  r.eps_stat = c * rho_factor * log_term / ((1.0 - gamma) * (1.0 - gamma) * std::sqrt(static_cast<double>(mn))) +
               2.0 * gamma * c * loop_root / ((1.0 - gamma) * (1.0 - gamma)) + c * loop_root / (1.0 - gamma);

  Vector perp_val = matvec(phi, r.theta_star);
  const Vector proj = matvec(matmul(phi, mp), matvec(model.M, r.theta_star));
  for (std::size_t i = 0; i < perp_val.size(); ++i) perp_val[i] -= proj[i];
  r.eps_projection = c * (1.0 + gamma * p_nis_norm) / (1.0 - gamma) * weighted_vec_norm(perp_val, d_pi);

  Vector resid = matvec(phi, r.theta_star);
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= q_true[i];
  r.eps_approx = c * (2.0 + gamma * p_nis_norm) / (1.0 - gamma) * weighted_vec_norm(resid, d_pi);
  r.total = r.eps_stat + r.eps_projection + r.eps_approx;

  const FixedPoint fp = fixed_point_nis(model, nis, Vector(model.M.cols, 0.0));
  Vector err = matvec(phi, fp.theta);
  for (std::size_t i = 0; i < err.size(); ++i) err[i] -= q_true[i];
  r.actual_error = weighted_vec_norm(err, d_pi);
  std::ostringstream os;
  os << "C=" << c << " ||P_nis||_Dpi=" << p_nis_norm << " loop_mass=" << loop_mass;
  if (!fp.condition_ok) os << "; " << fp.note;
  r.detail = os.str();
  return r;
}

}  // namespace ottd
