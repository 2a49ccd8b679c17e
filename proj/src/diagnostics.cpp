#include "ottd/diagnostics.hpp"

#include <cmath>
#include <sstream>

#include "ottd/numerics/linalg.hpp"

namespace ottd {

namespace {

constexpr double kNormSlack = 1e-9;

Matrix minus_scaled_plus_identity(const Matrix& m, double s) {
  Matrix out = scale(m, -s);
  for (std::size_t i = 0; i < out.rows; ++i) out(i, i) += 1.0;
  return out;
}

}  // namespace

std::string format_report(const ConditionReport& r) {
  std::ostringstream os;
  os << (r.satisfied ? "[ok]   " : "[FAIL] ") << r.name << ": value=" << r.value << " threshold=" << r.threshold;
  if (!r.detail.empty()) os << " (" << r.detail << ")";
  return os.str();
}

std::vector<ConditionReport> check_otd(const EmpiricalModel& model, double eta) {
  std::vector<ConditionReport> out;
  Vector dk_diag(model.k);
  for (std::size_t i = 0; i < model.k; ++i) dk_diag[i] = model.Dk(i, i);
  // rho(I - eta (M - gamma N) M^T D_k): k x k form.
  const Matrix mgn = sub(model.M, scale(model.N, model.gamma));
  const Matrix prod = matmul(mgn, diag_scale_cols(transpose(model.M), dk_diag));
  const double rho = spectral_radius(minus_scaled_plus_identity(prod, eta));
  out.push_back({"otd spectral radius rho(I - eta (M-gamma N) M^T D_k)", rho, 1.0, rho < 1.0, ""});

  const Matrix w = matmul(model.N, pinv(model.M));
  const double winf = inf_norm(w);
  const double w2 = spectral_norm(w);
  out.push_back({"sub-multiplicative norm of N M+", winf, 1.0,
                 winf <= 1.0 + kNormSlack || w2 <= 1.0 + kNormSlack,
                 "infinity norm reported; spectral norm = " + std::to_string(w2)});
  return out;
}

ConditionReport check_ottd(const EmpiricalModel& model) { return check_ottd(model, model.N); }

ConditionReport check_ottd(const EmpiricalModel& model, const Matrix& n_variant) {
  const Matrix w = matmul(n_variant, pinv(model.M));
  const double winf = inf_norm(w);
  const double w2 = spectral_norm(w);
  return {"sub-multiplicative norm of N M+", winf, 1.0,
          winf <= 1.0 + kNormSlack || w2 <= 1.0 + kNormSlack,
          "infinity norm reported; spectral norm = " + std::to_string(w2)};
}

ConditionReport check_otq(const EmpiricalModel& model, const std::vector<Matrix>& phi_seen, double gamma) {
  if (phi_seen.size() != model.n_states) fail(ErrorKind::shape, "check_otq: phi_seen size mismatch");
  const Matrix mp = pinv(model.M);
  double worst = 0.0;
  for (const Matrix& block : phi_seen) worst = std::max(worst, inf_norm(matmul(block, mp)));
  const double threshold = 1.0 / gamma;
  return {"max_i ||Phi_i M+||_inf", worst, threshold, worst < threshold, ""};
}

std::size_t m_bar(const EmpiricalModel& model, double eta, double gamma) {
  if (!(eta > 0.0)) fail(ErrorKind::invalid_input, "m_bar: eta must be positive");
  const auto [lmin, lmax] = eig_range_mmtd(model.M, model.Dk);
  if (lmin <= 0.0) fail(ErrorKind::degenerate_model, "m_bar: M M^T D_k is not positive definite");
  if (eta * lmax >= 1.0)
    fail(ErrorKind::precondition, "m_bar: learning rate too large, rho(eta M M^T D_k) must be below 1");
  const double num = std::log(1.0 - gamma) - std::log((1.0 + gamma) * std::sqrt(static_cast<double>(model.k)));
  const double den = std::log(1.0 - eta * lmin);
  const double ratio = num / den;
  const double m = 1.0 + std::ceil(ratio);
  return m < 1.0 ? 1 : static_cast<std::size_t>(m);
}

IterationMatrix iteration_matrix(Algorithm algorithm, const Problem& problem, const LearnerConfig& cfg) {
  cfg.validate();
  const EmpiricalModel& model = problem.model;
  const std::size_t k = model.k;
  const std::size_t d = model.M.cols;
  const double gamma = model.gamma;

  const Matrix* n_eff = &model.N;
  Vector dk_diag(k);
  for (std::size_t i = 0; i < k; ++i) dk_diag[i] = model.Dk(i, i);
  if (algorithm == Algorithm::ottd_is || algorithm == Algorithm::ottd_nis) {
    if (!problem.nis) fail(ErrorKind::invalid_input, "iteration_matrix: IS/NIS algorithm without model");
    n_eff = &problem.nis->N;
    for (std::size_t i = 0; i < k; ++i) dk_diag[i] = problem.nis->Dk(i, i);
  }
  const Matrix mt_dk = diag_scale_cols(transpose(model.M), dk_diag);  // M^T D_k  (d x k)
  const Matrix mgn = sub(model.M, scale(*n_eff, gamma));              // M - gamma N

  switch (algorithm) {
    case Algorithm::otd:
    case Algorithm::expected_td:
      return {minus_scaled_plus_identity(matmul(mt_dk, mgn), cfg.eta), 1};
    case Algorithm::ottd:
    case Algorithm::ottd_is:
    case Algorithm::ottd_nis:
    case Algorithm::expected_target_td: {
      // B = sum_{i<m} (I - eta D_k M M^T)^i.
      Matrix kmat = diag_scale_rows(dk_diag, matmul(model.M, transpose(model.M)));
      kmat = minus_scaled_plus_identity(kmat, cfg.eta);
      Matrix b = Matrix::identity(k);
      Matrix acc = Matrix::identity(k);
      for (std::size_t i = 1; i < cfg.m; ++i) {
        acc = matmul(acc, kmat);
        b = add(b, acc);
      }
      const Matrix mtbd = matmul(transpose(model.M), diag_scale_cols(b, dk_diag));
      return {minus_scaled_plus_identity(matmul(mtbd, mgn), cfg.eta), cfg.m};
    }
    case Algorithm::rm:
      return {minus_scaled_plus_identity(matmul(diag_scale_cols(transpose(mgn), dk_diag), mgn), cfg.eta), 1};
    case Algorithm::baird_rm: {
      const double mix = cfg.mix.value_or(0.5);
      Matrix dir = add(scale(mt_dk, 1.0 - mix), scale(diag_scale_cols(transpose(mgn), dk_diag), mix));
      return {minus_scaled_plus_identity(matmul(dir, mgn), cfg.eta), 1};
    }
    case Algorithm::gtd2:
    case Algorithm::tdc: {
      const double eta2 = cfg.eta2.value_or(cfg.eta);
      const Matrix a = matmul(mt_dk, mgn);                                   // A = M^T D_k (M - gamma N)
      const Matrix c = matmul(mt_dk, model.M);                               // C = M^T D_k M
      const Matrix ndm = matmul(diag_scale_cols(transpose(*n_eff), dk_diag), model.M);  // N^T D_k M
      Matrix j(2 * d, 2 * d);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t cc = 0; cc < d; ++cc) {
          if (algorithm == Algorithm::gtd2) {
            j(r, cc) = (r == cc ? 1.0 : 0.0);
            j(r, d + cc) = cfg.eta * a(cc, r);  // eta A^T
          } else {
            j(r, cc) = (r == cc ? 1.0 : 0.0) - cfg.eta * a(r, cc);
            j(r, d + cc) = -cfg.eta * gamma * ndm(r, cc);
          }
          j(d + r, cc) = -eta2 * a(r, cc);
          j(d + r, d + cc) = (r == cc ? 1.0 : 0.0) - eta2 * c(r, cc);
        }
      return {std::move(j), 1};
    }
    case Algorithm::otq:
      fail(ErrorKind::invalid_input, "iteration_matrix: otq is not affine in theta");
  }
  fail(ErrorKind::invalid_input, "iteration_matrix: unknown algorithm");
}

double convergence_metric(const Matrix& c, std::size_t steps_per_application) {
  if (!c.square()) fail(ErrorKind::shape, "convergence_metric: matrix not square");
  if (steps_per_application == 0) fail(ErrorKind::invalid_input, "convergence_metric: steps must be >= 1");
  double best = -1.0;
  for (const auto& z : eigenvalues(c)) {
    if (std::abs(z - std::complex<double>(1.0, 0.0)) <= 1e-9) continue;  // invariant subspace
    best = std::max(best, std::abs(z));
  }
  if (best < 0.0) return 1.0;
  return std::pow(best, 1.0 / static_cast<double>(steps_per_application));
}

ConditionReport detect_nonexistence(const FeatureMatrix& phi, const Matrix& p_pi, const Vector& d, double gamma) {
  if (p_pi.rows != phi.phi.rows || d.size() != phi.phi.rows)
    fail(ErrorKind::shape, "detect_nonexistence: dimension mismatch");
  Matrix core = scale(p_pi, -gamma);
  for (std::size_t i = 0; i < core.rows; ++i) core(i, i) += 1.0;
  const Matrix a = matmul(transpose(phi.phi), diag_scale_rows(d, matmul(core, phi.phi)));
  const Vector sv = singular_values(a);
  const double smin = sv.empty() ? 0.0 : sv.back();
  return {"smallest singular value of Phi^T D (I - gamma P_pi) Phi", smin, 1e-10, smin >= 1e-10,
          smin < 1e-10 ? "TD fixed point does not exist (0/0)" : ""};
}

}  // namespace ottd
