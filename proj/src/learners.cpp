#include "ottd/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ottd/numerics/kernels.hpp"
#include "ottd/numerics/linalg.hpp"

namespace ottd {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool uses_target(Algorithm a) {
  return a == Algorithm::ottd || a == Algorithm::ottd_is || a == Algorithm::ottd_nis || a == Algorithm::otq ||
         a == Algorithm::expected_target_td;
}

bool uses_aux(Algorithm a) { return a == Algorithm::gtd2 || a == Algorithm::tdc; }

bool uses_nis(Algorithm a) { return a == Algorithm::ottd_is || a == Algorithm::ottd_nis; }

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::otd: return "otd";
    case Algorithm::ottd: return "ottd";
    case Algorithm::rm: return "rm";
    case Algorithm::baird_rm: return "baird_rm";
    case Algorithm::gtd2: return "gtd2";
    case Algorithm::tdc: return "tdc";
    case Algorithm::ottd_is: return "ottd_is";
    case Algorithm::ottd_nis: return "ottd_nis";
    case Algorithm::otq: return "otq";
    case Algorithm::expected_td: return "expected_td";
    case Algorithm::expected_target_td: return "expected_target_td";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  for (Algorithm a : {Algorithm::otd, Algorithm::ottd, Algorithm::rm, Algorithm::baird_rm, Algorithm::gtd2,
                      Algorithm::tdc, Algorithm::ottd_is, Algorithm::ottd_nis, Algorithm::otq,
                      Algorithm::expected_td, Algorithm::expected_target_td})
    if (name == algorithm_name(a)) return a;
  return std::nullopt;
}

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "unknown";
}

void LearnerConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorKind::invalid_input, "LearnerConfig: eta must be >= 0");
  if (m == 0) fail(ErrorKind::invalid_input, "LearnerConfig: m must be >= 1");
  if (eta2 && (!(*eta2 >= 0.0) || !std::isfinite(*eta2)))
    fail(ErrorKind::invalid_input, "LearnerConfig: eta2 must be >= 0");
  if (mix && (*mix < 0.0 || *mix > 1.0)) fail(ErrorKind::invalid_input, "LearnerConfig: mix must be in [0,1]");
  if (!(tol >= 0.0) || !(divergence_threshold > 0.0))
    fail(ErrorKind::invalid_input, "LearnerConfig: invalid tolerances");
}

double emsbe(const Vector& theta, const Matrix& m, const Matrix& n, const Vector& r, const Matrix& dk,
             double gamma) {
  if (theta.size() != m.cols || n.cols != m.cols || r.size() != m.rows || dk.rows != m.rows)
    fail(ErrorKind::shape, "emsbe: dimension mismatch");
  const Vector mt = matvec(m, theta);
  const Vector nt = matvec(n, theta);
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double res = r[i] + gamma * nt[i] - mt[i];
    acc += dk(i, i) * res * res;
  }
  return 0.5 * acc;
}

double emsbe(const Vector& theta, const EmpiricalModel& model) {
  return emsbe(theta, model.M, model.N, model.R, model.Dk, model.gamma);
}

namespace {

// One learner iteration with preallocated scratch; shared by the public step
// functions and the run loop so the semantics exist in exactly one place.
struct Stepper {
  Algorithm alg;
  const EmpiricalModel& model;
  const NisModel* nis = nullptr;
  const std::vector<Matrix>* phi_seen = nullptr;
  const LearnerConfig& cfg;

  const Matrix* m_mat;
  const Matrix* n_mat;
  const Matrix* dk_mat;
  const Vector* r_vec;

  Vector res_k, w_k, delta_k, u_k, g_states, y_k, upd_d, upd2_d;

  Stepper(Algorithm a, const EmpiricalModel& mod, const NisModel* ns, const std::vector<Matrix>* ps,
          const LearnerConfig& c)
      : alg(a), model(mod), nis(ns), phi_seen(ps), cfg(c) {
    m_mat = &model.M;
    n_mat = &model.N;
    dk_mat = &model.Dk;
    r_vec = &model.R;
    if (uses_nis(alg)) {
      if (!nis) fail(ErrorKind::invalid_input, "run: IS/NIS algorithm without a NIS model");
      n_mat = &nis->N;
      dk_mat = &nis->Dk;
    }
    if (alg == Algorithm::otq && (!phi_seen || phi_seen->empty()))
      fail(ErrorKind::invalid_input, "run: otq requires per-state feature blocks");
    const std::size_t k = model.k, d = m_mat->cols;
    res_k.resize(k);
    w_k.resize(k);
    delta_k.resize(k);
    u_k.resize(k);
    y_k.resize(k);
    g_states.resize(model.n_states);
    upd_d.resize(d);
    upd2_d.resize(d);
  }

  // Bootstrap values per state from the target parameter (OTQ).
  void bootstrap_states(const Vector& param) {
    for (std::size_t s = 0; s < model.n_states; ++s) {
      const Matrix& block = (*phi_seen)[s];
      double best = 0.0;
      bool any = false;
      for (std::size_t rrow = 0; rrow < block.rows; ++rrow) {
        double v = 0.0;
        const double* row = block.row(rrow);
        for (std::size_t c = 0; c < block.cols; ++c) v += row[c] * param[c];
        if (cfg.otq_norm_form) v = std::fabs(v);
        if (!any || v > best) best = v;
        any = true;
      }
      g_states[s] = any ? best : 0.0;
    }
  }

  // OTQ target: y = R + gamma Phat_state g.
  void otq_targets(const Vector& param) {
    bootstrap_states(param);
    kernels::matvec(model.Phat_state.a.data(), g_states.data(), y_k.data(), model.k, model.n_states);
    for (std::size_t j = 0; j < model.k; ++j) y_k[j] = (*r_vec)[j] + model.gamma * y_k[j];
  }

  void step(Vector& theta, Vector& targ, Vector& aux, std::size_t t) {
    const Matrix& M = *m_mat;
    const Matrix& N = *n_mat;
    const Matrix& Dk = *dk_mat;
    const Vector& R = *r_vec;
    const std::size_t k = model.k;
    const double eta = cfg.eta;
    const double gamma = model.gamma;

    if (uses_target(alg) && t % cfg.m == 0) targ = theta;

    switch (alg) {
      case Algorithm::otd:
      case Algorithm::expected_td:
      case Algorithm::ottd:
      case Algorithm::expected_target_td:
      case Algorithm::ottd_is:
      case Algorithm::ottd_nis: {
        const Vector& boot = uses_target(alg) ? targ : theta;
        kernels::matvec(M.a.data(), theta.data(), res_k.data(), k, M.cols);
        kernels::matvec(N.a.data(), boot.data(), w_k.data(), k, N.cols);
        for (std::size_t j = 0; j < k; ++j) res_k[j] = Dk(j, j) * (res_k[j] - R[j] - gamma * w_k[j]);
        kernels::tmatvec(M.a.data(), res_k.data(), upd_d.data(), k, M.cols);
        for (std::size_t c = 0; c < theta.size(); ++c) theta[c] -= eta * upd_d[c];
        break;
      }
      case Algorithm::rm:
      case Algorithm::baird_rm: {
        kernels::matvec(M.a.data(), theta.data(), res_k.data(), k, M.cols);
        kernels::matvec(N.a.data(), theta.data(), w_k.data(), k, N.cols);
        for (std::size_t j = 0; j < k; ++j) res_k[j] = Dk(j, j) * (res_k[j] - R[j] - gamma * w_k[j]);
        kernels::tmatvec(M.a.data(), res_k.data(), upd_d.data(), k, M.cols);
        kernels::tmatvec(N.a.data(), res_k.data(), upd2_d.data(), k, N.cols);
        // rm: full gradient (M - gamma N)^T D res; baird_rm: mixes in the TD
        // semi-gradient M^T D res with weight (1 - mix).
        const double mix = alg == Algorithm::rm ? 1.0 : cfg.mix.value_or(0.5);
        for (std::size_t c = 0; c < theta.size(); ++c)
          theta[c] -= eta * (upd_d[c] - mix * gamma * upd2_d[c]);
        break;
      }
      case Algorithm::gtd2:
      case Algorithm::tdc: {
        const double eta2 = cfg.eta2.value_or(cfg.eta);
        kernels::matvec(M.a.data(), theta.data(), res_k.data(), k, M.cols);
        kernels::matvec(N.a.data(), theta.data(), w_k.data(), k, N.cols);
        for (std::size_t j = 0; j < k; ++j) delta_k[j] = Dk(j, j) * (R[j] + gamma * w_k[j] - res_k[j]);
        kernels::matvec(M.a.data(), aux.data(), u_k.data(), k, M.cols);
        for (std::size_t j = 0; j < k; ++j) u_k[j] *= Dk(j, j);
        if (alg == Algorithm::gtd2) {
          // theta += eta (M - gamma N)^T D_k M w
          kernels::tmatvec(M.a.data(), u_k.data(), upd_d.data(), k, M.cols);
          kernels::tmatvec(N.a.data(), u_k.data(), upd2_d.data(), k, N.cols);
          for (std::size_t c = 0; c < theta.size(); ++c) theta[c] += eta * (upd_d[c] - gamma * upd2_d[c]);
        } else {
          // theta += eta E[delta phi] - eta gamma N^T D_k M w
          kernels::tmatvec(M.a.data(), delta_k.data(), upd_d.data(), k, M.cols);
          kernels::tmatvec(N.a.data(), u_k.data(), upd2_d.data(), k, N.cols);
          for (std::size_t c = 0; c < theta.size(); ++c) theta[c] += eta * (upd_d[c] - gamma * upd2_d[c]);
        }
        for (std::size_t j = 0; j < k; ++j) delta_k[j] -= u_k[j];
        kernels::tmatvec(M.a.data(), delta_k.data(), upd_d.data(), k, M.cols);
        for (std::size_t c = 0; c < aux.size(); ++c) aux[c] += eta2 * upd_d[c];
        break;
      }
      case Algorithm::otq: {
        otq_targets(targ);
        kernels::matvec(M.a.data(), theta.data(), res_k.data(), k, M.cols);
        for (std::size_t j = 0; j < k; ++j) res_k[j] = Dk(j, j) * (res_k[j] - y_k[j]);
        kernels::tmatvec(M.a.data(), res_k.data(), upd_d.data(), k, M.cols);
        for (std::size_t c = 0; c < theta.size(); ++c) theta[c] -= eta * upd_d[c];
        break;
      }
    }
  }

  // Bellman residual consistent with the algorithm's own bootstrap matrices.
  double residual_emsbe(const Vector& theta) {
    if (alg == Algorithm::otq) {
      otq_targets(theta);
      kernels::matvec(m_mat->a.data(), theta.data(), res_k.data(), model.k, m_mat->cols);
      double acc = 0.0;
      for (std::size_t j = 0; j < model.k; ++j) {
        const double r = res_k[j] - y_k[j];
        acc += (*dk_mat)(j, j) * r * r;
      }
      return 0.5 * acc;
    }
    return emsbe(theta, *m_mat, *n_mat, *r_vec, *dk_mat, model.gamma);
  }
};

LearnerState one_step(Algorithm alg, LearnerState state, const EmpiricalModel& model, const NisModel* nis,
                      const std::vector<Matrix>* phi_seen, const LearnerConfig& cfg) {
  cfg.validate();
  const std::size_t d = model.M.cols;
  if (state.theta.size() != d) fail(ErrorKind::shape, "step: theta dimension mismatch");
  if (state.theta_targ.size() != d) state.theta_targ = state.theta;
  Stepper st(alg, model, nis, phi_seen, cfg);
  Vector aux;
  if (uses_aux(alg)) {
    aux = state.aux_w.value_or(Vector(d, 0.0));
    if (aux.size() != d) fail(ErrorKind::shape, "step: aux dimension mismatch");
  } else {
    aux.assign(d, 0.0);
  }
  st.step(state.theta, state.theta_targ, aux, state.step);
  if (uses_aux(alg)) state.aux_w = aux;
  state.step += 1;
  return state;
}

}  // namespace

LearnerState otd_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg) {
  return one_step(Algorithm::otd, std::move(state), model, nullptr, nullptr, cfg);
}

LearnerState ottd_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg) {
  return one_step(Algorithm::ottd, std::move(state), model, nullptr, nullptr, cfg);
}

Vector ottd_combined_step(const Vector& theta_nm, const EmpiricalModel& model, const LearnerConfig& cfg) {
  cfg.validate();
  const Matrix& M = model.M;
  const Matrix& N = model.N;
  const std::size_t k = model.k;
  if (theta_nm.size() != M.cols) fail(ErrorKind::shape, "ottd_combined_step: theta dimension mismatch");
  // B = sum_{i<m} (I - eta D_k M M^T)^i, applied as theta' = theta - M^T B D_k [(M - gamma N) theta - R].
  Matrix kmat = matmul(model.Dk, matmul(M, transpose(M)));
  kmat = scale(kmat, -cfg.eta);
  for (std::size_t i = 0; i < k; ++i) kmat(i, i) += 1.0;
  Matrix b = Matrix::identity(k);
  Matrix acc = Matrix::identity(k);
  for (std::size_t i = 1; i < cfg.m; ++i) {
    acc = matmul(acc, kmat);
    b = add(b, acc);
  }
  Vector res = matvec(M, theta_nm);
  const Vector nt = matvec(N, theta_nm);
  for (std::size_t j = 0; j < k; ++j) res[j] = res[j] - model.gamma * nt[j] - model.R[j];
  Vector bres = matvec(b, matvec(model.Dk, res));
  Vector upd = tmatvec(M, bres);
  Vector out = theta_nm;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] -= cfg.eta * upd[c];
  return out;
}

LearnerState expected_step(LearnerState state, const Mdp& mdp, const Policy& pi, const FeatureMatrix& phi,
                           const Vector& lambda, const LearnerConfig& cfg, ExpectedVariant variant) {
  const EmpiricalModel model = expected_model(mdp, pi, phi, lambda);
  const Algorithm alg = variant == ExpectedVariant::td ? Algorithm::expected_td : Algorithm::expected_target_td;
  return one_step(alg, std::move(state), model, nullptr, nullptr, cfg);
}

LearnerState residual_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg,
                           ResidualVariant variant) {
  return one_step(variant == ResidualVariant::rm ? Algorithm::rm : Algorithm::baird_rm, std::move(state), model,
                  nullptr, nullptr, cfg);
}

LearnerState gradient_td_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg,
                              GradientTdVariant variant) {
  return one_step(variant == GradientTdVariant::gtd2 ? Algorithm::gtd2 : Algorithm::tdc, std::move(state), model,
                  nullptr, nullptr, cfg);
}

LearnerState ottd_nis_step(LearnerState state, const EmpiricalModel& model, const NisModel& nis,
                           const LearnerConfig& cfg) {
  return one_step(nis.normalized ? Algorithm::ottd_nis : Algorithm::ottd_is, std::move(state), model, &nis,
                  nullptr, cfg);
}

std::vector<Matrix> seen_feature_blocks(const EmpiricalModel& model, const FeatureMatrix& phi) {
  if (phi.phi.rows != model.n_states * model.n_actions)
    fail(ErrorKind::shape, "seen_feature_blocks: feature rows do not match |S||A|");
  std::vector<Matrix> blocks;
  blocks.reserve(model.n_states);
  for (std::size_t s = 0; s < model.n_states; ++s) {
    const auto& actions = model.seen_actions_by_state[s];
    if (actions.empty()) {
      blocks.emplace_back(1, phi.dim());  // zero row for unseen states
      continue;
    }
    Matrix block(actions.size(), phi.dim());
    for (std::size_t r = 0; r < actions.size(); ++r) {
      const std::size_t pair = s * model.n_actions + actions[r];
      for (std::size_t c = 0; c < phi.dim(); ++c) block(r, c) = phi.phi(pair, c);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

LearnerState otq_step(LearnerState state, const EmpiricalModel& model, const std::vector<Matrix>& phi_seen,
                      const LearnerConfig& cfg) {
  return one_step(Algorithm::otq, std::move(state), model, nullptr, &phi_seen, cfg);
}

FixedPoint fixed_point_ottd(const EmpiricalModel& model, const Vector& theta0) {
  const Matrix& M = model.M;
  const std::size_t k = model.k, d = M.cols;
  if (theta0.size() != d) fail(ErrorKind::shape, "fixed_point_ottd: theta0 dimension mismatch");
  const Matrix mp = pinv(M);
  const Matrix w = matmul(model.N, mp);
  FixedPoint out;
  const double winf = inf_norm(w);
  const double w2 = spectral_norm(w);
  out.condition_ok = winf <= 1.0 + 1e-9 || w2 <= 1.0 + 1e-9;
  if (!out.condition_ok)
    out.note = "warning: ||N M+|| exceeds 1 (inf=" + std::to_string(winf) + ", 2-norm=" + std::to_string(w2) + ")";
  Matrix iw = scale(w, -model.gamma);
  for (std::size_t i = 0; i < k; ++i) iw(i, i) += 1.0;
  Vector perp = theta0;
  const Vector proj = matvec(mp, matvec(M, theta0));
  for (std::size_t c = 0; c < d; ++c) perp[c] -= proj[c];
  Vector x1, x2;
  try {
    x1 = linear_solve(iw, model.R);
    x2 = linear_solve(iw, scale(matvec(model.N, perp), model.gamma));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular_system)
      fail(ErrorKind::nonexistence, "fixed_point_ottd: I - gamma N M+ is singular; fixed point does not exist");
    throw;
  }
  out.theta = matvec(mp, add(x1, x2));
  for (std::size_t c = 0; c < d; ++c) out.theta[c] += perp[c];
  return out;
}

FixedPoint fixed_point_nis(const EmpiricalModel& model, const NisModel& nis, const Vector& theta0) {
  const Matrix& M = model.M;
  const std::size_t k = model.k, d = M.cols;
  if (theta0.size() != d) fail(ErrorKind::shape, "fixed_point_nis: theta0 dimension mismatch");
  const Matrix mp = pinv(M);
  const Matrix w = matmul(nis.N, mp);
  FixedPoint out;
  const double winf = inf_norm(w);
  out.condition_ok = winf <= 1.0 + 1e-9 || spectral_norm(w) <= 1.0 + 1e-9;
  if (!out.condition_ok) out.note = "warning: ||N_nis M+||_inf = " + std::to_string(winf) + " exceeds 1";
  Matrix iw = scale(w, -model.gamma);
  for (std::size_t i = 0; i < k; ++i) iw(i, i) += 1.0;
  Vector x;
  try {
    x = linear_solve(iw, model.R);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular_system)
      fail(ErrorKind::nonexistence, "fixed_point_nis: I - gamma N_nis M+ is singular; fixed point does not exist");
    throw;
  }
  out.theta = matvec(mp, x);
  const Vector proj = matvec(mp, matvec(M, theta0));
  for (std::size_t c = 0; c < d; ++c) out.theta[c] += theta0[c] - proj[c];
  return out;
}

FixedPoint fixed_point_otq(const EmpiricalModel& model, const std::vector<Matrix>& phi_seen,
                           const Vector& theta0, bool norm_form, double tol) {
  const Matrix& M = model.M;
  const std::size_t k = model.k, d = M.cols;
  if (theta0.size() != d) fail(ErrorKind::shape, "fixed_point_otq: theta0 dimension mismatch");
  if (phi_seen.size() != model.n_states) fail(ErrorKind::shape, "fixed_point_otq: phi_seen size mismatch");
  const Matrix mp = pinv(M);

  FixedPoint out;
  double cond = 0.0;
  for (const Matrix& block : phi_seen) cond = std::max(cond, inf_norm(matmul(block, mp)));
  out.condition_ok = model.gamma * cond < 1.0;
  if (!out.condition_ok)
    out.note = "warning: max_i ||Phi_i M+||_inf = " + std::to_string(cond) + " >= 1/gamma";

  Vector qhat(k, 0.0);
  Vector g(model.n_states, 0.0);
  double initial_res = -1.0;
  bool converged = false;
  for (std::size_t it = 0; it < 2000000; ++it) {
    const Vector v = matvec(mp, qhat);
    for (std::size_t s = 0; s < model.n_states; ++s) {
      const Matrix& block = phi_seen[s];
      double best = 0.0;
      bool any = false;
      for (std::size_t r = 0; r < block.rows; ++r) {
        double val = 0.0;
        for (std::size_t c = 0; c < block.cols; ++c) val += block(r, c) * v[c];
        if (norm_form) val = std::fabs(val);
        if (!any || val > best) best = val;
        any = true;
      }
      g[s] = any ? best : 0.0;
    }
    Vector next = matvec(model.Phat_state, g);
    for (std::size_t j = 0; j < k; ++j) next[j] = model.R[j] + model.gamma * next[j];
    double res = 0.0;
    for (std::size_t j = 0; j < k; ++j) res = std::max(res, std::fabs(next[j] - qhat[j]));
    qhat = std::move(next);
    if (initial_res < 0.0) initial_res = res;
    if (res <= tol) {
      converged = true;
      break;
    }
    if (!std::isfinite(res) || res > 1e9 * std::max(1.0, initial_res))
      fail(ErrorKind::nonexistence, "fixed_point_otq: value iteration is not contracting");
  }
  if (!converged) fail(ErrorKind::nonexistence, "fixed_point_otq: value iteration failed to converge");
  out.theta = matvec(mp, qhat);
  const Vector proj = matvec(mp, matvec(M, theta0));
  for (std::size_t c = 0; c < d; ++c) out.theta[c] += theta0[c] - proj[c];
  return out;
}

RunResult run(Algorithm algorithm, const Problem& problem, const LearnerConfig& cfg, std::size_t trace_stride) {
  cfg.validate();
  const EmpiricalModel& model = problem.model;
  const std::size_t d = model.M.cols;
  if (problem.theta0.size() != d) fail(ErrorKind::shape, "run: theta0 dimension mismatch");
  if (problem.phi.cols != d) fail(ErrorKind::shape, "run: feature dimension mismatch");
  if (problem.q_true && problem.q_true->size() != problem.phi.rows)
    fail(ErrorKind::shape, "run: oracle length mismatch");

  Stepper st(algorithm, model, problem.nis ? &*problem.nis : nullptr,
             problem.phi_seen.empty() ? nullptr : &problem.phi_seen, cfg);

  Vector theta = problem.theta0;
  Vector targ = problem.theta0;
  Vector aux(d, 0.0);
  Vector values(problem.phi.rows);

  if (trace_stride == 0) trace_stride = std::max<std::size_t>(1, cfg.max_iters / 5000);

  auto evaluate = [&](double& ve, double& vnorm) {
    kernels::matvec(problem.phi.a.data(), theta.data(), values.data(), problem.phi.rows, d);
    vnorm = inf_norm(values);
    if (problem.q_true) {
      double e = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) e = std::max(e, std::fabs(values[i] - (*problem.q_true)[i]));
      ve = e;
    } else {
      ve = kNan;
    }
  };
  // Cheap per-step divergence trigger: ||Phi theta||_inf <= ||Phi||_inf ||theta||_inf.
  const double phi_gain = inf_norm(problem.phi);

  RunResult out;
  out.status = RunStatus::max_iters;
  double ve = kNan, vnorm = 0.0;
  evaluate(ve, vnorm);
  out.trace.push_back({0, ve, st.residual_emsbe(theta)});

  Vector prev_window = theta;
  Vector prev_window_aux = aux;
  std::size_t t = 0;
  for (; t < cfg.max_iters; ++t) {
    if (t % cfg.m == 0 && t > 0) {
      double change = 0.0;
      for (std::size_t c = 0; c < d; ++c) change = std::max(change, std::fabs(theta[c] - prev_window[c]));
      if (uses_aux(algorithm))
        for (std::size_t c = 0; c < d; ++c)
          change = std::max(change, std::fabs(aux[c] - prev_window_aux[c]));
      if (change <= cfg.tol) {
        out.status = RunStatus::converged;
        break;
      }
      prev_window = theta;
      prev_window_aux = aux;
    }
    st.step(theta, targ, aux, t);
    const std::size_t done = t + 1;
    const bool finite = all_finite(theta) && (!uses_aux(algorithm) || all_finite(aux));
    const bool at_stride = done % trace_stride == 0 || done == cfg.max_iters;
    const bool suspicious = !finite || phi_gain * inf_norm(theta) > cfg.divergence_threshold;
    if (at_stride || suspicious) {
      evaluate(ve, vnorm);
      if (!finite || vnorm > cfg.divergence_threshold) {
        out.status = RunStatus::diverged;
        out.trace.push_back({done, ve, finite ? st.residual_emsbe(theta) : kNan});
        ++t;
        break;
      }
      if (at_stride) out.trace.push_back({done, ve, st.residual_emsbe(theta)});
    }
  }

  if (!out.trace.empty() && out.trace.back().step < t) {
    evaluate(ve, vnorm);
    out.trace.push_back({t, ve, st.residual_emsbe(theta)});
  }

  out.final.theta = std::move(theta);
  out.final.theta_targ = std::move(targ);
  out.final.step = t;
  if (uses_aux(algorithm)) out.final.aux_w = std::move(aux);
  return out;
}

}  // namespace ottd
