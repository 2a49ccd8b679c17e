// Acceptance suite: one check per criterion, each printing PASS/FAIL with the
// measured quantities. Exits nonzero if any criterion fails.
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ottd/bounds.hpp"
#include "ottd/diagnostics.hpp"
#include "ottd/envs.hpp"
#include "ottd/learners.hpp"
#include "ottd/numerics/linalg.hpp"
#include "ottd/rng.hpp"

using namespace ottd;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, double seconds) {
  std::printf("[%s] criterion %2d: %s (%.2fs)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(), seconds);
  if (!pass) ++g_failures;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

std::size_t first_crossing(const RunResult& res, double level) {
  for (const TracePoint& t : res.trace)
    if (std::isfinite(t.max_value_error) && t.max_value_error <= level) return t.step;
  return static_cast<std::size_t>(-1);
}

Problem baird_problem() {
  const BairdProblem b = make_baird();
  Problem p;
  p.model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
  p.phi = b.phi.phi;
  p.q_true = true_q(b.mdp, b.pi);
  p.theta0 = b.theta0;
  return p;
}

// ---------------------------------------------------------------------------
// 1. Baird divergence/convergence behavior (Fig. 1).
// ---------------------------------------------------------------------------
void criterion_1() {
  const double t0 = omp_get_wtime();
  const Problem prob = baird_problem();
  bool pass = true;
  std::string note;

  LearnerConfig otd;
  otd.eta = 0.5;
  otd.max_iters = 2000;
  otd.divergence_threshold = 1e3;
  otd.tol = 0.0;
  const RunResult r_otd = run(Algorithm::otd, prob, otd, 1);
  const bool otd_blows = r_otd.status == RunStatus::diverged && r_otd.final.step <= 2000;
  if (!otd_blows) pass = false;
  note += "OTD>1e3@" + std::to_string(r_otd.final.step);

  LearnerConfig ottd;
  ottd.eta = 0.997;
  ottd.m = 3;
  ottd.max_iters = 10000;
  ottd.tol = 0.0;
  const RunResult r_ottd = run(Algorithm::ottd, prob, ottd, 1);
  const std::size_t hit001 = first_crossing(r_ottd, 1e-2);
  const std::size_t ottd_tenth = first_crossing(r_ottd, 1e-1);
  if (hit001 > 10000) pass = false;
  note += " OTTD<1e-2@" + std::to_string(hit001);

  LearnerConfig rm;
  rm.eta = 0.8;
  rm.max_iters = 450000;
  rm.tol = 0.0;
  const RunResult r_rm = run(Algorithm::rm, prob, rm, 1);
  const std::size_t rm_tenth = first_crossing(r_rm, 1e-1);
  if (r_rm.status == RunStatus::diverged) pass = false;
  if (rm_tenth == static_cast<std::size_t>(-1) || rm_tenth < 10 * ottd_tenth) pass = false;
  note += " RM<0.1@" + std::to_string(rm_tenth);

  LearnerConfig g;
  g.eta = 0.6;
  g.eta2 = 0.6;
  g.max_iters = 150000;
  g.tol = 0.0;
  const RunResult r_g = run(Algorithm::gtd2, prob, g, 1);
  const std::size_t g_tenth = first_crossing(r_g, 1e-1);
  if (r_g.status == RunStatus::diverged) pass = false;
  if (g_tenth == static_cast<std::size_t>(-1) || g_tenth < 10 * ottd_tenth) pass = false;
  note += " GTD2<0.1@" + std::to_string(g_tenth);

  const double dt = omp_get_wtime() - t0;
  if (dt >= 10.0) pass = false;
  report(1, pass, "Baird: " + note + ", OTTD<0.1@" + std::to_string(ottd_tenth), dt);
}

// ---------------------------------------------------------------------------
// 2. Table-1 convergence metrics.
// ---------------------------------------------------------------------------
void criterion_2() {
  const double t0 = omp_get_wtime();
  const Problem prob = baird_problem();
  bool pass = true;
  char buf[256];

  LearnerConfig td;
  td.eta = 0.5;
  const double m_td = convergence_metric(iteration_matrix(Algorithm::otd, prob, td).C, 1);
  if (std::fabs(m_td - 1.12) > 0.05) pass = false;

  LearnerConfig ttd;
  ttd.eta = 0.997;
  ttd.m = 3;
  const IterationMatrix im = iteration_matrix(Algorithm::ottd, prob, ttd);
  const double gap_ttd = 1.0 - convergence_metric(im.C, im.steps_per_application);
  if (!(gap_ttd > 3.8e-3 / 3 && gap_ttd < 3.8e-3 * 3)) pass = false;

  LearnerConfig rm;
  rm.eta = 0.8;
  const double gap_rm = 1.0 - convergence_metric(iteration_matrix(Algorithm::rm, prob, rm).C, 1);
  if (!(gap_rm > 1.9e-5 / 3 && gap_rm < 1.9e-5 * 3)) pass = false;

  LearnerConfig g;
  g.eta = 0.6;
  g.eta2 = 0.6;
  const double gap_g = 1.0 - convergence_metric(iteration_matrix(Algorithm::gtd2, prob, g).C, 1);
  if (!(gap_g > 4.5e-6 / 3 && gap_g < 4.5e-6 * 3)) pass = false;

  const double dt = omp_get_wtime() - t0;
  if (dt >= 1.0) pass = false;
  std::snprintf(buf, sizeof buf, "TD=%.4f TTD=1-%.2e RM=1-%.2e GTD2=1-%.2e", m_td, gap_ttd, gap_rm, gap_g);
  report(2, pass, buf, dt);
}

// ---------------------------------------------------------------------------
// 3. Closed-form fixed point vs iterative limit, nonzero theta0.
// ---------------------------------------------------------------------------
void criterion_3() {
  const double t0 = omp_get_wtime();
  const int trials = 50;
  std::vector<double> errs(trials, 1e300);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < trials; ++i) {
    Rng rng(7000 + i);
    const std::size_t k = 2 + static_cast<std::size_t>(i) % 7;  // k in [2, 8]
    const std::size_t d = 2 * k + 1;
    const EmpiricalModel model = make_random_instance(k, d, 0.9, 500 + i, true);
    const Vector theta0 = random_vector(d, rng);
    const auto [lmin, lmax] = eig_range_mmtd(model.M, model.Dk);
    LearnerConfig cfg;
    cfg.eta = 0.9 / lmax;
    cfg.m = m_bar(model, cfg.eta, model.gamma);
    cfg.max_iters = 600000;
    cfg.tol = 1e-14;
    Problem prob;
    prob.model = model;
    prob.phi = model.M;
    prob.theta0 = theta0;
    const RunResult res = run(Algorithm::ottd, prob, cfg, 100000);
    const FixedPoint fp = fixed_point_ottd(model, theta0);
    errs[i] = max_abs_diff(res.final.theta, fp.theta);
  }
  double worst = 0.0;
  for (double e : errs) worst = std::max(worst, e);
  const double dt = omp_get_wtime() - t0;
  const bool pass = worst < 1e-6 && dt < 30.0;
  report(3, pass, "50 instances, worst |iterative - closed|_inf = " + std::to_string(worst), dt);
}

// ---------------------------------------------------------------------------
// 4. Prop A.3: combined m-step matrix equals m single steps.
// ---------------------------------------------------------------------------
void criterion_4() {
  const double t0 = omp_get_wtime();
  double worst = 0.0;
  const std::size_t ms[] = {1, 2, 3, 5, 8};
  for (int i = 0; i < 20; ++i) {
    Rng rng(900 + i);
    const std::size_t k = 2 + static_cast<std::size_t>(i) % 6;
    const EmpiricalModel model = make_random_instance(k, 2 * k + 1, 0.9, 900 + i, false);
    for (std::size_t m : ms) {
      LearnerConfig cfg;
      cfg.eta = 0.25;
      cfg.m = m;
      const Vector theta0 = random_vector(2 * k + 1, rng);
      LearnerState s = LearnerState::init(theta0);
      for (std::size_t t = 0; t < m; ++t) s = ottd_step(s, model, cfg);
      const Vector combined = ottd_combined_step(theta0, model, cfg);
      worst = std::max(worst, max_abs_diff(s.theta, combined));
    }
  }
  const double dt = omp_get_wtime() - t0;
  report(4, worst < 1e-10, "m in {1,2,3,5,8} x 20 instances, worst gap = " + std::to_string(worst), dt);
}

// ---------------------------------------------------------------------------
// 5. m-bar validity (Lemma A.2).
// ---------------------------------------------------------------------------
void criterion_5() {
  const double t0 = omp_get_wtime();
  const int trials = 100;
  int bad = 0;
  double worst_rho = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(+ : bad) reduction(max : worst_rho)
  for (int i = 0; i < trials; ++i) {
    Rng rng(1700 + i);
    const std::size_t k = 2 + static_cast<std::size_t>(i) % 7;
    const EmpiricalModel model = make_random_instance(k, 2 * k + 1, 0.9 + 0.05 * (i % 2), 1700 + i, true);
    const auto [lmin, lmax] = eig_range_mmtd(model.M, model.Dk);
    LearnerConfig cfg;
    cfg.eta = rng.uniform(0.3, 0.95) / lmax;  // eta < 1 / rho(M M^T D_k)
    cfg.m = m_bar(model, cfg.eta, model.gamma);
    Problem prob;
    prob.model = model;
    prob.phi = model.M;
    prob.theta0 = Vector(model.M.cols, 0.0);
    const IterationMatrix im = iteration_matrix(Algorithm::ottd, prob, cfg);
    const double rho = convergence_metric(im.C, 1);
    worst_rho = std::max(worst_rho, rho);
    if (rho >= 1.0) ++bad;
  }
  const double dt = omp_get_wtime() - t0;
  report(5, bad == 0, "100 instances, worst window spectral radius = " + std::to_string(worst_rho), dt);
}

// ---------------------------------------------------------------------------
// 6. Two-state pathology.
// ---------------------------------------------------------------------------
void criterion_6() {
  const double t0 = omp_get_wtime();
  bool pass = true;
  std::string note;
  for (double gamma : {0.6, 0.75, 0.9, 0.95}) {
    const TwoStateProblem ts = make_two_state(gamma);
    const Vector lambda = pathological_lambda(gamma);
    const Matrix p_pi = state_action_transition(ts.mdp, ts.pi);
    const ConditionReport r = detect_nonexistence(ts.phi, p_pi, lambda, gamma);
    if (r.value >= 1e-10 || r.satisfied) pass = false;

    // Expected TD and target TD make no progress from any initialization.
    LearnerConfig cfg;
    cfg.eta = 0.4;
    cfg.m = 5;
    for (ExpectedVariant v : {ExpectedVariant::td, ExpectedVariant::target_td}) {
      LearnerState s = LearnerState::init(Vector{2.5});
      for (int t = 0; t < 1000; ++t) s = expected_step(s, ts.mdp, ts.pi, ts.phi, lambda, cfg, v);
      if (std::fabs(s.theta[0] - 2.5) > 1e-10) pass = false;
    }

    // Expected OTTD on the over-parameterized variant converges.
    const EmpiricalModel over = expected_model(ts.mdp, ts.pi, ts.phi_over, lambda);
    const auto [lmin, lmax] = eig_range_mmtd(over.M, over.Dk);
    LearnerConfig ocfg;
    ocfg.eta = 0.9 / lmax;
    ocfg.m = m_bar(over, ocfg.eta, gamma);
    ocfg.max_iters = 200000;
    Problem prob;
    prob.model = over;
    prob.phi = ts.phi_over.phi;
    prob.q_true = true_q(ts.mdp, ts.pi);
    Rng rng(static_cast<std::uint64_t>(gamma * 1000));
    prob.theta0 = random_vector(3, rng);
    const RunResult res = run(Algorithm::expected_target_td, prob, ocfg, 1000);
    if (res.status != RunStatus::converged) pass = false;
    if (res.trace.back().max_value_error > 1e-6) pass = false;
  }
  const double dt = omp_get_wtime() - t0;
  report(6, pass, "gamma in {0.6,0.75,0.9,0.95}: singular fixed point, stuck TD, convergent over-param OTTD", dt);
}

// ---------------------------------------------------------------------------
// 7. NIS estimator consistency (Prop 4.1).
// ---------------------------------------------------------------------------
void criterion_7() {
  const double t0 = omp_get_wtime();
  Mdp m(3, 2, 0.9);
  Rng rng(4242);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      double sum = 0.0;
      for (std::size_t s2 = 0; s2 < 3; ++s2) {
        m.p(s, a, s2) = rng.uniform(0.1, 1.0);
        sum += m.p(s, a, s2);
      }
      for (std::size_t s2 = 0; s2 < 3; ++s2) m.p(s, a, s2) /= sum;
      m.r(s, a) = rng.uniform(-0.5, 0.5);
    }
  Policy mu(3, 2), pi(3, 2);
  for (std::size_t s = 0; s < 3; ++s) {
    mu.pi(s, 0) = 0.5;
    mu.pi(s, 1) = 0.5;
    pi.pi(s, 0) = 0.85;
    pi.pi(s, 1) = 0.15;
  }
  const double dev = nis_consistency_probe(m, pi, mu, 100000, 31);
  const double dt = omp_get_wtime() - t0;
  report(7, dev < 0.02, "n(s,a)=1e5 per pair, max |P_nis - P_pi| = " + std::to_string(dev), dt);
}

// Runs in chunks, stopping once the residual EMSBE falls below the target,
// the run converges/diverges, or the step budget runs out.
RunResult run_until_emsbe(Algorithm alg, Problem prob, LearnerConfig cfg, double emsbe_target,
                          std::size_t chunk, std::size_t budget) {
  RunResult last;
  std::size_t used = 0;
  while (used < budget) {
    cfg.max_iters = std::min(chunk, budget - used);
    last = run(alg, prob, cfg, cfg.max_iters);
    used += last.final.step;
    prob.theta0 = last.final.theta;
    if (last.status == RunStatus::diverged || last.status == RunStatus::converged) break;
    if (last.trace.back().emsbe <= emsbe_target) break;
    if (last.final.step == 0) break;
  }
  return last;
}

// ---------------------------------------------------------------------------
// 8. Four Room (Fig. 2 qualitative).
// ---------------------------------------------------------------------------
void criterion_8() {
  const double t0 = omp_get_wtime();
  const FourRoomProblem f = make_four_room();
  const Vector q_true = true_q(f.mdp, f.target);
  const int n_seeds = 10;

  std::vector<double> emsbe_target(n_seeds), emsbe_nis(n_seeds), emsbe_is(n_seeds);
  std::vector<double> err_target(n_seeds), err_nis(n_seeds);
  std::vector<int> is_diverged(n_seeds, 0);
  std::vector<int> seed_failed(n_seeds, 0);

#pragma omp parallel for schedule(dynamic)
  for (int seed = 0; seed < n_seeds; ++seed) {
    try {
      const TransitionDataset raw = collect_trajectory_steps(f.mdp, f.behavior, f.start, 300, 50,
                                                             {f.terminal_state}, 1000 + seed);
      const FeatureMatrix phi = build_four_room_features(f, raw);

      auto make_problem = [&](const BuildResult& built) {
        Problem p;
        p.model = built.model;
        p.nis = built.nis;
        p.phi = phi.phi;
        p.q_true = q_true;
        p.theta0 = Vector(phi.dim(), 0.0);
        return p;
      };
      LearnerConfig cfg;
      cfg.m = 1;
      cfg.tol = 1e-13;

      // Target-action sampling.
      const TransitionDataset resampled = resample_next_actions(raw, f.target, 9000 + seed);
      const BuildResult bt =
          build_empirical(resampled, phi, f.target, f.behavior, CorrectionMode::sample_target_action,
                          f.mdp.discount);
      cfg.eta = 0.97;
      Problem pt = make_problem(bt);
      const RunResult rt = run_until_emsbe(Algorithm::ottd, pt, cfg, 3e-7, 5000, 120000);
      emsbe_target[seed] = rt.trace.back().emsbe;
      err_target[seed] = rt.trace.back().max_value_error;

      // NIS correction.
      const BuildResult bn =
          build_empirical(raw, phi, f.target, f.behavior, CorrectionMode::nis, f.mdp.discount);
      cfg.eta = 0.97;
      Problem pn = make_problem(bn);
      const RunResult rn = run_until_emsbe(Algorithm::ottd_nis, pn, cfg, 3e-7, 5000, 120000);
      emsbe_nis[seed] = rn.trace.back().emsbe;
      err_nis[seed] = rn.trace.back().max_value_error;

      // Plain IS correction.
      const BuildResult bi = build_empirical(raw, phi, f.target, f.behavior, CorrectionMode::is, f.mdp.discount);
      cfg.eta = 0.02;
      Problem pi_prob = make_problem(bi);
      const RunResult ri = run_until_emsbe(Algorithm::ottd_is, pi_prob, cfg, 0.0, 10000, 150000);
      emsbe_is[seed] = ri.trace.back().emsbe;
      is_diverged[seed] = ri.status == RunStatus::diverged ? 1 : 0;
    } catch (const Error&) {
      seed_failed[seed] = 1;
    }
  }

  bool pass = true;
  double worst_t = 0.0, worst_n = 0.0, mean_et = 0.0, mean_en = 0.0;
  int n_is_bad = 0;
  for (int s = 0; s < n_seeds; ++s) {
    if (seed_failed[s]) pass = false;
    worst_t = std::max(worst_t, emsbe_target[s]);
    worst_n = std::max(worst_n, emsbe_nis[s]);
    mean_et += err_target[s] / n_seeds;
    mean_en += err_nis[s] / n_seeds;
    const bool is_bad = is_diverged[s] || emsbe_is[s] > 10.0 * std::max(emsbe_nis[s], 1e-300);
    if (is_bad) ++n_is_bad;
  }
  if (worst_t >= 1e-6 || worst_n >= 1e-6) pass = false;
  if (n_is_bad < n_seeds) pass = false;
  const double agree = std::fabs(mean_et - mean_en) / std::max(mean_et, mean_en);
  if (agree > 0.2) pass = false;

  const double dt = omp_get_wtime() - t0;
  if (dt >= 60.0) pass = false;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "EMSBE target<=%.2e nis<=%.2e, IS bad on %d/10 seeds, value errors %.4f vs %.4f (gap %.1f%%)",
                worst_t, worst_n, n_is_bad, mean_et, mean_en, 100.0 * agree);
  report(8, pass, buf, dt);
}

// ---------------------------------------------------------------------------
// 9. OTQ fixed point and contraction (Thm 5.1 / Cor 5.2).
// ---------------------------------------------------------------------------
void criterion_9() {
  const double t0 = omp_get_wtime();
  const int trials = 30;
  std::vector<double> errs(trials, 1e300);
  std::vector<double> contraction(trials, 0.0);
  std::vector<int> failed(trials, 0);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < trials; ++i) {
    try {
      Rng rng(5100 + i);
      // Random episodic MDP: last state absorbs with zero reward.
      const std::size_t ns = 3 + static_cast<std::size_t>(i) % 3;
      const std::size_t na = 2;
      Mdp m(ns, na, 0.9);
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
          if (s == ns - 1) {
            m.p(s, a, s) = 1.0;
            continue;
          }
          double sum = 0.0;
          for (std::size_t s2 = 0; s2 < ns; ++s2) {
            m.p(s, a, s2) = rng.uniform(0.05, 1.0);
            sum += m.p(s, a, s2);
          }
          for (std::size_t s2 = 0; s2 < ns; ++s2) m.p(s, a, s2) /= sum;
          m.r(s, a) = rng.uniform(-1.0, 1.0);
        }
      const Policy mu = Policy::uniform(ns, na);
      Vector start(ns, 0.0);
      for (std::size_t s = 0; s + 1 < ns; ++s) start[s] = 1.0 / static_cast<double>(ns - 1);
      const TransitionDataset ds = collect_trajectories(m, mu, start, 12, 10, {ns - 1}, 5100 + i);

      // One-hot state/action encoding plus per-seen-pair tags.
      const std::vector<std::size_t> seen = seen_pair_order(ds, na);
      const std::size_t base = ns + na;
      Matrix phi_m(ns * na, base + seen.size());
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
          phi_m(s * na + a, s) = 1.0;
          phi_m(s * na + a, ns + a) = 1.0;
        }
      for (std::size_t j = 0; j < seen.size(); ++j) phi_m(seen[j], base + j) = 1.0;
      const FeatureMatrix phi(phi_m);

      const BuildResult built =
          build_empirical(ds, phi, mu, mu, CorrectionMode::sample_target_action, m.discount);
      const EmpiricalModel& model = built.model;
      const std::vector<Matrix> blocks = seen_feature_blocks(model, phi);

      const FixedPoint fp = fixed_point_otq(model, blocks, Vector(phi.dim(), 0.0));

      // Contraction factor of the q-hat operator whenever the condition holds.
      const ConditionReport cond = check_otq(model, blocks, m.discount);
      if (cond.satisfied) {
        const Matrix mp = pinv(model.M);
        auto apply = [&](const Vector& x) {
          const Vector v = matvec(mp, x);
          Vector g(model.n_states, 0.0);
          for (std::size_t s = 0; s < model.n_states; ++s) {
            double best = 0.0;
            bool any = false;
            for (std::size_t r = 0; r < blocks[s].rows; ++r) {
              double val = 0.0;
              for (std::size_t c = 0; c < blocks[s].cols; ++c) val += blocks[s](r, c) * v[c];
              if (!any || val > best) best = val;
              any = true;
            }
            g[s] = blocks[s].rows > 0 && inf_norm(blocks[s].a) > 0 ? (any ? best : 0.0) : 0.0;
          }
          Vector out = matvec(model.Phat_state, g);
          for (std::size_t j = 0; j < model.k; ++j) out[j] = model.R[j] + model.gamma * out[j];
          return out;
        };
        Rng prng(77 + i);
        double worst_ratio = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
          const Vector x = random_vector(model.k, prng);
          const Vector y = random_vector(model.k, prng);
          const double num = max_abs_diff(apply(x), apply(y));
          const double den = max_abs_diff(x, y);
          if (den > 1e-12) worst_ratio = std::max(worst_ratio, num / den);
        }
        contraction[i] = worst_ratio;
      }

      // Iterative OTQ limit with nonzero theta0.
      Rng trng(31 + i);
      const Vector theta0 = random_vector(phi.dim(), trng);
      const auto [lmin, lmax] = eig_range_mmtd(model.M, model.Dk);
      LearnerConfig cfg;
      cfg.eta = 0.9 / lmax;
      cfg.m = std::max<std::size_t>(m_bar(model, cfg.eta, m.discount), 2);
      cfg.max_iters = 600000;
      cfg.tol = 1e-14;
      Problem prob;
      prob.model = model;
      prob.phi = phi.phi;
      prob.theta0 = theta0;
      prob.phi_seen = blocks;
      const RunResult res = run(Algorithm::otq, prob, cfg, 100000);
      const FixedPoint fp0 = fixed_point_otq(model, blocks, theta0);
      errs[i] = max_abs_diff(res.final.theta, fp0.theta);
    } catch (const Error&) {
      failed[i] = 1;
    }
  }

  bool pass = true;
  double worst = 0.0, worst_c = 0.0;
  for (int i = 0; i < trials; ++i) {
    if (failed[i]) pass = false;
    worst = std::max(worst, errs[i]);
    worst_c = std::max(worst_c, contraction[i]);
  }
  if (worst >= 1e-6) pass = false;
  if (worst_c >= 1.0) pass = false;
  const double dt = omp_get_wtime() - t0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "30 episodic datasets, worst |iter - closed| = %.3g, worst contraction c = %.4f",
                worst, worst_c);
  report(9, pass, buf, dt);
}

// ---------------------------------------------------------------------------
// 10. Error bounds: Cor 3.4 deterministic, Thm 3.3 / Cor 4.3 / Cor A.8
//     high-probability coverage.
// ---------------------------------------------------------------------------
struct McResult {
  int held = 0;
  int total = 0;
};

Mdp random_mdp_for_bounds(std::size_t ns, std::size_t na, double gamma, Rng& rng, bool ergodic,
                          bool episodic) {
  Mdp m(ns, na, gamma);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < na; ++a) {
      if (episodic && s == ns - 1) {
        m.p(s, a, s) = 1.0;
        continue;
      }
      double sum = 0.0;
      for (std::size_t s2 = 0; s2 < ns; ++s2) {
        m.p(s, a, s2) = rng.uniform(ergodic ? 0.1 : 0.01, 1.0);
        sum += m.p(s, a, s2);
      }
      for (std::size_t s2 = 0; s2 < ns; ++s2) m.p(s, a, s2) /= sum;
      m.r(s, a) = rng.uniform(-1.0, 1.0);
    }
  return m;
}

Policy random_full_support_policy(std::size_t ns, std::size_t na, Rng& rng) {
  Policy p(ns, na);
  for (std::size_t s = 0; s < ns; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      p.pi(s, a) = rng.uniform(0.1, 1.0);
      sum += p.pi(s, a);
    }
    for (std::size_t a = 0; a < na; ++a) p.pi(s, a) /= sum;
  }
  return p;
}

void criterion_10() {
  const double t0 = omp_get_wtime();
  bool pass = true;
  std::string note;

  // Cor 3.4 holds deterministically.
  int cor34_ok = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(6200 + i);
    const std::size_t ns = 2 + rng.index(3);
    const std::size_t na = 1 + rng.index(2);
    const Mdp m = random_mdp_for_bounds(ns, na, rng.uniform(0.5, 0.95), rng, false, false);
    const Policy pi = random_full_support_policy(ns, na, rng);
    const std::size_t d = 1 + rng.index(ns * na + 1);
    Matrix phi(ns * na, d);
    for (double& x : phi.a) x = rng.normal();
    try {
      (void)bound_expected(phi, true_q(m, pi), m.discount);
      ++cor34_ok;
    } catch (const Error&) {
    }
  }
  if (cor34_ok != 100) pass = false;
  note += "Cor3.4 " + std::to_string(cor34_ok) + "/100";

  // Thm 3.3 coverage at delta = 0.1.
  McResult thm33;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < 200; ++i) {
    Rng rng(6400 + i);
    const std::size_t ns = 2 + rng.index(3);
    const std::size_t na = 1 + rng.index(2);
    const double gamma = rng.uniform(0.6, 0.9);
    const Mdp m = random_mdp_for_bounds(ns, na, gamma, rng, false, false);
    const Policy pi = random_full_support_policy(ns, na, rng);
    const std::size_t nsa = ns * na;
    Matrix phi_m(nsa, nsa + 3);
    for (double& x : phi_m.a) x = rng.normal();
    const FeatureMatrix phi(phi_m);
    Vector lambda(nsa);
    double sum = 0.0;
    for (double& x : lambda) {
      x = rng.uniform(0.2, 1.0);
      sum += x;
    }
    for (double& x : lambda) x /= sum;
    // Rejection: the Thm 3.3 premise ||N M+||_inf <= 1 must hold.
    for (std::uint64_t attempt = 0; attempt < 50; ++attempt) {
      const std::size_t n = nsa * (20 + 4 * attempt);
      TransitionDataset ds;
      try {
        ds = collect_iid(m, lambda, pi, n, 77000 + 100 * i + attempt);
      } catch (const Error&) {
        break;
      }
      const BuildResult built =
          build_empirical(ds, phi, pi, pi, CorrectionMode::sample_target_action, gamma);
      if (!check_ottd(built.model).satisfied) continue;
      const Vector q = true_q(m, pi);
      const BoundReport r = bound_ottd(built.model, phi.phi, q, 0.1);
#pragma omp critical
      {
        ++thm33.total;
        if (*r.actual_error <= r.total) ++thm33.held;
      }
      break;
    }
  }
  if (thm33.total < 150 || thm33.held < static_cast<int>(0.9 * thm33.total)) pass = false;
  note += ", Thm3.3 " + std::to_string(thm33.held) + "/" + std::to_string(thm33.total);

  // Cor 4.3 coverage on episodic NIS data.
  McResult cor43;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < 200; ++i) {
    Rng rng(6800 + i);
    const std::size_t ns = 3 + rng.index(2);
    const std::size_t na = 2;
    const double gamma = rng.uniform(0.6, 0.9);
    Mdp m = random_mdp_for_bounds(ns, na, gamma, rng, false, true);
    for (std::size_t a = 0; a < na; ++a) m.r(ns - 1, a) = 0.0;
    const Policy mu = random_full_support_policy(ns, na, rng);
    const Policy pi = random_full_support_policy(ns, na, rng);
    Vector start(ns, 0.0);
    for (std::size_t s = 0; s + 1 < ns; ++s) start[s] = 1.0 / static_cast<double>(ns - 1);
    try {
      const TransitionDataset ds = collect_trajectories(m, mu, start, 30, 12, {ns - 1}, 88000 + i);
      const std::vector<std::size_t> seen = seen_pair_order(ds, na);
      Matrix phi_m(ns * na, ns + na + seen.size());
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
          phi_m(s * na + a, s) = 1.0;
          phi_m(s * na + a, ns + a) = 1.0;
        }
      for (std::size_t j = 0; j < seen.size(); ++j) phi_m(seen[j], ns + na + j) = 1.0;
      const FeatureMatrix phi(phi_m);
      const BuildResult built = build_empirical(ds, phi, pi, mu, CorrectionMode::nis, gamma);
      const Vector q = true_q(m, pi);
      const BoundReport r = bound_nis_episodic(built.model, *built.nis, phi.phi, q, 0.1);
#pragma omp critical
      {
        ++cor43.total;
        if (*r.actual_error <= r.total) ++cor43.held;
      }
    } catch (const Error&) {
    }
  }
  if (cor43.total < 150 || cor43.held < static_cast<int>(0.9 * cor43.total)) pass = false;
  note += ", Cor4.3 " + std::to_string(cor43.held) + "/" + std::to_string(cor43.total);

  // Cor A.8 coverage on continuing-task truncated trajectories.
  McResult a8;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < 200; ++i) {
    Rng rng(7200 + i);
    const std::size_t ns = 3 + rng.index(2);
    const std::size_t na = 2;
    const double gamma = rng.uniform(0.6, 0.85);
    const Mdp m = random_mdp_for_bounds(ns, na, gamma, rng, true, false);
    const Policy mu = random_full_support_policy(ns, na, rng);
    const Policy pi = random_full_support_policy(ns, na, rng);
    Vector start(ns, 1.0 / static_cast<double>(ns));
    try {
      const TransitionDataset ds = collect_trajectories(m, mu, start, 30, 10, {}, 99000 + i);
      const std::vector<std::size_t> seen = seen_pair_order(ds, na);
      Matrix phi_m(ns * na, ns + na + seen.size());
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
          phi_m(s * na + a, s) = 1.0;
          phi_m(s * na + a, ns + a) = 1.0;
        }
      for (std::size_t j = 0; j < seen.size(); ++j) phi_m(seen[j], ns + na + j) = 1.0;
      const FeatureMatrix phi(phi_m);
      const BuildResult built = build_empirical(ds, phi, pi, mu, CorrectionMode::nis, gamma);
      const Vector q = true_q(m, pi);
      const BoundReport r = bound_continuing(built.model, *built.nis, phi.phi, q, m, pi, 0.1);
#pragma omp critical
      {
        ++a8.total;
        if (*r.actual_error <= r.total) ++a8.held;
      }
    } catch (const Error&) {
    }
  }
  if (a8.total < 150 || a8.held < static_cast<int>(0.9 * a8.total)) pass = false;
  note += ", CorA.8 " + std::to_string(a8.held) + "/" + std::to_string(a8.total);

  const double dt = omp_get_wtime() - t0;
  report(10, pass, note, dt);
}

// ---------------------------------------------------------------------------
// 11. Numerics property suite on 200 random matrices.
// ---------------------------------------------------------------------------
void criterion_11() {
  const double t0 = omp_get_wtime();
  bool pass = true;
  std::string note;

  // Moore-Penrose identities.
  int mp_bad = 0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(8000 + i);
    const std::size_t r = 1 + rng.index(7), c = 1 + rng.index(7);
    Matrix a(r, c);
    for (double& x : a.a) x = rng.normal();
    const Matrix ap = pinv(a);
    const Matrix aap = matmul(a, ap);
    const Matrix apa = matmul(ap, a);
    if (inf_norm(sub(matmul(aap, a), a)) > 1e-8 * std::max(1.0, inf_norm(a))) ++mp_bad;
    if (inf_norm(sub(matmul(apa, ap), ap)) > 1e-8 * std::max(1.0, inf_norm(ap))) ++mp_bad;
    if (inf_norm(sub(aap, transpose(aap))) > 1e-8) ++mp_bad;
    if (inf_norm(sub(apa, transpose(apa))) > 1e-8) ++mp_bad;
  }
  if (mp_bad > 0) pass = false;
  note += "pinv bad=" + std::to_string(mp_bad);

  // Spectral radius vs power iteration on dominant matrices.
  int sr_bad = 0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(8400 + i);
    const std::size_t n = 2 + rng.index(7);
    Matrix x(n, n);
    for (double& v : x.a) v = rng.normal();
    for (std::size_t j = 0; j < n; ++j) x(j, j) += 3.0;
    Vector eig(n);
    eig[0] = rng.uniform(0.5, 3.0);
    for (std::size_t j = 1; j < n; ++j) eig[j] = rng.uniform(-0.4, 0.4) * eig[0];
    const Matrix a = matmul(diag_scale_cols(x, eig), inverse(x));
    const double qr = spectral_radius(a);
    const double po = power_iteration_radius(a, 60000, 8400 + i);
    if (std::fabs(qr - po) > 1e-6 * std::max(1.0, po)) ++sr_bad;
  }
  if (sr_bad > 0) pass = false;
  note += ", rho bad=" + std::to_string(sr_bad);

  // Stationary distribution residual.
  int st_bad = 0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(8800 + i);
    const std::size_t n = 2 + rng.index(7);
    Matrix p(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        p(r, c) = rng.uniform(0.05, 1.0);
        sum += p(r, c);
      }
      for (std::size_t c = 0; c < n; ++c) p(r, c) /= sum;
    }
    const Vector d = stationary_distribution(p);
    const Vector dp = tmatvec(p, d);
    double res = 0.0;
    for (std::size_t j = 0; j < n; ++j) res = std::max(res, std::fabs(dp[j] - d[j]));
    if (res > 1e-10) ++st_bad;
  }
  if (st_bad > 0) pass = false;
  note += ", stationary bad=" + std::to_string(st_bad);

  const double dt = omp_get_wtime() - t0;
  report(11, pass, note + " (200 each)", dt);
}

}  // namespace

int main() {
  std::printf("acceptance suite (%d threads)\n", omp_get_max_threads());
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 11 criteria passed\n");
  return 0;
}
