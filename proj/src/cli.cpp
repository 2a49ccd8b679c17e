#include "ottd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "ottd/bounds.hpp"
#include "ottd/diagnostics.hpp"
#include "ottd/envs.hpp"
#include "ottd/learners.hpp"
#include "ottd/numerics/linalg.hpp"

namespace ottd {

namespace {

struct Setup {
  std::string experiment_id;
  std::string problem;  // baird | two_state | four_room | file:<path>
  Algorithm algorithm = Algorithm::ottd;
  std::string correction;  // none | sample_target_action | is | nis
  LearnerConfig learner;
  std::vector<std::uint64_t> seeds;
  std::size_t dataset_size = 0;
  std::string dataset_kind;
  std::size_t horizon = 50;
  std::uint64_t dataset_seed = 0;
  double delta = 0.1;
  double gamma = -1.0;  // problem default when negative
  std::string lambda_spec;
  bool over_variant = false;  // two_state over-parameterized features
  bool expected = false;      // exact expected model instead of sampled data
  std::size_t trace_stride = 0;
  std::string output_dir;
  std::string assets_dir;
};

double default_eta(const std::string& problem, Algorithm alg, const std::string& correction) {
  if (problem == "four_room") {
    if (alg == Algorithm::ottd_is) return 0.02;
    if (alg == Algorithm::ottd_nis) return 0.97;
    if (correction == "sample_target_action") return 0.97;
    return 0.95;  // off-policy without corrections
  }
  switch (alg) {
    case Algorithm::otd:
    case Algorithm::expected_td: return 0.5;
    case Algorithm::ottd:
    case Algorithm::expected_target_td: return 0.997;
    case Algorithm::rm: return 0.8;
    case Algorithm::baird_rm: return 0.95;
    case Algorithm::gtd2:
    case Algorithm::tdc: return 0.6;
    default: return 0.5;
  }
}

std::size_t default_m(const std::string& problem, Algorithm alg) {
  if (problem == "four_room") return 1;
  if (alg == Algorithm::ottd || alg == Algorithm::expected_target_td || alg == Algorithm::otq) return 3;
  return 1;
}

Setup resolve_setup(const ConfigMap& cfg) {
  Setup s;
  s.problem = cfg_get(cfg, "run.problem", "baird");
  const std::string alg_name = cfg_get(cfg, "run.algorithm", "ottd");
  const auto alg = algorithm_from_name(alg_name);
  if (!alg) fail(ErrorKind::invalid_input, "unknown algorithm: " + alg_name);
  s.algorithm = *alg;
  s.correction = cfg_get(cfg, "run.correction_mode",
                         s.algorithm == Algorithm::ottd_is  ? "is"
                         : s.algorithm == Algorithm::ottd_nis ? "nis"
                                                              : "none");
  s.experiment_id = cfg_get(cfg, "run.experiment_id", s.problem + "_" + alg_name);
  s.learner.eta = cfg_get_double(cfg, "run.eta", default_eta(s.problem, s.algorithm, s.correction));
  s.learner.m = cfg_get_size(cfg, "run.m", default_m(s.problem, s.algorithm));
  const double eta2_default = s.algorithm == Algorithm::tdc ? 0.4 : 0.6;
  if (s.algorithm == Algorithm::gtd2 || s.algorithm == Algorithm::tdc)
    s.learner.eta2 = cfg_get_double(cfg, "run.eta2", eta2_default);
  if (s.algorithm == Algorithm::baird_rm) s.learner.mix = cfg_get_double(cfg, "run.mix", 0.5);
  s.learner.max_iters = cfg_get_size(cfg, "run.max_iters", 20000);
  s.learner.tol = cfg_get_double(cfg, "run.tol", 1e-10);
  s.learner.divergence_threshold = cfg_get_double(cfg, "run.divergence_threshold", 1e8);
  s.seeds = cfg_get_seeds(cfg, "run.seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  s.dataset_size = cfg_get_size(cfg, "dataset.size", s.problem == "four_room" ? 300 : 700);
  s.dataset_kind = cfg_get(cfg, "dataset.kind", s.problem == "four_room" ? "trajectory" : "iid");
  s.horizon = cfg_get_size(cfg, "dataset.horizon", 50);
  s.dataset_seed = cfg_get_seeds(cfg, "dataset.seed", {12345}).front();
  s.delta = cfg_get_double(cfg, "run.delta", 0.1);
  s.gamma = cfg_get_double(cfg, "run.gamma", -1.0);
  s.lambda_spec = cfg_get(cfg, "run.lambda", "");
  s.over_variant = cfg_get_bool(cfg, "run.over_parameterized_variant", false);
  s.expected = cfg_get_bool(cfg, "run.expected", s.algorithm == Algorithm::expected_td ||
                                                     s.algorithm == Algorithm::expected_target_td);
  s.trace_stride = cfg_get_size(cfg, "run.trace_stride", 0);
  s.output_dir = cfg_get(cfg, "run.output_dir", "out");
  s.assets_dir = cfg_get(cfg, "run.assets", default_asset_dir());
  return s;
}

struct BuiltProblem {
  Problem problem;
  Mdp mdp;
  Policy pi;
  TransitionDataset dataset;  // empty for expected models
  bool has_dataset = false;
};

Vector resolve_lambda(const Setup& s, std::size_t n_pairs, double gamma) {
  if (s.lambda_spec.empty() || s.lambda_spec == "uniform")
    return Vector(n_pairs, 1.0 / static_cast<double>(n_pairs));
  if (s.lambda_spec == "pathological") return pathological_lambda(gamma);
  std::istringstream is(s.lambda_spec);
  Vector out;
  double v;
  while (is >> v) out.push_back(v);
  if (out.size() != n_pairs) fail(ErrorKind::invalid_input, "run.lambda has the wrong arity");
  return out;
}

// Assembles model + features + oracle for one seed.
BuiltProblem build_for_seed(const Setup& s, std::uint64_t seed) {
  BuiltProblem out;
  if (s.problem == "baird") {
    BairdProblem b = make_baird();
    out.mdp = b.mdp;
    out.pi = b.pi;
    out.problem.phi = b.phi.phi;
    out.problem.theta0 = b.theta0;
    out.problem.q_true = true_q(b.mdp, b.pi);
    if (s.expected) {
      out.problem.model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
    } else {
      out.dataset = collect_iid(b.mdp, b.lambda, b.pi, s.dataset_size, s.dataset_seed + seed);
      out.has_dataset = true;
      CorrectionMode mode = CorrectionMode::sample_target_action;
      if (s.correction == "is") mode = CorrectionMode::is;
      if (s.correction == "nis") mode = CorrectionMode::nis;
      BuildResult built = build_empirical(out.dataset, b.phi, b.pi, b.pi, mode, b.mdp.discount);
      out.problem.model = std::move(built.model);
      out.problem.nis = std::move(built.nis);
    }
    return out;
  }
  if (s.problem == "two_state") {
    const double gamma = s.gamma > 0.0 ? s.gamma : 0.95;
    TwoStateProblem t = make_two_state(gamma);
    const FeatureMatrix& phi = s.over_variant ? t.phi_over : t.phi;
    out.mdp = t.mdp;
    out.pi = t.pi;
    out.problem.phi = phi.phi;
    out.problem.theta0 = Vector(phi.dim(), 0.0);
    out.problem.q_true = true_q(t.mdp, t.pi);
    const Vector lambda = resolve_lambda(s, t.mdp.n_pairs(), gamma);
    if (s.expected) {
      out.problem.model = expected_model(t.mdp, t.pi, phi, lambda);
    } else {
      out.dataset = collect_iid(t.mdp, lambda, t.pi, s.dataset_size, s.dataset_seed + seed);
      out.has_dataset = true;
      CorrectionMode mode = CorrectionMode::sample_target_action;
      if (s.correction == "is") mode = CorrectionMode::is;
      if (s.correction == "nis") mode = CorrectionMode::nis;
      BuildResult built = build_empirical(out.dataset, phi, t.pi, t.pi, mode, gamma);
      out.problem.model = std::move(built.model);
      out.problem.nis = std::move(built.nis);
    }
    return out;
  }
  if (s.problem == "four_room") {
    FourRoomProblem f = make_four_room(s.assets_dir);
    if (s.gamma > 0.0) {
      f.mdp.discount = s.gamma;
      f.mdp.validate();
    }
    out.mdp = f.mdp;
    out.pi = f.target;
    TransitionDataset ds = collect_trajectory_steps(f.mdp, f.behavior, f.start, s.dataset_size, s.horizon,
                                                    {f.terminal_state}, s.dataset_seed + seed);
    const FeatureMatrix phi = build_four_room_features(f, ds);
    CorrectionMode mode = CorrectionMode::sample_target_action;
    if (s.correction == "sample_target_action") {
      ds = resample_next_actions(ds, f.target, s.dataset_seed + seed + 1000003);
    } else if (s.correction == "is") {
      mode = CorrectionMode::is;
    } else if (s.correction == "nis") {
      mode = CorrectionMode::nis;
    } else if (s.correction != "none") {
      fail(ErrorKind::invalid_input, "unknown correction_mode: " + s.correction);
    }
    BuildResult built = build_empirical(ds, phi, f.target, f.behavior, mode, f.mdp.discount);
    out.problem.model = std::move(built.model);
    out.problem.nis = std::move(built.nis);
    out.problem.phi = phi.phi;
    out.problem.theta0 = Vector(phi.dim(), 0.0);
    out.problem.q_true = true_q(f.mdp, f.target);
    out.problem.phi_seen = seen_feature_blocks(out.problem.model, phi);
    out.dataset = std::move(ds);
    out.has_dataset = true;
    return out;
  }
  if (s.problem.rfind("file:", 0) == 0) {
    ProblemFile pf = load_problem(s.problem.substr(5));
    out.mdp = pf.mdp;
    out.pi = pf.pi;
    out.problem.phi = pf.phi.phi;
    out.problem.theta0 = pf.theta0.value_or(Vector(pf.phi.dim(), 0.0));
    out.problem.q_true = true_q(pf.mdp, pf.pi);
    const Vector lambda = pf.lambda.value_or(Vector(pf.mdp.n_pairs(), 1.0 / pf.mdp.n_pairs()));
    if (s.expected) {
      out.problem.model = expected_model(pf.mdp, pf.pi, pf.phi, lambda);
      return out;
    }
    const Policy mu = pf.mu.value_or(pf.pi);
    CorrectionMode mode = CorrectionMode::sample_target_action;
    if (s.correction == "is") mode = CorrectionMode::is;
    if (s.correction == "nis") mode = CorrectionMode::nis;
    if (s.dataset_kind == "trajectory") {
      Vector start(pf.mdp.n_states, 1.0 / pf.mdp.n_states);
      out.dataset = collect_trajectory_steps(pf.mdp, mu, start, s.dataset_size, s.horizon, {},
                                             s.dataset_seed + seed);
    } else {
      out.dataset = collect_iid(pf.mdp, lambda, pf.pi, s.dataset_size, s.dataset_seed + seed);
    }
    out.has_dataset = true;
    BuildResult built = build_empirical(out.dataset, pf.phi, pf.pi, mu, mode, pf.mdp.discount);
    out.problem.model = std::move(built.model);
    out.problem.nis = std::move(built.nis);
    out.problem.phi_seen = seen_feature_blocks(out.problem.model, pf.phi);
    return out;
  }
  fail(ErrorKind::invalid_input, "unknown problem: " + s.problem);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory: " + dir);
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::nonexistence: return 3;
    case ErrorKind::io: return 4;
    default: return 2;
  }
}

int cmd_run(const ConfigMap& cfg) {
  const Setup s = resolve_setup(cfg);
  ensure_dir(s.output_dir);

  std::vector<std::vector<ResultRow>> per_seed(s.seeds.size());
  std::vector<std::string> errors(s.seeds.size());
  // Seeds are independent; run them concurrently and serialize the writes.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.seeds.size()); ++i) {
    try {
      const std::uint64_t seed = s.seeds[static_cast<std::size_t>(i)];
      BuiltProblem bp = build_for_seed(s, seed);
      const RunResult res = run(s.algorithm, bp.problem, s.learner, s.trace_stride);
      auto& rows = per_seed[static_cast<std::size_t>(i)];
      rows.reserve(res.trace.size());
      for (const TracePoint& tp : res.trace)
        rows.push_back({s.experiment_id, algorithm_name(s.algorithm), seed, tp.step, tp.max_value_error,
                        tp.emsbe, run_status_name(res.status)});
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const std::string& err : errors)
    if (!err.empty()) fail(ErrorKind::invalid_input, "run failed: " + err);

  std::vector<ResultRow> rows;
  for (const auto& block : per_seed) rows.insert(rows.end(), block.begin(), block.end());
  const std::string results_path = s.output_dir + "/results.csv";
  write_results_csv(results_path, rows);

  // Mean curve across seeds per recorded step.
  std::map<std::size_t, std::pair<Vector, Vector>> by_step;  // step -> (value errors, emsbes)
  for (const ResultRow& r : rows) {
    auto& [ve, ems] = by_step[r.step];
    if (std::isfinite(r.max_value_error)) ve.push_back(r.max_value_error);
    ems.push_back(r.emsbe);
  }
  std::ofstream mean_out(s.output_dir + "/summary.csv");
  if (!mean_out) fail(ErrorKind::io, "cannot write summary.csv");
  mean_out << "step,mean_max_value_error,mean_emsbe,n_seeds\n";
  for (const auto& [step, vals] : by_step) {
    const auto& [ve, ems] = vals;
    const double mve = ve.empty() ? std::nan("") : std::accumulate(ve.begin(), ve.end(), 0.0) / ve.size();
    const double mem = ems.empty() ? std::nan("") : std::accumulate(ems.begin(), ems.end(), 0.0) / ems.size();
    mean_out << step << ',' << format_result(mve) << ',' << format_result(mem) << ',' << ems.size() << '\n';
  }
  std::cout << "wrote " << results_path << " (" << rows.size() << " rows, " << s.seeds.size() << " seeds)\n";

  bool all_converged = true;
  for (const auto& block : per_seed)
    if (!block.empty() && block.back().status != "converged") all_converged = false;
  std::cout << "status: " << (all_converged ? "all seeds converged" : "not all seeds converged") << "\n";
  return 0;
}

namespace {

struct Table1Row {
  std::string label;
  Algorithm alg;
  LearnerConfig cfg;
};

}  // namespace

int cmd_table1(const ConfigMap& cfg) {
  const Setup s = resolve_setup(cfg);
  ensure_dir(s.output_dir);
  BairdProblem b = make_baird();
  Problem prob;
  prob.model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
  prob.phi = b.phi.phi;
  prob.theta0 = b.theta0;

  std::vector<Table1Row> rows;
  {
    LearnerConfig c;
    c.eta = 0.5;
    rows.push_back({"TD", Algorithm::otd, c});
    c.eta = 0.997;
    c.m = 3;
    rows.push_back({"Target TD", Algorithm::ottd, c});
    LearnerConfig r;
    r.eta = 0.8;
    rows.push_back({"RM", Algorithm::rm, r});
    LearnerConfig g;
    g.eta = 0.6;
    g.eta2 = 0.6;
    rows.push_back({"GTD2", Algorithm::gtd2, g});
  }

  std::ofstream out(s.output_dir + "/table1.csv");
  if (!out) fail(ErrorKind::io, "cannot write table1.csv");
  out << "algorithm,converges,metric_per_step,one_minus_metric,metric_per_window,steps_per_application\n";
  std::cout << "convergence-rate metric (per update step; >1 diverges)\n";
  for (const Table1Row& row : rows) {
    const IterationMatrix im = iteration_matrix(row.alg, prob, row.cfg);
    const double metric = convergence_metric(im.C, im.steps_per_application);
    const double window_metric = convergence_metric(im.C, 1);
    const bool conv = metric < 1.0;
    out << row.label << ',' << (conv ? "yes" : "no") << ',' << format_exact(metric) << ','
        << format_exact(1.0 - metric) << ',' << format_exact(window_metric) << ',' << im.steps_per_application
        << '\n';
    std::cout << "  " << row.label << ": " << (conv ? "converges" : "diverges") << " metric=" << metric
              << " (1-metric=" << 1.0 - metric << ")\n";
  }
  std::cout << "wrote " << s.output_dir + "/table1.csv" << "\n";
  return 0;
}

int cmd_diagnose(const ConfigMap& cfg) {
  const Setup s = resolve_setup(cfg);
  if (s.problem == "baird") {
    BairdProblem b = make_baird();
    const EmpiricalModel model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
    std::cout << "Baird expected model diagnostics\n";
    for (const ConditionReport& r : check_otd(model, cfg_get_double(cfg, "run.eta", 0.5)))
      std::cout << "  " << format_report(r) << "\n";
    std::cout << "  " << format_report(check_ottd(model)) << "\n";
    return cmd_table1(cfg);
  }
  if (s.problem == "two_state") {
    const double gamma = s.gamma > 0.0 ? s.gamma : 0.95;
    TwoStateProblem t = make_two_state(gamma);
    const Vector lambda =
        s.lambda_spec.empty() ? pathological_lambda(gamma) : resolve_lambda(s, t.mdp.n_pairs(), gamma);
    const Matrix p_pi = state_action_transition(t.mdp, t.pi);
    const ConditionReport r = detect_nonexistence(t.phi, p_pi, lambda, gamma);
    std::cout << "Two-state diagnostics at lambda = (" << lambda[0] << ", " << lambda[1] << ")\n";
    std::cout << "  " << format_report(r) << "\n";
    const EmpiricalModel over = expected_model(t.mdp, t.pi, t.phi_over, lambda);
    std::cout << "  over-parameterized variant: " << format_report(check_ottd(over)) << "\n";
    return 0;
  }
  // four_room / file problems: dataset-driven diagnostics on the first seed.
  BuiltProblem bp = build_for_seed(s, s.seeds.front());
  std::cout << s.problem << " diagnostics (seed " << s.seeds.front() << ", k=" << bp.problem.model.k
            << ", d=" << bp.problem.model.M.cols << ")\n";
  std::cout << "  over-parameterized: " << (bp.problem.model.over_parameterized ? "yes" : "no") << "\n";
  for (const ConditionReport& r : check_otd(bp.problem.model, s.learner.eta)) std::cout << "  " << format_report(r) << "\n";
  std::cout << "  " << format_report(check_ottd(bp.problem.model)) << "\n";
  if (bp.problem.nis)
    std::cout << "  nis variant: " << format_report(check_ottd(bp.problem.model, bp.problem.nis->N)) << "\n";
  if (!bp.problem.phi_seen.empty())
    std::cout << "  " << format_report(check_otq(bp.problem.model, bp.problem.phi_seen, bp.problem.model.gamma))
              << "\n";
  try {
    std::cout << "  m_bar(eta=" << s.learner.eta << ") = " << m_bar(bp.problem.model, s.learner.eta, bp.problem.model.gamma)
              << "\n";
  } catch (const Error& e) {
    std::cout << "  m_bar: " << e.what() << "\n";
  }
  const IterationMatrix im = iteration_matrix(s.algorithm, bp.problem, s.learner);
  std::cout << "  convergence metric (" << algorithm_name(s.algorithm)
            << ") = " << convergence_metric(im.C, im.steps_per_application) << "\n";
  return 0;
}

int cmd_fixed_point(const ConfigMap& cfg) {
  const Setup s = resolve_setup(cfg);
  BuiltProblem bp = build_for_seed(s, s.seeds.front());
  const EmpiricalModel& model = bp.problem.model;

  FixedPoint fp;
  if (s.algorithm == Algorithm::expected_td && !model.over_parameterized) {
    // Under-parameterized expected TD: theta* = (Phi^T D (I - gamma P) Phi)^-1 Phi^T D R.
    Vector dk_diag(model.k);
    for (std::size_t i = 0; i < model.k; ++i) dk_diag[i] = model.Dk(i, i);
    Matrix core = sub(model.M, scale(model.N, model.gamma));
    const Matrix a = matmul(transpose(model.M), diag_scale_rows(dk_diag, core));
    Vector weighted_r(model.k);
    for (std::size_t i = 0; i < model.k; ++i) weighted_r[i] = dk_diag[i] * model.R[i];
    const Vector b = tmatvec(model.M, weighted_r);
    try {
      fp.theta = linear_solve(a, b);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::singular_system)
        fail(ErrorKind::nonexistence, "expected TD fixed point does not exist: " + std::string(e.what()));
      throw;
    }
  } else if (s.algorithm == Algorithm::ottd_nis || s.algorithm == Algorithm::ottd_is) {
    if (!bp.problem.nis) fail(ErrorKind::invalid_input, "fixed-point: no IS/NIS model built");
    fp = fixed_point_nis(model, *bp.problem.nis, bp.problem.theta0);
  } else if (s.algorithm == Algorithm::otq) {
    fp = fixed_point_otq(model, bp.problem.phi_seen, bp.problem.theta0, s.learner.otq_norm_form);
  } else {
    fp = fixed_point_ottd(model, bp.problem.theta0);
  }

  const RunResult iter = run(s.algorithm, bp.problem, s.learner, s.trace_stride == 0 ? 1000 : s.trace_stride);
  double disc = 0.0;
  for (std::size_t i = 0; i < fp.theta.size(); ++i)
    disc = std::max(disc, std::fabs(fp.theta[i] - iter.final.theta[i]));

  double value_err = std::nan("");
  if (bp.problem.q_true) {
    const Vector v = matvec(bp.problem.phi, fp.theta);
    value_err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      value_err = std::max(value_err, std::fabs(v[i] - (*bp.problem.q_true)[i]));
  }

  std::cout << "theta* =";
  for (double x : fp.theta) std::cout << ' ' << format_result(x);
  std::cout << "\n||Phi theta* - q_pi||_inf = " << value_err << "\n";
  std::cout << "iterative status = " << run_status_name(iter.status) << " after " << iter.final.step
            << " steps; |iterative - closed form|_inf = " << disc << "\n";
  if (!fp.note.empty()) std::cout << fp.note << "\n";
  return 0;
}

int cmd_bound(const ConfigMap& cfg) {
  const Setup s = resolve_setup(cfg);
  ensure_dir(s.output_dir);
  BuiltProblem bp = build_for_seed(s, s.seeds.front());
  if (!bp.problem.q_true) fail(ErrorKind::invalid_input, "bound: no evaluation oracle available");
  const std::string kind = cfg_get(cfg, "run.bound", s.correction == "nis" ? "nis" : "ottd");

  BoundReport r;
  if (kind == "ottd") {
    r = bound_ottd(bp.problem.model, bp.problem.phi, *bp.problem.q_true, s.delta);
  } else if (kind == "nis") {
    if (!bp.problem.nis) fail(ErrorKind::invalid_input, "bound: nis bound requires correction_mode = nis");
    r = bound_nis_episodic(bp.problem.model, *bp.problem.nis, bp.problem.phi, *bp.problem.q_true, s.delta);
  } else if (kind == "continuing") {
    if (!bp.problem.nis) fail(ErrorKind::invalid_input, "bound: continuing bound requires correction_mode = nis");
    r = bound_continuing(bp.problem.model, *bp.problem.nis, bp.problem.phi, *bp.problem.q_true, bp.mdp, bp.pi,
                         s.delta);
  } else {
    fail(ErrorKind::invalid_input, "unknown bound kind: " + kind);
  }

  std::cout << format_report(r) << "\n";
  std::ofstream out(s.output_dir + "/bounds.csv");
  if (!out) fail(ErrorKind::io, "cannot write bounds.csv");
  out << "eps_stat,eps_projection,eps_approx,total,actual_error,delta,norm\n";
  out << format_exact(r.eps_stat) << ',' << format_exact(r.eps_projection) << ',' << format_exact(r.eps_approx)
      << ',' << format_exact(r.total) << ',' << format_exact(r.actual_error.value_or(std::nan(""))) << ','
      << format_exact(r.delta) << ',' << (r.norm_kind == NormKind::infinity ? "infinity" : "d_pi_weighted")
      << '\n';
  return 0;
}

int cmd_collect(const ConfigMap& cfg, const std::string& out_path) {
  const Setup s = resolve_setup(cfg);
  BuiltProblem bp = build_for_seed(s, s.seeds.front());
  if (!bp.has_dataset) fail(ErrorKind::invalid_input, "collect: expected-model problems have no dataset");
  const std::string path = out_path.empty() ? s.output_dir + "/dataset.csv" : out_path;
  ensure_dir(std::filesystem::path(path).parent_path().string().empty()
                 ? "."
                 : std::filesystem::path(path).parent_path().string());
  save_dataset(path, bp.dataset);
  std::cout << "wrote " << path << " (" << bp.dataset.size() << " transitions)\n";
  return 0;
}

int cmd_plot(const std::string& results_path, const std::string& out_dir) {
  const std::vector<ResultRow> rows = read_results_csv(results_path);
  if (rows.empty()) fail(ErrorKind::schema, "plot: results file has no rows");
  ensure_dir(out_dir);

  // Mean over seeds per (experiment, algorithm, step).
  struct Key {
    std::string exp, alg;
    bool operator<(const Key& o) const { return std::tie(exp, alg) < std::tie(o.exp, o.alg); }
  };
  std::map<Key, std::map<std::size_t, std::pair<Vector, Vector>>> grouped;
  for (const ResultRow& r : rows) {
    auto& cell = grouped[{r.experiment_id, r.algorithm}][r.step];
    if (std::isfinite(r.max_value_error)) cell.first.push_back(r.max_value_error);
    cell.second.push_back(r.emsbe);
  }

  for (int metric = 0; metric < 2; ++metric) {
    std::vector<Curve> curves;
    for (const auto& [key, steps] : grouped) {
      Curve c;
      c.label = key.exp + " (" + key.alg + ")";
      for (const auto& [step, vals] : steps) {
        const Vector& v = metric == 0 ? vals.first : vals.second;
        if (v.empty()) continue;
        c.points.emplace_back(static_cast<double>(step),
                              std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
      }
      if (!c.points.empty()) curves.push_back(std::move(c));
    }
    if (curves.empty()) continue;
    const std::string name = metric == 0 ? "value_error" : "emsbe";
    const std::string path = out_dir + "/" + name + ".svg";
    write_svg_plot(path, metric == 0 ? "maximal value prediction error" : "EMSBE", "step",
                   metric == 0 ? "||Phi theta - q_pi||_inf" : "EMSBE", curves);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace ottd
