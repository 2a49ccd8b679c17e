#include <doctest.h>

#include <cmath>

#include "ottd/diagnostics.hpp"
#include "ottd/envs.hpp"
#include "ottd/numerics/linalg.hpp"
#include "ottd/rng.hpp"

using namespace ottd;

TEST_CASE("check_otd on Baird flags divergence, orthonormal case passes") {
  const BairdProblem b = make_baird();
  const EmpiricalModel model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
  const auto reports = check_otd(model, 0.5);
  REQUIRE(reports.size() == 2);
  CHECK_FALSE(reports[0].satisfied);  // spectral radius above one
  CHECK(reports[0].value > 1.0);
  CHECK(reports[1].satisfied);  // ||N M+||_inf == 1 for the expected model

  // Orthonormal feature rows + uniform weights satisfy both bullets.
  EmpiricalModel ortho = make_random_instance(3, 7, 0.9, 5, false);
  Matrix m(3, 7);
  m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
  ortho.M = m;
  ortho.N = Matrix(3, 7);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) ortho.N(i, j) = 1.0 / 3.0;  // stochastic mix of seen rows
  ortho.Dk = Matrix::diag(Vector(3, 1.0 / 3.0));
  const auto ok = check_otd(ortho, 0.5);
  CHECK(ok[0].satisfied);
  CHECK(ok[1].satisfied);

  // gamma = 0: first condition reduces to rho(I - eta M M^T D_k) < 1.
  EmpiricalModel myopic = ortho;
  myopic.gamma = 0.0;
  CHECK(check_otd(myopic, 0.5)[0].satisfied);
}

TEST_CASE("check_ottd values") {
  const BairdProblem b = make_baird();
  const EmpiricalModel model = expected_model(b.mdp, b.pi, b.phi, b.lambda);
  const ConditionReport r = check_ottd(model);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.satisfied);

  EmpiricalModel doubled = make_random_instance(3, 7, 0.9, 6, false);
  doubled.N = scale(doubled.M, 2.0);
  const ConditionReport bad = check_ottd(doubled);
  CHECK(bad.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_FALSE(bad.satisfied);
}

TEST_CASE("check_otq") {
  // Tabular features with every pair seen: value 1 < 1/gamma.
  EmpiricalModel m = make_random_instance(4, 4, 0.9, 7, false);
  m.M = Matrix::identity(4);
  m.n_states = 4;
  m.n_actions = 1;
  m.seen_actions_by_state.assign(4, {0});
  std::vector<Matrix> blocks;
  for (std::size_t s = 0; s < 4; ++s) {
    Matrix b(1, 4);
    b(0, s) = 1.0;
    blocks.push_back(b);
  }
  const ConditionReport r = check_otq(m, blocks, 0.9);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.satisfied);

  // Unseen state contributes a zero block.
  blocks[2] = Matrix(1, 4);
  const ConditionReport r2 = check_otq(m, blocks, 0.9);
  CHECK(r2.satisfied);

  // Brute-force row-sum oracle on a random instance.
  Rng rng(8);
  const EmpiricalModel inst = make_random_instance(3, 7, 0.9, 8, true);
  std::vector<Matrix> rb;
  for (std::size_t s = 0; s < 3; ++s) {
    Matrix b(2, 7);
    for (auto& x : b.a) x = rng.normal();
    rb.push_back(b);
  }
  const Matrix mp = pinv(inst.M);
  double oracle = 0.0;
  for (const Matrix& b : rb) {
    const Matrix prod = matmul(b, mp);
    for (std::size_t i = 0; i < prod.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < prod.cols; ++j) s += std::fabs(prod(i, j));
      oracle = std::max(oracle, s);
    }
  }
  CHECK(check_otq(inst, rb, 0.9).value == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("m_bar formula") {
  // k=1, M=[1], D=[1], eta=0.5, gamma=0.95 -> 7.
  EmpiricalModel m = make_random_instance(1, 1, 0.95, 0, false);
  m.M = Matrix(1, 1, {1.0});
  m.Dk = Matrix(1, 1, {1.0});
  CHECK(m_bar(m, 0.5, 0.95) == 7);

  // gamma = 0 reduces to 1 + ceil(log(1/sqrt(k)) / log(1 - eta lambda_min)).
  const EmpiricalModel inst = make_random_instance(4, 9, 0.0, 9, true);
  const auto [lmin, lmax] = eig_range_mmtd(inst.M, inst.Dk);
  const double eta = 0.5 / lmax;
  const double expect = 1.0 + std::ceil(std::log(1.0 / std::sqrt(4.0)) / std::log(1.0 - eta * lmin));
  CHECK(m_bar(inst, eta, 0.0) == static_cast<std::size_t>(expect));

  CHECK_THROWS_AS((void)m_bar(inst, 1e9, 0.9), Error);
}

TEST_CASE("m_bar yields a contractive window on random conditioned instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EmpiricalModel inst = make_random_instance(2 + seed % 5, 2 * (2 + seed % 5) + 1, 0.9, 400 + seed, true);
    const auto [lmin, lmax] = eig_range_mmtd(inst.M, inst.Dk);
    LearnerConfig cfg;
    cfg.eta = 0.9 / lmax;
    cfg.m = m_bar(inst, cfg.eta, inst.gamma);
    Problem prob;
    prob.model = inst;
    prob.phi = inst.M;
    prob.theta0 = Vector(inst.M.cols, 0.0);
    const IterationMatrix im = iteration_matrix(Algorithm::ottd, prob, cfg);
    CHECK(convergence_metric(im.C, 1) < 1.0);
  }
}

TEST_CASE("iteration_matrix forms") {
  const EmpiricalModel inst = make_random_instance(3, 7, 0.9, 10, true);
  Problem prob;
  prob.model = inst;
  prob.phi = inst.M;
  prob.theta0 = Vector(7, 0.0);

  LearnerConfig zero;
  zero.eta = 0.0;
  const IterationMatrix id = iteration_matrix(Algorithm::otd, prob, zero);
  CHECK(inf_norm(sub(id.C, Matrix::identity(7))) == 0.0);

  // OTD: read off I - eta M^T D_k (M - gamma N).
  LearnerConfig cfg;
  cfg.eta = 0.3;
  const IterationMatrix c1 = iteration_matrix(Algorithm::otd, prob, cfg);
  Vector dk(3);
  for (std::size_t i = 0; i < 3; ++i) dk[i] = inst.Dk(i, i);
  const Matrix expect = sub(Matrix::identity(7),
                            scale(matmul(diag_scale_cols(transpose(inst.M), dk),
                                         sub(inst.M, scale(inst.N, inst.gamma))),
                                  0.3));
  CHECK(inf_norm(sub(c1.C, expect)) <= 1e-14);

  // OTTD combined matrix application agrees with ottd_combined_step.
  cfg.m = 4;
  const IterationMatrix cm = iteration_matrix(Algorithm::ottd, prob, cfg);
  CHECK(cm.steps_per_application == 4);
  Rng rng(11);
  Vector theta0(7);
  for (double& x : theta0) x = rng.normal();
  const Vector lhs = matvec(cm.C, theta0);
  Vector zero_r_combined = ottd_combined_step(theta0, [&] {
    EmpiricalModel z = inst;
    z.R.assign(z.R.size(), 0.0);
    return z;
  }(), cfg);
  CHECK([&] {
    double m = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) m = std::max(m, std::fabs(lhs[i] - zero_r_combined[i]));
    return m;
  }() <= 1e-12);

  // GTD2 joint system is 2d x 2d.
  LearnerConfig g;
  g.eta = 0.2;
  g.eta2 = 0.3;
  const IterationMatrix jm = iteration_matrix(Algorithm::gtd2, prob, g);
  CHECK(jm.C.rows == 14);

  CHECK_THROWS_AS((void)iteration_matrix(Algorithm::otq, prob, cfg), Error);
}

TEST_CASE("convergence metric") {
  CHECK(convergence_metric(Matrix::identity(4), 1) == 1.0);
  // Equals the spectral radius on generic matrices.
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(4, 4);
    for (double& x : a.a) x = 0.4 * rng.normal();
    CHECK(convergence_metric(a, 1) == doctest::Approx(spectral_radius(a)).epsilon(1e-12));
  }
}

TEST_CASE("two-state nonexistence detection") {
  for (double gamma : {0.6, 0.75, 0.9, 0.95}) {
    const TwoStateProblem ts = make_two_state(gamma);
    const Matrix p_pi = state_action_transition(ts.mdp, ts.pi);
    const ConditionReport r = detect_nonexistence(ts.phi, p_pi, pathological_lambda(gamma), gamma);
    CHECK(r.value < 1e-10);
    CHECK_FALSE(r.satisfied);
  }

  // On-policy stationary distribution (0, 1): nonsingular.
  const TwoStateProblem ts = make_two_state(0.95);
  const Matrix p_pi = state_action_transition(ts.mdp, ts.pi);
  const ConditionReport ok = detect_nonexistence(ts.phi, p_pi, Vector{0.0, 1.0}, 0.95);
  CHECK(ok.satisfied);
  CHECK(ok.value == doctest::Approx(4.0 * (1.0 - 0.95)).epsilon(1e-9));

  // gamma = 0: Phi^T D Phi positive for full-support d.
  const ConditionReport g0 = detect_nonexistence(ts.phi, p_pi, Vector{0.5, 0.5}, 0.0);
  CHECK(g0.satisfied);
}
