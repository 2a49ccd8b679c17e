#pragma once

#include <string>
#include <vector>

#include "ottd/learners.hpp"

namespace ottd {

struct ConditionReport {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool satisfied = false;
  std::string detail;
};

std::string format_report(const ConditionReport& r);

// Prop 3.1: rho(I - eta (M - gamma N) M^T D_k) < 1 and ||N M+|| <= 1.
std::vector<ConditionReport> check_otd(const EmpiricalModel& model, double eta);

// Thm 3.2: sub-multiplicative norm of N M+ at most one. The report value is
// the infinity norm; the spectral norm is also accepted (detail notes it).
ConditionReport check_ottd(const EmpiricalModel& model);
ConditionReport check_ottd(const EmpiricalModel& model, const Matrix& n_variant);

// Thm 5.1: max_i ||Phi_i M+||_inf < 1/gamma.
ConditionReport check_otq(const EmpiricalModel& model, const std::vector<Matrix>& phi_seen, double gamma);

// Minimal target window from the Thm 3.2 remark. Requires eta below
// 1/rho(M M^T D_k); throws precondition otherwise.
std::size_t m_bar(const EmpiricalModel& model, double eta, double gamma);

struct IterationMatrix {
  Matrix C;
  std::size_t steps_per_application = 1;
};

// Effective affine iteration matrix of the algorithm (combined m-step matrix
// for target TD, joint (theta, w) system for GTD2/TDC). OTQ is not affine and
// is rejected.
IterationMatrix iteration_matrix(Algorithm algorithm, const Problem& problem, const LearnerConfig& cfg);

// Table-1 convergence-rate metric: spectral radius per single update step,
// with structural unit eigenvalues (the invariant perpendicular subspace of
// over-parameterized models) deflated; returns 1 when nothing else remains.
double convergence_metric(const Matrix& c, std::size_t steps_per_application);

// Smallest singular value of Phi^T D (I - gamma P_pi) Phi; unsatisfied means
// the under-parameterized expected TD fixed point does not exist.
ConditionReport detect_nonexistence(const FeatureMatrix& phi, const Matrix& p_pi, const Vector& d, double gamma);

}  // namespace ottd
