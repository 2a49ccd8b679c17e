#pragma once

#include <optional>
#include <string>

#include "ottd/data.hpp"
#include "ottd/mdp.hpp"

namespace ottd {

// Chebyshev regression: argmin_theta ||Phi theta - q||_inf, solved as the
// linear program min t s.t. -t <= Phi theta - q <= t by a dense two-phase
// simplex.
Vector minimax_theta(const Matrix& phi, const Vector& q);

enum class NormKind { infinity, d_pi_weighted };

struct BoundReport {
  double eps_stat = 0.0;
  double eps_projection = 0.0;
  double eps_approx = 0.0;
  double total = 0.0;
  double delta = 0.0;
  NormKind norm_kind = NormKind::infinity;
  Vector theta_star;
  std::optional<double> actual_error;
  std::string detail;
};

std::string format_report(const BoundReport& r);

// Thm 3.3 with the appendix Hoeffding constants (sqrt(2 n) denominators).
BoundReport bound_ottd(const EmpiricalModel& model, const Matrix& phi, const Vector& q_true, double delta);

// Cor 3.4: value error of the expected-update fixed point against
// 2/(1-gamma) inf_theta ||Phi theta - q_pi||_inf. Checks the inequality.
struct ExpectedBound {
  double lhs = 0.0;
  double bound = 0.0;
};
ExpectedBound bound_expected(const Matrix& phi, const Vector& q_true, double gamma);

// Cor 4.3 / A.7: episodic-NIS statistical error with the rho_M factors.
BoundReport bound_nis_episodic(const EmpiricalModel& model, const NisModel& nis, const Matrix& phi,
                               const Vector& q_true, double delta);

// Cor A.8: D_pi-weighted bound for truncated trajectories on continuing
// tasks, including the loop-transition penalty weighted by the stationary
// mass of looped pairs.
BoundReport bound_continuing(const EmpiricalModel& model, const NisModel& nis, const Matrix& phi,
                             const Vector& q_true, const Mdp& mdp, const Policy& pi, double delta);

}  // namespace ottd
