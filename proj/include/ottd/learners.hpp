#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ottd/data.hpp"
#include "ottd/numerics/matrix.hpp"

namespace ottd {

enum class Algorithm {
  otd,
  ottd,
  rm,
  baird_rm,
  gtd2,
  tdc,
  ottd_is,
  ottd_nis,
  otq,
  expected_td,
  expected_target_td,
};

const char* algorithm_name(Algorithm a);
std::optional<Algorithm> algorithm_from_name(const std::string& name);

struct LearnerConfig {
  double eta = 0.1;                  // learning rate
  std::size_t m = 1;                 // target copy window
  std::optional<double> eta2;        // second rate (gtd2/tdc)
  std::optional<double> mix;         // Baird RM mixing weight, default 0.5
  std::size_t max_iters = 10000;
  double tol = 1e-10;                // parameter change per m steps
  double divergence_threshold = 1e8;  // on ||Phi theta||_inf
  bool otq_norm_form = false;        // bootstrap with max|.| instead of max over seen actions

  void validate() const;
};

struct LearnerState {
  Vector theta;
  Vector theta_targ;
  std::size_t step = 0;
  std::optional<Vector> aux_w;  // gtd2/tdc secondary weights

  static LearnerState init(const Vector& theta0) { return LearnerState{theta0, theta0, 0, std::nullopt}; }
};

enum class RunStatus { converged, max_iters, diverged };
const char* run_status_name(RunStatus s);

struct TracePoint {
  std::size_t step;
  double max_value_error;  // NaN when no evaluation oracle is attached
  double emsbe;
};

struct RunResult {
  LearnerState final;
  RunStatus status = RunStatus::max_iters;
  std::vector<TracePoint> trace;
};

// 1/2 || R + gamma N theta - M theta ||^2_{D}.
double emsbe(const Vector& theta, const Matrix& m, const Matrix& n, const Vector& r, const Matrix& dk,
             double gamma);
double emsbe(const Vector& theta, const EmpiricalModel& model);

// Single update steps. Target-network steps copy target <- student first at
// steps divisible by m; with m = 1 they coincide with their plain variants.
LearnerState otd_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg);
LearnerState ottd_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg);

// The m-step window collapsed into one affine application (B computed inside).
Vector ottd_combined_step(const Vector& theta_nm, const EmpiricalModel& model, const LearnerConfig& cfg);

enum class ExpectedVariant { td, target_td };
LearnerState expected_step(LearnerState state, const Mdp& mdp, const Policy& pi, const FeatureMatrix& phi,
                           const Vector& lambda, const LearnerConfig& cfg, ExpectedVariant variant);

enum class ResidualVariant { rm, baird_rm };
LearnerState residual_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg,
                           ResidualVariant variant);

enum class GradientTdVariant { gtd2, tdc };
LearnerState gradient_td_step(LearnerState state, const EmpiricalModel& model, const LearnerConfig& cfg,
                              GradientTdVariant variant);

LearnerState ottd_nis_step(LearnerState state, const EmpiricalModel& model, const NisModel& nis,
                           const LearnerConfig& cfg);

// Per-state feature blocks over seen actions; unseen states get a zero row.
std::vector<Matrix> seen_feature_blocks(const EmpiricalModel& model, const FeatureMatrix& phi);

LearnerState otq_step(LearnerState state, const EmpiricalModel& model, const std::vector<Matrix>& phi_seen,
                      const LearnerConfig& cfg);

struct FixedPoint {
  Vector theta;
  bool condition_ok = true;
  std::string note;
};

// Closed-form OTTD limit including the initial-point terms.
FixedPoint fixed_point_ottd(const EmpiricalModel& model, const Vector& theta0);
FixedPoint fixed_point_nis(const EmpiricalModel& model, const NisModel& nis, const Vector& theta0);
// Contractive-operator solve for q-hat*, then theta* = M+ qhat + (I - M+M) theta0.
FixedPoint fixed_point_otq(const EmpiricalModel& model, const std::vector<Matrix>& phi_seen,
                           const Vector& theta0, bool norm_form = false, double tol = 1e-12);

// Everything one run needs.
struct Problem {
  EmpiricalModel model;
  std::optional<NisModel> nis;
  Matrix phi;                    // full feature matrix for value-error tracking
  std::optional<Vector> q_true;  // evaluation oracle
  Vector theta0;
  std::vector<Matrix> phi_seen;  // otq only
};

// Iterates the chosen step rule, tracing ||Phi theta - q_pi||_inf and EMSBE.
// trace_stride == 0 picks a stride that keeps about 5000 rows.
RunResult run(Algorithm algorithm, const Problem& problem, const LearnerConfig& cfg,
              std::size_t trace_stride = 1);

}  // namespace ottd
