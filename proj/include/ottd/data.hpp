#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ottd/mdp.hpp"
#include "ottd/numerics/matrix.hpp"

namespace ottd {

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  int a_next = 0;
  double is_ratio = 1.0;
  bool loop_flag = false;
};

struct TransitionDataset {
  enum class Kind { iid, trajectory };

  std::vector<Transition> transitions;
  // Half-open [begin, end) ranges partitioning the sequence; loop transitions
  // belong to their trajectory. Empty for iid data.
  std::vector<std::pair<std::size_t, std::size_t>> trajectory_bounds;
  Kind kind = Kind::iid;

  std::size_t size() const { return transitions.size(); }
  void validate(std::size_t n_states, std::size_t n_actions) const;
};

// i.i.d. collection: (s,a) ~ lambda, r = r(s,a), s' ~ P(.|s,a), a' ~ pi(.|s').
TransitionDataset collect_iid(const Mdp& mdp, const Vector& lambda, const Policy& pi, std::size_t n,
                              std::uint64_t seed);

// Trajectories under mu from the start distribution, truncated at the horizon
// or on entering a terminal state. Every trajectory is closed by a zero-reward
// self-loop transition at its final state (action drawn from mu, next action
// equal to it), so each bootstrapped pair is also a trained pair.
TransitionDataset collect_trajectories(const Mdp& mdp, const Policy& mu, const Vector& start,
                                       std::size_t n_traj, std::size_t horizon,
                                       const std::vector<std::size_t>& terminals, std::uint64_t seed);

// Same, but stops once the dataset holds exactly total_steps real (non-loop)
// transitions, truncating the last trajectory if needed.
TransitionDataset collect_trajectory_steps(const Mdp& mdp, const Policy& mu, const Vector& start,
                                           std::size_t total_steps, std::size_t horizon,
                                           const std::vector<std::size_t>& terminals, std::uint64_t seed);

// Redraws a_next ~ pi(.|s_next) for every non-loop transition (target-action
// sampling on trajectory data). Loop transitions keep their own action.
TransitionDataset resample_next_actions(const TransitionDataset& dataset, const Policy& pi, std::uint64_t seed);

// Writes is_ratio = pi(a'|s') / mu(a'|s') into every transition.
void annotate_is_ratios(TransitionDataset& dataset, const Policy& pi, const Policy& mu);

// Seen (s,a) pairs in first-occurrence order; the row order of H, M, N.
std::vector<std::size_t> seen_pair_order(const TransitionDataset& dataset, std::size_t n_actions);

enum class CorrectionMode { sample_target_action, is, nis };

// Everything the learners consume, derived from one dataset.
struct EmpiricalModel {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::size_t k = 0;  // distinct seen (s,a) with outgoing transitions
  std::size_t n = 0;  // transition count
  double gamma = 0.0;

  std::vector<std::size_t> seen_pairs;     // rank -> pair index, first-occurrence order
  std::vector<std::ptrdiff_t> pair_rank;   // pair index -> rank, -1 if unseen
  std::vector<long> counts;                // per rank
  Matrix H;                                // k x |S||A| one-hot mask
  Matrix Dk;                               // k x k diagonal of empirical frequencies
  Matrix M;                                // k x d predecessor features
  Matrix N;                                // k x d next features under Phat
  Vector R;                                // k empirical mean rewards
  Matrix Phat;                             // |S||A| x |S||A| empirical P_pi
  Matrix Phat_state;                       // k x |S| empirical state transition (Q-learning)
  std::vector<std::vector<std::size_t>> seen_actions_by_state;
  std::vector<char> pair_has_loop;  // per rank: any artificial loop sample
  bool over_parameterized = false;
  bool from_trajectories = false;
};

// IS / NIS variants of the transition estimate and weighting.
struct NisModel {
  Matrix Phat;  // |S||A| x |S||A|; NIS rows sum to 1, IS rows sum to the ratio mean
  Matrix N;     // k x d
  Matrix Dk;    // k x k weighting (ratio-weighted for NIS, plain copy for IS)
  double rho_max = 1.0;
  double rho_min = 1.0;
  double rho_m = 1.0;  // rho_max / rho_min
  bool normalized = true;
};

struct BuildResult {
  EmpiricalModel model;
  std::optional<NisModel> nis;
};

// Derives H, D_k, M, N, R, Phat (and the IS/NIS variants when requested) from
// a dataset. In sample_target_action mode the stored next actions are used and
// ratios ignored; is/nis modes require mu(a'|s') > 0 on every observed next
// action and weight transitions by pi(a'|s')/mu(a'|s').
BuildResult build_empirical(const TransitionDataset& dataset, const FeatureMatrix& phi, const Policy& pi,
                            const Policy& mu, CorrectionMode mode, double gamma);

// Exact expected-update model: M = Phi, N = P_pi Phi, D = diag(lambda).
EmpiricalModel expected_model(const Mdp& mdp, const Policy& pi, const FeatureMatrix& phi, const Vector& lambda);

// Monte-Carlo consistency probe: n samples per pair, NIS estimate against the
// true P_pi; returns the maximum absolute deviation.
double nis_consistency_probe(const Mdp& mdp, const Policy& pi, const Policy& mu, std::size_t n,
                             std::uint64_t seed);

}  // namespace ottd
