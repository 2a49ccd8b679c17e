#pragma once

#include <cstddef>
#include <vector>

#include "ottd/numerics/matrix.hpp"

namespace ottd {

// Finite MDP with dense transition tensor and deterministic reward table.
// State-action pairs are indexed s * n_actions + a everywhere.
struct Mdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> transition;  // (s * nA + a) * nS + s'
  std::vector<double> reward;      // s * nA + a, each in [-1, 1]
  double discount = 0.0;

  Mdp() = default;
  Mdp(std::size_t ns, std::size_t na, double gamma)
      : n_states(ns), n_actions(na), transition(ns * na * ns, 0.0), reward(ns * na, 0.0), discount(gamma) {}

  std::size_t n_pairs() const { return n_states * n_actions; }
  std::size_t pair_index(std::size_t s, std::size_t a) const { return s * n_actions + a; }

  double& p(std::size_t s, std::size_t a, std::size_t s2) { return transition[pair_index(s, a) * n_states + s2]; }
  double p(std::size_t s, std::size_t a, std::size_t s2) const {
    return transition[pair_index(s, a) * n_states + s2];
  }
  const double* p_row(std::size_t s, std::size_t a) const {
    return transition.data() + pair_index(s, a) * n_states;
  }
  double& r(std::size_t s, std::size_t a) { return reward[pair_index(s, a)]; }
  double r(std::size_t s, std::size_t a) const { return reward[pair_index(s, a)]; }

  // Checks row sums, reward bound and discount range; throws invalid-input.
  void validate() const;
};

struct Policy {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;  // s * nA + a

  Policy() = default;
  Policy(std::size_t ns, std::size_t na) : n_states(ns), n_actions(na), probs(ns * na, 0.0) {}

  double& pi(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }
  double pi(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }
  const double* row(std::size_t s) const { return probs.data() + s * n_actions; }

  static Policy uniform(std::size_t ns, std::size_t na);
  void validate() const;
};

// Feature map Phi, one row per state-action pair (s * nA + a), d columns.
// Full min-dimension rank is required at construction.
struct FeatureMatrix {
  Matrix phi;

  FeatureMatrix() = default;
  explicit FeatureMatrix(Matrix m);

  std::size_t dim() const { return phi.cols; }
  const double* row(std::size_t pair) const { return phi.row(pair); }
  Vector values(const Vector& theta) const { return matvec(phi, theta); }
};

// P_pi(s',a'|s,a) = P(s'|s,a) pi(a'|s'), row-stochastic over pairs.
Matrix state_action_transition(const Mdp& mdp, const Policy& pi);

// T_pi q = r + gamma P_pi q.
Vector bellman_apply(const Mdp& mdp, const Policy& pi, const Vector& q);

// Unique fixed point of T_pi, solved as (I - gamma P_pi)^-1 r.
Vector true_q(const Mdp& mdp, const Policy& pi);

}  // namespace ottd
