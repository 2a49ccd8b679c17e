#include "ottd/mdp.hpp"

#include <cmath>

#include "ottd/numerics/linalg.hpp"

namespace ottd {

void Mdp::validate() const {
  if (n_states == 0 || n_actions == 0) fail(ErrorKind::invalid_input, "Mdp: empty state or action space");
  if (!(discount >= 0.0 && discount < 1.0)) fail(ErrorKind::invalid_input, "Mdp: discount must be in [0,1)");
  if (transition.size() != n_pairs() * n_states || reward.size() != n_pairs())
    fail(ErrorKind::shape, "Mdp: table sizes inconsistent");
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (std::size_t s2 = 0; s2 < n_states; ++s2) {
        const double v = p(s, a, s2);
        if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::invalid_input, "Mdp: invalid transition probability");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > 1e-12) fail(ErrorKind::invalid_input, "Mdp: transition row does not sum to 1");
      const double rv = r(s, a);
      if (!std::isfinite(rv) || std::fabs(rv) > 1.0 + 1e-12)
        fail(ErrorKind::invalid_input, "Mdp: reward must be bounded by one");
    }
  }
}

Policy Policy::uniform(std::size_t ns, std::size_t na) {
  Policy p(ns, na);
  for (double& x : p.probs) x = 1.0 / static_cast<double>(na);
  return p;
}

void Policy::validate() const {
  if (n_states == 0 || n_actions == 0) fail(ErrorKind::invalid_input, "Policy: empty");
  if (probs.size() != n_states * n_actions) fail(ErrorKind::shape, "Policy: table size inconsistent");
  for (std::size_t s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      const double v = pi(s, a);
      if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::invalid_input, "Policy: invalid probability");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12) fail(ErrorKind::invalid_input, "Policy: row does not sum to 1");
  }
}

// Finiteness only: encodings like the four-room one-hot blocks are column
// rank-deficient by construction, so rank checks live where they matter
// (rank(M) = k on the seen rows).
FeatureMatrix::FeatureMatrix(Matrix m) : phi(std::move(m)) {
  if (phi.empty()) fail(ErrorKind::invalid_input, "FeatureMatrix: empty");
  require_finite(phi, "FeatureMatrix");
}

Matrix state_action_transition(const Mdp& mdp, const Policy& pi) {
  if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions)
    fail(ErrorKind::shape, "state_action_transition: policy dimensions do not match mdp");
  const std::size_t n = mdp.n_pairs();
  Matrix ppi(n, n);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const std::size_t row = mdp.pair_index(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps = mdp.p(s, a, s2);
        if (ps == 0.0) continue;
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) ppi(row, s2 * mdp.n_actions + a2) = ps * pi.pi(s2, a2);
      }
    }
  return ppi;
}

Vector bellman_apply(const Mdp& mdp, const Policy& pi, const Vector& q) {
  if (q.size() != mdp.n_pairs()) fail(ErrorKind::shape, "bellman_apply: q length mismatch");
  const Matrix ppi = state_action_transition(mdp, pi);
  Vector out = matvec(ppi, q);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mdp.reward[i] + mdp.discount * out[i];
  return out;
}

Vector true_q(const Mdp& mdp, const Policy& pi) {
  const std::size_t n = mdp.n_pairs();
  Matrix a = scale(state_action_transition(mdp, pi), -mdp.discount);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  Vector r(mdp.reward.begin(), mdp.reward.end());
  return linear_solve(a, r);
}

}  // namespace ottd
