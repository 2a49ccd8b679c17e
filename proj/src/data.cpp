#include "ottd/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ottd/rng.hpp"

namespace ottd {

namespace {

void check_distribution(const Vector& lambda, std::size_t expected_len, const char* what) {
  if (lambda.size() != expected_len) fail(ErrorKind::shape, std::string(what) + ": wrong length");
  double sum = 0.0;
  for (double x : lambda) {
    if (!std::isfinite(x) || x < 0.0) fail(ErrorKind::invalid_input, std::string(what) + ": not a distribution");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-9) fail(ErrorKind::invalid_input, std::string(what) + ": does not sum to 1");
}

std::size_t sample_state(const Mdp& mdp, std::size_t s, std::size_t a, Rng& rng) {
  return rng.categorical(mdp.p_row(s, a), mdp.n_states);
}

std::size_t sample_action(const Policy& pol, std::size_t s, Rng& rng) {
  return rng.categorical(pol.row(s), pol.n_actions);
}

// Appends the zero-reward self-loop closing a trajectory; the loop's next
// action equals its own action so the bootstrapped pair is the trained pair.
void loop_terminals(std::vector<Transition>& traj, std::size_t final_state, const Policy& mu, Rng& rng) {
  const int a_loop = static_cast<int>(sample_action(mu, final_state, rng));
  if (!traj.empty()) traj.back().a_next = a_loop;
  Transition t;
  t.s = static_cast<int>(final_state);
  t.a = a_loop;
  t.r = 0.0;
  t.s_next = static_cast<int>(final_state);
  t.a_next = a_loop;
  t.loop_flag = true;
  traj.push_back(t);
}

std::vector<Transition> roll_trajectory(const Mdp& mdp, const Policy& mu, std::size_t s0, std::size_t horizon,
                                        const std::vector<bool>& terminal, Rng& rng) {
  std::vector<Transition> traj;
  std::size_t s = s0;
  for (std::size_t t = 0; t < horizon && !terminal[s]; ++t) {
    const std::size_t a = sample_action(mu, s, rng);
    const std::size_t s2 = sample_state(mdp, s, a, rng);
    Transition tr;
    tr.s = static_cast<int>(s);
    tr.a = static_cast<int>(a);
    tr.r = mdp.r(s, a);
    tr.s_next = static_cast<int>(s2);
    if (!traj.empty()) traj[traj.size() - 1].a_next = tr.a;
    traj.push_back(tr);
    s = s2;
  }
  loop_terminals(traj, s, mu, rng);
  return traj;
}

}  // namespace

void TransitionDataset::validate(std::size_t n_states, std::size_t n_actions) const {
  if (transitions.empty()) fail(ErrorKind::invalid_input, "TransitionDataset: empty");
  for (const Transition& t : transitions) {
    if (t.s < 0 || static_cast<std::size_t>(t.s) >= n_states || t.s_next < 0 ||
        static_cast<std::size_t>(t.s_next) >= n_states || t.a < 0 ||
        static_cast<std::size_t>(t.a) >= n_actions || t.a_next < 0 ||
        static_cast<std::size_t>(t.a_next) >= n_actions)
      fail(ErrorKind::invalid_input, "TransitionDataset: index out of range");
    if (!std::isfinite(t.r) || !std::isfinite(t.is_ratio) || t.is_ratio < 0.0)
      fail(ErrorKind::invalid_input, "TransitionDataset: non-finite fields");
    if (t.loop_flag && (t.r != 0.0 || t.s_next != t.s))
      fail(ErrorKind::invalid_input, "TransitionDataset: malformed loop transition");
  }
  if (!trajectory_bounds.empty()) {
    std::size_t cursor = 0;
    for (const auto& [b, e] : trajectory_bounds) {
      if (b != cursor || e <= b || e > transitions.size())
        fail(ErrorKind::invalid_input, "TransitionDataset: trajectory bounds do not partition");
      cursor = e;
    }
    if (cursor != transitions.size())
      fail(ErrorKind::invalid_input, "TransitionDataset: trajectory bounds do not cover the data");
  }
}

TransitionDataset collect_iid(const Mdp& mdp, const Vector& lambda, const Policy& pi, std::size_t n,
                              std::uint64_t seed) {
  mdp.validate();
  pi.validate();
  check_distribution(lambda, mdp.n_pairs(), "collect_iid lambda");
  if (n == 0) fail(ErrorKind::invalid_input, "collect_iid: n must be positive");
  Rng rng(seed);
  TransitionDataset out;
  out.kind = TransitionDataset::Kind::iid;
  out.transitions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pair = rng.categorical(lambda);
    const std::size_t s = pair / mdp.n_actions;
    const std::size_t a = pair % mdp.n_actions;
    const std::size_t s2 = sample_state(mdp, s, a, rng);
    const std::size_t a2 = sample_action(pi, s2, rng);
    Transition t;
    t.s = static_cast<int>(s);
    t.a = static_cast<int>(a);
    t.r = mdp.r(s, a);
    t.s_next = static_cast<int>(s2);
    t.a_next = static_cast<int>(a2);
    out.transitions.push_back(t);
  }
  return out;
}

TransitionDataset collect_trajectories(const Mdp& mdp, const Policy& mu, const Vector& start,
                                       std::size_t n_traj, std::size_t horizon,
                                       const std::vector<std::size_t>& terminals, std::uint64_t seed) {
  mdp.validate();
  mu.validate();
  check_distribution(start, mdp.n_states, "collect_trajectories start");
  if (n_traj == 0 || horizon == 0) fail(ErrorKind::invalid_input, "collect_trajectories: empty request");
  std::vector<bool> terminal(mdp.n_states, false);
  for (std::size_t t : terminals) {
    if (t >= mdp.n_states) fail(ErrorKind::invalid_input, "collect_trajectories: terminal out of range");
    terminal[t] = true;
  }
  Rng rng(seed);
  TransitionDataset out;
  out.kind = TransitionDataset::Kind::trajectory;
  for (std::size_t j = 0; j < n_traj; ++j) {
    const std::size_t s0 = rng.categorical(start);
    std::vector<Transition> traj = roll_trajectory(mdp, mu, s0, horizon, terminal, rng);
    const std::size_t b = out.transitions.size();
    out.transitions.insert(out.transitions.end(), traj.begin(), traj.end());
    out.trajectory_bounds.emplace_back(b, out.transitions.size());
  }
  return out;
}

TransitionDataset collect_trajectory_steps(const Mdp& mdp, const Policy& mu, const Vector& start,
                                           std::size_t total_steps, std::size_t horizon,
                                           const std::vector<std::size_t>& terminals, std::uint64_t seed) {
  mdp.validate();
  mu.validate();
  check_distribution(start, mdp.n_states, "collect_trajectory_steps start");
  if (total_steps == 0 || horizon == 0) fail(ErrorKind::invalid_input, "collect_trajectory_steps: empty request");
  std::vector<bool> terminal(mdp.n_states, false);
  for (std::size_t t : terminals) {
    if (t >= mdp.n_states) fail(ErrorKind::invalid_input, "collect_trajectory_steps: terminal out of range");
    terminal[t] = true;
  }
  Rng rng(seed);
  TransitionDataset out;
  out.kind = TransitionDataset::Kind::trajectory;
  std::size_t real = 0;
  while (real < total_steps) {
    const std::size_t budget = std::min(horizon, total_steps - real);
    const std::size_t s0 = rng.categorical(start);
    std::vector<Transition> traj = roll_trajectory(mdp, mu, s0, budget, terminal, rng);
    real += traj.size() - 1;  // one loop transition per trajectory
    const std::size_t b = out.transitions.size();
    out.transitions.insert(out.transitions.end(), traj.begin(), traj.end());
    out.trajectory_bounds.emplace_back(b, out.transitions.size());
  }
  return out;
}

TransitionDataset resample_next_actions(const TransitionDataset& dataset, const Policy& pi, std::uint64_t seed) {
  pi.validate();
  Rng rng(seed);
  TransitionDataset out = dataset;
  for (Transition& t : out.transitions) {
    if (t.loop_flag) continue;
    t.a_next = static_cast<int>(sample_action(pi, static_cast<std::size_t>(t.s_next), rng));
    t.is_ratio = 1.0;
  }
  return out;
}

void annotate_is_ratios(TransitionDataset& dataset, const Policy& pi, const Policy& mu) {
  for (Transition& t : dataset.transitions) {
    const double mu_p = mu.pi(static_cast<std::size_t>(t.s_next), static_cast<std::size_t>(t.a_next));
    if (mu_p <= 0.0)
      fail(ErrorKind::coverage, "is ratios: behavior policy has zero probability on an observed next action");
    t.is_ratio = pi.pi(static_cast<std::size_t>(t.s_next), static_cast<std::size_t>(t.a_next)) / mu_p;
  }
}

std::vector<std::size_t> seen_pair_order(const TransitionDataset& dataset, std::size_t n_actions) {
  std::vector<std::size_t> order;
  std::vector<bool> seen;
  for (const Transition& t : dataset.transitions) {
    const std::size_t pair = static_cast<std::size_t>(t.s) * n_actions + static_cast<std::size_t>(t.a);
    if (pair >= seen.size()) seen.resize(pair + 1, false);
    if (!seen[pair]) {
      seen[pair] = true;
      order.push_back(pair);
    }
  }
  return order;
}

BuildResult build_empirical(const TransitionDataset& dataset, const FeatureMatrix& phi, const Policy& pi,
                            const Policy& mu, CorrectionMode mode, double gamma) {
  const std::size_t n_states = pi.n_states;
  const std::size_t n_actions = pi.n_actions;
  dataset.validate(n_states, n_actions);
  const std::size_t nsa = n_states * n_actions;
  if (phi.phi.rows != nsa) fail(ErrorKind::shape, "build_empirical: feature rows do not match |S||A|");
  const std::size_t d = phi.dim();

  EmpiricalModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.n = dataset.size();
  m.gamma = gamma;
  m.from_trajectories = dataset.kind == TransitionDataset::Kind::trajectory;
  m.pair_rank.assign(nsa, -1);

  for (const Transition& t : dataset.transitions) {
    const std::size_t pair = static_cast<std::size_t>(t.s) * n_actions + static_cast<std::size_t>(t.a);
    if (m.pair_rank[pair] < 0) {
      m.pair_rank[pair] = static_cast<std::ptrdiff_t>(m.seen_pairs.size());
      m.seen_pairs.push_back(pair);
    }
  }
  m.k = m.seen_pairs.size();
  m.over_parameterized = d > m.k;
  m.counts.assign(m.k, 0);
  m.pair_has_loop.assign(m.k, 0);

  // Per-transition IS ratios (is/nis modes only).
  std::vector<double> rho;
  if (mode != CorrectionMode::sample_target_action) {
    rho.resize(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
      const Transition& t = dataset.transitions[i];
      const double mu_p = mu.pi(static_cast<std::size_t>(t.s_next), static_cast<std::size_t>(t.a_next));
      if (mu_p <= 0.0)
        fail(ErrorKind::coverage, "build_empirical: behavior policy has zero probability on an observed next action");
      rho[i] = pi.pi(static_cast<std::size_t>(t.s_next), static_cast<std::size_t>(t.a_next)) / mu_p;
    }
  }

  m.H = Matrix(m.k, nsa);
  for (std::size_t j = 0; j < m.k; ++j) m.H(j, m.seen_pairs[j]) = 1.0;

  Matrix pair_counts(m.k, nsa);        // raw next-pair counts
  Matrix state_counts(m.k, n_states);  // raw next-state counts
  Vector reward_sum(m.k, 0.0);
  Matrix ratio_counts(m.k, nsa);  // rho-weighted next-pair counts
  Vector ratio_sum(m.k, 0.0);

  for (std::size_t i = 0; i < m.n; ++i) {
    const Transition& t = dataset.transitions[i];
    const std::size_t pair = static_cast<std::size_t>(t.s) * n_actions + static_cast<std::size_t>(t.a);
    const std::size_t j = static_cast<std::size_t>(m.pair_rank[pair]);
    const std::size_t next_pair = static_cast<std::size_t>(t.s_next) * n_actions + static_cast<std::size_t>(t.a_next);
    m.counts[j] += 1;
    if (t.loop_flag) m.pair_has_loop[j] = 1;
    pair_counts(j, next_pair) += 1.0;
    state_counts(j, static_cast<std::size_t>(t.s_next)) += 1.0;
    reward_sum[j] += t.r;
    if (!rho.empty()) {
      ratio_counts(j, next_pair) += rho[i];
      ratio_sum[j] += rho[i];
    }
  }

  m.Dk = Matrix(m.k, m.k);
  m.R.assign(m.k, 0.0);
  m.Phat = Matrix(nsa, nsa);
  m.Phat_state = Matrix(m.k, n_states);
  m.M = Matrix(m.k, d);
  m.N = Matrix(m.k, d);
  for (std::size_t j = 0; j < m.k; ++j) {
    const double cnt = static_cast<double>(m.counts[j]);
    m.Dk(j, j) = cnt / static_cast<double>(m.n);
    m.R[j] = reward_sum[j] / cnt;
    const std::size_t pair = m.seen_pairs[j];
    for (std::size_t c = 0; c < d; ++c) m.M(j, c) = phi.phi(pair, c);
    for (std::size_t q = 0; q < nsa; ++q) {
      const double w = pair_counts(j, q) / cnt;
      if (w == 0.0) continue;
      m.Phat(pair, q) = w;
      for (std::size_t c = 0; c < d; ++c) m.N(j, c) += w * phi.phi(q, c);
    }
    for (std::size_t s2 = 0; s2 < n_states; ++s2) m.Phat_state(j, s2) = state_counts(j, s2) / cnt;
  }

  m.seen_actions_by_state.assign(n_states, {});
  for (std::size_t j = 0; j < m.k; ++j) {
    const std::size_t pair = m.seen_pairs[j];
    m.seen_actions_by_state[pair / n_actions].push_back(pair % n_actions);
  }
  for (auto& v : m.seen_actions_by_state) std::sort(v.begin(), v.end());

  BuildResult out{std::move(m), std::nullopt};
  if (mode == CorrectionMode::sample_target_action) return out;

  const EmpiricalModel& em = out.model;
  NisModel nis;
  nis.normalized = mode == CorrectionMode::nis;
  nis.Phat = Matrix(nsa, nsa);
  nis.N = Matrix(em.k, d);
  nis.Dk = Matrix(em.k, em.k);
  nis.rho_max = -std::numeric_limits<double>::infinity();
  nis.rho_min = std::numeric_limits<double>::infinity();
  for (double r : rho) {
    nis.rho_max = std::max(nis.rho_max, r);
    nis.rho_min = std::min(nis.rho_min, r);
  }
  nis.rho_m = nis.rho_min > 0.0 ? nis.rho_max / nis.rho_min : std::numeric_limits<double>::infinity();

  double total_ratio = 0.0;
  for (double r : rho) total_ratio += r;

  for (std::size_t j = 0; j < em.k; ++j) {
    const std::size_t pair = em.seen_pairs[j];
    const double denom = nis.normalized ? ratio_sum[j] : static_cast<double>(em.counts[j]);
    if (nis.normalized) {
      nis.Dk(j, j) = total_ratio > 0.0 ? ratio_sum[j] / total_ratio : 0.0;
    } else {
      nis.Dk(j, j) = em.Dk(j, j);
    }
    if (denom <= 0.0) continue;  // pi puts no mass on any observed next action
    for (std::size_t q = 0; q < nsa; ++q) {
      const double w = ratio_counts(j, q) / denom;
      if (w == 0.0) continue;
      nis.Phat(pair, q) = w;
      for (std::size_t c = 0; c < d; ++c) nis.N(j, c) += w * phi.phi(q, c);
    }
  }
  out.nis = std::move(nis);
  return out;
}

EmpiricalModel expected_model(const Mdp& mdp, const Policy& pi, const FeatureMatrix& phi, const Vector& lambda) {
  mdp.validate();
  pi.validate();
  const std::size_t nsa = mdp.n_pairs();
  check_distribution(lambda, nsa, "expected_model lambda");
  if (phi.phi.rows != nsa) fail(ErrorKind::shape, "expected_model: feature rows do not match |S||A|");

  EmpiricalModel m;
  m.n_states = mdp.n_states;
  m.n_actions = mdp.n_actions;
  m.k = nsa;
  m.n = 0;
  m.gamma = mdp.discount;
  m.over_parameterized = phi.dim() > nsa;
  m.seen_pairs.resize(nsa);
  m.pair_rank.resize(nsa);
  for (std::size_t i = 0; i < nsa; ++i) {
    m.seen_pairs[i] = i;
    m.pair_rank[i] = static_cast<std::ptrdiff_t>(i);
  }
  m.counts.assign(nsa, 0);
  m.pair_has_loop.assign(nsa, 0);
  m.H = Matrix::identity(nsa);
  m.Dk = Matrix::diag(lambda);
  m.M = phi.phi;
  m.Phat = state_action_transition(mdp, pi);
  m.N = matmul(m.Phat, phi.phi);
  m.R = Vector(mdp.reward.begin(), mdp.reward.end());
  m.Phat_state = Matrix(nsa, mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) m.Phat_state(mdp.pair_index(s, a), s2) = mdp.p(s, a, s2);
  m.seen_actions_by_state.assign(mdp.n_states, {});
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) m.seen_actions_by_state[s].push_back(a);
  return m;
}

double nis_consistency_probe(const Mdp& mdp, const Policy& pi, const Policy& mu, std::size_t n,
                             std::uint64_t seed) {
  mdp.validate();
  pi.validate();
  mu.validate();
  if (n == 0) fail(ErrorKind::invalid_input, "nis_consistency_probe: n must be positive");
  Rng rng(seed);
  TransitionDataset ds;
  ds.kind = TransitionDataset::Kind::iid;
  ds.transitions.reserve(mdp.n_pairs() * n);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s2 = sample_state(mdp, s, a, rng);
        const std::size_t a2 = sample_action(mu, s2, rng);
        Transition t;
        t.s = static_cast<int>(s);
        t.a = static_cast<int>(a);
        t.r = mdp.r(s, a);
        t.s_next = static_cast<int>(s2);
        t.a_next = static_cast<int>(a2);
        ds.transitions.push_back(t);
      }
  // Feature content is irrelevant to the probe; identity keeps the build valid.
  FeatureMatrix phi(Matrix::identity(mdp.n_pairs()));
  const BuildResult built = build_empirical(ds, phi, pi, mu, CorrectionMode::nis, mdp.discount);
  const Matrix p_pi = state_action_transition(mdp, pi);
  double dev = 0.0;
  for (std::size_t pair = 0; pair < mdp.n_pairs(); ++pair)
    for (std::size_t q = 0; q < mdp.n_pairs(); ++q)
      dev = std::max(dev, std::fabs(built.nis->Phat(pair, q) - p_pi(pair, q)));
  return dev;
}

}  // namespace ottd
