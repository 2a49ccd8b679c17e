#include "ottd/envs.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ottd/numerics/linalg.hpp"
#include "ottd/rng.hpp"

#ifndef OTTD_DEFAULT_ASSET_DIR
#define OTTD_DEFAULT_ASSET_DIR "assets"
#endif

namespace ottd {

BairdProblem make_baird() {
  const std::size_t n = 7;
  BairdProblem p;
  p.mdp = Mdp(n, 1, 0.95);
  for (std::size_t s = 0; s < n; ++s) p.mdp.p(s, 0, n - 1) = 1.0;
  p.mdp.validate();
  p.pi = Policy::uniform(n, 1);

  // Calibrated constants; see the struct comment. Upper states share the
  // e7/e8 coordinates, the bottom state couples back onto the upper block.
  const double a = 0.16803376;
  const double b = 0.61123285;
  const double c = 0.19783527;
  const double d = 2.08402901;
  const double f = -0.62115397;
  const double g = 0.29689523;
  Matrix phi(n, 8);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    phi(i, i) = a;
    phi(i, 6) = f;
    phi(i, 7) = b;
  }
  for (std::size_t j = 0; j + 2 < 8; ++j) phi(n - 1, j) = g;
  phi(n - 1, 6) = c;
  phi(n - 1, 7) = d;
  p.phi = FeatureMatrix(std::move(phi));

  p.theta0 = Vector(8, 1.0);
  p.theta0[7] = 10.0;
  p.lambda = Vector(n, 1.0 / static_cast<double>(n));
  return p;
}

TwoStateProblem make_two_state(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::invalid_input, "make_two_state: gamma out of range");
  TwoStateProblem p;
  p.mdp = Mdp(2, 1, gamma);
  p.mdp.p(0, 0, 1) = 1.0;
  p.mdp.p(1, 0, 1) = 1.0;
  p.mdp.validate();
  p.pi = Policy::uniform(2, 1);
  p.phi = FeatureMatrix(Matrix(2, 1, {1.0, 2.0}));
  p.phi_over = FeatureMatrix(Matrix(2, 3, {1.0, 0.0, 1.0, 2.0, 1.0, 0.0}));
  return p;
}

Vector pathological_lambda(double gamma) {
  if (!(gamma > 0.5 && gamma < 1.0))
    fail(ErrorKind::invalid_input, "pathological_lambda: requires 0.5 < gamma < 1");
  const double denom = 2.0 * gamma - 3.0;
  return Vector{(4.0 * gamma - 4.0) / denom, (1.0 - 2.0 * gamma) / denom};
}

std::string default_asset_dir() { return OTTD_DEFAULT_ASSET_DIR; }

namespace {

std::vector<std::string> read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open asset file: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) fail(ErrorKind::schema, "empty asset file: " + path);
  for (const std::string& r : rows)
    if (r.size() != rows.front().size()) fail(ErrorKind::schema, "ragged asset grid: " + path);
  return rows;
}

constexpr std::size_t kFourRoomActions = 4;
// 0=up 1=down 2=left 3=right, y grows downward.
constexpr int kDx[kFourRoomActions] = {0, 0, -1, 1};
constexpr int kDy[kFourRoomActions] = {-1, 1, 0, 0};

std::size_t action_from_char(char c, const std::string& path) {
  switch (c) {
    case 'U': return 0;
    case 'D': return 1;
    case 'L': return 2;
    case 'R': return 3;
  }
  fail(ErrorKind::schema, std::string("bad action character '") + c + "' in " + path);
}

}  // namespace

FourRoomProblem make_four_room(const std::string& asset_dir) {
  const std::string dir = asset_dir.empty() ? default_asset_dir() : asset_dir;
  const std::vector<std::string> layout = read_grid(dir + "/four_room_layout.txt");
  const std::vector<std::string> policy = read_grid(dir + "/four_room_policy.txt");
  if (policy.size() != layout.size() || policy.front().size() != layout.front().size())
    fail(ErrorKind::schema, "four-room policy grid does not match the layout grid");

  FourRoomProblem p;
  p.height = layout.size();
  p.width = layout.front().size();
  p.cell_to_state.assign(p.width * p.height, -1);

  std::ptrdiff_t terminal = -1;
  for (std::size_t y = 0; y < p.height; ++y)
    for (std::size_t x = 0; x < p.width; ++x) {
      const char c = layout[y][x];
      if (c == '#') continue;
      if (c != '.' && c != 'G') fail(ErrorKind::schema, "bad layout character");
      p.cell_to_state[y * p.width + x] = static_cast<std::ptrdiff_t>(p.state_to_cell.size());
      if (c == 'G') terminal = static_cast<std::ptrdiff_t>(p.state_to_cell.size());
      p.state_to_cell.emplace_back(x, y);
    }
  if (terminal < 0) fail(ErrorKind::schema, "four-room layout has no terminal cell");
  p.terminal_state = static_cast<std::size_t>(terminal);

  const std::size_t ns = p.state_to_cell.size();
  p.mdp = Mdp(ns, kFourRoomActions, 0.95);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto [x, y] = p.state_to_cell[s];
    for (std::size_t a = 0; a < kFourRoomActions; ++a) {
      std::size_t next = s;
      if (s != p.terminal_state) {
        const int nx = static_cast<int>(x) + kDx[a];
        const int ny = static_cast<int>(y) + kDy[a];
        if (nx >= 0 && ny >= 0 && nx < static_cast<int>(p.width) && ny < static_cast<int>(p.height)) {
          const std::ptrdiff_t st = p.cell_to_state[static_cast<std::size_t>(ny) * p.width + nx];
          if (st >= 0) next = static_cast<std::size_t>(st);
        }
      }
      p.mdp.p(s, a, next) = 1.0;
      p.mdp.r(s, a) = (s != p.terminal_state && next == p.terminal_state) ? 1.0 : 0.0;
    }
  }
  p.mdp.validate();

  p.behavior = Policy::uniform(ns, kFourRoomActions);
  p.human = Policy(ns, kFourRoomActions);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto [x, y] = p.state_to_cell[s];
    p.human.pi(s, action_from_char(policy[y][x], dir + "/four_room_policy.txt")) = 1.0;
  }
  p.human.validate();

  p.epsilon = 0.08;
  p.target = Policy(ns, kFourRoomActions);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < kFourRoomActions; ++a)
      p.target.pi(s, a) = (1.0 - p.epsilon) * p.human.pi(s, a) + p.epsilon / kFourRoomActions;
  p.target.validate();

  p.start = Vector(ns, 0.0);
  for (std::size_t s = 0; s < ns; ++s)
    if (s != p.terminal_state) p.start[s] = 1.0 / static_cast<double>(ns - 1);
  return p;
}

FeatureMatrix build_four_room_features(const FourRoomProblem& problem, const TransitionDataset& dataset) {
  const std::size_t ns = problem.mdp.n_states;
  const std::size_t na = problem.mdp.n_actions;
  const std::vector<std::size_t> seen = seen_pair_order(dataset, na);
  const std::size_t base = problem.width + problem.height + na;
  const std::size_t d = base + seen.size();

  Matrix phi(ns * na, d);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto [x, y] = problem.state_to_cell[s];
    for (std::size_t a = 0; a < na; ++a) {
      const std::size_t row = s * na + a;
      phi(row, x) = 1.0;
      phi(row, problem.width + y) = 1.0;
      phi(row, problem.width + problem.height + a) = 1.0;
    }
  }
  for (std::size_t j = 0; j < seen.size(); ++j) phi(seen[j], base + j) = 1.0;

  if (!seen.empty()) {
    Matrix m(seen.size(), d);
    for (std::size_t j = 0; j < seen.size(); ++j)
      for (std::size_t c = 0; c < d; ++c) m(j, c) = phi(seen[j], c);
    const Vector sv = singular_values(m);
    if (sv.back() <= 1e-12 * sv.front())
      fail(ErrorKind::degenerate_features, "build_four_room_features: seen rows are rank deficient");
  }
  return FeatureMatrix(std::move(phi));
}

EmpiricalModel make_random_instance(std::size_t k, std::size_t d, double gamma, std::uint64_t seed,
                                    bool ensure_condition) {
  if (k == 0 || d == 0) fail(ErrorKind::invalid_input, "make_random_instance: empty shape");
  Rng rng(seed);

  // Well-conditioned M: random directions with singular values in [1, 2].
  Matrix m(k, d);
  for (double& x : m.a) x = rng.normal();
  {
    Svd dec = svd(m);
    for (std::size_t j = 0; j < dec.sigma.size(); ++j) {
      const double target =
          1.0 + (dec.sigma.size() > 1 ? static_cast<double>(j) / static_cast<double>(dec.sigma.size() - 1) : 0.0);
      dec.sigma[j] = target;
    }
    Matrix scaled = dec.u;
    for (std::size_t r = 0; r < scaled.rows; ++r)
      for (std::size_t j = 0; j < scaled.cols; ++j) scaled(r, j) *= dec.sigma[j];
    m = matmul(scaled, transpose(dec.v));
  }

  Matrix n(k, d);
  for (double& x : n.a) x = rng.normal();
  if (ensure_condition) {
    const Matrix w = matmul(n, pinv(m));
    for (std::size_t i = 0; i < k; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) row_sum += std::fabs(w(i, j));
      if (row_sum > 1.0)
        for (std::size_t c = 0; c < d; ++c) n(i, c) /= row_sum;
    }
  }

  EmpiricalModel out;
  out.n_states = k;
  out.n_actions = 1;
  out.k = k;
  out.n = k;
  out.gamma = gamma;
  out.over_parameterized = d > k;
  out.seen_pairs.resize(k);
  out.pair_rank.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.seen_pairs[i] = i;
    out.pair_rank[i] = static_cast<std::ptrdiff_t>(i);
  }
  out.counts.assign(k, 1);
  out.pair_has_loop.assign(k, 0);
  out.H = Matrix::identity(k);
  Vector lam(k);
  double sum = 0.0;
  for (double& x : lam) {
    x = rng.uniform(0.5, 1.5);
    sum += x;
  }
  for (double& x : lam) x /= sum;
  out.Dk = Matrix::diag(lam);
  out.M = std::move(m);
  out.N = std::move(n);
  out.R.resize(k);
  for (double& x : out.R) x = rng.uniform(-1.0, 1.0);
  out.Phat = Matrix(k, k);
  out.Phat_state = Matrix(k, k);
  out.seen_actions_by_state.assign(k, {0});
  return out;
}

}  // namespace ottd
