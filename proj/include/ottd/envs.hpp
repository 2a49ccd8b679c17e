#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ottd/data.hpp"
#include "ottd/mdp.hpp"

namespace ottd {

// 7-state single-action counterexample: every state falls into the bottom
// state, all rewards zero, uniform sampling, d = 8 > 7. The feature constants
// are calibrated so the four Table-1 convergence metrics come out at their
// published values under the standard update rules; they must not be rounded
// (the RM margin is ~2e-5 and flips sign under 1e-3 perturbations).
struct BairdProblem {
  Mdp mdp;
  Policy pi;
  FeatureMatrix phi;
  Vector theta0;
  Vector lambda;  // uniform over the 7 states
};

BairdProblem make_baird();

// Two states, one action, left state feeds the absorbing right state, zero
// rewards, Phi = (1; 2). phi_over is the over-parameterized 2x3 variant used
// to contrast OTTD against the stuck under-parameterized updates.
struct TwoStateProblem {
  Mdp mdp;
  Policy pi;
  FeatureMatrix phi;
  FeatureMatrix phi_over;
};

TwoStateProblem make_two_state(double gamma);

// The Section-3.3 distribution ((4g-4)/(2g-3), (1-2g)/(2g-3)); requires
// gamma > 0.5.
Vector pathological_lambda(double gamma);

// 11x11 four-rooms gridworld loaded from plain-text assets. Cells are (x, y)
// with y growing downward; actions are up/down/left/right; bumping a wall or
// the border keeps the agent in place. The terminal cell pays +1 on entry and
// absorbs with zero reward.
struct FourRoomProblem {
  Mdp mdp;
  Policy behavior;  // uniform random
  Policy human;     // deterministic shortest-path asset
  Policy target;    // (1 - eps) human + eps uniform
  std::size_t terminal_state = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::ptrdiff_t> cell_to_state;               // y * width + x -> state id or -1
  std::vector<std::pair<std::size_t, std::size_t>> state_to_cell;  // state id -> (x, y)
  double epsilon = 0.08;
  Vector start;  // uniform over free non-terminal cells
};

FourRoomProblem make_four_room(const std::string& asset_dir = std::string());
std::string default_asset_dir();

// Coordinate/action one-hot encoding plus the appended H^T block that tags
// each seen pair with its own coordinate; d = width + height + 4 + k > k.
FeatureMatrix build_four_room_features(const FourRoomProblem& problem, const TransitionDataset& dataset);

// Synthetic over-parameterized instances for property tests; with
// ensure_condition the rows of N are rescaled until ||N M+||_inf <= 1.
EmpiricalModel make_random_instance(std::size_t k, std::size_t d, double gamma, std::uint64_t seed,
                                    bool ensure_condition);

}  // namespace ottd
