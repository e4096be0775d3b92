#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "placer/policy.hpp"

namespace placer {
namespace oracle {

inline constexpr long long kDefaultLimit = 1'000'000;

// M^N with saturation, for the TooLarge guard.
long long placement_space_size(const PlacementEnv& env);

struct EnumerationResult {
  long long feasible_count = 0;
  double optimal_reward = 0;
  // Every optimal placement, in lexicographic placement order.
  std::vector<Placement> optimal_placements;
  // (placement, reward) for every feasible placement, lexicographic.
  std::vector<std::pair<Placement, double>> table;
};

// Iterates all M^N assignments in lexicographic order, filters the
// capacity-infeasible ones under Mask-mode semantics, and scores each with
// the environment's own cost functions. Throws TooLarge past `limit`.
EnumerationResult enumerate_placements(const PlacementEnv& env, long long limit = kDefaultLimit);

struct TrajectoryStats {
  double expected_return = 0;   // sum over trajectories of prob * return
  double probability_mass = 0;  // should be 1 up to rounding
  long long trajectory_count = 0;
  long long aborted_count = 0;
};

// Exhausts every trajectory reachable under the sequential policy (masks and
// dead ends included), exactly mirroring what sample_rollout can produce.
// Reductions use compensated summation.
TrajectoryStats policy_trajectory_stats(const PlacementEnv& env, const PolicyParams& params,
                                        long long limit = kDefaultLimit);

// E[R] = sum_l pi(l) R_l as a finite sum over all trajectories.
double exact_expected_reward(const PlacementEnv& env, const PolicyParams& params,
                             long long limit = kDefaultLimit);

// Exact policy gradient sum_l pi(l) dlog pi(l) R_l, the quantity the
// REINFORCE estimator is unbiased for.
Vector exact_gradient(const PlacementEnv& env, const PolicyParams& params,
                      long long limit = kDefaultLimit);

// Central finite differences (f(x+eps e_k) - f(x-eps e_k)) / (2 eps).
// Throws NonFiniteValue if f returns NaN/Inf.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                            double eps);

}  // namespace oracle
}  // namespace placer
