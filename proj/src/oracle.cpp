#include "placer/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace placer {
namespace oracle {

namespace {

// Compensated (Kahan) accumulator so reductions stay order-independent at
// double precision.
struct KahanSum {
  double sum = 0;
  double comp = 0;

  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

void check_limit(const PlacementEnv& env, long long limit) {
  const long long space = placement_space_size(env);
  if (space > limit)
    throw_error(ErrorCode::TooLarge,
                "placement space " + std::to_string(space) + " exceeds oracle limit " +
                    std::to_string(limit));
}

}  // namespace

long long placement_space_size(const PlacementEnv& env) {
  constexpr long long kMax = std::numeric_limits<long long>::max();
  const long long m = env.num_locations();
  long long size = 1;
  for (int i = 0; i < env.num_nodes(); ++i) {
    if (size > kMax / m) return kMax;
    size *= m;
  }
  return size;
}

EnumerationResult enumerate_placements(const PlacementEnv& env, long long limit) {
  check_limit(env, limit);
  const int n = env.num_nodes();
  const int m = env.num_locations();
  const bool filter = env.reward_spec().constraint_mode == ConstraintMode::Mask;

  EnumerationResult result;
  result.optimal_reward = -std::numeric_limits<double>::infinity();

  Placement p(n);
  std::fill(p.assign.begin(), p.assign.end(), 0);
  while (true) {
    if (!filter || env.capacity_feasible(p)) {
      const double reward = env.placement_return(p);
      result.table.emplace_back(p, reward);
      if (reward > result.optimal_reward) {
        result.optimal_reward = reward;
        result.optimal_placements.clear();
        result.optimal_placements.push_back(p);
      } else if (reward == result.optimal_reward) {
        result.optimal_placements.push_back(p);
      }
    }
    // Advance the lexicographic odometer, least-significant digit last.
    int digit = n - 1;
    while (digit >= 0 && p.assign[static_cast<std::size_t>(digit)] == m - 1) {
      p.assign[static_cast<std::size_t>(digit)] = 0;
      --digit;
    }
    if (digit < 0) break;
    ++p.assign[static_cast<std::size_t>(digit)];
  }
  result.feasible_count = static_cast<long long>(result.table.size());
  return result;
}

namespace {

struct TrajectoryVisit {
  // prob = product of step probabilities, ret = accumulated step rewards.
  std::function<void(const std::vector<int>& actions, double prob, double ret, bool aborted)>
      leaf;
};

// Depth-first walk of every trajectory the sequential policy can produce,
// masks and dead ends included.
void walk_trajectories(const PlacementEnv& env, const PolicyParams& params,
                       const TrajectoryVisit& visit) {
  const Matrix h = encode(env.graph(), params);
  std::vector<int> actions;
  actions.reserve(static_cast<std::size_t>(env.num_nodes()));

  auto dfs = [&](auto&& self, const StepState& state, double prob, double ret) -> void {
    if (env.is_terminal(state)) {
      visit.leaf(actions, prob, ret, false);
      return;
    }
    const Mask mask = env.mask(state);
    if (!mask.any()) {
      visit.leaf(actions, prob, ret + env.abort_penalty(state), true);
      return;
    }
    const int node = env.current_node(state);
    const Vector probs = action_distribution(params, h.row(node), state, mask);
    for (int j = 0; j < env.num_locations(); ++j) {
      if (!mask[j]) continue;
      double step = 0;
      const StepState next = env.apply(state, j, &step);
      actions.push_back(j);
      self(self, next, prob * probs[j], ret + step);
      actions.pop_back();
    }
  };
  dfs(dfs, env.initial_state(), 1.0, 0.0);
}

}  // namespace

TrajectoryStats policy_trajectory_stats(const PlacementEnv& env, const PolicyParams& params,
                                        long long limit) {
  check_limit(env, limit);
  TrajectoryStats stats;
  KahanSum expected, mass;
  TrajectoryVisit visit;
  visit.leaf = [&](const std::vector<int>&, double prob, double ret, bool aborted) {
    expected.add(prob * ret);
    mass.add(prob);
    ++stats.trajectory_count;
    if (aborted) ++stats.aborted_count;
  };
  walk_trajectories(env, params, visit);
  stats.expected_return = expected.sum;
  stats.probability_mass = mass.sum;
  return stats;
}

double exact_expected_reward(const PlacementEnv& env, const PolicyParams& params,
                             long long limit) {
  return policy_trajectory_stats(env, params, limit).expected_return;
}

Vector exact_gradient(const PlacementEnv& env, const PolicyParams& params, long long limit) {
  check_limit(env, limit);
  Vector sum = Vector::Zero(params.size());
  Vector comp = Vector::Zero(params.size());
  TrajectoryVisit visit;
  visit.leaf = [&](const std::vector<int>& actions, double prob, double ret, bool) {
    Trajectory traj;
    traj.actions = actions;
    const Vector term = (prob * ret) * trajectory_grad(env, params, traj);
    // Component-wise Kahan step.
    const Vector y = term - comp;
    const Vector t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  walk_trajectories(env, params, visit);
  return sum;
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                            double eps) {
  if (!(eps > 0)) throw_error(ErrorCode::InvalidParams, "finite-difference eps must be > 0");
  Vector grad(theta.size());
  Vector probe = theta;
  for (int k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + eps;
    const double up = f(probe);
    probe[k] = theta[k] - eps;
    const double down = f(probe);
    probe[k] = theta[k];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw_error(ErrorCode::NonFiniteValue,
                  "objective returned NaN/Inf at coordinate " + std::to_string(k));
    grad[k] = (up - down) / (2 * eps);
  }
  return grad;
}

}  // namespace oracle
}  // namespace placer
