#pragma once

#include <memory>
#include <vector>

#include "placer/common.hpp"
#include "placer/graph.hpp"

namespace placer {

inline constexpr int kUnassigned = -1;

// Total or partial assignment of node index -> location index.
struct Placement {
  std::vector<int> assign;

  Placement() = default;
  explicit Placement(int n) : assign(static_cast<std::size_t>(n), kUnassigned) {}

  int size() const { return static_cast<int>(assign.size()); }
  bool assigned(int i) const { return assign[static_cast<std::size_t>(i)] != kUnassigned; }
  int at(int i) const { return assign[static_cast<std::size_t>(i)]; }
  bool complete() const;

  bool operator==(const Placement&) const = default;
};

enum class Shaping { Identity, Sqrt };
enum class ConstraintMode { Mask, Penalty };

struct RewardSpec {
  double alpha = 1.0;    // weight on the communication term
  double beta = 0.5;     // weight on compute imbalance
  double lambda = 10.0;  // overflow / dead-end penalty weight
  Shaping shaping = Shaping::Identity;
  ConstraintMode constraint_mode = ConstraintMode::Mask;
};

// reward = -raw under Identity shaping, -sqrt(raw) under Sqrt. raw >= 0.
double shaped_reward(const RewardSpec& spec, double raw_cost);

// Value type threaded through one placement episode. usage[j] is the
// normalized used-capacity fraction of location j, clamped to [0, 1].
struct StepState {
  Placement partial;
  Vector usage;
  int cursor = 0;  // index into the environment's node order
};

// Shared surface of the device and grid environments. Environments are
// immutable; transitions are deterministic functions of (state, action), so
// any number of rollouts may evaluate concurrently against one instance.
class PlacementEnv {
 public:
  virtual ~PlacementEnv() = default;

  const Graph& graph() const { return graph_; }
  const RewardSpec& reward_spec() const { return reward_; }
  int num_nodes() const { return graph_.num_nodes(); }
  int num_locations() const { return num_locations_; }
  const std::vector<int>& node_order() const { return order_; }

  StepState initial_state() const;
  bool is_terminal(const StepState& s) const { return s.cursor >= num_nodes(); }
  int current_node(const StepState& s) const { return order_[static_cast<std::size_t>(s.cursor)]; }

  // Feasibility mask for the node at the state's cursor. All-true in Penalty
  // mode. Does not validate the state (rollout fast path).
  virtual Mask mask(const StepState& s) const = 0;

  // Validated variant matching the op contract: node must be the next
  // unassigned node in the environment order, else StateError.
  Mask mask_for_node(const Placement& partial, int node) const;

  // Applies one placement decision. The returned reward includes the terminal
  // reward on the final step (and per-step rewards for incremental-reward
  // environments). Throws IndexError/StateError on invalid input.
  StepState apply(const StepState& s, int location, double* step_reward = nullptr) const;

  // Episode return a complete, non-aborted rollout producing p would receive.
  virtual double placement_return(const Placement& p) const = 0;

  // Capacity feasibility of a complete placement under Mask-mode semantics.
  virtual bool capacity_feasible(const Placement& p) const = 0;

  // Distance-proportional penalty for a dead-ended episode in state s.
  virtual double abort_penalty(const StepState& s) const = 0;

 protected:
  PlacementEnv(Graph g, RewardSpec reward, int num_locations, std::vector<int> order);

  virtual double step_reward(const StepState& before, int location,
                             const StepState& after) const = 0;
  virtual Vector compute_usage(const Placement& partial) const = 0;

  Graph graph_;
  RewardSpec reward_;
  int num_locations_ = 0;
  std::vector<int> order_;
};

// Reconstructs the placement reached by applying `actions` along the
// environment's node order. Partial action lists yield partial placements.
Placement placement_from_actions(const PlacementEnv& env, const std::vector<int>& actions);

}  // namespace placer
