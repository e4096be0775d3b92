#include "placer/env.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace placer {

bool Placement::complete() const {
  return !assign.empty() &&
         std::none_of(assign.begin(), assign.end(), [](int a) { return a == kUnassigned; });
}

double shaped_reward(const RewardSpec& spec, double raw_cost) {
  switch (spec.shaping) {
    case Shaping::Identity: return -raw_cost;
    case Shaping::Sqrt: return -std::sqrt(raw_cost);
  }
  return -raw_cost;
}

PlacementEnv::PlacementEnv(Graph g, RewardSpec reward, int num_locations, std::vector<int> order)
    : graph_(std::move(g)),
      reward_(reward),
      num_locations_(num_locations),
      order_(std::move(order)) {}

StepState PlacementEnv::initial_state() const {
  StepState s;
  s.partial = Placement(num_nodes());
  s.usage = Vector::Zero(num_locations_);
  s.cursor = 0;
  return s;
}

Mask PlacementEnv::mask_for_node(const Placement& partial, int node) const {
  if (partial.size() != num_nodes())
    throw_error(ErrorCode::StateError, "partial placement has wrong length");
  if (node < 0 || node >= num_nodes())
    throw_error(ErrorCode::IndexError, "node index " + std::to_string(node) + " out of range");
  // node must be the next unassigned node in the environment order.
  StepState s;
  s.partial = partial;
  s.cursor = -1;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    int u = order_[i];
    if (u == node) {
      if (partial.assigned(u))
        throw_error(ErrorCode::StateError,
                    "node " + std::to_string(node) + " is already assigned");
      s.cursor = static_cast<int>(i);
      break;
    }
    if (!partial.assigned(u))
      throw_error(ErrorCode::StateError, "node " + std::to_string(u) +
                                             " precedes node " + std::to_string(node) +
                                             " in the order but is unassigned");
  }
  s.usage = compute_usage(partial);
  return mask(s);
}

StepState PlacementEnv::apply(const StepState& s, int location, double* step_reward_out) const {
  if (is_terminal(s)) throw_error(ErrorCode::StateError, "episode already terminal");
  if (location < 0 || location >= num_locations_)
    throw_error(ErrorCode::IndexError, "location " + std::to_string(location) + " out of range");
  const int node = current_node(s);

  StepState next;
  next.partial = s.partial;
  next.partial.assign[static_cast<std::size_t>(node)] = location;
  next.usage = compute_usage(next.partial);
  next.cursor = s.cursor + 1;

  if (step_reward_out != nullptr) *step_reward_out = step_reward(s, location, next);
  return next;
}

Placement placement_from_actions(const PlacementEnv& env, const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) > env.num_nodes())
    throw_error(ErrorCode::StateError, "more actions than nodes");
  Placement p(env.num_nodes());
  const auto& order = env.node_order();
  for (std::size_t t = 0; t < actions.size(); ++t)
    p.assign[static_cast<std::size_t>(order[t])] = actions[t];
  return p;
}

}  // namespace placer
