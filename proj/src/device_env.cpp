#include "placer/device_env.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace placer {

namespace {

std::vector<int> device_order(const Graph& g) { return topological_order(g); }

}  // namespace

DeviceEnv::DeviceEnv(Graph g, DeviceSpec spec, RewardSpec reward)
    : PlacementEnv(std::move(g), reward, spec.count, {}), spec_(spec) {
  if (graph_.kind != GraphKind::Device)
    throw_error(ErrorCode::InvalidParams, "device environment requires a device graph");
  if (spec_.count < 1) throw_error(ErrorCode::InvalidParams, "device count must be >= 1");
  if (!(spec_.mem_capacity >= 0))
    throw_error(ErrorCode::InvalidParams, "mem_capacity must be >= 0");
  if (!(spec_.bandwidth > 0)) throw_error(ErrorCode::InvalidParams, "bandwidth must be > 0");

  order_ = device_order(graph_);  // throws CycleError on cyclic input

  if (reward_.constraint_mode == ConstraintMode::Mask) {
    double total_memory = 0;
    for (const Node& node : graph_.nodes) total_memory += node.memory;
    double total_capacity = static_cast<double>(spec_.count) * spec_.mem_capacity;
    if (total_memory > total_capacity)
      throw_error(ErrorCode::InfeasibleInstance,
                  "total memory " + std::to_string(total_memory) + " exceeds total capacity " +
                      std::to_string(total_capacity));
  }
}

std::shared_ptr<DeviceEnv> build_device_env(Graph g, const DeviceSpec& spec,
                                            const RewardSpec& reward) {
  return std::make_shared<DeviceEnv>(std::move(g), spec, reward);
}

Vector DeviceEnv::used_memory(const Placement& partial) const {
  Vector used = Vector::Zero(num_locations_);
  for (int i = 0; i < num_nodes(); ++i)
    if (partial.assigned(i)) used[partial.at(i)] += graph_.nodes[static_cast<std::size_t>(i)].memory;
  return used;
}

Vector DeviceEnv::compute_usage(const Placement& partial) const {
  Vector used = used_memory(partial);
  Vector usage(num_locations_);
  for (int d = 0; d < num_locations_; ++d) {
    if (spec_.mem_capacity > 0)
      usage[d] = std::min(1.0, used[d] / spec_.mem_capacity);
    else
      usage[d] = used[d] > 0 ? 1.0 : 0.0;
  }
  return usage;
}

Mask DeviceEnv::mask(const StepState& s) const {
  if (reward_.constraint_mode == ConstraintMode::Penalty)
    return Mask::Constant(num_locations_, true);
  const double need = graph_.nodes[static_cast<std::size_t>(current_node(s))].memory;
  Vector used = used_memory(s.partial);
  Mask m(num_locations_);
  for (int d = 0; d < num_locations_; ++d) m[d] = used[d] + need <= spec_.mem_capacity;
  return m;
}

CostBreakdown DeviceEnv::cost_breakdown(const Placement& p) const {
  if (p.size() != num_nodes() || !p.complete())
    throw_error(ErrorCode::IncompletePlacement, "cost_breakdown requires a complete placement");

  CostBreakdown cb;
  cb.per_device_compute = Vector::Zero(num_locations_);
  cb.per_device_mem = Vector::Zero(num_locations_);
  for (int i = 0; i < num_nodes(); ++i) {
    const Node& node = graph_.nodes[static_cast<std::size_t>(i)];
    cb.per_device_compute[p.at(i)] += node.compute;
    cb.per_device_mem[p.at(i)] += node.memory;
  }
  for (const Edge& e : graph_.edges)
    if (p.at(e.src) != p.at(e.dst)) cb.cross_bytes += e.bytes;

  cb.makespan = cb.per_device_compute.maxCoeff() + cb.cross_bytes / spec_.bandwidth;
  cb.imbalance = cb.per_device_compute.maxCoeff() - cb.per_device_compute.minCoeff();
  cb.mem_overflow = (cb.per_device_mem.array() - spec_.mem_capacity).max(0.0).sum();
  return cb;
}

double DeviceEnv::reward(const CostBreakdown& cb) const {
  const double raw = cb.makespan + reward_.alpha * (cb.cross_bytes / spec_.bandwidth) +
                     reward_.beta * cb.imbalance + reward_.lambda * cb.mem_overflow;
  return shaped_reward(reward_, raw);
}

double DeviceEnv::placement_return(const Placement& p) const { return reward(cost_breakdown(p)); }

bool DeviceEnv::capacity_feasible(const Placement& p) const {
  Vector used = used_memory(p);
  return (used.array() <= spec_.mem_capacity).all();
}

double DeviceEnv::abort_penalty(const StepState& s) const {
  // Distance-proportional: scales with the memory that could not be placed.
  double remaining = 0;
  for (std::size_t t = static_cast<std::size_t>(s.cursor); t < order_.size(); ++t)
    remaining += graph_.nodes[static_cast<std::size_t>(order_[t])].memory;
  return -(reward_.lambda * remaining);
}

double DeviceEnv::step_reward(const StepState& /*before*/, int /*location*/,
                              const StepState& after) const {
  // Terminal-only reward: intermediate steps are worth 0.
  if (!is_terminal(after)) return 0;
  return placement_return(after.partial);
}

}  // namespace placer
