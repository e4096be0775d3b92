#include "placer/grid_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace placer {

namespace {

// Descending undirected degree, ties by ascending id: high-degree nodes
// anchor partial wirelength early.
std::vector<int> grid_order(const Graph& g) {
  auto adjacency = undirected_adjacency(g);
  std::vector<int> order(static_cast<std::size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    auto da = adjacency[static_cast<std::size_t>(a)].size();
    auto db = adjacency[static_cast<std::size_t>(b)].size();
    if (da != db) return da > db;
    return a < b;
  });
  return order;
}

}  // namespace

GridEnv::GridEnv(Graph g, GridSpec spec, RewardSpec reward, bool step_rewards)
    : PlacementEnv(std::move(g), reward, spec.width * spec.height, {}),
      spec_(spec),
      step_rewards_(step_rewards) {
  if (graph_.kind != GraphKind::Grid)
    throw_error(ErrorCode::InvalidParams, "grid environment requires a grid graph");
  if (spec_.width < 1 || spec_.height < 1)
    throw_error(ErrorCode::InvalidParams, "grid dimensions must be >= 1");
  if (spec_.cell_capacity < 1)
    throw_error(ErrorCode::InvalidParams, "cell_capacity must be >= 1");
  if (!(spec_.density_weight >= 0))
    throw_error(ErrorCode::InvalidParams, "density_weight must be >= 0");

  order_ = grid_order(graph_);

  if (reward_.constraint_mode == ConstraintMode::Mask) {
    long long capacity = static_cast<long long>(num_locations_) * spec_.cell_capacity;
    if (num_nodes() > capacity)
      throw_error(ErrorCode::InfeasibleInstance,
                  std::to_string(num_nodes()) + " nodes exceed grid capacity " +
                      std::to_string(capacity));
  }
}

std::shared_ptr<GridEnv> build_grid_env(Graph g, const GridSpec& spec, const RewardSpec& reward,
                                        bool step_rewards) {
  return std::make_shared<GridEnv>(std::move(g), spec, reward, step_rewards);
}

std::vector<int> GridEnv::occupancy(const Placement& partial) const {
  std::vector<int> occ(static_cast<std::size_t>(num_locations_), 0);
  for (int i = 0; i < num_nodes(); ++i)
    if (partial.assigned(i)) ++occ[static_cast<std::size_t>(partial.at(i))];
  return occ;
}

Vector GridEnv::compute_usage(const Placement& partial) const {
  auto occ = occupancy(partial);
  Vector usage(num_locations_);
  for (int j = 0; j < num_locations_; ++j)
    usage[j] = std::min(1.0, static_cast<double>(occ[static_cast<std::size_t>(j)]) /
                                 static_cast<double>(spec_.cell_capacity));
  return usage;
}

Mask GridEnv::mask(const StepState& s) const {
  if (reward_.constraint_mode == ConstraintMode::Penalty)
    return Mask::Constant(num_locations_, true);
  auto occ = occupancy(s.partial);
  Mask m(num_locations_);
  for (int j = 0; j < num_locations_; ++j)
    m[j] = occ[static_cast<std::size_t>(j)] < spec_.cell_capacity;
  return m;
}

double GridEnv::hpwl(const Placement& p) const {
  if (p.size() != num_nodes() || !p.complete())
    throw_error(ErrorCode::IncompletePlacement, "hpwl requires a complete placement");
  double total = 0;
  for (const Edge& e : graph_.edges) {
    int a = p.at(e.src), b = p.at(e.dst);
    total += std::abs(cell_x(a) - cell_x(b)) + std::abs(cell_y(a) - cell_y(b));
  }
  return total;
}

double GridEnv::density_cost(const Placement& p) const {
  if (p.size() != num_nodes() || !p.complete())
    throw_error(ErrorCode::IncompletePlacement, "density_cost requires a complete placement");
  auto occ = occupancy(p);
  double total = 0;
  for (int j = 0; j < num_locations_; ++j) {
    double over = std::max(0, occ[static_cast<std::size_t>(j)] - spec_.cell_capacity);
    total += over * over;
  }
  return total;
}

GridCost GridEnv::grid_cost(const Placement& p) const {
  GridCost cost;
  cost.hpwl = hpwl(p);
  cost.density = density_cost(p);
  cost.total = cost.hpwl + spec_.density_weight * cost.density;
  return cost;
}

double GridEnv::incremental_cost(const Placement& partial, int node, int cell) const {
  if (partial.size() != num_nodes())
    throw_error(ErrorCode::StateError, "partial placement has wrong length");
  if (node < 0 || node >= num_nodes())
    throw_error(ErrorCode::IndexError, "node index out of range");
  if (cell < 0 || cell >= num_locations_)
    throw_error(ErrorCode::IndexError, "cell index out of range");
  if (partial.assigned(node))
    throw_error(ErrorCode::StateError, "node " + std::to_string(node) + " is already assigned");

  // Partial HPWL counts an edge exactly when its second endpoint lands, so
  // the deltas telescope to the final hpwl + density_weight * density.
  double delta = 0;
  for (const Edge& e : graph_.edges) {
    int other = kUnassigned;
    if (e.src == node) other = partial.at(e.dst);
    else if (e.dst == node) other = partial.at(e.src);
    if (other == kUnassigned) continue;
    delta += std::abs(cell_x(cell) - cell_x(other)) + std::abs(cell_y(cell) - cell_y(other));
  }
  auto occ = occupancy(partial);
  const double before = std::max(0, occ[static_cast<std::size_t>(cell)] - spec_.cell_capacity);
  const double after = std::max(0, occ[static_cast<std::size_t>(cell)] + 1 - spec_.cell_capacity);
  delta += spec_.density_weight * (after * after - before * before);
  return delta;
}

double GridEnv::placement_return(const Placement& p) const {
  const GridCost cost = grid_cost(p);
  // Per-step rewards are raw deltas, so their telescoped return is -total;
  // shaping applies only in terminal-reward mode.
  if (step_rewards_) return -cost.total;
  return shaped_reward(reward_, cost.total);
}

bool GridEnv::capacity_feasible(const Placement& p) const {
  auto occ = occupancy(p);
  return std::all_of(occ.begin(), occ.end(),
                     [&](int c) { return c <= spec_.cell_capacity; });
}

double GridEnv::abort_penalty(const StepState& s) const {
  // Unit-size nodes: the distance from feasibility is the unplaced count.
  const double remaining = static_cast<double>(num_nodes() - s.cursor);
  return -(reward_.lambda * remaining);
}

double GridEnv::step_reward(const StepState& before, int location, const StepState& after) const {
  if (step_rewards_) {
    const int node = current_node(before);
    return -incremental_cost(before.partial, node, location);
  }
  if (!is_terminal(after)) return 0;
  return placement_return(after.partial);
}

}  // namespace placer
