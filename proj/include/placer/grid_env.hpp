#pragma once

#include <memory>

#include "placer/env.hpp"

namespace placer {

struct GridSpec {
  int width = 2;
  int height = 2;
  int cell_capacity = 1;      // max nodes per cell
  double density_weight = 1.0;
};

struct GridCost {
  double hpwl = 0;
  double density = 0;
  double total = 0;  // hpwl + density_weight * density
};

// Grid-placement environment for netlists. Location index j maps to cell
// (j mod W, j div W); nodes are placed in descending-degree order. Cost is
// half-perimeter wirelength plus a quadratic cell-density penalty. With
// step_rewards enabled each step is rewarded with the negated cost delta and
// the episode return telescopes to -(hpwl + density_weight * density).
class GridEnv final : public PlacementEnv {
 public:
  GridEnv(Graph g, GridSpec spec, RewardSpec reward, bool step_rewards);

  const GridSpec& spec() const { return spec_; }
  bool step_rewards() const { return step_rewards_; }

  int cell_x(int j) const { return j % spec_.width; }
  int cell_y(int j) const { return j / spec_.width; }

  double hpwl(const Placement& p) const;
  double density_cost(const Placement& p) const;
  GridCost grid_cost(const Placement& p) const;

  // Cost delta of assigning `node` to cell `cell` on top of `partial`, where
  // partial HPWL counts only edges with both endpoints placed.
  double incremental_cost(const Placement& partial, int node, int cell) const;

  Mask mask(const StepState& s) const override;
  double placement_return(const Placement& p) const override;
  bool capacity_feasible(const Placement& p) const override;
  double abort_penalty(const StepState& s) const override;

 protected:
  double step_reward(const StepState& before, int location,
                     const StepState& after) const override;
  Vector compute_usage(const Placement& partial) const override;

 private:
  std::vector<int> occupancy(const Placement& partial) const;

  GridSpec spec_;
  bool step_rewards_ = false;
};

std::shared_ptr<GridEnv> build_grid_env(Graph g, const GridSpec& spec,
                                        const RewardSpec& reward, bool step_rewards);

}  // namespace placer
