#pragma once

#include <memory>

#include "placer/env.hpp"

namespace placer {

struct DeviceSpec {
  int count = 2;               // M
  double mem_capacity = 1e18;  // bytes per device, uniform
  double bandwidth = 1.0;      // bytes per work unit, > 0
};

// Per-placement proxy metrics composing the device reward.
struct CostBreakdown {
  double makespan = 0;      // max per-device compute + total comm time
  double cross_bytes = 0;   // bytes over cut edges
  double imbalance = 0;     // max - min per-device compute
  double mem_overflow = 0;  // sum of per-device capacity excess
  Vector per_device_mem;
  Vector per_device_compute;
};

// Device-placement environment: nodes are placed in topological order and the
// reward is the negated (optionally sqrt-shaped) additive runtime proxy
//   raw = makespan + alpha*(cross_bytes/B) + beta*imbalance + lambda*overflow.
class DeviceEnv final : public PlacementEnv {
 public:
  DeviceEnv(Graph g, DeviceSpec spec, RewardSpec reward);

  const DeviceSpec& spec() const { return spec_; }

  CostBreakdown cost_breakdown(const Placement& p) const;
  double reward(const CostBreakdown& cb) const;

  Mask mask(const StepState& s) const override;
  double placement_return(const Placement& p) const override;
  bool capacity_feasible(const Placement& p) const override;
  double abort_penalty(const StepState& s) const override;

 protected:
  double step_reward(const StepState& before, int location,
                     const StepState& after) const override;
  Vector compute_usage(const Placement& partial) const override;

 private:
  Vector used_memory(const Placement& partial) const;

  DeviceSpec spec_;
};

std::shared_ptr<DeviceEnv> build_device_env(Graph g, const DeviceSpec& spec,
                                            const RewardSpec& reward);

}  // namespace placer
