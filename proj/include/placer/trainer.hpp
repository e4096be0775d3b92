#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "placer/policy.hpp"

namespace placer {

struct TrainerConfig {
  double learning_rate = 0.05;
  int batch_size = 16;
  int iterations = 200;
  double baseline_decay = 0.9;   // EMA decay in [0, 1)
  double entropy_weight = 0.0;
  double grad_clip_norm = 0.0;   // 0 disables clipping
  double discount = 1.0;         // gamma in (0, 1]
  std::uint64_t seed = 1;
  int eval_samples = 64;
  int threads = 1;               // 1 = single-threaded reference mode
};

struct IterationRecord {
  int iter = 0;
  double mean_return = 0;
  double best_return = 0;  // best sampled return so far, nondecreasing
  double baseline = 0;
  double mean_entropy = 0;
  double abort_rate = 0;
};

struct TrainHistory {
  std::vector<IterationRecord> rows;

  // CSV with header iter,mean_return,best_return,baseline,mean_entropy,
  // abort_rate; 9 significant digits.
  std::string to_csv() const;
};

// R = sum_t gamma^t r_t over the trajectory's step rewards.
double episode_return(const Trajectory& traj, double gamma);

// b' = decay*b + (1-decay)*batch_mean; the first batch sets b' = batch_mean.
double baseline_update(double baseline, double batch_mean_return, double decay, bool first_batch);

struct BatchItem {
  Trajectory traj;
  Vector logp_grad;
  Vector entropy_grad;  // empty when entropy is off
  double mean_entropy = 0;
  double ret = 0;  // discounted episode return (or pre-normalized advantage)
};

struct UpdateDiagnostics {
  double grad_norm = 0;     // before clipping
  double applied_norm = 0;  // after clipping
};

// One REINFORCE ascent step:
//   g = (1/B) sum_b (R_b - baseline) * dlogpi_b + entropy_weight * dH_mean,
// optionally clipped to grad_clip_norm, then theta += learning_rate * g.
// Throws NonFiniteGradient if any component is NaN/Inf.
UpdateDiagnostics reinforce_update(PolicyParams& params, const std::vector<BatchItem>& batch,
                                   double baseline, const TrainerConfig& cfg);

struct TrainResult {
  PolicyParams params;
  TrainHistory history;
  // Best feasible placement and return observed per training graph; empty
  // optional when no feasible rollout was seen for that graph.
  std::vector<std::optional<Placement>> best_placements;
  std::vector<std::optional<double>> best_returns;
};

// REINFORCE training loop. With one env this optimizes the single-graph
// objective; with several it samples a graph uniformly per iteration and
// normalizes advantages per graph (running window of 100 returns, std floored
// at 1e-6) so reward scales are comparable across graphs. Fully deterministic
// given cfg.seed; rollouts may run on cfg.threads threads with per-rollout
// seeds and ordered reduction, so results do not depend on thread count.
TrainResult train(const std::vector<std::shared_ptr<const PlacementEnv>>& envs,
                  const PolicyHyper& hyper, const TrainerConfig& cfg);

struct EvalResult {
  Placement best_placement;
  double best_return = 0;
  double greedy_return = 0;
};

// Best of the greedy rollout and eval_samples sampled rollouts; only
// feasible (non-aborted) trajectories are eligible. Throws NoFeasibleSample
// when every candidate aborted.
EvalResult evaluate(const PlacementEnv& env, const PolicyParams& params, int eval_samples,
                    std::uint64_t seed);

}  // namespace placer
