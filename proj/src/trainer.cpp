#include "placer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace placer {

namespace {

constexpr int kNormalizationWindow = 100;
constexpr double kStdFloor = 1e-6;

void check(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw_error(code, message);
}

std::string format9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void validate_config(const TrainerConfig& cfg) {
  check(cfg.learning_rate > 0, ErrorCode::InvalidParams, "learning_rate must be > 0");
  check(cfg.batch_size >= 1, ErrorCode::InvalidParams, "batch_size must be >= 1");
  check(cfg.iterations >= 0, ErrorCode::InvalidParams, "iterations must be >= 0");
  check(cfg.baseline_decay >= 0 && cfg.baseline_decay < 1, ErrorCode::InvalidParams,
        "baseline_decay must lie in [0, 1)");
  check(cfg.entropy_weight >= 0, ErrorCode::InvalidParams, "entropy_weight must be >= 0");
  check(cfg.grad_clip_norm >= 0, ErrorCode::InvalidParams,
        "grad_clip_norm must be >= 0 (0 disables clipping)");
  check(cfg.discount > 0 && cfg.discount <= 1, ErrorCode::InvalidParams,
        "discount must lie in (0, 1]");
  check(cfg.eval_samples >= 0, ErrorCode::InvalidParams, "eval_samples must be >= 0");
  check(cfg.threads >= 1, ErrorCode::InvalidParams, "threads must be >= 1");
}

}  // namespace

std::string TrainHistory::to_csv() const {
  std::string out = "iter,mean_return,best_return,baseline,mean_entropy,abort_rate\n";
  for (const IterationRecord& r : rows) {
    out += std::to_string(r.iter);
    out += ',';
    out += format9(r.mean_return);
    out += ',';
    out += format9(r.best_return);
    out += ',';
    out += format9(r.baseline);
    out += ',';
    out += format9(r.mean_entropy);
    out += ',';
    out += format9(r.abort_rate);
    out += '\n';
  }
  return out;
}

double episode_return(const Trajectory& traj, double gamma) {
  double total = 0;
  double weight = 1;
  for (double r : traj.step_rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

double baseline_update(double baseline, double batch_mean_return, double decay,
                       bool first_batch) {
  if (first_batch) return batch_mean_return;
  return decay * baseline + (1 - decay) * batch_mean_return;
}

UpdateDiagnostics reinforce_update(PolicyParams& params, const std::vector<BatchItem>& batch,
                                   double baseline, const TrainerConfig& cfg) {
  check(!batch.empty(), ErrorCode::InvalidParams, "update batch must be nonempty");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Vector g = Vector::Zero(params.size());
  for (const BatchItem& item : batch) {
    check(item.logp_grad.size() == params.size(), ErrorCode::DimensionError,
          "log-prob gradient size does not match the parameter vector");
    g += (item.ret - baseline) * item.logp_grad;
  }
  g *= inv_b;
  if (cfg.entropy_weight != 0) {
    for (const BatchItem& item : batch) {
      check(item.entropy_grad.size() == params.size(), ErrorCode::DimensionError,
            "entropy gradient size does not match the parameter vector");
      g += (cfg.entropy_weight * inv_b) * item.entropy_grad;
    }
  }
  if (!g.allFinite())
    throw_error(ErrorCode::NonFiniteGradient, "policy gradient contains NaN or Inf");

  UpdateDiagnostics diag;
  diag.grad_norm = g.norm();
  if (cfg.grad_clip_norm > 0 && diag.grad_norm > cfg.grad_clip_norm)
    g *= cfg.grad_clip_norm / diag.grad_norm;
  diag.applied_norm = g.norm();
  params.flat() += cfg.learning_rate * g;
  return diag;
}

namespace {

// Rolls out batch indices [0, B) with a per-index seeded stream, optionally on
// several threads. Items land at their own index, so the later reduction is
// ordered and the result does not depend on the thread count.
void fill_batch(const PlacementEnv& env, const PolicyParams& params, const TrainerConfig& cfg,
                int iteration, std::vector<BatchItem>& items) {
  const int b_count = static_cast<int>(items.size());
  auto run_item = [&](int b) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(iteration) + 1,
                        static_cast<std::uint64_t>(b)));
    BatchItem item;
    item.traj = sample_rollout(env, params, rng, DecodeMode::Sample);
    TrajectoryBackward back = trajectory_backward(env, params, item.traj, true);
    item.logp_grad = std::move(back.logp_grad);
    item.entropy_grad = std::move(back.entropy_grad);
    item.mean_entropy = back.mean_entropy;
    item.ret = episode_return(item.traj, cfg.discount);
    items[static_cast<std::size_t>(b)] = std::move(item);
  };

  const int workers = std::min(cfg.threads, b_count);
  if (workers <= 1) {
    for (int b = 0; b < b_count; ++b) run_item(b);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int b = t; b < b_count; b += workers) run_item(b);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TrainResult train(const std::vector<std::shared_ptr<const PlacementEnv>>& envs,
                  const PolicyHyper& hyper, const TrainerConfig& cfg) {
  check(!envs.empty(), ErrorCode::InvalidParams, "training needs at least one environment");
  validate_config(cfg);
  for (const auto& env : envs) {
    check(env != nullptr, ErrorCode::InvalidParams, "null environment");
    check(feature_dim(env->graph()) == hyper.feature_dim, ErrorCode::DimensionError,
          "graph feature dim " + std::to_string(feature_dim(env->graph())) +
              " != policy feature dim " + std::to_string(hyper.feature_dim));
    check(env->num_locations() == hyper.locations, ErrorCode::DimensionError,
          "environment has " + std::to_string(env->num_locations()) +
              " locations, policy expects " + std::to_string(hyper.locations));
  }

  const int k_graphs = static_cast<int>(envs.size());
  const int b_count = cfg.batch_size;
  PolicyParams params = PolicyParams::init(cfg.seed, hyper);

  TrainHistory history;
  history.rows.reserve(static_cast<std::size_t>(cfg.iterations));
  std::vector<std::optional<Placement>> best_placements(envs.size());
  std::vector<std::optional<double>> best_returns(envs.size());
  std::vector<std::deque<double>> windows(envs.size());

  double baseline = 0;
  double best_so_far = -std::numeric_limits<double>::infinity();
  std::vector<BatchItem> items(static_cast<std::size_t>(b_count));

  for (int it = 0; it < cfg.iterations; ++it) {
    int g_idx = 0;
    if (k_graphs > 1) {
      Rng pick(derive_seed(cfg.seed, static_cast<std::uint64_t>(it) + 1,
                           static_cast<std::uint64_t>(b_count)));
      g_idx = static_cast<int>(pick.below(static_cast<std::uint64_t>(k_graphs)));
    }
    const PlacementEnv& env = *envs[static_cast<std::size_t>(g_idx)];
    fill_batch(env, params, cfg, it, items);

    double sum_ret = 0, sum_entropy = 0;
    int aborted = 0;
    for (const BatchItem& item : items) {
      sum_ret += item.ret;
      sum_entropy += item.mean_entropy;
      if (item.traj.aborted) ++aborted;
      best_so_far = std::max(best_so_far, item.ret);
      const bool complete = !item.traj.aborted &&
                            static_cast<int>(item.traj.actions.size()) == env.num_nodes();
      if (complete) {
        auto& best = best_returns[static_cast<std::size_t>(g_idx)];
        if (!best || item.ret > *best) {
          best = item.ret;
          best_placements[static_cast<std::size_t>(g_idx)] =
              placement_from_actions(env, item.traj.actions);
        }
      }
    }
    const double mean_ret = sum_ret / b_count;
    baseline = baseline_update(baseline, mean_ret, cfg.baseline_decay, it == 0);

    if (k_graphs == 1) {
      reinforce_update(params, items, baseline, cfg);
    } else {
      // Multi-graph mode replaces the global baseline with a per-graph
      // running normalization so reward scales stay comparable.
      std::deque<double>& window = windows[static_cast<std::size_t>(g_idx)];
      for (const BatchItem& item : items) {
        window.push_back(item.ret);
        if (window.size() > kNormalizationWindow) window.pop_front();
      }
      double mean_g = 0;
      for (double r : window) mean_g += r;
      mean_g /= static_cast<double>(window.size());
      double var_g = 0;
      for (double r : window) var_g += (r - mean_g) * (r - mean_g);
      const double std_g = std::max(std::sqrt(var_g / static_cast<double>(window.size())),
                                    kStdFloor);
      for (BatchItem& item : items) item.ret = (item.ret - mean_g) / std_g;
      reinforce_update(params, items, 0.0, cfg);
    }

    IterationRecord row;
    row.iter = it + 1;
    row.mean_return = mean_ret;
    row.best_return = best_so_far;
    row.baseline = baseline;
    row.mean_entropy = sum_entropy / b_count;
    row.abort_rate = static_cast<double>(aborted) / b_count;
    history.rows.push_back(row);
  }

  return TrainResult{std::move(params), std::move(history), std::move(best_placements),
                     std::move(best_returns)};
}

EvalResult evaluate(const PlacementEnv& env, const PolicyParams& params, int eval_samples,
                    std::uint64_t seed) {
  check(eval_samples >= 0, ErrorCode::InvalidParams, "eval_samples must be >= 0");

  bool have_best = false;
  EvalResult out;
  auto consider = [&](const Trajectory& traj) {
    if (traj.aborted || static_cast<int>(traj.actions.size()) != env.num_nodes()) return;
    if (!have_best || traj.total_return > out.best_return) {
      have_best = true;
      out.best_return = traj.total_return;
      out.best_placement = placement_from_actions(env, traj.actions);
    }
  };

  Rng greedy_rng(derive_seed(seed, 0));  // unused by greedy decoding
  const Trajectory greedy = sample_rollout(env, params, greedy_rng, DecodeMode::Greedy);
  out.greedy_return = greedy.total_return;
  consider(greedy);

  Rng rng(derive_seed(seed, 1));
  for (int s = 0; s < eval_samples; ++s)
    consider(sample_rollout(env, params, rng, DecodeMode::Sample));

  if (!have_best)
    throw_error(ErrorCode::NoFeasibleSample, "every evaluation rollout dead-ended");
  return out;
}

}  // namespace placer
