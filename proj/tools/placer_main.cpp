// Command-line front end: generate graphs, train policies, evaluate them and
// run the brute-force oracles. Every command is deterministic given its
// arguments; errors print a single `ERROR <code>: <message>` line to stderr.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "placer/oracle.hpp"
#include "placer/run_config.hpp"

namespace {

using namespace placer;
using nlohmann::ordered_json;

// Environment settings shared by `eval` and `oracle`; the graph file's own
// kind tag selects which half applies.
struct EnvFlags {
  DeviceSpec device;
  GridSpec grid;
  RewardSpec reward;
  bool step_rewards = false;
  std::string shaping = "identity";
  std::string constraint = "mask";
};

void add_env_flags(CLI::App* cmd, EnvFlags& f) {
  cmd->add_option("--devices", f.device.count, "Device count (device graphs)");
  cmd->add_option("--capacity", f.device.mem_capacity, "Per-device memory capacity");
  cmd->add_option("--bandwidth", f.device.bandwidth, "Cross-device bandwidth");
  cmd->add_option("--width", f.grid.width, "Grid width (grid graphs)");
  cmd->add_option("--height", f.grid.height, "Grid height");
  cmd->add_option("--cell-capacity", f.grid.cell_capacity, "Nodes per grid cell");
  cmd->add_option("--density-weight", f.grid.density_weight, "Density penalty weight");
  cmd->add_option("--alpha", f.reward.alpha, "Communication weight");
  cmd->add_option("--beta", f.reward.beta, "Imbalance weight");
  cmd->add_option("--lambda", f.reward.lambda, "Overflow / dead-end penalty weight");
  cmd->add_option("--shaping", f.shaping, "Reward shaping")
      ->check(CLI::IsMember({"identity", "sqrt"}));
  cmd->add_option("--constraint", f.constraint, "Capacity handling")
      ->check(CLI::IsMember({"mask", "penalty"}));
  cmd->add_flag("--step-rewards", f.step_rewards, "Per-step incremental rewards (grid)");
}

std::shared_ptr<const PlacementEnv> env_from_flags(Graph g, EnvFlags f) {
  f.reward.shaping = f.shaping == "sqrt" ? Shaping::Sqrt : Shaping::Identity;
  f.reward.constraint_mode =
      f.constraint == "penalty" ? ConstraintMode::Penalty : ConstraintMode::Mask;
  if (g.kind == GraphKind::Device) return build_device_env(std::move(g), f.device, f.reward);
  return build_grid_env(std::move(g), f.grid, f.reward, f.step_rewards);
}

ordered_json placement_json(const Placement& p) {
  return ordered_json(p.assign);
}

int cmd_train(const std::string& config_path, int threads_override) {
  RunConfig cfg = load_run_config(config_path);
  if (threads_override > 0) cfg.trainer.threads = threads_override;
  TrainArtifacts artifacts = run_training(cfg);
  ordered_json out;
  out["params"] = artifacts.params_path;
  out["history"] = artifacts.history_path;
  out["best_placement"] = artifacts.best_placement_path;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& params_path, const std::string& graph_path, int samples,
             std::uint64_t seed, const EnvFlags& flags) {
  const PolicyParams params = load_params(params_path);
  auto env = env_from_flags(load_graph(graph_path), flags);
  const EvalResult result = evaluate(*env, params, samples, seed);
  ordered_json out;
  out["greedy_return"] = result.greedy_return;
  out["best_return"] = result.best_return;
  out["best_placement"] = placement_json(result.best_placement);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gen(std::uint64_t seed, int nodes, const std::string& family_name,
            const std::string& out_path, const GenParams& gen_params) {
  GraphFamily family = GraphFamily::Chain;
  if (family_name == "layered") family = GraphFamily::Layered;
  else if (family_name == "random-dag") family = GraphFamily::RandomDag;
  const Graph g = generate_synthetic(seed, nodes, family, gen_params);
  save_graph(g, out_path);
  ordered_json summary;
  summary["nodes"] = g.num_nodes();
  summary["edges"] = g.num_edges();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_oracle(const std::string& graph_path, const std::string& params_path, long long limit,
               const EnvFlags& flags) {
  auto env = env_from_flags(load_graph(graph_path), flags);
  const oracle::EnumerationResult enumeration = oracle::enumerate_placements(*env, limit);
  ordered_json out;
  out["count"] = enumeration.feasible_count;
  if (enumeration.feasible_count > 0) {
    out["optimal_reward"] = enumeration.optimal_reward;
    out["optimal_placements"] = ordered_json::array();
    const std::size_t shown = std::min<std::size_t>(enumeration.optimal_placements.size(), 10);
    for (std::size_t i = 0; i < shown; ++i)
      out["optimal_placements"].push_back(placement_json(enumeration.optimal_placements[i]));
  } else {
    out["optimal_reward"] = nullptr;
    out["optimal_placements"] = ordered_json::array();
  }
  if (!params_path.empty()) {
    const PolicyParams params = load_params(params_path);
    out["expected_reward"] = oracle::exact_expected_reward(*env, params, limit);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL placement engine: train, evaluate and verify graph placements"};
  app.require_subcommand(1);

  // train
  std::string config_path;
  int threads_override = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a policy from a JSON config");
  train_cmd->add_option("--config", config_path, "Run configuration file")->required();
  train_cmd->add_option("--threads", threads_override, "Override trainer thread count");

  // eval
  std::string params_path, graph_path;
  int samples = 64;
  std::uint64_t eval_seed = 0;
  EnvFlags eval_flags;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate saved parameters on a graph");
  eval_cmd->add_option("--params", params_path, "Parameters file")->required();
  eval_cmd->add_option("--graph", graph_path, "Graph file")->required();
  eval_cmd->add_option("--samples", samples, "Sampled rollouts besides the greedy one");
  eval_cmd->add_option("--seed", eval_seed, "Sampling seed");
  add_env_flags(eval_cmd, eval_flags);

  // gen
  std::uint64_t gen_seed = 0;
  int gen_nodes = 0;
  std::string family = "chain", out_path, gen_kind = "device";
  GenParams gen_params;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic graph");
  gen_cmd->add_option("--seed", gen_seed, "Generator seed")->required();
  gen_cmd->add_option("--nodes", gen_nodes, "Node count")->required();
  gen_cmd->add_option("--family", family, "Graph family")
      ->required()
      ->check(CLI::IsMember({"chain", "layered", "random-dag"}));
  gen_cmd->add_option("--out", out_path, "Output graph file")->required();
  gen_cmd->add_option("--kind", gen_kind, "Graph kind tag")
      ->check(CLI::IsMember({"device", "grid"}));
  gen_cmd->add_option("--op-types", gen_params.op_types, "Op-type vocabulary size");
  gen_cmd->add_option("--layers", gen_params.layers, "Layer count (layered family)");
  gen_cmd->add_option("--edge-prob", gen_params.edge_prob, "Edge probability");

  // oracle
  std::string oracle_graph, oracle_params;
  long long limit = placer::oracle::kDefaultLimit;
  EnvFlags oracle_flags;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Enumerate placements exhaustively");
  oracle_cmd->add_option("--graph", oracle_graph, "Graph file")->required();
  oracle_cmd->add_option("--params", oracle_params, "Optional parameters file");
  oracle_cmd->add_option("--limit", limit, "Max placement-space size");
  add_env_flags(oracle_cmd, oracle_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR Usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, threads_override);
    if (eval_cmd->parsed()) return cmd_eval(params_path, graph_path, samples, eval_seed, eval_flags);
    if (gen_cmd->parsed()) {
      gen_params.kind = gen_kind == "grid" ? GraphKind::Grid : GraphKind::Device;
      return cmd_gen(gen_seed, gen_nodes, family, out_path, gen_params);
    }
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_graph, oracle_params, limit, oracle_flags);
  } catch (const PlacerError& e) {
    std::cerr << "ERROR " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
