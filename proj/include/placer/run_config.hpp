#pragma once

#include <memory>
#include <string>
#include <vector>

#include "placer/device_env.hpp"
#include "placer/grid_env.hpp"
#include "placer/trainer.hpp"

namespace placer {

// Full configuration document for a training run. Graph paths and output_dir
// are resolved relative to the config file's directory.
struct RunConfig {
  std::vector<std::string> graph_paths;
  GraphKind env_kind = GraphKind::Device;
  DeviceSpec device;
  GridSpec grid;
  bool grid_step_rewards = false;
  RewardSpec reward;
  int hidden_dim = 8;
  int rounds = 2;
  EncoderKind encoder = EncoderKind::MessagePassing;
  TrainerConfig trainer;
  std::string output_dir = "out";
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const std::string& text, const std::string& base_dir);

// Builds the environment matching cfg for one graph. The graph kind must
// match cfg.env_kind.
std::shared_ptr<const PlacementEnv> build_env(const RunConfig& cfg, Graph g);

struct TrainArtifacts {
  std::string params_path;
  std::string history_path;
  std::string best_placement_path;
};

// Loads and validates every graph, trains, and writes params.json,
// history.csv and best_placement.json into cfg.output_dir.
TrainArtifacts run_training(const RunConfig& cfg);

}  // namespace placer
