#include "placer/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

namespace placer {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void fail_parse(const std::string& message) {
  throw_error(ErrorCode::ParseError, message);
}

void require_keys(const ordered_json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail_parse("unknown key \"" + key + "\" in " + where);
  }
}

int as_int(const ordered_json& v, const std::string& where) {
  if (!v.is_number_integer()) fail_parse(where + " must be an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const ordered_json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail_parse(where + " must be an integer");
  return v.get<std::uint64_t>();
}

double as_double(const ordered_json& v, const std::string& where) {
  if (!v.is_number()) fail_parse(where + " must be a number");
  return v.get<double>();
}

bool as_bool(const ordered_json& v, const std::string& where) {
  if (!v.is_boolean()) fail_parse(where + " must be a boolean");
  return v.get<bool>();
}

std::string as_string(const ordered_json& v, const std::string& where) {
  if (!v.is_string()) fail_parse(where + " must be a string");
  return v.get<std::string>();
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

void parse_env(const ordered_json& obj, RunConfig& cfg) {
  if (!obj.is_object()) fail_parse("\"env\" must be an object");
  if (!obj.contains("kind")) fail_parse("\"env\" needs a \"kind\"");
  const std::string kind = as_string(obj.at("kind"), "env.kind");
  if (kind == "device") {
    cfg.env_kind = GraphKind::Device;
    require_keys(obj, "env", {"kind", "devices", "mem_capacity", "bandwidth"});
    if (obj.contains("devices")) cfg.device.count = as_int(obj.at("devices"), "env.devices");
    if (obj.contains("mem_capacity"))
      cfg.device.mem_capacity = as_double(obj.at("mem_capacity"), "env.mem_capacity");
    if (obj.contains("bandwidth"))
      cfg.device.bandwidth = as_double(obj.at("bandwidth"), "env.bandwidth");
  } else if (kind == "grid") {
    cfg.env_kind = GraphKind::Grid;
    require_keys(obj, "env",
                 {"kind", "width", "height", "cell_capacity", "density_weight", "step_rewards"});
    if (obj.contains("width")) cfg.grid.width = as_int(obj.at("width"), "env.width");
    if (obj.contains("height")) cfg.grid.height = as_int(obj.at("height"), "env.height");
    if (obj.contains("cell_capacity"))
      cfg.grid.cell_capacity = as_int(obj.at("cell_capacity"), "env.cell_capacity");
    if (obj.contains("density_weight"))
      cfg.grid.density_weight = as_double(obj.at("density_weight"), "env.density_weight");
    if (obj.contains("step_rewards"))
      cfg.grid_step_rewards = as_bool(obj.at("step_rewards"), "env.step_rewards");
  } else {
    fail_parse("env.kind must be \"device\" or \"grid\"");
  }
}

void parse_reward(const ordered_json& obj, RewardSpec& reward) {
  if (!obj.is_object()) fail_parse("\"reward\" must be an object");
  require_keys(obj, "reward", {"alpha", "beta", "lambda", "shaping", "constraint"});
  if (obj.contains("alpha")) reward.alpha = as_double(obj.at("alpha"), "reward.alpha");
  if (obj.contains("beta")) reward.beta = as_double(obj.at("beta"), "reward.beta");
  if (obj.contains("lambda")) reward.lambda = as_double(obj.at("lambda"), "reward.lambda");
  if (obj.contains("shaping")) {
    const std::string s = as_string(obj.at("shaping"), "reward.shaping");
    if (s == "identity") reward.shaping = Shaping::Identity;
    else if (s == "sqrt") reward.shaping = Shaping::Sqrt;
    else fail_parse("reward.shaping must be \"identity\" or \"sqrt\"");
  }
  if (obj.contains("constraint")) {
    const std::string s = as_string(obj.at("constraint"), "reward.constraint");
    if (s == "mask") reward.constraint_mode = ConstraintMode::Mask;
    else if (s == "penalty") reward.constraint_mode = ConstraintMode::Penalty;
    else fail_parse("reward.constraint must be \"mask\" or \"penalty\"");
  }
}

void parse_policy(const ordered_json& obj, RunConfig& cfg) {
  if (!obj.is_object()) fail_parse("\"policy\" must be an object");
  require_keys(obj, "policy", {"encoder", "hidden_dim", "rounds"});
  if (obj.contains("encoder")) {
    const std::string s = as_string(obj.at("encoder"), "policy.encoder");
    if (s == "flat") cfg.encoder = EncoderKind::Flat;
    else if (s == "message_passing") cfg.encoder = EncoderKind::MessagePassing;
    else fail_parse("policy.encoder must be \"flat\" or \"message_passing\"");
  }
  if (obj.contains("hidden_dim")) cfg.hidden_dim = as_int(obj.at("hidden_dim"), "policy.hidden_dim");
  if (obj.contains("rounds")) cfg.rounds = as_int(obj.at("rounds"), "policy.rounds");
}

void parse_trainer(const ordered_json& obj, TrainerConfig& t) {
  if (!obj.is_object()) fail_parse("\"trainer\" must be an object");
  require_keys(obj, "trainer",
               {"learning_rate", "batch_size", "iterations", "baseline_decay", "entropy_weight",
                "grad_clip_norm", "discount", "seed", "eval_samples", "threads"});
  if (obj.contains("learning_rate"))
    t.learning_rate = as_double(obj.at("learning_rate"), "trainer.learning_rate");
  if (obj.contains("batch_size")) t.batch_size = as_int(obj.at("batch_size"), "trainer.batch_size");
  if (obj.contains("iterations")) t.iterations = as_int(obj.at("iterations"), "trainer.iterations");
  if (obj.contains("baseline_decay"))
    t.baseline_decay = as_double(obj.at("baseline_decay"), "trainer.baseline_decay");
  if (obj.contains("entropy_weight"))
    t.entropy_weight = as_double(obj.at("entropy_weight"), "trainer.entropy_weight");
  if (obj.contains("grad_clip_norm"))
    t.grad_clip_norm = as_double(obj.at("grad_clip_norm"), "trainer.grad_clip_norm");
  if (obj.contains("discount")) t.discount = as_double(obj.at("discount"), "trainer.discount");
  if (obj.contains("seed")) t.seed = as_u64(obj.at("seed"), "trainer.seed");
  if (obj.contains("eval_samples"))
    t.eval_samples = as_int(obj.at("eval_samples"), "trainer.eval_samples");
  if (obj.contains("threads")) t.threads = as_int(obj.at("threads"), "trainer.threads");
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, const std::string& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail_parse(std::string("malformed config JSON: ") + e.what());
  }
  if (!doc.is_object()) fail_parse("config root must be an object");
  require_keys(doc, "config", {"graphs", "env", "reward", "policy", "trainer", "output_dir"});
  if (!doc.contains("graphs") || !doc.contains("env"))
    fail_parse("config needs \"graphs\" and \"env\"");

  RunConfig cfg;
  const auto& graphs = doc.at("graphs");
  if (!graphs.is_array() || graphs.empty()) fail_parse("\"graphs\" must be a nonempty array");
  for (const auto& entry : graphs)
    cfg.graph_paths.push_back(resolve(as_string(entry, "graphs[]"), base_dir));

  try {
    parse_env(doc.at("env"), cfg);
    if (doc.contains("reward")) parse_reward(doc.at("reward"), cfg.reward);
    if (doc.contains("policy")) parse_policy(doc.at("policy"), cfg);
    if (doc.contains("trainer")) parse_trainer(doc.at("trainer"), cfg.trainer);
    if (doc.contains("output_dir"))
      cfg.output_dir = resolve(as_string(doc.at("output_dir"), "output_dir"), base_dir);
    else
      cfg.output_dir = resolve(cfg.output_dir, base_dir);
  } catch (const nlohmann::json::exception& e) {
    fail_parse(std::string("bad config JSON: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str(), fs::path(path).parent_path().string());
}

std::shared_ptr<const PlacementEnv> build_env(const RunConfig& cfg, Graph g) {
  if (cfg.env_kind == GraphKind::Device)
    return build_device_env(std::move(g), cfg.device, cfg.reward);
  return build_grid_env(std::move(g), cfg.grid, cfg.reward, cfg.grid_step_rewards);
}

TrainArtifacts run_training(const RunConfig& cfg) {
  std::vector<Graph> graphs;
  graphs.reserve(cfg.graph_paths.size());
  for (const std::string& path : cfg.graph_paths) graphs.push_back(load_graph(path));

  std::vector<std::shared_ptr<const PlacementEnv>> envs;
  envs.reserve(graphs.size());
  for (Graph& g : graphs) envs.push_back(build_env(cfg, std::move(g)));

  PolicyHyper hyper;
  hyper.feature_dim = feature_dim(envs.front()->graph());
  hyper.hidden_dim = cfg.hidden_dim;
  hyper.rounds = cfg.rounds;
  hyper.locations = envs.front()->num_locations();
  hyper.encoder = cfg.encoder;

  TrainResult result = train(envs, hyper, cfg.trainer);

  fs::create_directories(cfg.output_dir);
  TrainArtifacts artifacts;
  artifacts.params_path = (fs::path(cfg.output_dir) / "params.json").string();
  artifacts.history_path = (fs::path(cfg.output_dir) / "history.csv").string();
  artifacts.best_placement_path = (fs::path(cfg.output_dir) / "best_placement.json").string();

  save_params(result.params, artifacts.params_path);
  {
    std::ofstream out(artifacts.history_path);
    if (!out) throw_error(ErrorCode::IoError, "cannot write " + artifacts.history_path);
    out << result.history.to_csv();
  }
  {
    ordered_json doc = ordered_json::array();
    for (std::size_t i = 0; i < envs.size(); ++i) {
      ordered_json entry;
      entry["graph"] = cfg.graph_paths[i];
      if (result.best_returns[i]) {
        entry["best_return"] = *result.best_returns[i];
        entry["placement"] = result.best_placements[i]->assign;
      } else {
        entry["best_return"] = nullptr;
        entry["placement"] = nullptr;
      }
      doc.push_back(entry);
    }
    std::ofstream out(artifacts.best_placement_path);
    if (!out) throw_error(ErrorCode::IoError, "cannot write " + artifacts.best_placement_path);
    out << doc.dump(2) << "\n";
  }
  return artifacts;
}

}  // namespace placer
