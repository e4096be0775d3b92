#include "placer/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

namespace placer {

namespace {

constexpr double kFeatureEps = 1e-12;

void check(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw_error(code, message);
}

}  // namespace

ParamLayout layout_for(const PolicyHyper& hyper) {
  ParamLayout layout;
  layout.feature_dim = hyper.feature_dim;
  layout.hidden_dim = hyper.hidden_dim;
  layout.rounds = hyper.encoder == EncoderKind::Flat ? 0 : hyper.rounds;
  layout.locations = hyper.locations;
  return layout;
}

namespace {

void check_hyper(const PolicyHyper& hyper) {
  const int min_rounds = hyper.encoder == EncoderKind::Flat ? 0 : 1;
  check(hyper.feature_dim >= 1 && hyper.hidden_dim >= 1 && hyper.rounds >= min_rounds &&
            hyper.locations >= 1,
        ErrorCode::DimensionError, "policy dimensions must all be >= 1");
}

}  // namespace

PolicyParams::PolicyParams(const PolicyHyper& hyper, Vector theta)
    : hyper_(hyper), layout_(layout_for(hyper)) {
  check_hyper(hyper);
  check(theta.size() == layout_.total_size(), ErrorCode::DimensionError,
        "parameter vector has length " + std::to_string(theta.size()) + ", expected " +
            std::to_string(layout_.total_size()));
  check(theta.allFinite(), ErrorCode::DimensionError, "parameters must be finite");
  theta_ = std::move(theta);
}

PolicyParams PolicyParams::zeros(const PolicyHyper& hyper) {
  return PolicyParams(hyper, Vector::Zero(layout_for(hyper).total_size()));
}

PolicyParams PolicyParams::init(std::uint64_t seed, const PolicyHyper& hyper) {
  const ParamLayout layout = layout_for(hyper);
  check_hyper(hyper);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hyper.hidden_dim));
  Rng rng(seed);
  Vector theta = Vector::Zero(layout.total_size());

  // Encoder weights first, in canonical order.
  const int encoder_size = layout.w_in_size() + layout.rounds * layout.round_size();
  for (int i = 0; i < encoder_size; ++i) theta[i] = rng.uniform(-scale, scale);

  // One shared draw for the head: identical parameters across locations keep
  // the initial policy symmetric under device relabeling, so the first
  // distribution is uniform over unmasked locations at uniform usage.
  Vector a(hyper.hidden_dim);
  for (int i = 0; i < hyper.hidden_dim; ++i) a[i] = rng.uniform(-scale, scale);
  const double d = rng.uniform(-scale, scale);
  for (int j = 0; j < layout.locations; ++j) {
    theta.segment(layout.head_a_offset(j), hyper.hidden_dim) = a;
    theta[layout.head_d_offset(j)] = d;
    theta[layout.head_b_offset(j)] = 0.0;
  }
  return PolicyParams(hyper, std::move(theta));
}

Eigen::Map<const RowMajorMatrix> PolicyParams::w_in() const {
  return {theta_.data() + layout_.w_in_offset(), layout_.hidden_dim, layout_.feature_dim};
}

Eigen::Map<const RowMajorMatrix> PolicyParams::w_self(int k) const {
  return {theta_.data() + layout_.w_self_offset(k), layout_.hidden_dim, layout_.hidden_dim};
}

Eigen::Map<const RowMajorMatrix> PolicyParams::w_nbr(int k) const {
  return {theta_.data() + layout_.w_nbr_offset(k), layout_.hidden_dim, layout_.hidden_dim};
}

Eigen::Map<const Vector> PolicyParams::bias(int k) const {
  return {theta_.data() + layout_.bias_offset(k), layout_.hidden_dim};
}

Eigen::Map<const Vector> PolicyParams::head_a(int j) const {
  return {theta_.data() + layout_.head_a_offset(j), layout_.hidden_dim};
}

int feature_dim(const Graph& g) { return g.op_types + 4; }

Matrix feature_matrix(const Graph& g) {
  const int n = g.num_nodes();
  const int f = feature_dim(g);
  std::vector<int> in_deg(static_cast<std::size_t>(n), 0);
  std::vector<int> out_deg(static_cast<std::size_t>(n), 0);
  for (const Edge& e : g.edges) {
    ++out_deg[static_cast<std::size_t>(e.src)];
    ++in_deg[static_cast<std::size_t>(e.dst)];
  }
  double max_compute = kFeatureEps, max_memory = kFeatureEps;
  double max_in = kFeatureEps, max_out = kFeatureEps;
  for (int i = 0; i < n; ++i) {
    max_compute = std::max(max_compute, g.nodes[static_cast<std::size_t>(i)].compute);
    max_memory = std::max(max_memory, g.nodes[static_cast<std::size_t>(i)].memory);
    max_in = std::max(max_in, static_cast<double>(in_deg[static_cast<std::size_t>(i)]));
    max_out = std::max(max_out, static_cast<double>(out_deg[static_cast<std::size_t>(i)]));
  }
  Matrix x = Matrix::Zero(n, f);
  for (int i = 0; i < n; ++i) {
    const Node& node = g.nodes[static_cast<std::size_t>(i)];
    x(i, node.op_type) = 1.0;
    x(i, g.op_types + 0) = node.compute / max_compute;
    x(i, g.op_types + 1) = node.memory / max_memory;
    x(i, g.op_types + 2) = in_deg[static_cast<std::size_t>(i)] / max_in;
    x(i, g.op_types + 3) = out_deg[static_cast<std::size_t>(i)] / max_out;
  }
  return x;
}

Vector node_features(const Graph& g, int i) {
  if (i < 0 || i >= g.num_nodes())
    throw_error(ErrorCode::IndexError, "node index " + std::to_string(i) + " out of range");
  return feature_matrix(g).row(i);
}

namespace {

Matrix mean_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  Matrix p = Matrix::Zero(n, n);
  auto adjacency = undirected_adjacency(g);
  for (int i = 0; i < n; ++i) {
    const auto& nbrs = adjacency[static_cast<std::size_t>(i)];
    if (nbrs.empty()) continue;
    const double w = 1.0 / static_cast<double>(nbrs.size());
    for (int j : nbrs) p(i, j) = w;
  }
  return p;
}

void check_graph_dims(const Graph& g, const PolicyParams& params) {
  check(feature_dim(g) == params.hyper().feature_dim, ErrorCode::DimensionError,
        "graph feature dim " + std::to_string(feature_dim(g)) + " != policy feature dim " +
            std::to_string(params.hyper().feature_dim));
}

}  // namespace

EncodeTrace encode_with_trace(const Graph& g, const PolicyParams& params) {
  check_graph_dims(g, params);
  EncodeTrace trace;
  trace.features = feature_matrix(g);
  trace.h.push_back(trace.features * params.w_in().transpose());

  const int rounds = params.layout().rounds;
  if (rounds > 0) trace.adjacency_mean = mean_adjacency(g);
  for (int k = 0; k < rounds; ++k) {
    const Matrix& h = trace.h.back();
    Matrix m = trace.adjacency_mean * h;
    Matrix z = h * params.w_self(k).transpose() + m * params.w_nbr(k).transpose();
    z.rowwise() += params.bias(k).transpose();
    trace.nbr_mean.push_back(std::move(m));
    trace.h.push_back(z.cwiseMax(0.0));
    trace.pre.push_back(std::move(z));
  }
  return trace;
}

Matrix encode(const Graph& g, const PolicyParams& params) {
  return encode_with_trace(g, params).h.back();
}

Vector action_logits(const PolicyParams& params, const Vector& h, const Vector& usage) {
  const int m = params.hyper().locations;
  check(h.size() == params.hyper().hidden_dim, ErrorCode::DimensionError,
        "embedding size mismatch");
  check(usage.size() == m, ErrorCode::DimensionError, "usage vector size mismatch");
  Vector logits(m);
  for (int j = 0; j < m; ++j)
    logits[j] = params.head_a(j).dot(h) + params.head_d(j) * usage[j] + params.head_b(j);
  return logits;
}

Vector masked_softmax(const Vector& logits, const Mask& mask) {
  check(logits.size() == mask.size(), ErrorCode::DimensionError, "mask size mismatch");
  if (!mask.any()) throw_error(ErrorCode::DeadEnd, "all placement locations are masked");

  // Masked entries are excluded from the normalization entirely so their
  // probability is exactly zero.
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < logits.size(); ++j)
    if (mask[j]) max_logit = std::max(max_logit, logits[j]);
  Vector probs = Vector::Zero(logits.size());
  double z = 0;
  for (int j = 0; j < logits.size(); ++j) {
    if (!mask[j]) continue;
    probs[j] = std::exp(logits[j] - max_logit);
    z += probs[j];
  }
  for (int j = 0; j < logits.size(); ++j)
    if (mask[j]) probs[j] /= z;
  return probs;
}

Vector action_distribution(const PolicyParams& params, const Vector& h, const StepState& s,
                           const Mask& mask) {
  return masked_softmax(action_logits(params, h, s.usage), mask);
}

double Trajectory::logp_sum() const {
  double total = 0;
  for (double lp : logps) total += lp;
  return total;
}

namespace {

int greedy_pick(const Vector& probs, const Mask& mask) {
  int best = -1;
  double best_p = -1;
  for (int j = 0; j < probs.size(); ++j) {
    if (!mask[j]) continue;
    if (probs[j] > best_p) {  // strict: ties stay at the lowest index
      best_p = probs[j];
      best = j;
    }
  }
  return best;
}

void check_env_dims(const PlacementEnv& env, const PolicyParams& params) {
  check_graph_dims(env.graph(), params);
  check(env.num_locations() == params.hyper().locations, ErrorCode::DimensionError,
        "environment has " + std::to_string(env.num_locations()) + " locations, policy expects " +
            std::to_string(params.hyper().locations));
}

}  // namespace

Trajectory sample_rollout(const PlacementEnv& env, const PolicyParams& params, Rng& rng,
                          DecodeMode mode) {
  check_env_dims(env, params);
  const Matrix h = encode(env.graph(), params);

  Trajectory traj;
  StepState state = env.initial_state();
  while (!env.is_terminal(state)) {
    const Mask mask = env.mask(state);
    if (!mask.any()) {
      traj.aborted = true;
      traj.step_rewards.push_back(env.abort_penalty(state));
      break;
    }
    const int node = env.current_node(state);
    const Vector probs = action_distribution(params, h.row(node), state, mask);
    const int action = mode == DecodeMode::Greedy ? greedy_pick(probs, mask)
                                                  : rng.categorical(probs);
    traj.actions.push_back(action);
    traj.logps.push_back(std::log(probs[action]));
    double reward = 0;
    state = env.apply(state, action, &reward);
    traj.step_rewards.push_back(reward);
  }
  for (double r : traj.step_rewards) traj.total_return += r;
  return traj;
}

double trajectory_logp(const PlacementEnv& env, const PolicyParams& params,
                       const std::vector<int>& actions) {
  check_env_dims(env, params);
  const Matrix h = encode(env.graph(), params);
  StepState state = env.initial_state();
  double total = 0;
  for (int action : actions) {
    const Mask mask = env.mask(state);
    const int node = env.current_node(state);
    const Vector probs = action_distribution(params, h.row(node), state, mask);
    total += std::log(probs[action]);
    state = env.apply(state, action);
  }
  return total;
}

namespace {

// Backpropagates d(objective)/d(embeddings) through the encoder rounds and
// the input projection, adding into grad (same canonical layout as theta).
void encoder_backward(const PolicyParams& params, const EncodeTrace& trace, Matrix d_h,
                      Vector& grad) {
  const ParamLayout& layout = params.layout();
  const int dim = layout.hidden_dim;
  for (int k = layout.rounds - 1; k >= 0; --k) {
    // relu subgradient is 0 at 0.
    Matrix d_z = (trace.pre[static_cast<std::size_t>(k)].array() > 0.0)
                     .select(d_h, Matrix::Zero(d_h.rows(), d_h.cols()));
    Eigen::Map<RowMajorMatrix> d_w_self(grad.data() + layout.w_self_offset(k), dim, dim);
    Eigen::Map<RowMajorMatrix> d_w_nbr(grad.data() + layout.w_nbr_offset(k), dim, dim);
    Eigen::Map<Vector> d_bias(grad.data() + layout.bias_offset(k), dim);
    d_w_self += d_z.transpose() * trace.h[static_cast<std::size_t>(k)];
    d_w_nbr += d_z.transpose() * trace.nbr_mean[static_cast<std::size_t>(k)];
    d_bias += d_z.colwise().sum().transpose();
    d_h = d_z * params.w_self(k) +
          trace.adjacency_mean.transpose() * (d_z * params.w_nbr(k));
  }
  Eigen::Map<RowMajorMatrix> d_w_in(grad.data() + layout.w_in_offset(), dim, layout.feature_dim);
  d_w_in += d_h.transpose() * trace.features;
}

}  // namespace

TrajectoryBackward trajectory_backward(const PlacementEnv& env, const PolicyParams& params,
                                       const Trajectory& traj, bool want_entropy) {
  check_env_dims(env, params);
  const ParamLayout& layout = params.layout();
  const EncodeTrace trace = encode_with_trace(env.graph(), params);
  const Matrix& h = trace.h.back();
  const int n = env.num_nodes();
  const int m = env.num_locations();

  TrajectoryBackward out;
  out.logp_grad = Vector::Zero(layout.total_size());
  Matrix d_h_logp = Matrix::Zero(n, layout.hidden_dim);
  Matrix d_h_ent;
  if (want_entropy) {
    out.entropy_grad = Vector::Zero(layout.total_size());
    d_h_ent = Matrix::Zero(n, layout.hidden_dim);
  }

  const int steps = static_cast<int>(traj.actions.size());
  const double entropy_scale = steps > 0 ? 1.0 / steps : 0.0;
  double entropy_sum = 0;

  StepState state = env.initial_state();
  for (int t = 0; t < steps; ++t) {
    const Mask mask = env.mask(state);
    const int node = env.current_node(state);
    const int action = traj.actions[static_cast<std::size_t>(t)];
    const Vector probs = action_distribution(params, h.row(node), state, mask);

    double step_entropy = 0;
    if (want_entropy) {
      for (int j = 0; j < m; ++j)
        if (mask[j] && probs[j] > 0) step_entropy -= probs[j] * std::log(probs[j]);
      entropy_sum += step_entropy;
    }

    for (int j = 0; j < m; ++j) {
      if (!mask[j]) continue;
      // d(log p[action])/d(logit_j) = 1{j==action} - p_j
      const double g_logp = (j == action ? 1.0 : 0.0) - probs[j];
      if (g_logp != 0) {
        out.logp_grad.segment(layout.head_a_offset(j), layout.hidden_dim) +=
            g_logp * h.row(node).transpose();
        out.logp_grad[layout.head_d_offset(j)] += g_logp * state.usage[j];
        out.logp_grad[layout.head_b_offset(j)] += g_logp;
        d_h_logp.row(node) += g_logp * params.head_a(j).transpose();
      }
      if (want_entropy && probs[j] > 0) {
        // dH/d(logit_j) = -p_j (log p_j + H)
        const double g_ent =
            entropy_scale * (-probs[j] * (std::log(probs[j]) + step_entropy));
        out.entropy_grad.segment(layout.head_a_offset(j), layout.hidden_dim) +=
            g_ent * h.row(node).transpose();
        out.entropy_grad[layout.head_d_offset(j)] += g_ent * state.usage[j];
        out.entropy_grad[layout.head_b_offset(j)] += g_ent;
        d_h_ent.row(node) += g_ent * params.head_a(j).transpose();
      }
    }
    state = env.apply(state, action);
  }

  encoder_backward(params, trace, std::move(d_h_logp), out.logp_grad);
  if (want_entropy) {
    encoder_backward(params, trace, std::move(d_h_ent), out.entropy_grad);
    out.mean_entropy = steps > 0 ? entropy_sum / steps : 0.0;
  }
  return out;
}

Vector trajectory_grad(const PlacementEnv& env, const PolicyParams& params,
                       const Trajectory& traj) {
  return trajectory_backward(env, params, traj, false).logp_grad;
}

namespace {

using nlohmann::ordered_json;

const char* encoder_name(EncoderKind kind) {
  return kind == EncoderKind::Flat ? "flat" : "message_passing";
}

EncoderKind encoder_from_name(const std::string& name) {
  if (name == "flat") return EncoderKind::Flat;
  if (name == "message_passing") return EncoderKind::MessagePassing;
  throw_error(ErrorCode::ParseError, "unknown encoder \"" + name + "\"");
}

}  // namespace

std::string params_to_json(const PolicyParams& params) {
  ordered_json doc;
  doc["hyper"] = {{"encoder", encoder_name(params.hyper().encoder)},
                  {"feature_dim", params.hyper().feature_dim},
                  {"hidden_dim", params.hyper().hidden_dim},
                  {"rounds", params.hyper().rounds},
                  {"locations", params.hyper().locations}};
  doc["weights"] = ordered_json::array();
  for (int i = 0; i < params.size(); ++i) doc["weights"].push_back(params.flat()[i]);
  return doc.dump(2) + "\n";
}

PolicyParams params_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_error(ErrorCode::ParseError, std::string("malformed params JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("hyper") || !doc.contains("weights"))
    throw_error(ErrorCode::ParseError, "params file needs \"hyper\" and \"weights\"");
  PolicyHyper hyper;
  Vector theta;
  try {
    const auto& hy = doc.at("hyper");
    hyper.encoder = encoder_from_name(hy.at("encoder").get<std::string>());
    hyper.feature_dim = hy.at("feature_dim").get<int>();
    hyper.hidden_dim = hy.at("hidden_dim").get<int>();
    hyper.rounds = hy.at("rounds").get<int>();
    hyper.locations = hy.at("locations").get<int>();

    const auto& weights = doc.at("weights");
    if (!weights.is_array()) throw_error(ErrorCode::ParseError, "\"weights\" must be an array");
    theta.resize(static_cast<int>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i)
      theta[static_cast<int>(i)] = weights[i].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::ParseError, std::string("bad params JSON: ") + e.what());
  }
  return PolicyParams(hyper, std::move(theta));
}

void save_params(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot write params file: " + path);
  out << params_to_json(params);
}

PolicyParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open params file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return params_from_json(buffer.str());
}

}  // namespace placer
