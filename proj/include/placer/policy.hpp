#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "placer/env.hpp"
#include "placer/rng.hpp"

namespace placer {

class Rng;

enum class EncoderKind { Flat, MessagePassing };

struct PolicyHyper {
  int feature_dim = 0;  // F, fixed by the graph's op-type vocabulary (T + 4)
  int hidden_dim = 8;   // D
  int rounds = 2;       // K message-passing rounds (ignored by Flat)
  int locations = 0;    // M
  EncoderKind encoder = EncoderKind::MessagePassing;
};

// Canonical flat parameter order:
//   W_in (D x F, row-major),
//   per round k: W_self^k (D x D, row-major), W_nbr^k (D x D, row-major), b^k (D),
//   per location j: a_j (D), d_j, b_j.
// The Flat encoder carries no per-round blocks.
struct ParamLayout {
  int feature_dim = 0;
  int hidden_dim = 0;
  int rounds = 0;  // effective rounds (0 for Flat)
  int locations = 0;

  int w_in_offset() const { return 0; }
  int w_in_size() const { return hidden_dim * feature_dim; }
  int round_size() const { return 2 * hidden_dim * hidden_dim + hidden_dim; }
  int w_self_offset(int k) const { return w_in_size() + k * round_size(); }
  int w_nbr_offset(int k) const { return w_self_offset(k) + hidden_dim * hidden_dim; }
  int bias_offset(int k) const { return w_nbr_offset(k) + hidden_dim * hidden_dim; }
  int head_stride() const { return hidden_dim + 2; }
  int head_offset(int j) const { return w_in_size() + rounds * round_size() + j * head_stride(); }
  int head_a_offset(int j) const { return head_offset(j); }
  int head_d_offset(int j) const { return head_offset(j) + hidden_dim; }
  int head_b_offset(int j) const { return head_offset(j) + hidden_dim + 1; }
  int total_size() const { return head_offset(locations); }
};

ParamLayout layout_for(const PolicyHyper& hyper);

// All learnable weights of the encoder and placement head, stored flat in the
// canonical order above with typed Eigen views on top.
class PolicyParams {
 public:
  PolicyParams(const PolicyHyper& hyper, Vector theta);

  // Weights i.i.d. uniform in [-1/sqrt(D), 1/sqrt(D)], deterministic in seed.
  // The head is initialized symmetric across locations (one shared draw of
  // a and d, biases zero) so the initial action distribution is uniform over
  // unmasked locations whenever usage is uniform.
  static PolicyParams init(std::uint64_t seed, const PolicyHyper& hyper);
  static PolicyParams zeros(const PolicyHyper& hyper);

  const PolicyHyper& hyper() const { return hyper_; }
  const ParamLayout& layout() const { return layout_; }
  int size() const { return layout_.total_size(); }

  const Vector& flat() const { return theta_; }
  Vector& flat() { return theta_; }

  Eigen::Map<const RowMajorMatrix> w_in() const;
  Eigen::Map<const RowMajorMatrix> w_self(int k) const;
  Eigen::Map<const RowMajorMatrix> w_nbr(int k) const;
  Eigen::Map<const Vector> bias(int k) const;
  Eigen::Map<const Vector> head_a(int j) const;
  double head_d(int j) const { return theta_[layout_.head_d_offset(j)]; }
  double head_b(int j) const { return theta_[layout_.head_b_offset(j)]; }

 private:
  PolicyHyper hyper_;
  ParamLayout layout_;
  Vector theta_;
};

// Per-node input features: [one-hot op_type (T), compute/max_compute,
// memory/max_memory, in_deg/max_in_deg, out_deg/max_out_deg] with every
// maximum floored at 1e-12. F = T + 4.
int feature_dim(const Graph& g);
Vector node_features(const Graph& g, int i);
Matrix feature_matrix(const Graph& g);  // N x F

// N x D node embeddings. MessagePassing:
//   h^0_i = W_in x_i,
//   h^{k+1}_i = relu(W_self^k h^k_i + W_nbr^k mean_{j in nbr(i)} h^k_j + b^k)
// with the mean over an empty neighbor set defined as the zero vector.
// Flat returns h^0 directly.
Matrix encode(const Graph& g, const PolicyParams& params);

// Forward activations kept for the backward pass.
struct EncodeTrace {
  Matrix features;                // N x F
  std::vector<Matrix> h;          // rounds+1 entries, N x D
  std::vector<Matrix> nbr_mean;   // rounds entries, N x D
  std::vector<Matrix> pre;        // rounds entries, N x D (pre-activation)
  Matrix adjacency_mean;          // N x N row-normalized undirected adjacency
};

EncodeTrace encode_with_trace(const Graph& g, const PolicyParams& params);

// logits_j = a_j . h + d_j * usage_j + b_j for every location j.
Vector action_logits(const PolicyParams& params, const Vector& h, const Vector& usage);

// Masked softmax: masked entries are excluded from the normalization, so
// their probabilities are exactly zero. Throws DeadEnd on an all-false mask.
Vector masked_softmax(const Vector& logits, const Mask& mask);

// Probability distribution over locations for the node with embedding h.
Vector action_distribution(const PolicyParams& params, const Vector& h,
                           const StepState& s, const Mask& mask);

enum class DecodeMode { Sample, Greedy };

// Ordered record of one placement episode. step_rewards has one entry per
// action, plus one trailing dead-end penalty entry when aborted.
struct Trajectory {
  std::vector<int> actions;
  std::vector<double> logps;
  std::vector<double> step_rewards;
  double total_return = 0;  // sum of step_rewards
  bool aborted = false;

  double logp_sum() const;
};

// Runs one episode against env. Sample draws from the per-step distribution
// using rng; Greedy takes the argmax with ties to the lowest index. A
// dead-ended episode is returned with aborted=true and the penalty appended
// to step_rewards.
Trajectory sample_rollout(const PlacementEnv& env, const PolicyParams& params, Rng& rng,
                          DecodeMode mode);

// Sum of per-step log-probabilities of replaying `actions` under params.
double trajectory_logp(const PlacementEnv& env, const PolicyParams& params,
                       const std::vector<int>& actions);

struct TrajectoryBackward {
  Vector logp_grad;     // d(sum of logps)/d(theta)
  Vector entropy_grad;  // d(mean step entropy)/d(theta); empty unless requested
  double mean_entropy = 0;
};

// Exact reverse-mode gradients through the head, the relu rounds (subgradient
// 0 at 0) and the mean aggregation, replaying the trajectory's actions.
TrajectoryBackward trajectory_backward(const PlacementEnv& env, const PolicyParams& params,
                                       const Trajectory& traj, bool want_entropy = false);

// Gradient of the trajectory log-probability with respect to every parameter.
Vector trajectory_grad(const PlacementEnv& env, const PolicyParams& params,
                       const Trajectory& traj);

// Parameter file I/O: {"hyper": {...}, "weights": [...]} in canonical order.
void save_params(const PolicyParams& params, const std::string& path);
PolicyParams load_params(const std::string& path);
std::string params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const std::string& text);

}  // namespace placer
