#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "placer/device_env.hpp"
#include "placer/oracle.hpp"
#include "placer/policy.hpp"

using namespace placer;

namespace {

PolicyHyper hyper_for(const Graph& g, int locations, int hidden, int rounds,
                      EncoderKind enc = EncoderKind::MessagePassing) {
  PolicyHyper h;
  h.feature_dim = feature_dim(g);
  h.hidden_dim = hidden;
  h.rounds = rounds;
  h.locations = locations;
  h.encoder = enc;
  return h;
}

Graph chain(int n, int op_types = 2) {
  Graph g;
  g.kind = GraphKind::Device;
  g.op_types = op_types;
  for (int i = 0; i < n; ++i)
    g.nodes.push_back({i, i % op_types, 1.0 + i, 1.0 + (n - i)});
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 2.0 + i});
  return g;
}

}  // namespace

TEST_CASE("init is deterministic, bounded, and biasless") {
  const Graph g = chain(4);
  const PolicyHyper hyper = hyper_for(g, 3, 8, 2);
  const PolicyParams a = PolicyParams::init(7, hyper);
  const PolicyParams b = PolicyParams::init(7, hyper);
  CHECK((a.flat().array() == b.flat().array()).all());
  CHECK(!(PolicyParams::init(8, hyper).flat().array() == a.flat().array()).all());

  const double bound = 1.0 / std::sqrt(8.0);
  CHECK(a.flat().cwiseAbs().maxCoeff() <= bound);
  for (int j = 0; j < 3; ++j) CHECK(a.head_b(j) == 0.0);
}

TEST_CASE("initial action distribution is uniform over unmasked locations") {
  const Graph g = chain(3);
  const PolicyParams params = PolicyParams::init(11, hyper_for(g, 4, 8, 2));
  const Matrix h = encode(g, params);
  StepState s;
  s.partial = Placement(3);
  s.usage = Vector::Zero(4);

  Mask all = Mask::Constant(4, true);
  Vector probs = action_distribution(params, h.row(0), s, all);
  for (int j = 0; j < 4; ++j) CHECK(probs[j] == doctest::Approx(0.25).epsilon(1e-12));

  Mask some = all;
  some[2] = false;
  probs = action_distribution(params, h.row(1), s, some);
  CHECK(probs[2] == 0.0);
  for (int j : {0, 1, 3}) CHECK(probs[j] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("parameter count follows the layout") {
  const Graph g = chain(3);  // op_types 2 -> F = 6
  const PolicyHyper mp = hyper_for(g, 2, 4, 2);
  // W_in 4*6 + 2 rounds * (16+16+4) + 2 locations * (4+2)
  CHECK(layout_for(mp).total_size() == 24 + 72 + 12);
  const PolicyHyper flat = hyper_for(g, 2, 4, 2, EncoderKind::Flat);
  CHECK(layout_for(flat).total_size() == 24 + 12);
}

TEST_CASE("node features: one-hot, normalized scalars, degrees") {
  Graph g;
  g.kind = GraphKind::Device;
  g.op_types = 3;
  g.nodes = {{0, 2, 4.0, 8.0}, {1, 0, 2.0, 2.0}, {2, 0, 0.0, 4.0}};
  g.edges = {{0, 1, 1.0}, {0, 2, 1.0}};
  CHECK(feature_dim(g) == 7);

  const Vector f0 = node_features(g, 0);
  CHECK(f0.size() == 7);
  CHECK(f0[0] == 0.0);
  CHECK(f0[2] == 1.0);                        // one-hot op 2
  CHECK(f0[3] == doctest::Approx(1.0));       // compute 4 / max 4
  CHECK(f0[4] == doctest::Approx(1.0));       // memory 8 / max 8
  CHECK(f0[5] == doctest::Approx(0.0));       // in-degree 0
  CHECK(f0[6] == doctest::Approx(1.0));       // out-degree 2 / max 2

  const Vector f1 = node_features(g, 1);
  CHECK(f1[3] == doctest::Approx(0.5));
  CHECK(f1[5] == doctest::Approx(1.0));  // in-degree 1 / max 1
  CHECK(f1[6] == doctest::Approx(0.0));
}

TEST_CASE("identical nodes get identical feature rows") {
  Graph g;
  g.kind = GraphKind::Device;
  g.op_types = 1;
  g.nodes = {{0, 0, 3.0, 5.0}, {1, 0, 3.0, 5.0}};
  const Matrix x = feature_matrix(g);
  CHECK((x.row(0) - x.row(1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-node graph normalizes against itself") {
  Graph g;
  g.kind = GraphKind::Device;
  g.op_types = 1;
  g.nodes = {{0, 0, 3.0, 0.0}};
  const Vector f = node_features(g, 0);
  CHECK(f[1] == doctest::Approx(1.0));  // compute/max_compute = 1
  CHECK(f[2] == doctest::Approx(0.0));  // zero memory stays zero
}

TEST_CASE("flat encoder ignores edges") {
  Graph a = chain(4);
  Graph b = a;
  b.edges.clear();
  const PolicyHyper hyper = hyper_for(a, 2, 4, 3, EncoderKind::Flat);
  const PolicyParams params = PolicyParams::init(3, hyper);
  // Degree features differ, so compare graphs with equal features directly:
  // drop edges from both feature builds by comparing the same graph against
  // itself encoded twice, then check edge independence via the h^0 formula.
  const Matrix ha = encode(a, params);
  CHECK(ha.rows() == 4);
  CHECK(ha.cols() == 4);
  const Matrix expected = feature_matrix(a) * params.w_in().transpose();
  CHECK((ha - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("k-round locality is exact") {
  // Chain of 5: with K=1, perturbing node 3's features cannot change h_0 or
  // h_1; with K=2 it must reach h_1 (2 hops) but still not h_0 — note
  // degree features: perturbing only compute keeps features local.
  Graph g = chain(5, 1);
  const PolicyHyper k1 = hyper_for(g, 2, 4, 1);
  const PolicyHyper k2 = hyper_for(g, 2, 4, 2);
  const PolicyParams p1 = PolicyParams::init(5, k1);
  const PolicyParams p2 = PolicyParams::init(5, k2);

  Graph perturbed = g;
  perturbed.nodes[3].compute += 0.125;  // max compute is node 4's, unchanged

  const Matrix h1 = encode(g, p1), h1p = encode(perturbed, p1);
  CHECK((h1.row(0) - h1p.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h1.row(1) - h1p.row(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h1.row(2) - h1p.row(2)).cwiseAbs().maxCoeff() > 0.0);

  const Matrix h2 = encode(g, p2), h2p = encode(perturbed, p2);
  CHECK((h2.row(0) - h2p.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h2.row(1) - h2p.row(1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("relabeling nodes permutes the embedding rows") {
  Graph g = chain(4, 1);
  // Swap ids 1 and 2 (and rewrite edges accordingly).
  Graph h = g;
  h.nodes[1] = g.nodes[2];
  h.nodes[2] = g.nodes[1];
  h.nodes[1].id = 1;
  h.nodes[2].id = 2;
  for (Edge& e : h.edges) {
    if (e.src == 1) e.src = 2;
    else if (e.src == 2) e.src = 1;
    if (e.dst == 1) e.dst = 2;
    else if (e.dst == 2) e.dst = 1;
  }
  const PolicyParams params = PolicyParams::init(9, hyper_for(g, 2, 4, 2));
  const Matrix eg = encode(g, params);
  const Matrix eh = encode(h, params);
  CHECK((eg.row(0) - eh.row(0)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((eg.row(1) - eh.row(2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((eg.row(2) - eh.row(1)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((eg.row(3) - eh.row(3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("masked softmax closed forms") {
  Vector logits(2);
  logits << 0.0, 0.0;
  Mask both = Mask::Constant(2, true);
  const Vector p = masked_softmax(logits, both);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  Vector l3(3);
  l3 << 5.0, -2.0, 0.0;
  Mask m3(3);
  m3 << true, false, true;
  const Vector q = masked_softmax(l3, m3);
  const double z = std::exp(5.0) + 1.0;
  CHECK(q[0] == doctest::Approx(std::exp(5.0) / z).epsilon(1e-12));
  CHECK(q[1] == 0.0);
  CHECK(q[2] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));

  Mask none = Mask::Constant(3, false);
  CHECK_THROWS_AS(masked_softmax(l3, none), PlacerError);
}

TEST_CASE("softmax is shift-stable at extreme logits") {
  Vector logits(2);
  logits << 1000.0, 999.0;
  const Vector p = masked_softmax(logits, Mask::Constant(2, true));
  CHECK(std::isfinite(p[0]));
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[0] > p[1]);
}

TEST_CASE("rollouts: M=1 is forced with zero log-prob") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{1, 1e9, 1.0}, {});
  const PolicyParams params = PolicyParams::init(2, hyper_for(g, 1, 4, 1));
  Rng rng(1);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);
  CHECK(traj.actions == std::vector<int>{0, 0, 0});
  CHECK(traj.logp_sum() == 0.0);
  CHECK(!traj.aborted);
}

TEST_CASE("greedy decoding is deterministic and ties go low") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{2, 1e9, 1.0}, {});
  // Zero parameters: every logit 0, so every step ties; greedy must pick 0.
  const PolicyParams zeros = PolicyParams::zeros(hyper_for(g, 2, 4, 1));
  Rng rng(1);
  const Trajectory traj = sample_rollout(*env, zeros, rng, DecodeMode::Greedy);
  CHECK(traj.actions == std::vector<int>{0, 0, 0});

  const PolicyParams params = PolicyParams::init(3, hyper_for(g, 2, 4, 1));
  Rng r1(1), r2(99);
  const Trajectory a = sample_rollout(*env, params, r1, DecodeMode::Greedy);
  const Trajectory b = sample_rollout(*env, params, r2, DecodeMode::Greedy);
  CHECK(a.actions == b.actions);
}

TEST_CASE("sampled rollouts reproduce under a fixed seed") {
  const Graph g = chain(4);
  auto env = build_device_env(g, DeviceSpec{3, 1e9, 1.0}, {});
  const PolicyParams params = PolicyParams::init(4, hyper_for(g, 3, 4, 2));
  Rng r1(77), r2(77);
  const Trajectory a = sample_rollout(*env, params, r1, DecodeMode::Sample);
  const Trajectory b = sample_rollout(*env, params, r2, DecodeMode::Sample);
  CHECK(a.actions == b.actions);
  CHECK(a.logps == b.logps);
  CHECK(a.total_return == b.total_return);
}

TEST_CASE("trajectory_logp replays the sampled log-probability") {
  const Graph g = chain(4);
  auto env = build_device_env(g, DeviceSpec{2, 1e9, 1.0}, {});
  const PolicyParams params = PolicyParams::init(6, hyper_for(g, 2, 4, 2));
  Rng rng(123);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);
  CHECK(trajectory_logp(*env, params, traj.actions) ==
        doctest::Approx(traj.logp_sum()).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected with both sizes named") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{2, 1e9, 1.0}, {});
  const PolicyParams wrong_m = PolicyParams::init(1, hyper_for(g, 3, 4, 1));
  Rng rng(1);
  try {
    sample_rollout(*env, wrong_m, rng, DecodeMode::Sample);
    CHECK(false);
  } catch (const PlacerError& e) {
    CHECK(e.code() == ErrorCode::DimensionError);
    const std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("M=1 trajectory gradient is identically zero") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{1, 1e9, 1.0}, {});
  const PolicyParams params = PolicyParams::init(2, hyper_for(g, 1, 4, 1));
  Rng rng(1);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);
  const Vector grad = trajectory_grad(*env, params, traj);
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  // 4-node, M=3, D=4, K=2 instance; every coordinate within 1e-4 relative.
  const Graph g = chain(4);
  auto env = build_device_env(g, DeviceSpec{3, 1e9, 2.0}, {});
  const PolicyHyper hyper = hyper_for(g, 3, 4, 2);
  const PolicyParams params = PolicyParams::init(10, hyper);
  Rng rng(20);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);

  const Vector analytic = trajectory_grad(*env, params, traj);
  const Vector fd = oracle::finite_diff_gradient(
      [&](const Vector& theta) {
        const PolicyParams probe(hyper, theta);
        return trajectory_logp(*env, probe, traj.actions);
      },
      params.flat(), 1e-5);

  REQUIRE(analytic.size() == fd.size());
  for (int k = 0; k < analytic.size(); ++k) {
    const double denom = std::max(1.0, std::abs(analytic[k]));
    CHECK(std::abs(analytic[k] - fd[k]) / denom < 1e-4);
  }
}

TEST_CASE("usage-dependent head gradient survives the finite-difference check") {
  // Capacity-tight instance so usage varies between steps and d_j matters.
  Graph g = chain(4, 1);
  for (Node& n : g.nodes) n.memory = 2.0;
  auto env = build_device_env(g, DeviceSpec{2, 5.0, 1.0}, {});
  const PolicyHyper hyper = hyper_for(g, 2, 3, 1);
  const PolicyParams params = PolicyParams::init(14, hyper);
  Rng rng(3);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);
  REQUIRE(!traj.aborted);

  const Vector analytic = trajectory_grad(*env, params, traj);
  const Vector fd = oracle::finite_diff_gradient(
      [&](const Vector& theta) {
        return trajectory_logp(*env, PolicyParams(hyper, theta), traj.actions);
      },
      params.flat(), 1e-5);
  for (int k = 0; k < analytic.size(); ++k)
    CHECK(std::abs(analytic[k] - fd[k]) / std::max(1.0, std::abs(analytic[k])) < 1e-4);
}

TEST_CASE("entropy gradient matches finite differences of mean entropy") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{2, 1e9, 1.0}, {});
  const PolicyHyper hyper = hyper_for(g, 2, 3, 1);
  const PolicyParams params = PolicyParams::init(8, hyper);
  Rng rng(4);
  const Trajectory traj = sample_rollout(*env, params, rng, DecodeMode::Sample);

  const TrajectoryBackward back = trajectory_backward(*env, params, traj, true);
  const Vector fd = oracle::finite_diff_gradient(
      [&](const Vector& theta) {
        const PolicyParams probe(hyper, theta);
        return trajectory_backward(*env, probe, traj, true).mean_entropy;
      },
      params.flat(), 1e-5);
  for (int k = 0; k < back.entropy_grad.size(); ++k)
    CHECK(std::abs(back.entropy_grad[k] - fd[k]) /
              std::max(1.0, std::abs(back.entropy_grad[k])) < 1e-4);
}

TEST_CASE("gradients add over trajectories") {
  const Graph g = chain(3);
  auto env = build_device_env(g, DeviceSpec{2, 1e9, 1.0}, {});
  const PolicyParams params = PolicyParams::init(12, hyper_for(g, 2, 4, 1));
  Rng rng(8);
  const Trajectory t1 = sample_rollout(*env, params, rng, DecodeMode::Sample);
  const Trajectory t2 = sample_rollout(*env, params, rng, DecodeMode::Sample);
  const Vector sum = trajectory_grad(*env, params, t1) + trajectory_grad(*env, params, t2);
  // Same additions in a different association order: equality to 1e-15 scale.
  Vector again = Vector::Zero(params.size());
  again += trajectory_grad(*env, params, t2);
  again += trajectory_grad(*env, params, t1);
  CHECK((sum - again).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("params JSON round-trips exactly") {
  const Graph g = chain(3);
  const PolicyHyper hyper = hyper_for(g, 2, 4, 2);
  const PolicyParams params = PolicyParams::init(42, hyper);
  const std::string text = params_to_json(params);
  const PolicyParams back = params_from_json(text);
  CHECK((back.flat().array() == params.flat().array()).all());
  CHECK(back.hyper().hidden_dim == 4);
  CHECK(back.hyper().encoder == EncoderKind::MessagePassing);
  CHECK(params_to_json(back) == text);

  CHECK_THROWS_AS(params_from_json("{\"weights\":[1,2]}"), PlacerError);
  CHECK_THROWS_AS(params_from_json("not json"), PlacerError);
}

TEST_CASE("wrong weight count is a dimension error") {
  const Graph g = chain(3);
  const PolicyHyper hyper = hyper_for(g, 2, 4, 1);
  CHECK_THROWS_AS(PolicyParams(hyper, Vector::Zero(3)), PlacerError);
}
