#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "placer/common.hpp"

namespace placer {

enum class GraphKind { Device, Grid };

struct Node {
  int id = 0;
  int op_type = 0;     // categorical index in [0, op_types)
  double compute = 0;  // work units, >= 0
  double memory = 0;   // bytes, >= 0

  bool operator==(const Node&) const = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double bytes = 0;  // tensor/net size, >= 0

  bool operator==(const Edge&) const = default;
};

// Immutable after construction; nodes are indexed by id (nodes[i].id == i
// once validated/normalized).
struct Graph {
  GraphKind kind = GraphKind::Device;
  int op_types = 1;  // T, size of the op-type vocabulary
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  bool operator==(const Graph&) const = default;
};

// Returns an empty list iff all Graph invariants hold; each violation names
// the first offending node/edge index.
std::vector<std::string> validate_graph(const Graph& g);

// Parses and validates a graph JSON file. Throws ParseError on malformed
// input (including unknown keys) and ValidationError on invariant violations.
// Node order in the returned graph is normalized to ascending id.
Graph load_graph(const std::string& path);

// Writes the exact schema load_graph reads. Round-trips bit-exactly.
void save_graph(const Graph& g, const std::string& path);

std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

// Order in which every edge src precedes its dst, ties broken by ascending
// node id. Device graphs only. Throws CycleError on cyclic input.
std::vector<int> topological_order(const Graph& g);

// Undirected neighbor set (union of in- and out-neighbors), sorted and
// deduplicated. Throws IndexError when i is out of range.
std::vector<int> neighbors(const Graph& g, int i);

// neighbors() for every node at once.
std::vector<std::vector<int>> undirected_adjacency(const Graph& g);

enum class GraphFamily { Chain, Layered, RandomDag };

struct GenParams {
  GraphKind kind = GraphKind::Device;
  int op_types = 3;
  double compute_min = 1.0, compute_max = 10.0;
  double memory_min = 1.0, memory_max = 10.0;
  double bytes_min = 1.0, bytes_max = 10.0;
  int layers = 3;          // Layered only
  double edge_prob = 0.3;  // Layered and RandomDag
};

// Deterministic function of (seed, n, family, params). RandomDag edges run
// from lower to higher id, so every generated graph is acyclic.
Graph generate_synthetic(std::uint64_t seed, int n, GraphFamily family,
                         const GenParams& params = {});

}  // namespace placer
