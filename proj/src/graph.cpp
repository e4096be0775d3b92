#include "placer/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "placer/rng.hpp"

#include <json.hpp>

namespace placer {

namespace {

using nlohmann::ordered_json;

std::string index_str(const char* what, int i) {
  std::ostringstream os;
  os << what << " " << i;
  return os.str();
}

void require_keys(const ordered_json& obj, const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required, const std::string& where) {
  if (!obj.is_object())
    throw_error(ErrorCode::ParseError, where + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw_error(ErrorCode::ParseError, where + ": unknown key \"" + item.key() + "\"");
  }
  for (const auto& key : required) {
    if (!obj.contains(key))
      throw_error(ErrorCode::ParseError, where + ": missing key \"" + key + "\"");
  }
}

int get_int(const ordered_json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw_error(ErrorCode::ParseError, where + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

double get_number(const ordered_json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw_error(ErrorCode::ParseError, where + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace

std::vector<std::string> validate_graph(const Graph& g) {
  std::vector<std::string> violations;
  const int n = g.num_nodes();
  if (n < 1) {
    violations.push_back("graph must have at least one node");
    return violations;
  }
  if (g.op_types < 1) violations.push_back("op_types must be >= 1");

  std::vector<int> id_count(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const Node& node = g.nodes[static_cast<std::size_t>(i)];
    if (node.id < 0 || node.id >= n) {
      violations.push_back(index_str("node", i) + ": id " + std::to_string(node.id) +
                           " outside [0, " + std::to_string(n) + ")");
      continue;
    }
    if (++id_count[static_cast<std::size_t>(node.id)] > 1)
      violations.push_back(index_str("node", i) + ": duplicate id " + std::to_string(node.id));
    if (node.op_type < 0 || node.op_type >= g.op_types)
      violations.push_back(index_str("node", i) + ": op_type " + std::to_string(node.op_type) +
                           " outside [0, " + std::to_string(g.op_types) + ")");
    if (!(node.compute >= 0) || !std::isfinite(node.compute))
      violations.push_back(index_str("node", i) + ": compute must be finite and >= 0");
    if (!(node.memory >= 0) || !std::isfinite(node.memory))
      violations.push_back(index_str("node", i) + ": memory must be finite and >= 0");
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edges[static_cast<std::size_t>(e)];
    if (edge.src < 0 || edge.src >= n)
      violations.push_back(index_str("edge", e) + ": src " + std::to_string(edge.src) +
                           " outside [0, " + std::to_string(n) + ")");
    if (edge.dst < 0 || edge.dst >= n)
      violations.push_back(index_str("edge", e) + ": dst " + std::to_string(edge.dst) +
                           " outside [0, " + std::to_string(n) + ")");
    if (edge.src == edge.dst)
      violations.push_back(index_str("edge", e) + ": self-loop at node " +
                           std::to_string(edge.src));
    if (!(edge.bytes >= 0) || !std::isfinite(edge.bytes))
      violations.push_back(index_str("edge", e) + ": bytes must be finite and >= 0");
  }
  return violations;
}

Graph graph_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_error(ErrorCode::ParseError, std::string("malformed graph JSON: ") + e.what());
  }
  require_keys(doc, {"kind", "op_types", "nodes", "edges"},
               {"kind", "op_types", "nodes", "edges"}, "graph");

  Graph g;
  const auto& kind = doc.at("kind");
  if (!kind.is_string() || (kind != "device" && kind != "grid"))
    throw_error(ErrorCode::ParseError, "graph: \"kind\" must be \"device\" or \"grid\"");
  g.kind = kind == "device" ? GraphKind::Device : GraphKind::Grid;
  g.op_types = get_int(doc, "op_types", "graph");

  if (!doc.at("nodes").is_array())
    throw_error(ErrorCode::ParseError, "graph: \"nodes\" must be an array");
  if (!doc.at("edges").is_array())
    throw_error(ErrorCode::ParseError, "graph: \"edges\" must be an array");

  int i = 0;
  for (const auto& item : doc.at("nodes")) {
    const std::string where = index_str("node", i++);
    require_keys(item, {"id", "op", "compute", "memory"}, {"id", "op", "compute", "memory"},
                 where);
    Node node;
    node.id = get_int(item, "id", where);
    node.op_type = get_int(item, "op", where);
    node.compute = get_number(item, "compute", where);
    node.memory = get_number(item, "memory", where);
    g.nodes.push_back(node);
  }
  int e = 0;
  for (const auto& item : doc.at("edges")) {
    const std::string where = index_str("edge", e++);
    require_keys(item, {"src", "dst", "bytes"}, {"src", "dst", "bytes"}, where);
    Edge edge;
    edge.src = get_int(item, "src", where);
    edge.dst = get_int(item, "dst", where);
    edge.bytes = get_number(item, "bytes", where);
    g.edges.push_back(edge);
  }

  auto violations = validate_graph(g);
  if (!violations.empty())
    throw_error(ErrorCode::ValidationError, "invalid graph: " + violations.front());

  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  return g;
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open graph file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return graph_from_json(buffer.str());
}

std::string graph_to_json(const Graph& g) {
  ordered_json doc;
  doc["kind"] = g.kind == GraphKind::Device ? "device" : "grid";
  doc["op_types"] = g.op_types;
  doc["nodes"] = ordered_json::array();
  for (const Node& node : g.nodes) {
    doc["nodes"].push_back(ordered_json{
        {"id", node.id}, {"op", node.op_type}, {"compute", node.compute},
        {"memory", node.memory}});
  }
  doc["edges"] = ordered_json::array();
  for (const Edge& edge : g.edges) {
    doc["edges"].push_back(
        ordered_json{{"src", edge.src}, {"dst", edge.dst}, {"bytes", edge.bytes}});
  }
  return doc.dump(2) + "\n";
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot write graph file: " + path);
  out << graph_to_json(g);
}

std::vector<int> topological_order(const Graph& g) {
  if (g.kind != GraphKind::Device)
    throw_error(ErrorCode::InvalidParams, "topological_order requires a device graph");
  const int n = g.num_nodes();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(n));
  for (const Edge& e : g.edges) {
    ++indegree[static_cast<std::size_t>(e.dst)];
    out_edges[static_cast<std::size_t>(e.src)].push_back(e.dst);
  }
  // Min-heap on node id makes the order unique: ties go to the smallest id.
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.push(i);

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : out_edges[static_cast<std::size_t>(u)])
      if (--indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  if (static_cast<int>(order.size()) != n)
    throw_error(ErrorCode::CycleError, "graph contains a cycle");
  return order;
}

std::vector<int> neighbors(const Graph& g, int i) {
  if (i < 0 || i >= g.num_nodes())
    throw_error(ErrorCode::IndexError,
                "node index " + std::to_string(i) + " outside [0, " +
                    std::to_string(g.num_nodes()) + ")");
  std::set<int> nbrs;
  for (const Edge& e : g.edges) {
    if (e.src == i) nbrs.insert(e.dst);
    if (e.dst == i) nbrs.insert(e.src);
  }
  return {nbrs.begin(), nbrs.end()};
}

std::vector<std::vector<int>> undirected_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(n));
  for (const Edge& e : g.edges) {
    nbrs[static_cast<std::size_t>(e.src)].insert(e.dst);
    nbrs[static_cast<std::size_t>(e.dst)].insert(e.src);
  }
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)].assign(nbrs[static_cast<std::size_t>(i)].begin(),
                                            nbrs[static_cast<std::size_t>(i)].end());
  return out;
}

Graph generate_synthetic(std::uint64_t seed, int n, GraphFamily family, const GenParams& params) {
  if (n < 1) throw_error(ErrorCode::InvalidParams, "node count must be >= 1");
  if (params.op_types < 1) throw_error(ErrorCode::InvalidParams, "op_types must be >= 1");
  if (params.compute_max < params.compute_min || params.memory_max < params.memory_min ||
      params.bytes_max < params.bytes_min)
    throw_error(ErrorCode::InvalidParams, "empty uniform range");
  if (family == GraphFamily::Layered && (params.layers < 1 || params.layers > n))
    throw_error(ErrorCode::InvalidParams,
                "layers must be in [1, n]; got " + std::to_string(params.layers));
  if (params.edge_prob < 0 || params.edge_prob > 1)
    throw_error(ErrorCode::InvalidParams, "edge_prob must be in [0, 1]");

  Rng rng(seed);
  Graph g;
  g.kind = params.kind;
  g.op_types = params.op_types;

  // Draw order is fixed: node attributes in id order, then edges in
  // lexicographic (src, dst) order with bytes drawn on edge creation.
  g.nodes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Node node;
    node.id = i;
    node.op_type = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.op_types)));
    node.compute = rng.uniform(params.compute_min, params.compute_max);
    node.memory = rng.uniform(params.memory_min, params.memory_max);
    g.nodes.push_back(node);
  }

  auto add_edge = [&](int src, int dst) {
    g.edges.push_back(Edge{src, dst, rng.uniform(params.bytes_min, params.bytes_max)});
  };

  switch (family) {
    case GraphFamily::Chain:
      for (int i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
      break;
    case GraphFamily::Layered: {
      // Consecutive id blocks, the first n % layers blocks one node larger.
      const int layers = params.layers;
      std::vector<int> layer_start(static_cast<std::size_t>(layers) + 1, 0);
      int base = n / layers, extra = n % layers;
      for (int l = 0; l < layers; ++l)
        layer_start[static_cast<std::size_t>(l) + 1] =
            layer_start[static_cast<std::size_t>(l)] + base + (l < extra ? 1 : 0);
      for (int l = 0; l + 1 < layers; ++l) {
        for (int a = layer_start[static_cast<std::size_t>(l)];
             a < layer_start[static_cast<std::size_t>(l) + 1]; ++a) {
          for (int b = layer_start[static_cast<std::size_t>(l) + 1];
               b < layer_start[static_cast<std::size_t>(l) + 2]; ++b) {
            if (rng.uniform() < params.edge_prob) add_edge(a, b);
          }
        }
      }
      break;
    }
    case GraphFamily::RandomDag:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (rng.uniform() < params.edge_prob) add_edge(i, j);
      break;
  }
  return g;
}

}  // namespace placer
