#include "graphfuse/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace graphfuse {

namespace {

// Pack (dst,src) for sorting and duplicate detection.
struct EdgePair {
  NodeId dst;
  NodeId src;
  bool operator<(const EdgePair& o) const {
    return dst != o.dst ? dst < o.dst : src < o.src;
  }
  bool operator==(const EdgePair& o) const { return dst == o.dst && src == o.src; }
};

Graph build_from_sorted(NodeId n, std::vector<EdgePair> edges) {
  Graph g;
  g.num_nodes = n;
  g.num_edges = static_cast<EdgeId>(edges.size());
  const EdgeId e = g.num_edges;

  g.csr_row_ptr.assign(static_cast<size_t>(n) + 1, 0);
  g.csr_col_idx.resize(e);
  g.coo_dst.resize(e);
  g.coo_src.resize(e);
  for (EdgeId i = 0; i < e; ++i) {
    g.csr_row_ptr[edges[i].dst + 1]++;
    g.csr_col_idx[i] = edges[i].src;
    g.coo_dst[i] = edges[i].dst;
    g.coo_src[i] = edges[i].src;
  }
  for (NodeId v = 0; v < n; ++v) g.csr_row_ptr[v + 1] += g.csr_row_ptr[v];

  // Transpose: bucket CSR edges by source, keeping (dst, edge-id) sorted.
  g.csc_col_ptr.assign(static_cast<size_t>(n) + 1, 0);
  g.csc_row_idx.resize(e);
  g.csc_edge_perm.resize(e);
  for (EdgeId i = 0; i < e; ++i) g.csc_col_ptr[g.coo_src[i] + 1]++;
  for (NodeId u = 0; u < n; ++u) g.csc_col_ptr[u + 1] += g.csc_col_ptr[u];
  std::vector<EdgeId> cursor(g.csc_col_ptr.begin(), g.csc_col_ptr.end() - 1);
  // Iterating edges in (dst,src) order keeps each CSC column sorted by dst.
  for (EdgeId i = 0; i < e; ++i) {
    EdgeId slot = cursor[g.coo_src[i]]++;
    g.csc_row_idx[slot] = g.coo_dst[i];
    g.csc_edge_perm[slot] = i;
  }
  return g;
}

} // namespace

Graph from_coo(NodeId num_nodes, const std::vector<NodeId>& src,
               const std::vector<NodeId>& dst) {
  if (src.size() != dst.size())
    throw GraphError("from_coo: src/dst length mismatch");
  std::vector<EdgePair> edges(src.size());
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i] < 0 || src[i] >= num_nodes || dst[i] < 0 || dst[i] >= num_nodes)
      throw GraphError("from_coo: node id out of range for edge (" +
                       std::to_string(src[i]) + "," + std::to_string(dst[i]) + ")");
    edges[i] = {dst[i], src[i]};
  }
  std::sort(edges.begin(), edges.end());
  auto dup = std::adjacent_find(edges.begin(), edges.end());
  if (dup != edges.end())
    throw GraphError("from_coo: duplicate edge (" + std::to_string(dup->src) +
                     "," + std::to_string(dup->dst) + ")");
  return build_from_sorted(num_nodes, std::move(edges));
}

DegreeStats degree_stats(const Graph& g) {
  DegreeStats s;
  if (g.num_nodes == 0) return s;
  s.avg_degree = static_cast<double>(g.num_edges) / static_cast<double>(g.num_nodes);
  s.min_degree = g.num_nodes > 0 ? g.in_degree(0) : 0;
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    NodeId deg = g.in_degree(v);
    s.max_degree = std::max(s.max_degree, deg);
    s.min_degree = std::min(s.min_degree, deg);
  }
  return s;
}

std::int64_t super_node_threshold(std::int64_t shared_mem_bytes,
                                  std::int64_t dtype_bytes) {
  if (dtype_bytes <= 0) throw GraphError("super_node_threshold: dtype_bytes must be > 0");
  return shared_mem_bytes / dtype_bytes;
}

bool has_super_node(const DegreeStats& stats, std::int64_t shared_mem_bytes,
                    std::int64_t dtype_bytes) {
  return stats.max_degree >= super_node_threshold(shared_mem_bytes, dtype_bytes);
}

Graph batch_graphs(const std::vector<Graph>& gs) {
  if (gs.empty()) throw GraphError("batch_graphs: empty list");
  std::vector<NodeId> src, dst;
  NodeId n = 0;
  for (const Graph& g : gs) {
    for (EdgeId e = 0; e < g.num_edges; ++e) {
      src.push_back(g.coo_src[e] + n);
      dst.push_back(g.coo_dst[e] + n);
    }
    n += g.num_nodes;
  }
  return from_coo(n, src, dst);
}

namespace {

std::uint64_t pack(NodeId s, NodeId d, NodeId n) {
  return static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(n) +
         static_cast<std::uint64_t>(d);
}

} // namespace

Graph gen_random(NodeId n, double avg_degree, std::uint64_t seed) {
  if (n <= 0) throw GraphError("gen_random: n must be positive");
  if (avg_degree < 0 || avg_degree >= static_cast<double>(n))
    throw GraphError("gen_random: avg_degree must be in [0, n)");
  EdgeId target = static_cast<EdgeId>(avg_degree * static_cast<double>(n) + 0.5);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::unordered_set<std::uint64_t> seen;
  std::vector<NodeId> src, dst;
  src.reserve(target);
  dst.reserve(target);
  while (static_cast<EdgeId>(src.size()) < target) {
    NodeId s = pick(rng), d = pick(rng);
    if (seen.insert(pack(s, d, n)).second) {
      src.push_back(s);
      dst.push_back(d);
    }
  }
  return from_coo(n, src, dst);
}

Graph gen_super_node(NodeId n, double avg_degree, NodeId hub_degree,
                     std::uint64_t seed) {
  if (n <= 0) throw GraphError("gen_super_node: n must be positive");
  if (hub_degree > n || hub_degree < 1)
    throw GraphError("gen_super_node: hub_degree must be in [1, n]");
  if (avg_degree < 0 || avg_degree >= static_cast<double>(n))
    throw GraphError("gen_super_node: avg_degree must be in [0, n)");

  const NodeId hub = 0;
  std::mt19937_64 rng(seed);
  std::vector<NodeId> src, dst;
  std::unordered_set<std::uint64_t> seen;
  // Hub in-edges: hub_degree distinct sources.
  std::vector<NodeId> sources(n);
  for (NodeId i = 0; i < n; ++i) sources[i] = i;
  std::shuffle(sources.begin(), sources.end(), rng);
  for (NodeId i = 0; i < hub_degree; ++i) {
    src.push_back(sources[i]);
    dst.push_back(hub);
    seen.insert(pack(sources[i], hub, n));
  }
  // Remaining edges avoid the hub destination and keep every other node's
  // in-degree strictly below hub_degree.
  EdgeId target = static_cast<EdgeId>(avg_degree * static_cast<double>(n) + 0.5);
  std::vector<NodeId> in_deg(n, 0);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  EdgeId attempts = 0, max_attempts = 100 * (target + 1);
  while (static_cast<EdgeId>(src.size()) < target && attempts++ < max_attempts) {
    NodeId s = pick(rng), d = pick(rng);
    if (d == hub || in_deg[d] + 1 >= hub_degree) continue;
    if (seen.insert(pack(s, d, n)).second) {
      src.push_back(s);
      dst.push_back(d);
      in_deg[d]++;
    }
  }
  return from_coo(n, src, dst);
}

void write_graph(std::ostream& os, const Graph& g) {
  os << g.num_nodes << " " << g.num_edges << "\n";
  for (EdgeId e = 0; e < g.num_edges; ++e)
    os << g.coo_src[e] << " " << g.coo_dst[e] << "\n";
}

Graph read_graph(std::istream& is) {
  NodeId n = 0;
  EdgeId e = 0;
  if (!(is >> n >> e)) throw GraphError("read_graph: malformed header");
  std::vector<NodeId> src(e), dst(e);
  for (EdgeId i = 0; i < e; ++i)
    if (!(is >> src[i] >> dst[i]))
      throw GraphError("read_graph: truncated edge list at line " + std::to_string(i + 2));
  return from_coo(n, src, dst);
}

void save_graph(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw GraphError("save_graph: cannot open " + path);
  write_graph(os, g);
}

Graph load_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw GraphError("load_graph: cannot open " + path);
  return read_graph(is);
}

} // namespace graphfuse
