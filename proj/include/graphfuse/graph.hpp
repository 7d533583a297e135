#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphfuse {

using NodeId = std::int64_t;
using EdgeId = std::int64_t;

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable sparse adjacency in hybrid CSR + COO + CSC form.
///
/// CSR rows are destination nodes listing their in-neighbors, sorted by
/// source id. Edge ids are CSR positions; COO arrays are in CSR edge order.
/// CSC is the transpose view: column u lists the edges with source u, and
/// csc_edge_perm maps each CSC position back to its CSR edge id.
struct Graph {
  NodeId num_nodes = 0;
  EdgeId num_edges = 0;

  std::vector<EdgeId> csr_row_ptr;   // length N+1
  std::vector<NodeId> csr_col_idx;   // length E, source node of each edge
  std::vector<NodeId> coo_dst;       // length E
  std::vector<NodeId> coo_src;       // length E
  std::vector<EdgeId> csc_col_ptr;   // length N+1
  std::vector<NodeId> csc_row_idx;   // length E, destination node per CSC slot
  std::vector<EdgeId> csc_edge_perm; // CSC position -> CSR edge id

  NodeId in_degree(NodeId v) const { return csr_row_ptr[v + 1] - csr_row_ptr[v]; }
  NodeId out_degree(NodeId u) const { return csc_col_ptr[u + 1] - csc_col_ptr[u]; }
};

struct DegreeStats {
  double avg_degree = 0.0;
  NodeId max_degree = 0;
  NodeId min_degree = 0;
};

/// Build a canonical Graph from an edge list. Rejects out-of-range ids and
/// duplicate (src,dst) pairs; output is independent of input edge order.
Graph from_coo(NodeId num_nodes, const std::vector<NodeId>& src,
               const std::vector<NodeId>& dst);

DegreeStats degree_stats(const Graph& g);

/// Degree above which a row's edge scalars no longer fit in shared memory.
std::int64_t super_node_threshold(std::int64_t shared_mem_bytes,
                                  std::int64_t dtype_bytes);

bool has_super_node(const DegreeStats& stats, std::int64_t shared_mem_bytes,
                    std::int64_t dtype_bytes);

/// Block-diagonal union with node-id offsets; no cross-graph edges.
Graph batch_graphs(const std::vector<Graph>& gs);

/// Random simple digraph with round(n * avg_degree) distinct edges.
Graph gen_random(NodeId n, double avg_degree, std::uint64_t seed);

/// Like gen_random, but node 0 has in-degree exactly hub_degree and every
/// other node's in-degree stays below it.
Graph gen_super_node(NodeId n, double avg_degree, NodeId hub_degree,
                     std::uint64_t seed);

// Plain text format: line 1 "N E", then E lines "src dst" in CSR edge order.
void write_graph(std::ostream& os, const Graph& g);
Graph read_graph(std::istream& is);
void save_graph(const std::string& path, const Graph& g);
Graph load_graph(const std::string& path);

} // namespace graphfuse
