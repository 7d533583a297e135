#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "graphfuse/graph.hpp"

using namespace graphfuse;

TEST_CASE("from_coo builds canonical CSR sorted by (dst, src)") {
  Graph g = from_coo(3, {0, 2, 1}, {1, 1, 2});
  CHECK(g.csr_row_ptr == std::vector<EdgeId>{0, 0, 2, 3});
  CHECK(g.csr_col_idx == std::vector<NodeId>{0, 2, 1});
  CHECK(g.coo_dst == std::vector<NodeId>{1, 1, 2});
  CHECK(g.coo_src == std::vector<NodeId>{0, 2, 1});

  // Same edges in another order give the identical structure.
  Graph g2 = from_coo(3, {1, 0, 2}, {2, 1, 1});
  CHECK(g2.csr_row_ptr == g.csr_row_ptr);
  CHECK(g2.csr_col_idx == g.csr_col_idx);
}

TEST_CASE("from_coo empty graph") {
  Graph g = from_coo(1, {}, {});
  CHECK(g.num_edges == 0);
  CHECK(g.csr_row_ptr == std::vector<EdgeId>{0, 0});
}

TEST_CASE("self-loop-only graph has CSC equal to CSR") {
  Graph g = from_coo(2, {0, 1}, {0, 1});
  CHECK(g.csc_col_ptr == g.csr_row_ptr);
  CHECK(g.csc_row_idx == g.csr_col_idx);
  CHECK(g.csc_edge_perm == std::vector<EdgeId>{0, 1});
}

TEST_CASE("from_coo rejects bad input") {
  CHECK_THROWS_AS(from_coo(2, {0, 0}, {1, 1}), GraphError);
  CHECK_THROWS_AS(from_coo(2, {0}, {2}), GraphError);
  CHECK_THROWS_AS(from_coo(2, {-1}, {0}), GraphError);
}

TEST_CASE("degree_stats") {
  SUBCASE("star graph") {
    Graph g = from_coo(6, {1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    auto s = degree_stats(g);
    CHECK(s.max_degree == 5);
    CHECK(s.avg_degree == doctest::Approx(5.0 / 6.0));
    CHECK(s.min_degree == 0);
  }
  SUBCASE("empty graph") {
    Graph g = from_coo(4, {}, {});
    auto s = degree_stats(g);
    CHECK(s.avg_degree == 0.0);
    CHECK(s.max_degree == 0);
  }
  SUBCASE("citeseer-shaped average") {
    Graph g = gen_random(3327, 9228.0 / 3327.0, 11);
    auto s = degree_stats(g);
    CHECK(s.avg_degree == doctest::Approx(2.8).epsilon(0.05));
  }
}

TEST_CASE("super node threshold") {
  CHECK(super_node_threshold(49152, 4) == 12288);
  CHECK_THROWS_AS(super_node_threshold(49152, 0), GraphError);
  DegreeStats reddit{492.0, 21657, 0};
  DegreeStats citeseer{2.8, 99, 0};
  CHECK(has_super_node(reddit, 49152, 4));
  CHECK_FALSE(has_super_node(citeseer, 49152, 4));
}

TEST_CASE("batch_graphs block-diagonal union") {
  Graph g = from_coo(3, {0, 2, 1}, {1, 1, 2});
  SUBCASE("two copies") {
    Graph b = batch_graphs({g, g});
    CHECK(b.num_nodes == 6);
    CHECK(b.num_edges == 6);
    CHECK(b.csr_row_ptr == std::vector<EdgeId>{0, 0, 2, 3, 3, 5, 6});
    CHECK(b.csr_col_idx == std::vector<NodeId>{0, 2, 1, 3, 5, 4});
  }
  SUBCASE("single graph is identity") {
    Graph b = batch_graphs({g});
    CHECK(b.csr_row_ptr == g.csr_row_ptr);
    CHECK(b.csr_col_idx == g.csr_col_idx);
  }
  SUBCASE("preserves component max degree") {
    Graph hub = gen_super_node(50, 2, 20, 5);
    Graph b = batch_graphs({g, hub, g});
    CHECK(degree_stats(b).max_degree == degree_stats(hub).max_degree);
  }
  CHECK_THROWS_AS(batch_graphs({}), GraphError);
}

TEST_CASE("generators") {
  SUBCASE("deterministic for fixed seed") {
    Graph a = gen_random(100, 5, 42);
    Graph b = gen_random(100, 5, 42);
    CHECK(a.coo_src == b.coo_src);
    CHECK(a.coo_dst == b.coo_dst);
  }
  SUBCASE("zero degree gives empty graph") {
    CHECK(gen_random(10, 0, 3).num_edges == 0);
  }
  SUBCASE("infeasible parameters rejected") {
    CHECK_THROWS_AS(gen_random(4, 4.0, 0), GraphError);
    CHECK_THROWS_AS(gen_super_node(4, 1.0, 5, 0), GraphError);
  }
  SUBCASE("super node hub degree exact") {
    Graph g = gen_super_node(100, 4, 90, 7);
    CHECK(degree_stats(g).max_degree == 90);
    CHECK(g.in_degree(0) == 90);
  }
}

TEST_CASE("round-trip through the COO view") {
  Graph g = gen_random(60, 4, 9);
  Graph r = from_coo(g.num_nodes, g.coo_src, g.coo_dst);
  CHECK(r.csr_row_ptr == g.csr_row_ptr);
  CHECK(r.csr_col_idx == g.csr_col_idx);
  CHECK(r.csc_col_ptr == g.csc_col_ptr);
  CHECK(r.csc_edge_perm == g.csc_edge_perm);
}

TEST_CASE("CSC is the exact transpose") {
  Graph g = gen_random(80, 6, 13);
  std::vector<EdgeId> seen(g.num_edges, 0);
  for (NodeId u = 0; u < g.num_nodes; ++u) {
    for (EdgeId s = g.csc_col_ptr[u]; s < g.csc_col_ptr[u + 1]; ++s) {
      EdgeId e = g.csc_edge_perm[s];
      CHECK(g.coo_src[e] == u);
      CHECK(g.coo_dst[e] == g.csc_row_idx[s]);
      seen[e]++;
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](EdgeId c) { return c == 1; }));
}

TEST_CASE("CSR rows strictly increasing by source") {
  Graph g = gen_random(64, 8, 21);
  for (NodeId v = 0; v < g.num_nodes; ++v)
    for (EdgeId e = g.csr_row_ptr[v] + 1; e < g.csr_row_ptr[v + 1]; ++e)
      CHECK(g.csr_col_idx[e - 1] < g.csr_col_idx[e]);
}

TEST_CASE("text format round trip") {
  Graph g = gen_random(30, 3, 77);
  std::stringstream ss;
  write_graph(ss, g);
  Graph r = read_graph(ss);
  CHECK(r.csr_row_ptr == g.csr_row_ptr);
  CHECK(r.csr_col_idx == g.csr_col_idx);

  std::stringstream bad("3 2\n0 1\n");
  CHECK_THROWS_AS(read_graph(bad), GraphError);
}
