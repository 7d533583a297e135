#include <doctest.h>

#include <cmath>
#include <limits>

#include "graphfuse/kernels.hpp"

using namespace graphfuse;

namespace {

template <typename T>
double max_rel_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  double worst = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = std::abs(static_cast<double>(a.data[i]) - b.data[i]);
    double scale = std::max({std::abs(static_cast<double>(a.data[i])),
                             std::abs(static_cast<double>(b.data[i])), 1.0});
    worst = std::max(worst, d / scale);
  }
  return worst;
}

} // namespace

TEST_CASE("sddmm_dot") {
  Graph g = gen_random(16, 4, 3);
  SUBCASE("all-ones inputs give the feature dim") {
    DenseMatrix<double> ones(16, 2, 1.0);
    auto s = sddmm_dot(g, ones, ones, 1.0);
    for (EdgeId e = 0; e < g.num_edges; ++e) CHECK(s[e] == doctest::Approx(2.0));
  }
  SUBCASE("orthogonal rows light up self-loops only") {
    Graph loops = from_coo(4, {0, 1, 2, 0}, {0, 1, 2, 1});
    DenseMatrix<double> Q(4, 4);
    for (int i = 0; i < 4; ++i) Q.at(i, i) = static_cast<double>(i + 1);
    auto s = sddmm_dot(loops, Q, Q, 2.0);
    CHECK(s[0] == doctest::Approx(2.0 * 1.0)); // edge 0->0
    CHECK(s[1] == doctest::Approx(0.0));       // edge 0->1
    CHECK(s[2] == doctest::Approx(2.0 * 4.0)); // edge 1->1
    CHECK(s[3] == doctest::Approx(2.0 * 9.0)); // edge 2->2
  }
  SUBCASE("matches the dense masked product") {
    auto Q = random_matrix<double>(16, 4, 1);
    auto K = random_matrix<double>(16, 4, 2);
    auto s = sddmm_dot(g, Q, K, 0.7);
    for (EdgeId e = 0; e < g.num_edges; ++e) {
      double acc = 0;
      for (int c = 0; c < 4; ++c) acc += Q.at(g.coo_src[e], c) * K.at(g.coo_dst[e], c);
      CHECK(s[e] == doctest::Approx(0.7 * acc));
    }
  }
  SUBCASE("bilinearity in Q") {
    auto Q = random_matrix<double>(16, 4, 5);
    auto K = random_matrix<double>(16, 4, 6);
    auto s1 = sddmm_dot(g, Q, K, 1.0);
    for (double& x : Q.data) x *= 3.0;
    auto s3 = sddmm_dot(g, Q, K, 1.0);
    for (EdgeId e = 0; e < g.num_edges; ++e)
      CHECK(s3[e] == doctest::Approx(3.0 * s1[e]));
  }
  SUBCASE("dimension mismatch") {
    DenseMatrix<double> Q(16, 4), K(16, 3);
    CHECK_THROWS_AS(sddmm_dot(g, Q, K, 1.0), KernelError);
  }
}

TEST_CASE("sddmm_add") {
  Graph g = gen_random(16, 4, 4);
  SUBCASE("zeros stay zero") {
    DenseMatrix<double> z(16, 1);
    auto s = sddmm_add(g, z, z, 0.2);
    for (EdgeId e = 0; e < g.num_edges; ++e) CHECK(s[e] == 0.0);
  }
  SUBCASE("leaky slope on the negative side") {
    Graph one = from_coo(2, {0}, {1});
    DenseMatrix<double> el(2, 1), er(2, 1);
    el.data[0] = 1.0;
    er.data[1] = -3.0;
    auto s = sddmm_add(one, el, er, 0.2);
    CHECK(s[0] == doctest::Approx(-0.4));
  }
  SUBCASE("matches dense broadcast + LeakyReLU") {
    auto el = random_matrix<double>(16, 1, 7);
    auto er = random_matrix<double>(16, 1, 8);
    auto s = sddmm_add(g, el, er, 0.3);
    for (EdgeId e = 0; e < g.num_edges; ++e) {
      double x = el.data[g.coo_src[e]] + er.data[g.coo_dst[e]];
      CHECK(s[e] == doctest::Approx(x >= 0 ? x : 0.3 * x));
    }
  }
}

TEST_CASE("l2_normalize_rows") {
  SUBCASE("3-4-5 triangle") {
    DenseMatrix<double> X(1, 2);
    X.at(0, 0) = 3;
    X.at(0, 1) = 4;
    auto Y = l2_normalize_rows(X, 1e-12);
    CHECK(Y.at(0, 0) == doctest::Approx(0.6));
    CHECK(Y.at(0, 1) == doctest::Approx(0.8));
  }
  SUBCASE("zero row stays zero") {
    DenseMatrix<double> X(1, 3);
    auto Y = l2_normalize_rows(X, 1e-12);
    for (double v : Y.data) CHECK(v == 0.0);
  }
  SUBCASE("random rows land on the unit sphere") {
    auto X = random_matrix<double>(10, 6, 31);
    auto Y = l2_normalize_rows(X, 1e-12);
    for (int r = 0; r < 10; ++r) {
      double sq = 0;
      for (int c = 0; c < 6; ++c) sq += Y.at(r, c) * Y.at(r, c);
      CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(l2_normalize_rows(DenseMatrix<double>(1, 1), 0.0), KernelError);
}

TEST_CASE("edge_softmax") {
  SUBCASE("single-edge row normalizes to one") {
    Graph g = from_coo(2, {0}, {1});
    EdgeScalars<double> s(1);
    s[0] = 123.0;
    CHECK(edge_softmax(g, s)[0] == doctest::Approx(1.0));
  }
  SUBCASE("symmetric row splits evenly") {
    Graph g = from_coo(3, {0, 1}, {2, 2});
    EdgeScalars<double> s(2);
    auto p = edge_softmax(g, s);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("large f32 inputs stay finite") {
    Graph g = from_coo(3, {0, 1}, {2, 2});
    EdgeScalars<float> s(2);
    s[0] = 1000.0f;
    s[1] = 1001.0f;
    auto p = edge_softmax(g, s);
    CHECK(std::isfinite(p[0]));
    CHECK(std::isfinite(p[1]));
    // f64 oracle: exp(d)/(1+exp(d)) with d = 1.
    double d = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + d)).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(d / (1.0 + d)).epsilon(1e-5));
  }
  SUBCASE("rows sum to one within 4*eps*len") {
    Graph g = gen_random(200, 8, 12);
    auto vals = random_matrix<float>(g.num_edges, 1, 5, -50.f, 50.f);
    EdgeScalars<float> s(g.num_edges);
    s.values = vals.data;
    auto p = edge_softmax(g, s);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
      EdgeId b = g.csr_row_ptr[v], e = g.csr_row_ptr[v + 1];
      if (b == e) continue;
      float sum = 0;
      for (EdgeId i = b; i < e; ++i) sum += p[i];
      float tol = 4 * std::numeric_limits<float>::epsilon() * static_cast<float>(e - b);
      CHECK(std::abs(sum - 1.0f) <= tol);
    }
  }
  SUBCASE("shift invariance per row") {
    Graph g = gen_random(50, 5, 19);
    auto vals = random_matrix<double>(g.num_edges, 1, 6);
    EdgeScalars<double> s(g.num_edges), shifted(g.num_edges);
    s.values = vals.data;
    for (NodeId v = 0; v < g.num_nodes; ++v)
      for (EdgeId i = g.csr_row_ptr[v]; i < g.csr_row_ptr[v + 1]; ++i)
        shifted[i] = s[i] + static_cast<double>(v) * 3.5;
    auto p = edge_softmax(g, s);
    auto q = edge_softmax(g, shifted);
    for (EdgeId e = 0; e < g.num_edges; ++e)
      CHECK(q[e] == doctest::Approx(p[e]).epsilon(1e-12));
  }
  SUBCASE("NaN propagates and is flagged by the validator") {
    Graph g = from_coo(2, {0}, {1});
    EdgeScalars<double> s(1);
    s[0] = std::numeric_limits<double>::quiet_NaN();
    auto p = edge_softmax(g, s);
    CHECK(!all_finite(p));
  }
}

TEST_CASE("spmm") {
  SUBCASE("self-loop identity") {
    Graph g = from_coo(3, {0, 1, 2}, {0, 1, 2});
    auto V = random_matrix<double>(3, 4, 2);
    EdgeScalars<double> p(3, 1.0);
    auto O = spmm(g, p, V);
    CHECK(max_rel_diff(O, V) == doctest::Approx(0.0));
  }
  SUBCASE("half weights take the mean") {
    Graph g = from_coo(3, {0, 1}, {2, 2});
    auto V = random_matrix<double>(3, 2, 3);
    EdgeScalars<double> p(2, 0.5);
    auto O = spmm(g, p, V);
    CHECK(O.at(2, 0) == doctest::Approx(0.5 * (V.at(0, 0) + V.at(1, 0))));
    CHECK(O.at(2, 1) == doctest::Approx(0.5 * (V.at(0, 1) + V.at(1, 1))));
    CHECK(O.at(0, 0) == 0.0); // empty row
  }
  SUBCASE("convex combination bounds the output") {
    Graph g = gen_random(40, 6, 8);
    auto V = random_matrix<double>(40, 3, 4);
    auto s = sddmm_dot(g, V, V, 1.0);
    auto p = edge_softmax(g, s);
    auto O = spmm(g, p, V);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
      double bound = 0;
      for (EdgeId e = g.csr_row_ptr[v]; e < g.csr_row_ptr[v + 1]; ++e)
        for (int c = 0; c < 3; ++c)
          bound = std::max(bound, std::abs(V.at(g.coo_src[e], c)));
      for (int c = 0; c < 3; ++c)
        CHECK(std::abs(O.at(v, c)) <= bound + 1e-12);
    }
  }
}

TEST_CASE("dense oracle equals the sparse pipeline") {
  SUBCASE("N=1 self loop returns V") {
    Graph g = from_coo(1, {0}, {0});
    auto V = random_matrix<double>(1, 5, 6);
    auto [sd, O] = dense_oracle_forward(g, V, V, V, SddmmKind::dot());
    CHECK(max_rel_diff(O, V) == doctest::Approx(0.0));
  }
  SUBCASE("empty graph returns zeros") {
    Graph g = from_coo(4, {}, {});
    DenseMatrix<double> V = random_matrix<double>(4, 3, 1);
    auto [sd, O] = dense_oracle_forward(g, V, V, V, SddmmKind::dot());
    for (double v : O.data) CHECK(v == 0.0);
  }
  SUBCASE("randomized equivalence across kinds and sizes") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      NodeId n = 16 + static_cast<NodeId>(seed) * 60; // up to 436
      Graph g = gen_random(n, 5, seed);
      int d = 4;
      auto V = random_matrix<double>(n, d, seed + 10);
      SddmmKind kind = seed % 3 == 0   ? SddmmKind::dot(0.5)
                       : seed % 3 == 1 ? SddmmKind::dot(1.0, true)
                                       : SddmmKind::add(0.2);
      DenseMatrix<double> Q, K;
      if (kind.variant == SddmmVariant::Add) {
        Q = random_matrix<double>(n, 1, seed + 11);
        K = random_matrix<double>(n, 1, seed + 12);
      } else {
        Q = random_matrix<double>(n, d, seed + 11);
        K = random_matrix<double>(n, d, seed + 12);
      }
      auto O_sparse = spmm(g, edge_softmax(g, sddmm(g, Q, K, kind)), V);
      auto [sd, O_dense] = dense_oracle_forward(g, Q, K, V, kind);
      CHECK(max_rel_diff(O_sparse, O_dense) < 1e-12);
    }
  }
  SUBCASE("oversize N rejected") {
    Graph g = gen_random(4097, 0.1, 1);
    DenseMatrix<double> V(4097, 1);
    CHECK_THROWS_AS(dense_oracle_forward(g, V, V, V, SddmmKind::dot()), KernelError);
  }
}
