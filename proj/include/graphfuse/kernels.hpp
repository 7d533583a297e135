#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "graphfuse/dense.hpp"
#include "graphfuse/graph.hpp"

// Unfused reference kernels. These define correctness for the fused engine:
// every execution mode must reproduce their outputs within dtype tolerance.
// Row reductions run in fixed left-to-right CSR edge order.

namespace graphfuse {

/// s_uv = scale * <q_u, k_v> for edge u -> v (query at source, key at dest).
template <typename T>
EdgeScalars<T> sddmm_dot(const Graph& g, const DenseMatrix<T>& Q,
                         const DenseMatrix<T>& K, T scale) {
  if (Q.rows != g.num_nodes || K.rows != g.num_nodes || Q.cols != K.cols)
    throw KernelError("sddmm_dot: dimension mismatch");
  const std::int64_t d = Q.cols;
  EdgeScalars<T> s(g.num_edges);
  for (EdgeId e = 0; e < g.num_edges; ++e) {
    const T* q = Q.row(g.coo_src[e]);
    const T* k = K.row(g.coo_dst[e]);
    T acc = 0;
    for (std::int64_t c = 0; c < d; ++c) acc += q[c] * k[c];
    s[e] = scale * acc;
  }
  return s;
}

/// s_uv = LeakyReLU(el_u + er_v) with the GAT per-node scalar convention.
template <typename T>
EdgeScalars<T> sddmm_add(const Graph& g, const DenseMatrix<T>& el,
                         const DenseMatrix<T>& er, T leaky_slope) {
  if (el.rows != g.num_nodes || er.rows != g.num_nodes || el.cols != 1 || er.cols != 1)
    throw KernelError("sddmm_add: el/er must be N x 1");
  EdgeScalars<T> s(g.num_edges);
  for (EdgeId e = 0; e < g.num_edges; ++e) {
    T x = el.data[g.coo_src[e]] + er.data[g.coo_dst[e]];
    s[e] = x >= T(0) ? x : leaky_slope * x;
  }
  return s;
}

/// Divides each row by max(||row||_2, eps); zero rows stay zero.
template <typename T>
DenseMatrix<T> l2_normalize_rows(const DenseMatrix<T>& X, T eps) {
  if (eps <= T(0)) throw KernelError("l2_normalize_rows: eps must be > 0");
  DenseMatrix<T> out(X.rows, X.cols);
  for (std::int64_t r = 0; r < X.rows; ++r) {
    T sq = 0;
    for (std::int64_t c = 0; c < X.cols; ++c) sq += X.at(r, c) * X.at(r, c);
    T norm = std::max(std::sqrt(sq), eps);
    for (std::int64_t c = 0; c < X.cols; ++c) out.at(r, c) = X.at(r, c) / norm;
  }
  return out;
}

/// Two-round stable softmax over each destination row: subtract the row max,
/// exponentiate, normalize by the row sum. Empty rows produce nothing.
template <typename T>
EdgeScalars<T> edge_softmax(const Graph& g, const EdgeScalars<T>& s) {
  if (s.size() != g.num_edges) throw KernelError("edge_softmax: length mismatch");
  EdgeScalars<T> p(g.num_edges);
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    EdgeId b = g.csr_row_ptr[v], e = g.csr_row_ptr[v + 1];
    if (b == e) continue;
    T zmax = s[b];
    for (EdgeId i = b + 1; i < e; ++i) zmax = std::max(zmax, s[i]);
    T zsum = 0;
    for (EdgeId i = b; i < e; ++i) {
      p[i] = std::exp(s[i] - zmax);
      zsum += p[i];
    }
    for (EdgeId i = b; i < e; ++i) p[i] /= zsum;
  }
  return p;
}

/// O[v,:] = sum over in-edges e=(u->v) of p_e * V[u,:]; empty rows are zero.
template <typename T>
DenseMatrix<T> spmm(const Graph& g, const EdgeScalars<T>& p,
                    const DenseMatrix<T>& V) {
  if (V.rows != g.num_nodes) throw KernelError("spmm: V.rows must equal N");
  if (p.size() != g.num_edges) throw KernelError("spmm: P length mismatch");
  DenseMatrix<T> out(g.num_nodes, V.cols);
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    EdgeId b = g.csr_row_ptr[v], e = g.csr_row_ptr[v + 1];
    T* orow = out.row(v);
    // Features-outer loop matches the engine's fixed reduction order.
    for (std::int64_t c = 0; c < V.cols; ++c) {
      T acc = 0;
      for (EdgeId i = b; i < e; ++i) acc += p[i] * V.row(g.coo_src[i])[c];
      orow[c] = acc;
    }
  }
  return out;
}

/// Applies the SDDMM variant selected by `kind`, including the optional L2
/// normalization of Q and K. For Add, Q and K carry el and er.
template <typename T>
EdgeScalars<T> sddmm(const Graph& g, const DenseMatrix<T>& Q,
                     const DenseMatrix<T>& K, const SddmmKind& kind) {
  if (kind.variant == SddmmVariant::Add)
    return sddmm_add(g, Q, K, static_cast<T>(kind.leaky_slope));
  if (kind.l2_normalize_inputs) {
    auto Qn = l2_normalize_rows(Q, static_cast<T>(1e-12));
    auto Kn = l2_normalize_rows(K, static_cast<T>(1e-12));
    return sddmm_dot(g, Qn, Kn, static_cast<T>(kind.scale));
  }
  return sddmm_dot(g, Q, K, static_cast<T>(kind.scale));
}

/// Dense test oracle: materializes the masked N x N score matrix, applies a
/// row softmax over the mask support, and multiplies densely. S_dense[v][u]
/// holds the score of edge u -> v.
template <typename T>
std::pair<DenseMatrix<T>, DenseMatrix<T>> dense_oracle_forward(
    const Graph& g, const DenseMatrix<T>& Q, const DenseMatrix<T>& K,
    const DenseMatrix<T>& V, const SddmmKind& kind) {
  if (g.num_nodes > 4096) throw KernelError("dense_oracle_forward: N > 4096");
  const NodeId n = g.num_nodes;

  DenseMatrix<T> Qe = Q, Ke = K;
  if (kind.variant == SddmmVariant::Dot && kind.l2_normalize_inputs) {
    Qe = l2_normalize_rows(Q, static_cast<T>(1e-12));
    Ke = l2_normalize_rows(K, static_cast<T>(1e-12));
  }

  DenseMatrix<T> sdense(n, n);
  std::vector<char> mask(static_cast<size_t>(n) * n, 0);
  for (EdgeId e = 0; e < g.num_edges; ++e) {
    NodeId u = g.coo_src[e], v = g.coo_dst[e];
    mask[v * n + u] = 1;
    if (kind.variant == SddmmVariant::Dot) {
      T acc = 0;
      for (std::int64_t c = 0; c < Qe.cols; ++c) acc += Qe.at(u, c) * Ke.at(v, c);
      sdense.at(v, u) = static_cast<T>(kind.scale) * acc;
    } else {
      T x = Qe.data[u] + Ke.data[v];
      sdense.at(v, u) = x >= T(0) ? x : static_cast<T>(kind.leaky_slope) * x;
    }
  }

  DenseMatrix<T> O(n, V.cols);
  for (NodeId v = 0; v < n; ++v) {
    T zmax = -std::numeric_limits<T>::infinity();
    for (NodeId u = 0; u < n; ++u)
      if (mask[v * n + u]) zmax = std::max(zmax, sdense.at(v, u));
    if (zmax == -std::numeric_limits<T>::infinity()) continue; // empty row
    T zsum = 0;
    for (NodeId u = 0; u < n; ++u)
      if (mask[v * n + u]) zsum += std::exp(sdense.at(v, u) - zmax);
    for (NodeId u = 0; u < n; ++u) {
      if (!mask[v * n + u]) continue;
      T p = std::exp(sdense.at(v, u) - zmax) / zsum;
      for (std::int64_t c = 0; c < V.cols; ++c) O.at(v, c) += p * V.at(u, c);
    }
  }
  return {std::move(sdense), std::move(O)};
}

} // namespace graphfuse
