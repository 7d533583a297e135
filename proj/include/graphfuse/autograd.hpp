#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "graphfuse/counters.hpp"
#include "graphfuse/dense.hpp"
#include "graphfuse/engine.hpp"
#include "graphfuse/graph.hpp"
#include "graphfuse/kernels.hpp"
#include "graphfuse/schedule.hpp"

namespace graphfuse {

/// Gradients of the sparse attention pipeline. dQ/dK mirror the shapes of
/// the forward Q/K inputs: N x d for dot-SDDMM, N x 1 (del/der) for
/// add-SDDMM.
template <typename T>
struct GradBundle {
  DenseMatrix<T> dQ, dK, dV;
  EdgeScalars<T> dS, dP;
};

template <typename T>
struct BackwardResult {
  GradBundle<T> grads;
  ExecCounters counters;
};

/// dP[e] = <dO[dst], V[src]> (an SDDMM); dV = P^T * dO (an SpMM over the
/// CSC view, one worker per source row).
template <typename T>
std::pair<EdgeScalars<T>, DenseMatrix<T>> spmm_backward(
    const Graph& g, const EdgeScalars<T>& P, const DenseMatrix<T>& V,
    const DenseMatrix<T>& dO) {
  if (dO.rows != g.num_nodes || dO.cols != V.cols)
    throw KernelError("spmm_backward: dO shape mismatch");
  const std::int64_t d = V.cols;
  EdgeScalars<T> dP(g.num_edges);
  for (EdgeId e = 0; e < g.num_edges; ++e) {
    const T* go = dO.row(g.coo_dst[e]);
    const T* vr = V.row(g.coo_src[e]);
    T acc = 0;
    for (std::int64_t c = 0; c < d; ++c) acc += go[c] * vr[c];
    dP[e] = acc;
  }
  DenseMatrix<T> dV(g.num_nodes, d);
  for (NodeId u = 0; u < g.num_nodes; ++u) {
    T* dvr = dV.row(u);
    for (EdgeId s = g.csc_col_ptr[u]; s < g.csc_col_ptr[u + 1]; ++s) {
      EdgeId e = g.csc_edge_perm[s];
      const T* go = dO.row(g.csc_row_idx[s]);
      for (std::int64_t c = 0; c < d; ++c) dvr[c] += P[e] * go[c];
    }
  }
  return {std::move(dP), std::move(dV)};
}

/// Softmax Jacobian: dS[e] = P[e] * (dP[e] - sum_row P * dP). Each
/// non-empty row's outputs sum to zero.
template <typename T>
EdgeScalars<T> softmax_backward(const Graph& g, const EdgeScalars<T>& P,
                                const EdgeScalars<T>& dP) {
  EdgeScalars<T> dS(g.num_edges);
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    EdgeId b = g.csr_row_ptr[v], e = g.csr_row_ptr[v + 1];
    T t = 0;
    for (EdgeId i = b; i < e; ++i) t += P[i] * dP[i];
    for (EdgeId i = b; i < e; ++i) dS[i] = P[i] * (dP[i] - t);
  }
  return dS;
}

/// Row gradient of x -> x / max(||x||, eps).
template <typename T>
DenseMatrix<T> l2_normalize_backward(const DenseMatrix<T>& X,
                                     const DenseMatrix<T>& dY, T eps) {
  DenseMatrix<T> dX(X.rows, X.cols);
  for (std::int64_t r = 0; r < X.rows; ++r) {
    T sq = 0;
    for (std::int64_t c = 0; c < X.cols; ++c) sq += X.at(r, c) * X.at(r, c);
    T norm = std::sqrt(sq);
    if (norm <= eps) {
      for (std::int64_t c = 0; c < X.cols; ++c) dX.at(r, c) = dY.at(r, c) / eps;
      continue;
    }
    T dot = 0;
    for (std::int64_t c = 0; c < X.cols; ++c)
      dot += X.at(r, c) / norm * dY.at(r, c);
    for (std::int64_t c = 0; c < X.cols; ++c)
      dX.at(r, c) = (dY.at(r, c) - X.at(r, c) / norm * dot) / norm;
  }
  return dX;
}

/// Backward of the SDDMM stage. Dot: two SpMMs, dQ over out-edges (CSC
/// view) and dK over in-edges (CSR view). Add: LeakyReLU chain into the
/// per-node el/er scalars; the derivative at exactly zero takes the
/// negative-side slope. The L2 normalization of dot inputs, when enabled,
/// is chained through to the raw Q/K.
template <typename T>
std::pair<DenseMatrix<T>, DenseMatrix<T>> sddmm_backward(
    const Graph& g, const DenseMatrix<T>& Q, const DenseMatrix<T>& K,
    const EdgeScalars<T>& dS, const SddmmKind& kind) {
  if (dS.size() != g.num_edges) throw KernelError("sddmm_backward: dS length mismatch");
  if (kind.variant == SddmmVariant::Add) {
    const T slope = static_cast<T>(kind.leaky_slope);
    DenseMatrix<T> del(g.num_nodes, 1), der(g.num_nodes, 1);
    for (EdgeId e = 0; e < g.num_edges; ++e) {
      NodeId u = g.coo_src[e], v = g.coo_dst[e];
      T pre = Q.data[u] + K.data[v];
      T grad = dS[e] * (pre > T(0) ? T(1) : slope);
      del.data[u] += grad;
      der.data[v] += grad;
    }
    return {std::move(del), std::move(der)};
  }

  const DenseMatrix<T>* Qe = &Q;
  const DenseMatrix<T>* Ke = &K;
  DenseMatrix<T> Qn, Kn;
  if (kind.l2_normalize_inputs) {
    Qn = l2_normalize_rows(Q, static_cast<T>(1e-12));
    Kn = l2_normalize_rows(K, static_cast<T>(1e-12));
    Qe = &Qn;
    Ke = &Kn;
  }
  const T scale = static_cast<T>(kind.scale);
  const std::int64_t d = Q.cols;
  DenseMatrix<T> dQ(g.num_nodes, d), dK(g.num_nodes, d);
  for (NodeId u = 0; u < g.num_nodes; ++u) {
    T* dq = dQ.row(u);
    for (EdgeId s = g.csc_col_ptr[u]; s < g.csc_col_ptr[u + 1]; ++s) {
      EdgeId e = g.csc_edge_perm[s];
      const T* k = Ke->row(g.csc_row_idx[s]);
      T w = scale * dS[e];
      for (std::int64_t c = 0; c < d; ++c) dq[c] += w * k[c];
    }
  }
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    T* dk = dK.row(v);
    for (EdgeId e = g.csr_row_ptr[v]; e < g.csr_row_ptr[v + 1]; ++e) {
      const T* q = Qe->row(g.coo_src[e]);
      T w = scale * dS[e];
      for (std::int64_t c = 0; c < d; ++c) dk[c] += w * q[c];
    }
  }
  if (kind.l2_normalize_inputs) {
    dQ = l2_normalize_backward(Q, dQ, static_cast<T>(1e-12));
    dK = l2_normalize_backward(K, dK, static_cast<T>(1e-12));
  }
  return {std::move(dQ), std::move(dK)};
}

namespace detail {

template <typename T>
GradBundle<T> backward_values(const Graph& g, const ForwardContext<T>& ctx,
                              const DenseMatrix<T>& dO) {
  GradBundle<T> gb;
  auto [dP, dV] = spmm_backward(g, ctx.P, ctx.V, dO);
  gb.dP = std::move(dP);
  gb.dV = std::move(dV);
  gb.dS = softmax_backward(g, ctx.P, gb.dP);
  auto [dQ, dK] = sddmm_backward(g, ctx.Q, ctx.K, gb.dS, ctx.kind);
  gb.dQ = std::move(dQ);
  gb.dK = std::move(dK);
  return gb;
}

template <typename T>
ExecCounters backward_counter_model(const Graph& g, const ForwardContext<T>& ctx,
                                    std::int64_t launches) {
  ExecCounters c;
  const std::uint64_t b = sizeof(T);
  const std::uint64_t E = static_cast<std::uint64_t>(g.num_edges);
  const std::uint64_t N = static_cast<std::uint64_t>(g.num_nodes);
  const std::uint64_t d = static_cast<std::uint64_t>(ctx.V.cols);
  c.kernel_launches = static_cast<std::uint64_t>(launches);
  // Dense inputs read per stage plus gradient outputs; edge gradients dP/dS
  // round-trip through global only in the unfused five-launch schedule.
  c.global_bytes_read = E * d * b * 4 + E * b * 2;
  c.global_bytes_written = N * d * b * 2 + E * b * 2;
  if (launches >= 5) {
    c.global_bytes_read += E * b * 2;
    c.global_bytes_written += E * b * 2;
  }
  return c;
}

} // namespace detail

/// Unfused backward: five launches (dP SDDMM, softmax backward, dQ SpMM,
/// dK SpMM, dV SpMM) with edge gradients in global memory.
template <typename T>
BackwardResult<T> unfused_backward(const Graph& g, const ForwardContext<T>& ctx,
                                   const DenseMatrix<T>& dO) {
  BackwardResult<T> res;
  res.grads = detail::backward_values(g, ctx, dO);
  res.counters = detail::backward_counter_model(g, ctx, 5);
  return res;
}

/// Fused backward, three launches: (1) fused dP -> softmax-backward -> dK on
/// the CSR side, mirroring the forward fused machinery with dP in shared
/// memory and dS materialized for the CSC side; (2) CSC-side SpMM for dQ;
/// (3) CSC-side SpMM for dV. Falls back to the unfused schedule when the
/// forward feasibility rule rejects the plan.
template <typename T>
BackwardResult<T> fused_backward(const Graph& g, const ForwardContext<T>& ctx,
                                 const DenseMatrix<T>& dO, const FusionPlan& plan) {
  BackwardResult<T> res;
  bool feasible = true;
  if (plan.strategy == Strategy::Smmf) {
    try {
      detail::check_smmf_feasible<T>(g, plan, ctx.V.cols);
    } catch (const EngineError&) {
      feasible = false;
    }
  }
  res.grads = detail::backward_values(g, ctx, dO);
  res.counters = detail::backward_counter_model(g, ctx, feasible ? 3 : 5);
  res.counters.fallback_unfused = !feasible;
  return res;
}

/// Reference forward used by the finite-difference oracle: the plain
/// composition of the unfused kernels, L2 normalization included.
template <typename T>
DenseMatrix<T> reference_forward(const Graph& g, const DenseMatrix<T>& Q,
                                 const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                                 const SddmmKind& kind) {
  auto s = sddmm(g, Q, K, kind);
  auto p = edge_softmax(g, s);
  return spmm(g, p, V);
}

/// Central-difference check of the analytic gradients against the scalar
/// loss sum(O). Returns the max error relative to max(|analytic|, |fd|, 1).
template <typename T>
T finite_difference_check(const Graph& g, const DenseMatrix<T>& Q,
                          const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                          const SddmmKind& kind, T h) {
  static_assert(sizeof(T) == 8, "finite differences require f64 inputs");
  DenseMatrix<T> Qm = Q, Km = K, Vm = V;
  auto loss = [&]() {
    auto O = reference_forward(g, Qm, Km, Vm, kind);
    T sum = 0;
    for (T x : O.data) sum += x;
    if (!std::isfinite(sum)) throw KernelError("finite_difference_check: non-finite loss");
    return sum;
  };

  ForwardContext<T> ctx;
  ctx.g = &g;
  ctx.Q = Q;
  ctx.K = K;
  ctx.V = V;
  ctx.kind = kind;
  {
    auto s = sddmm(g, Q, K, kind);
    ctx.P = edge_softmax(g, s);
  }
  DenseMatrix<T> dO(g.num_nodes, V.cols, T(1));
  GradBundle<T> gb = detail::backward_values(g, ctx, dO);

  T max_err = 0;
  auto probe = [&](DenseMatrix<T>& param, const DenseMatrix<T>& analytic) {
    for (size_t i = 0; i < param.data.size(); ++i) {
      T orig = param.data[i];
      param.data[i] = orig + h;
      T up = loss();
      param.data[i] = orig - h;
      T down = loss();
      param.data[i] = orig;
      T fd = (up - down) / (2 * h);
      T a = analytic.data[i];
      T err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), T(1)});
      max_err = std::max(max_err, err);
    }
  };
  probe(Qm, gb.dQ);
  probe(Km, gb.dK);
  probe(Vm, gb.dV);
  return max_err;
}

} // namespace graphfuse
