#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include "graphfuse/autograd.hpp"
#include "graphfuse/dense.hpp"
#include "graphfuse/engine.hpp"
#include "graphfuse/graph.hpp"
#include "graphfuse/schedule.hpp"

namespace graphfuse {

enum class Model { GT, AGNN, GAT };

std::string to_string(Model m);
Model model_from_string(const std::string& name);

/// Attention convolution configuration. scale <= 0 means the GT default
/// 1/sqrt(d); AGNN uses scale as its beta (default 1).
struct ConvSpec {
  Model model = Model::GT;
  std::int64_t dim = 128;
  double scale = 0.0;
  double leaky_slope = 0.2;
  std::optional<Strategy> strategy_override;
};

SddmmKind kind_for(const ConvSpec& spec);

/// Dense projection weights. GT/AGNN use W_q/W_k/W_v (d_in x d). GAT uses a
/// single projection W_v plus the attention vectors a_l/a_r (d x 1).
template <typename T>
struct ConvWeights {
  DenseMatrix<T> W_q, W_k, W_v;
  DenseMatrix<T> a_l, a_r;
};

template <typename T>
struct ConvContext {
  ForwardContext<T> fwd;
  DenseMatrix<T> X;
  DenseMatrix<T> H; // GAT projected features
  ExecCounters counters;
};

template <typename T>
struct ConvGrads {
  GradBundle<T> pipeline;
  DenseMatrix<T> dW_q, dW_k, dW_v;
  DenseMatrix<T> da_l, da_r;
};

// C = A * B
template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& A, const DenseMatrix<T>& B) {
  if (A.cols != B.rows) throw KernelError("matmul: inner dimension mismatch");
  DenseMatrix<T> C(A.rows, B.cols);
  for (std::int64_t i = 0; i < A.rows; ++i) {
    T* crow = C.row(i);
    const T* arow = A.row(i);
    for (std::int64_t k = 0; k < A.cols; ++k) {
      T a = arow[k];
      const T* brow = B.row(k);
      for (std::int64_t j = 0; j < B.cols; ++j) crow[j] += a * brow[j];
    }
  }
  return C;
}

// C = A^T * B
template <typename T>
DenseMatrix<T> matmul_at_b(const DenseMatrix<T>& A, const DenseMatrix<T>& B) {
  if (A.rows != B.rows) throw KernelError("matmul_at_b: row count mismatch");
  DenseMatrix<T> C(A.cols, B.cols);
  for (std::int64_t k = 0; k < A.rows; ++k) {
    const T* arow = A.row(k);
    const T* brow = B.row(k);
    for (std::int64_t i = 0; i < A.cols; ++i)
      for (std::int64_t j = 0; j < B.cols; ++j) C.at(i, j) += arow[i] * brow[j];
  }
  return C;
}

template <typename T>
ConvWeights<T> random_weights(const ConvSpec& spec, std::int64_t d_in,
                              std::uint64_t seed) {
  ConvWeights<T> w;
  T lim = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_in)));
  w.W_v = random_matrix<T>(d_in, spec.dim, seed + 3, -lim, lim);
  if (spec.model == Model::GAT) {
    w.a_l = random_matrix<T>(spec.dim, 1, seed + 4, -lim, lim);
    w.a_r = random_matrix<T>(spec.dim, 1, seed + 5, -lim, lim);
  } else {
    w.W_q = random_matrix<T>(d_in, spec.dim, seed + 1, -lim, lim);
    w.W_k = random_matrix<T>(d_in, spec.dim, seed + 2, -lim, lim);
  }
  return w;
}

/// Dense projections followed by the fused sparse pipeline; the strategy
/// comes from the selection rule unless overridden.
template <typename T>
std::pair<DenseMatrix<T>, ConvContext<T>> conv_forward(
    const ConvSpec& spec, const Graph& g, const DenseMatrix<T>& X,
    const ConvWeights<T>& w, FusionPlan plan = FusionPlan{}) {
  SddmmKind kind = kind_for(spec);
  plan.dtype_bytes = sizeof(T);
  plan.strategy = spec.strategy_override
                      ? *spec.strategy_override
                      : select_strategy(degree_stats(g), kind,
                                        plan.shared_mem_budget_bytes, sizeof(T));
  ConvContext<T> ctx;
  ctx.X = X;
  ForwardResult<T> res;
  if (spec.model == Model::GAT) {
    ctx.H = matmul(X, w.W_v);
    DenseMatrix<T> el = matmul(ctx.H, w.a_l);
    DenseMatrix<T> er = matmul(ctx.H, w.a_r);
    res = run_strategy(g, el, er, ctx.H, kind, plan);
  } else {
    DenseMatrix<T> Q = matmul(X, w.W_q);
    DenseMatrix<T> K = matmul(X, w.W_k);
    DenseMatrix<T> V = matmul(X, w.W_v);
    res = run_strategy(g, Q, K, V, kind, plan);
  }
  ctx.fwd = std::move(res.ctx);
  ctx.counters = std::move(res.counters);
  return {std::move(res.O), std::move(ctx)};
}

/// Chains the fused sparse backward with the dense projection gradients.
template <typename T>
ConvGrads<T> conv_backward(const ConvSpec& spec, const Graph& g,
                           const ConvContext<T>& ctx, const ConvWeights<T>& w,
                           const DenseMatrix<T>& dO) {
  ConvGrads<T> out;
  auto bw = fused_backward(g, ctx.fwd, dO, ctx.fwd.plan);
  out.pipeline = std::move(bw.grads);
  if (spec.model == Model::GAT) {
    const GradBundle<T>& gb = out.pipeline;
    DenseMatrix<T> dH = gb.dV; // del/der fan back into the shared projection
    for (NodeId u = 0; u < g.num_nodes; ++u)
      for (std::int64_t c = 0; c < spec.dim; ++c)
        dH.at(u, c) += gb.dQ.data[u] * w.a_l.data[c] + gb.dK.data[u] * w.a_r.data[c];
    out.da_l = matmul_at_b(ctx.H, gb.dQ);
    out.da_r = matmul_at_b(ctx.H, gb.dK);
    out.dW_v = matmul_at_b(ctx.X, dH);
  } else {
    out.dW_q = matmul_at_b(ctx.X, out.pipeline.dQ);
    out.dW_k = matmul_at_b(ctx.X, out.pipeline.dK);
    out.dW_v = matmul_at_b(ctx.X, out.pipeline.dV);
  }
  return out;
}

template <typename T>
struct PipelineInputs {
  DenseMatrix<T> Q, K, V;
  SddmmKind kind;
};

/// Random kernel-level inputs for a model. For GAT, Q/K carry the el/er
/// scalars; seeds that land an edge pre-activation near the LeakyReLU kink
/// are bumped so gradient checks stay away from the non-differentiable point.
template <typename T>
PipelineInputs<T> make_pipeline_inputs(const Graph& g, const ConvSpec& spec,
                                       std::uint64_t seed) {
  PipelineInputs<T> in;
  in.kind = kind_for(spec);
  in.V = random_matrix<T>(g.num_nodes, spec.dim, seed + 2);
  if (spec.model == Model::GAT) {
    for (std::uint64_t bump = 0; bump < 64; ++bump) {
      in.Q = random_matrix<T>(g.num_nodes, 1, seed + bump * 1000);
      in.K = random_matrix<T>(g.num_nodes, 1, seed + 1 + bump * 1000);
      T closest = std::numeric_limits<T>::max();
      for (EdgeId e = 0; e < g.num_edges; ++e)
        closest = std::min(closest,
                           std::abs(in.Q.data[g.coo_src[e]] + in.K.data[g.coo_dst[e]]));
      if (g.num_edges == 0 || closest > static_cast<T>(1e-3)) break;
    }
  } else {
    in.Q = random_matrix<T>(g.num_nodes, spec.dim, seed);
    in.K = random_matrix<T>(g.num_nodes, spec.dim, seed + 1);
  }
  return in;
}

/// Read/write bytes divided by (peak bandwidth x elapsed time); reported
/// raw, never clamped.
double bandwidth_utilization(std::uint64_t bytes, double elapsed_s,
                             double peak_bw_bytes_per_s);

} // namespace graphfuse
