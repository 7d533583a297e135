#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "graphfuse/counters.hpp"
#include "graphfuse/dense.hpp"
#include "graphfuse/graph.hpp"
#include "graphfuse/kernels.hpp"
#include "graphfuse/schedule.hpp"

namespace graphfuse {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Saved forward state consumed by the backward pass. P is always
/// materialized to global memory, whatever strategy produced it.
template <typename T>
struct ForwardContext {
  const Graph* g = nullptr;
  DenseMatrix<T> Q, K, V;
  EdgeScalars<T> P;
  SddmmKind kind;
  FusionPlan plan;
};

template <typename T>
struct ForwardResult {
  DenseMatrix<T> O;
  ForwardContext<T> ctx;
  ExecCounters counters;
};

inline std::int64_t vectorized_transactions(std::int64_t d, std::int64_t vector_width) {
  return (d + vector_width - 1) / vector_width;
}

/// Runs fn(begin, end) over contiguous index chunks. Blocks own disjoint
/// output rows, so chunk results are identical to sequential execution.
inline void parallel_for(std::int64_t n, bool deterministic,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::int64_t workers = deterministic ? 1 : std::max(1u, hw);
  workers = std::min<std::int64_t>(workers, n);
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  std::int64_t chunk = (n + workers - 1) / workers;
  for (std::int64_t w = 0; w < workers; ++w) {
    std::int64_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    threads.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : threads) t.join();
}

namespace detail {

// Scalar-op count of one redundancy-free softmax row of length k:
// k max compares, k exps, k sum adds, k divides.
inline std::uint64_t softmax_row_ops(std::int64_t k) {
  return k > 0 ? 4 * static_cast<std::uint64_t>(k) : 0;
}

template <typename T>
std::uint64_t per_edge_sddmm_read_bytes(const SddmmKind& kind, std::int64_t d) {
  if (kind.variant == SddmmVariant::Add) return 2 * sizeof(T);
  return 2 * static_cast<std::uint64_t>(d) * sizeof(T);
}

/// Counter model shared by all modes; only the launch structure and the
/// placement of the S/F/P intermediates differ.
template <typename T>
ExecCounters model_counters(const Graph& g, const SddmmKind& kind,
                            const FusionPlan& plan, std::int64_t d,
                            Strategy mode) {
  ExecCounters c;
  const std::uint64_t b = sizeof(T);
  const std::uint64_t E = static_cast<std::uint64_t>(g.num_edges);
  const std::uint64_t N = static_cast<std::uint64_t>(g.num_nodes);
  const std::uint64_t eb = E * b;
  const std::uint64_t edge_in = per_edge_sddmm_read_bytes<T>(kind, d) * E;
  const std::uint64_t v_reads = E * static_cast<std::uint64_t>(d) * b;
  const std::uint64_t o_writes = N * static_cast<std::uint64_t>(d) * b;
  const std::uint64_t row_tx =
      static_cast<std::uint64_t>(vectorized_transactions(d, plan.vector_width));

  std::uint64_t rf_softmax_ops = 0;
  for (NodeId v = 0; v < g.num_nodes; ++v)
    rf_softmax_ops += softmax_row_ops(g.in_degree(v));

  // SpMM dense-row transactions: one V-row access per edge, one O-row write
  // per node.
  c.memory_transactions = (E + N) * row_tx;
  c.global_bytes_read = edge_in + v_reads;
  c.global_bytes_written = o_writes;

  switch (mode) {
    case Strategy::Unfused: {
      c.kernel_launches = 3;
      c.s_global_bytes = 2 * eb; // written by SDDMM, read by softmax
      c.f_global_bytes = 2 * eb; // round-trips inside the unfused softmax
      c.p_global_bytes = 2 * eb; // written by softmax, read by SpMM
      c.global_bytes_written += 3 * eb; // S, F, P writes
      c.global_bytes_read += 3 * eb;    // S, F, P reads
      c.softmax_scalar_ops = rf_softmax_ops;
      for (const auto& r : edge_parallel_partition(g, pmf_sddmm_block_count(g, plan)))
        c.per_group_edge_loads.push_back(static_cast<std::uint64_t>(r.size()));
      break;
    }
    case Strategy::Smmf: {
      c.kernel_launches = 1;
      c.p_global_bytes = eb; // P written once for backward; S, F stay shared
      c.global_bytes_written += eb;
      // Shared traffic: S write+read, F write+read, P read, output tile
      // accumulate (read+write per edge element).
      c.shared_bytes_accessed =
          2 * eb + 2 * eb + eb + 2 * E * static_cast<std::uint64_t>(d) * b;
      c.softmax_scalar_ops = rf_softmax_ops;
      for (const auto& rows : partition_blocks(g, plan.rows_per_block)) {
        auto a = warp_balance(g, rows, plan.groups_per_block);
        for (const auto& r : a.per_group_edges)
          c.per_group_edge_loads.push_back(static_cast<std::uint64_t>(r.size()));
      }
      break;
    }
    case Strategy::Pmf: {
      c.kernel_launches = 2;
      c.s_global_bytes = 2 * eb; // SDDMM kernel writes, fused kernel reads
      c.p_global_bytes = eb;
      c.global_bytes_written += 2 * eb; // S and P
      c.global_bytes_read += eb;        // S
      c.shared_bytes_accessed =
          2 * eb + eb + 2 * E * static_cast<std::uint64_t>(d) * b; // F, P-read, tile
      c.softmax_scalar_ops = rf_softmax_ops;
      for (const auto& r : edge_parallel_partition(g, pmf_sddmm_block_count(g, plan)))
        c.per_group_edge_loads.push_back(static_cast<std::uint64_t>(r.size()));
      break;
    }
    case Strategy::FeatureParallelBaseline: {
      c.kernel_launches = 1;
      c.p_global_bytes = eb;
      c.global_bytes_written += eb;
      // Every feature-lane group repeats the row reductions.
      std::uint64_t groups_per_row = static_cast<std::uint64_t>(
          std::max<std::int64_t>(1, (d + plan.group_width - 1) / plan.group_width));
      c.softmax_scalar_ops = groups_per_row * rf_softmax_ops;
      c.shared_bytes_accessed =
          2 * eb * groups_per_row + 2 * E * static_cast<std::uint64_t>(d) * b;
      // Per-row group assignment: one group handles all edges of its row.
      c.per_group_edge_loads.reserve(N);
      for (NodeId v = 0; v < g.num_nodes; ++v)
        c.per_group_edge_loads.push_back(static_cast<std::uint64_t>(g.in_degree(v)));
      break;
    }
  }
  return c;
}

/// Rejects SMMF plans whose largest block does not fit the shared budget.
template <typename T>
void check_smmf_feasible(const Graph& g, const FusionPlan& plan, std::int64_t d) {
  auto blocks = partition_blocks(g, plan.rows_per_block);
  for (size_t i = 0; i < blocks.size(); ++i) {
    EdgeId block_edges =
        g.csr_row_ptr[blocks[i].end] - g.csr_row_ptr[blocks[i].begin];
    FusionPlan p = plan;
    p.dtype_bytes = sizeof(T);
    std::int64_t need = shared_mem_usage(p, block_edges, d);
    if (need > plan.shared_mem_budget_bytes)
      throw EngineError("smmf infeasible: block " + std::to_string(i) +
                        " requires " + std::to_string(need) +
                        " shared bytes, budget " +
                        std::to_string(plan.shared_mem_budget_bytes));
  }
}

/// Per-block fused forward: SDDMM over the block's edges, softmax and SpMM
/// over its rows. Reduction order within a row is fixed left-to-right, so
/// results are bit-identical to the unfused reference.
template <typename T>
void run_block_rows(const Graph& g, NodeId row_begin, NodeId row_end,
                    const DenseMatrix<T>& Q, const DenseMatrix<T>& K,
                    const DenseMatrix<T>& V, const SddmmKind& kind,
                    EdgeScalars<T>& P, DenseMatrix<T>& O) {
  const std::int64_t d = V.cols;
  for (NodeId v = row_begin; v < row_end; ++v) {
    EdgeId b = g.csr_row_ptr[v], e = g.csr_row_ptr[v + 1];
    if (b == e) continue;
    // SDDMM stage (edge scalars for this row).
    for (EdgeId i = b; i < e; ++i) {
      NodeId u = g.coo_src[i];
      if (kind.variant == SddmmVariant::Dot) {
        T acc = 0;
        const T* q = Q.row(u);
        const T* k = K.row(v);
        for (std::int64_t c = 0; c < Q.cols; ++c) acc += q[c] * k[c];
        P[i] = static_cast<T>(kind.scale) * acc;
      } else {
        T x = Q.data[u] + K.data[v];
        P[i] = x >= T(0) ? x : static_cast<T>(kind.leaky_slope) * x;
      }
    }
    // Softmax stage: two row reductions, max then sum.
    T zmax = P[b];
    for (EdgeId i = b + 1; i < e; ++i) zmax = std::max(zmax, P[i]);
    T zsum = 0;
    for (EdgeId i = b; i < e; ++i) {
      P[i] = std::exp(P[i] - zmax);
      zsum += P[i];
    }
    for (EdgeId i = b; i < e; ++i) P[i] /= zsum;
    // SpMM stage, features-outer.
    T* orow = O.row(v);
    for (std::int64_t c = 0; c < d; ++c) {
      T acc = 0;
      for (EdgeId i = b; i < e; ++i) acc += P[i] * V.row(g.coo_src[i])[c];
      orow[c] = acc;
    }
  }
}

template <typename T>
ForwardResult<T> run_mode(const Graph& g, const DenseMatrix<T>& Q,
                          const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                          const SddmmKind& kind, const FusionPlan& plan,
                          Strategy mode) {
  if (V.rows != g.num_nodes) throw KernelError("engine: V.rows must equal N");
  if (kind.variant == SddmmVariant::Dot &&
      (Q.rows != g.num_nodes || K.rows != g.num_nodes || Q.cols != K.cols))
    throw KernelError("engine: Q/K dimension mismatch");
  if (kind.variant == SddmmVariant::Add && (Q.cols != 1 || K.cols != 1))
    throw KernelError("engine: add-SDDMM expects N x 1 el/er");

  const std::int64_t d = V.cols;
  if (mode == Strategy::Smmf) check_smmf_feasible<T>(g, plan, d);

  auto t0 = std::chrono::steady_clock::now();

  const DenseMatrix<T>* Qp = &Q;
  const DenseMatrix<T>* Kp = &K;
  DenseMatrix<T> Qn, Kn;
  SddmmKind inner = kind;
  if (kind.variant == SddmmVariant::Dot && kind.l2_normalize_inputs) {
    Qn = l2_normalize_rows(Q, static_cast<T>(1e-12));
    Kn = l2_normalize_rows(K, static_cast<T>(1e-12));
    Qp = &Qn;
    Kp = &Kn;
    inner.l2_normalize_inputs = false;
  }

  ForwardResult<T> res;
  res.O = DenseMatrix<T>(g.num_nodes, d);
  res.ctx.g = &g;
  res.ctx.Q = Q;
  res.ctx.K = K;
  res.ctx.V = V;
  res.ctx.kind = kind;
  res.ctx.plan = plan.with_strategy(mode);
  res.ctx.P = EdgeScalars<T>(g.num_edges);

  auto blocks = partition_blocks(g, plan.rows_per_block);
  parallel_for(static_cast<std::int64_t>(blocks.size()), plan.deterministic,
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t bi = lo; bi < hi; ++bi)
                   run_block_rows(g, blocks[bi].begin, blocks[bi].end, *Qp, *Kp,
                                  V, inner, res.ctx.P, res.O);
               });

  res.counters = model_counters<T>(g, kind, plan, d, mode);
  res.counters.elapsed_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - t0)
          .count());
  return res;
}

} // namespace detail

/// Single fused launch: warp-balanced SDDMM, redundancy-free softmax and
/// vectorized SpMM per block, S and F held in shared memory.
template <typename T>
ForwardResult<T> run_smmf(const Graph& g, const DenseMatrix<T>& Q,
                          const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                          const SddmmKind& kind, const FusionPlan& plan) {
  return detail::run_mode(g, Q, K, V, kind, plan, Strategy::Smmf);
}

/// Edge-parallel SDDMM launch plus a fused softmax+SpMM launch; S passes
/// through global memory.
template <typename T>
ForwardResult<T> run_pmf(const Graph& g, const DenseMatrix<T>& Q,
                         const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                         const SddmmKind& kind, const FusionPlan& plan) {
  return detail::run_mode(g, Q, K, V, kind, plan, Strategy::Pmf);
}

/// Fixed feature-parallel fusion: per-row group assignment and duplicated
/// softmax row reductions across feature-lane groups.
template <typename T>
ForwardResult<T> run_feature_parallel_baseline(const Graph& g,
                                               const DenseMatrix<T>& Q,
                                               const DenseMatrix<T>& K,
                                               const DenseMatrix<T>& V,
                                               const SddmmKind& kind,
                                               const FusionPlan& plan) {
  return detail::run_mode(g, Q, K, V, kind, plan,
                          Strategy::FeatureParallelBaseline);
}

/// Three separate launches with S, F and P round-tripping through global
/// memory.
template <typename T>
ForwardResult<T> run_unfused(const Graph& g, const DenseMatrix<T>& Q,
                             const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                             const SddmmKind& kind,
                             const FusionPlan& plan = FusionPlan{}) {
  return detail::run_mode(g, Q, K, V, kind, plan, Strategy::Unfused);
}

template <typename T>
ForwardResult<T> run_strategy(const Graph& g, const DenseMatrix<T>& Q,
                              const DenseMatrix<T>& K, const DenseMatrix<T>& V,
                              const SddmmKind& kind, const FusionPlan& plan) {
  return detail::run_mode(g, Q, K, V, kind, plan, plan.strategy);
}

} // namespace graphfuse
