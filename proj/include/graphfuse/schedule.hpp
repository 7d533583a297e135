#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphfuse/dense.hpp"
#include "graphfuse/graph.hpp"

namespace graphfuse {

enum class Strategy { Smmf, Pmf, Unfused, FeatureParallelBaseline };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Chosen execution strategy plus block/group geometry. Defaults model a
/// four-warp block with 48 KiB of shared memory.
struct FusionPlan {
  Strategy strategy = Strategy::Smmf;
  std::int64_t rows_per_block = 4;
  std::int64_t groups_per_block = 4;
  std::int64_t group_width = 32;      // lanes per group
  std::int64_t vector_width = 4;      // elements per modeled memory transaction
  std::int64_t shared_mem_budget_bytes = 49152;
  std::int64_t dtype_bytes = 4;
  bool deterministic = false;         // serialize block execution

  FusionPlan with_strategy(Strategy s) const {
    FusionPlan p = *this;
    p.strategy = s;
    return p;
  }
};

struct RowRange {
  NodeId begin = 0;
  NodeId end = 0;
};

struct EdgeRange {
  EdgeId begin = 0;
  EdgeId end = 0;
  EdgeId size() const { return end - begin; }
};

/// One block's rows and the balanced per-group edge chunks covering them.
struct BlockAssignment {
  std::int64_t block_id = 0;
  RowRange rows;
  std::vector<EdgeRange> per_group_edges; // indexed by group id
};

/// PMF iff the graph has a super node and the kernel uses dot-SDDMM.
Strategy select_strategy(const DegreeStats& stats, const SddmmKind& kind,
                         std::int64_t shared_mem_bytes, std::int64_t dtype_bytes);

/// Consecutive disjoint row ranges of size rows_per_block (last may be short).
std::vector<RowRange> partition_blocks(const Graph& g, std::int64_t rows_per_block);

/// Splits the range's edges into groups_per_block contiguous chunks whose
/// sizes differ by at most one. Chunks may span row boundaries.
BlockAssignment warp_balance(const Graph& g, const RowRange& rows,
                             std::int64_t groups_per_block);

/// Near-equal contiguous edge ranges covering [0, E).
std::vector<EdgeRange> edge_parallel_partition(const Graph& g,
                                               std::int64_t num_blocks);

/// Modeled SMMF shared-memory footprint: S buffer + F buffer + output tile.
std::int64_t shared_mem_usage(const FusionPlan& plan, std::int64_t block_max_edges,
                              std::int64_t d);

/// Block count used by PMF's edge-parallel SDDMM stage.
std::int64_t pmf_sddmm_block_count(const Graph& g, const FusionPlan& plan);

} // namespace graphfuse
