#include "graphfuse/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace graphfuse {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Smmf: return "smmf";
    case Strategy::Pmf: return "pmf";
    case Strategy::Unfused: return "unfused";
    case Strategy::FeatureParallelBaseline: return "baseline";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "smmf") return Strategy::Smmf;
  if (name == "pmf") return Strategy::Pmf;
  if (name == "unfused") return Strategy::Unfused;
  if (name == "baseline" || name == "feature-parallel") return Strategy::FeatureParallelBaseline;
  throw std::invalid_argument("unknown strategy: " + name);
}

Strategy select_strategy(const DegreeStats& stats, const SddmmKind& kind,
                         std::int64_t shared_mem_bytes, std::int64_t dtype_bytes) {
  bool super = has_super_node(stats, shared_mem_bytes, dtype_bytes);
  if (super && kind.variant == SddmmVariant::Dot) return Strategy::Pmf;
  return Strategy::Smmf;
}

std::vector<RowRange> partition_blocks(const Graph& g, std::int64_t rows_per_block) {
  if (rows_per_block < 1)
    throw std::invalid_argument("partition_blocks: rows_per_block must be >= 1");
  std::vector<RowRange> out;
  for (NodeId v = 0; v < g.num_nodes; v += rows_per_block)
    out.push_back({v, std::min<NodeId>(v + rows_per_block, g.num_nodes)});
  return out;
}

BlockAssignment warp_balance(const Graph& g, const RowRange& rows,
                             std::int64_t groups_per_block) {
  if (groups_per_block < 1)
    throw std::invalid_argument("warp_balance: groups_per_block must be >= 1");
  BlockAssignment a;
  a.rows = rows;
  EdgeId lo = g.csr_row_ptr[rows.begin];
  EdgeId hi = g.csr_row_ptr[rows.end];
  EdgeId total = hi - lo;
  EdgeId base = total / groups_per_block;
  EdgeId rem = total % groups_per_block;
  EdgeId pos = lo;
  for (std::int64_t gi = 0; gi < groups_per_block; ++gi) {
    EdgeId sz = base + (gi < rem ? 1 : 0);
    a.per_group_edges.push_back({pos, pos + sz});
    pos += sz;
  }
  return a;
}

std::vector<EdgeRange> edge_parallel_partition(const Graph& g,
                                               std::int64_t num_blocks) {
  if (num_blocks < 1)
    throw std::invalid_argument("edge_parallel_partition: num_blocks must be >= 1");
  std::vector<EdgeRange> out;
  if (g.num_edges == 0) return out;
  EdgeId base = g.num_edges / num_blocks;
  EdgeId rem = g.num_edges % num_blocks;
  EdgeId pos = 0;
  for (std::int64_t b = 0; b < num_blocks; ++b) {
    EdgeId sz = base + (b < rem ? 1 : 0);
    out.push_back({pos, pos + sz});
    pos += sz;
  }
  return out;
}

std::int64_t shared_mem_usage(const FusionPlan& plan, std::int64_t block_max_edges,
                              std::int64_t d) {
  return plan.dtype_bytes * (block_max_edges * 2 + plan.rows_per_block * d);
}

std::int64_t pmf_sddmm_block_count(const Graph& g, const FusionPlan& plan) {
  std::int64_t per_block = plan.groups_per_block * plan.group_width;
  if (per_block < 1) per_block = 1;
  return std::max<std::int64_t>(1, (g.num_edges + per_block - 1) / per_block);
}

} // namespace graphfuse
