#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace graphfuse {

/// Modeled execution counters. One "kernel launch" is one parallel-for over
/// blocks with a trailing synchronization point. Global traffic charges
/// dtype_bytes per element touched outside the block's shared model; the
/// s/f/p fields attribute the edge-intermediate share of that traffic.
/// Memory transactions are counted for dense-matrix row accesses in the SpMM
/// stage only (the vectorization target), ceil(d / vector_width) per row.
struct ExecCounters {
  std::uint64_t global_bytes_read = 0;
  std::uint64_t global_bytes_written = 0;
  std::uint64_t shared_bytes_accessed = 0;
  std::uint64_t memory_transactions = 0;
  std::uint64_t kernel_launches = 0;
  std::uint64_t softmax_scalar_ops = 0;
  std::uint64_t s_global_bytes = 0; // traffic attributed to the S intermediate
  std::uint64_t f_global_bytes = 0; // traffic attributed to the F intermediate
  std::uint64_t p_global_bytes = 0; // traffic attributed to P
  std::vector<std::uint64_t> per_group_edge_loads;
  std::uint64_t elapsed_ns = 0;
  bool fallback_unfused = false;

  std::uint64_t max_group_load() const {
    std::uint64_t m = 0;
    for (auto v : per_group_edge_loads) m = std::max(m, v);
    return m;
  }

  double mean_group_load() const {
    if (per_group_edge_loads.empty()) return 0.0;
    std::uint64_t sum = 0;
    for (auto v : per_group_edge_loads) sum += v;
    return static_cast<double>(sum) / static_cast<double>(per_group_edge_loads.size());
  }

  /// Flat export consumed by the benchmark CSV writer.
  std::map<std::string, std::uint64_t> to_map(bool include_elapsed = true) const {
    std::map<std::string, std::uint64_t> m = {
        {"global_bytes_read", global_bytes_read},
        {"global_bytes_written", global_bytes_written},
        {"shared_bytes_accessed", shared_bytes_accessed},
        {"memory_transactions", memory_transactions},
        {"kernel_launches", kernel_launches},
        {"softmax_scalar_ops", softmax_scalar_ops},
        {"s_global_bytes", s_global_bytes},
        {"f_global_bytes", f_global_bytes},
        {"p_global_bytes", p_global_bytes},
        {"max_group_load", max_group_load()},
        {"fallback_unfused", fallback_unfused ? 1u : 0u},
    };
    if (include_elapsed) m["elapsed_ns"] = elapsed_ns;
    return m;
  }

  bool same_model(const ExecCounters& o) const {
    return to_map(false) == o.to_map(false) &&
           per_group_edge_loads == o.per_group_edge_loads;
  }
};

} // namespace graphfuse
