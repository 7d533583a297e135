#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphfuse/counters.hpp"
#include "graphfuse/graph.hpp"

namespace graphfuse {

struct BenchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One benchmark scenario, loadable from a flat JSON config.
struct BenchConfig {
  std::string model = "gt";
  std::int64_t nodes = 128;
  double avg_degree = 8.0;
  std::int64_t hub_degree = 0;    // 0: no hub, use gen_random
  std::int64_t batch_count = 1;
  std::int64_t dim = 128;
  std::string dtype = "f32";
  std::uint64_t seed = 0;
  std::vector<std::string> strategies = {"auto"};
  bool deterministic = true;
  double peak_bw = 0.0;           // bytes/s, must be supplied by the user
};

BenchConfig load_config(const std::string& path);
BenchConfig config_from_json(const std::string& json_text);

struct BenchRow {
  std::string mode;
  ExecCounters counters;
  double speedup_vs_unfused = 1.0;
  double bandwidth_utilization = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::string graph_descriptor;
  NodeId num_nodes = 0;
  EdgeId num_edges = 0;
  std::string selected_strategy; // result of the auto rule for this scenario
  std::vector<BenchRow> rows;
};

/// Runs every requested mode on the same inputs, verifies cross-mode output
/// agreement against the unfused reference before reporting, then emits
/// counters, speedups and bandwidth utilization.
BenchReport run_benchmark(const BenchConfig& config);

std::string report_csv(const BenchReport& report);
std::string report_markdown(const BenchReport& report);
void write_report(const BenchReport& report, const std::string& csv_path,
                  const std::string& md_path = "");

} // namespace graphfuse
