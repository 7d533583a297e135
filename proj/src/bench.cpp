#include "graphfuse/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "graphfuse/models.hpp"

namespace graphfuse {

namespace {

using nlohmann::json;

BenchConfig parse(const json& j) {
  BenchConfig c;
  c.model = j.value("model", c.model);
  c.nodes = j.value("nodes", c.nodes);
  c.avg_degree = j.value("avg_degree", c.avg_degree);
  c.hub_degree = j.value("hub_degree", c.hub_degree);
  c.batch_count = j.value("batch_count", c.batch_count);
  c.dim = j.value("dim", c.dim);
  c.dtype = j.value("dtype", c.dtype);
  c.seed = j.value("seed", c.seed);
  if (j.contains("strategies"))
    c.strategies = j.at("strategies").get<std::vector<std::string>>();
  c.deterministic = j.value("deterministic", c.deterministic);
  c.peak_bw = j.value("peak_bw", c.peak_bw);
  return c;
}

Graph build_graph(const BenchConfig& c) {
  auto component = [&](std::uint64_t seed) {
    return c.hub_degree > 0
               ? gen_super_node(c.nodes, c.avg_degree, c.hub_degree, seed)
               : gen_random(c.nodes, c.avg_degree, seed);
  };
  if (c.batch_count <= 1) return component(c.seed);
  std::vector<Graph> parts;
  parts.reserve(c.batch_count);
  for (std::int64_t i = 0; i < c.batch_count; ++i)
    parts.push_back(component(c.seed + static_cast<std::uint64_t>(i)));
  return batch_graphs(parts);
}

template <typename T>
BenchReport run_typed(const BenchConfig& config) {
  if (config.peak_bw <= 0)
    throw BenchError("config must supply peak_bw (bytes/s); no hardware constant is assumed");

  BenchReport report;
  report.config = config;

  Graph g = build_graph(config);
  report.num_nodes = g.num_nodes;
  report.num_edges = g.num_edges;
  {
    std::ostringstream os;
    os << (config.hub_degree > 0 ? "hub" : "random") << " n=" << config.nodes
       << " deg=" << config.avg_degree << " batch=" << config.batch_count;
    report.graph_descriptor = os.str();
  }

  ConvSpec spec;
  spec.model = model_from_string(config.model);
  spec.dim = config.dim;
  SddmmKind kind = kind_for(spec);

  FusionPlan plan;
  plan.dtype_bytes = sizeof(T);
  plan.deterministic = config.deterministic;
  Strategy auto_pick = select_strategy(degree_stats(g), kind,
                                       plan.shared_mem_budget_bytes, sizeof(T));
  report.selected_strategy = to_string(auto_pick);

  // Expand the strategy list; the unfused reference always runs first.
  std::vector<Strategy> modes{Strategy::Unfused};
  for (const std::string& name : config.strategies) {
    Strategy s = name == "auto" ? auto_pick : strategy_from_string(name);
    if (std::find(modes.begin(), modes.end(), s) == modes.end()) modes.push_back(s);
  }

  DenseMatrix<T> X = random_matrix<T>(g.num_nodes, config.dim, config.seed + 17);
  ConvWeights<T> w = random_weights<T>(spec, config.dim, config.seed + 29);

  // Agreement gate: every mode's output is checked against the unfused
  // reference before anything is reported.
  DenseMatrix<T> ref;
  for (Strategy mode : modes) {
    ConvSpec s = spec;
    s.strategy_override = mode;
    auto t0 = std::chrono::steady_clock::now();
    auto [O, ctx] = conv_forward(s, g, X, w, plan);
    auto elapsed_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    if (mode == Strategy::Unfused) {
      ref = O;
    } else {
      const double tol = sizeof(T) == 4 ? 2e-5 : 1e-11;
      double worst = 0;
      size_t worst_i = 0;
      for (size_t i = 0; i < O.data.size(); ++i) {
        double rel = std::abs(static_cast<double>(O.data[i]) - ref.data[i]) /
                     std::max({std::abs(static_cast<double>(ref.data[i])),
                               std::abs(static_cast<double>(O.data[i])), 1.0});
        if (rel > worst) {
          worst = rel;
          worst_i = i;
        }
      }
      if (worst > tol) {
        std::ostringstream os;
        os << "mode " << to_string(mode) << " disagrees with unfused: max rel "
           << worst << " at element (" << worst_i / config.dim << ","
           << worst_i % config.dim << ")";
        throw BenchError(os.str());
      }
    }
    BenchRow row;
    row.mode = to_string(mode);
    row.counters = std::move(ctx.counters);
    row.counters.elapsed_ns = elapsed_ns; // includes the dense projections
    report.rows.push_back(std::move(row));
  }

  const std::uint64_t unfused_ns = report.rows.front().counters.elapsed_ns;
  for (BenchRow& row : report.rows) {
    row.speedup_vs_unfused =
        row.counters.elapsed_ns > 0
            ? static_cast<double>(unfused_ns) /
                  static_cast<double>(row.counters.elapsed_ns)
            : 1.0;
    double elapsed_s = static_cast<double>(row.counters.elapsed_ns) * 1e-9;
    std::uint64_t bytes =
        row.counters.global_bytes_read + row.counters.global_bytes_written;
    row.bandwidth_utilization =
        elapsed_s > 0 ? bandwidth_utilization(bytes, elapsed_s, config.peak_bw) : 0.0;
  }
  report.rows.front().speedup_vs_unfused = 1.0;
  return report;
}

} // namespace

BenchConfig config_from_json(const std::string& json_text) {
  try {
    return parse(json::parse(json_text));
  } catch (const json::exception& e) {
    throw BenchError(std::string("bad config: ") + e.what());
  }
}

BenchConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw BenchError("cannot open config: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return config_from_json(os.str());
}

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.dtype == "f32") return run_typed<float>(config);
  if (config.dtype == "f64") return run_typed<double>(config);
  throw BenchError("unknown dtype: " + config.dtype);
}

std::string report_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "mode,elapsed_ns,kernel_launches,global_bytes_read,global_bytes_written,"
        "shared_bytes,memory_transactions,softmax_scalar_ops,max_group_load,"
        "mean_group_load,speedup_vs_unfused,bandwidth_utilization\n";
  for (const BenchRow& r : report.rows) {
    os << r.mode << "," << r.counters.elapsed_ns << ","
       << r.counters.kernel_launches << "," << r.counters.global_bytes_read
       << "," << r.counters.global_bytes_written << ","
       << r.counters.shared_bytes_accessed << ","
       << r.counters.memory_transactions << "," << r.counters.softmax_scalar_ops
       << "," << r.counters.max_group_load() << "," << r.counters.mean_group_load()
       << "," << r.speedup_vs_unfused << "," << r.bandwidth_utilization << "\n";
  }
  return os.str();
}

std::string report_markdown(const BenchReport& report) {
  std::ostringstream os;
  os << "# Benchmark report\n\n";
  os << "- model: " << report.config.model << "\n";
  os << "- graph: " << report.graph_descriptor << " (N=" << report.num_nodes
     << ", E=" << report.num_edges << ")\n";
  os << "- dim: " << report.config.dim << ", dtype: " << report.config.dtype
     << ", seed: " << report.config.seed << "\n";
  os << "- auto strategy: " << report.selected_strategy << "\n\n";
  os << "| mode | launches | global read | global write | shared | "
        "transactions | softmax ops | max load | speedup | bw util |\n";
  os << "|------|----------|-------------|--------------|--------|"
        "--------------|-------------|----------|---------|--------|\n";
  for (const BenchRow& r : report.rows) {
    os << "| " << r.mode << " | " << r.counters.kernel_launches << " | "
       << r.counters.global_bytes_read << " | " << r.counters.global_bytes_written
       << " | " << r.counters.shared_bytes_accessed << " | "
       << r.counters.memory_transactions << " | " << r.counters.softmax_scalar_ops
       << " | " << r.counters.max_group_load() << " | " << r.speedup_vs_unfused
       << " | " << r.bandwidth_utilization << " |\n";
  }
  return os.str();
}

void write_report(const BenchReport& report, const std::string& csv_path,
                  const std::string& md_path) {
  {
    std::ofstream os(csv_path);
    if (!os) throw BenchError("cannot open output: " + csv_path);
    os << report_csv(report);
  }
  if (!md_path.empty()) {
    std::ofstream os(md_path);
    if (!os) throw BenchError("cannot open output: " + md_path);
    os << report_markdown(report);
  }
}

} // namespace graphfuse
