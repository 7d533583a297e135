#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "graphfuse/autograd.hpp"
#include "graphfuse/bench.hpp"
#include "graphfuse/engine.hpp"
#include "graphfuse/kernels.hpp"
#include "graphfuse/models.hpp"

namespace gf = graphfuse;

namespace {

gf::Graph make_graph(std::int64_t nodes, double avg_degree, std::int64_t hub_degree,
                     std::uint64_t seed) {
  return hub_degree > 0 ? gf::gen_super_node(nodes, avg_degree, hub_degree, seed)
                        : gf::gen_random(nodes, avg_degree, seed);
}

template <typename T>
int run_verify(const std::string& model, std::int64_t nodes, double avg_degree,
               std::int64_t hub_degree, std::int64_t dim, std::uint64_t seed) {
  gf::Graph g = make_graph(nodes, avg_degree, hub_degree, seed);
  gf::ConvSpec spec;
  spec.model = gf::model_from_string(model);
  spec.dim = dim;
  auto in = gf::make_pipeline_inputs<T>(g, spec, seed);

  const double tol = sizeof(T) == 4 ? 2e-5 : 1e-11;
  gf::DenseMatrix<T> ref;
  if (g.num_nodes <= 4096) {
    ref = gf::dense_oracle_forward(g, in.Q, in.K, in.V, in.kind).second;
  } else {
    ref = gf::run_unfused(g, in.Q, in.K, in.V, in.kind).O;
  }

  gf::FusionPlan plan;
  plan.dtype_bytes = sizeof(T);
  bool ok = true;
  for (gf::Strategy mode :
       {gf::Strategy::Unfused, gf::Strategy::Smmf, gf::Strategy::Pmf,
        gf::Strategy::FeatureParallelBaseline}) {
    gf::DenseMatrix<T> O;
    try {
      O = gf::run_strategy(g, in.Q, in.K, in.V, in.kind, plan.with_strategy(mode)).O;
    } catch (const gf::EngineError& e) {
      std::cout << gf::to_string(mode) << ": skipped (" << e.what() << ")\n";
      continue;
    }
    double worst = 0;
    for (size_t i = 0; i < O.data.size(); ++i) {
      double rel = std::abs(static_cast<double>(O.data[i]) - ref.data[i]) /
                   std::max({std::abs(static_cast<double>(ref.data[i])),
                             std::abs(static_cast<double>(O.data[i])), 1.0});
      worst = std::max(worst, rel);
    }
    bool pass = worst <= tol;
    ok = ok && pass;
    std::cout << gf::to_string(mode) << ": max rel error " << worst << " "
              << (pass ? "OK" : "FAIL") << "\n";
  }
  std::cout << (ok ? "verify: all modes agree\n" : "verify: disagreement\n");
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse attention kernel library: fused SDDMM/softmax/SpMM "
               "pipelines with scheduling and traffic models"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "run all execution modes and check "
                                              "them against the dense oracle");
  std::string v_model = "gt", v_dtype = "f32";
  std::int64_t v_nodes = 128, v_hub = 0, v_dim = 32;
  double v_deg = 8.0;
  std::uint64_t v_seed = 0;
  verify->add_option("--model", v_model)->check(CLI::IsMember({"gt", "agnn", "gat"}));
  verify->add_option("--nodes", v_nodes);
  verify->add_option("--avg-degree", v_deg);
  verify->add_option("--hub-degree", v_hub);
  verify->add_option("--dim", v_dim);
  verify->add_option("--seed", v_seed);
  verify->add_option("--dtype", v_dtype)->check(CLI::IsMember({"f32", "f64"}));

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the "
                                               "analytic gradients (f64)");
  std::string g_model = "gt";
  std::int64_t g_nodes = 16, g_hub = 0, g_dim = 4;
  double g_deg = 4.0, g_h = 1e-5;
  std::uint64_t g_seed = 0;
  grad->add_option("--model", g_model)->check(CLI::IsMember({"gt", "agnn", "gat"}));
  grad->add_option("--nodes", g_nodes);
  grad->add_option("--avg-degree", g_deg);
  grad->add_option("--hub-degree", g_hub);
  grad->add_option("--dim", g_dim);
  grad->add_option("--seed", g_seed);
  grad->set_help_flag("--help", "print help"); // frees the short -h for --h
  grad->add_option("--h", g_h);

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark scenario from a "
                                            "JSON config");
  std::string b_config, b_out, b_md;
  bench->add_option("--config", b_config)->required()->check(CLI::ExistingFile);
  bench->add_option("--out", b_out)->required();
  bench->add_option("--md", b_md);

  // gen-graph
  auto* gen = app.add_subcommand("gen-graph", "generate a synthetic graph file");
  std::int64_t n_nodes = 128, n_hub = 0;
  double n_deg = 8.0;
  std::uint64_t n_seed = 0;
  std::string n_out;
  gen->add_option("--nodes", n_nodes)->required();
  gen->add_option("--avg-degree", n_deg)->required();
  gen->add_option("--hub-degree", n_hub);
  gen->add_option("--seed", n_seed);
  gen->add_option("--out", n_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      return v_dtype == "f32"
                 ? run_verify<float>(v_model, v_nodes, v_deg, v_hub, v_dim, v_seed)
                 : run_verify<double>(v_model, v_nodes, v_deg, v_hub, v_dim, v_seed);
    }
    if (grad->parsed()) {
      gf::Graph g = make_graph(g_nodes, g_deg, g_hub, g_seed);
      gf::ConvSpec spec;
      spec.model = gf::model_from_string(g_model);
      spec.dim = g_dim;
      auto in = gf::make_pipeline_inputs<double>(g, spec, g_seed);
      double err = gf::finite_difference_check(g, in.Q, in.K, in.V, in.kind, g_h);
      std::cout << "max relative error: " << err << "\n";
      return err <= 1e-5 ? 0 : 1;
    }
    if (bench->parsed()) {
      gf::BenchReport report = gf::run_benchmark(gf::load_config(b_config));
      gf::write_report(report, b_out, b_md);
      std::cout << gf::report_csv(report);
      return 0;
    }
    if (gen->parsed()) {
      gf::save_graph(n_out, make_graph(n_nodes, n_deg, n_hub, n_seed));
      std::cout << "wrote " << n_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
