#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "graphfuse/autograd.hpp"
#include "graphfuse/bench.hpp"
#include "graphfuse/engine.hpp"
#include "graphfuse/kernels.hpp"
#include "graphfuse/models.hpp"

namespace py = pybind11;
namespace gf = graphfuse;

namespace {

std::vector<gf::NodeId> to_ids(py::array_t<std::int64_t> a) {
  auto r = a.unchecked<1>();
  std::vector<gf::NodeId> out(static_cast<size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out[i] = r(i);
  return out;
}

gf::DenseMatrix<double> to_matrix(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  gf::DenseMatrix<double> m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::array_t<double> from_matrix(const gf::DenseMatrix<double>& m) {
  py::array_t<double> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

py::array_t<double> from_edges(const gf::EdgeScalars<double>& s) {
  py::array_t<double> a(s.values.size());
  std::copy(s.values.begin(), s.values.end(), a.mutable_data());
  return a;
}

gf::SddmmKind kind_from_args(const std::string& variant, double scale,
                             double leaky_slope, bool l2) {
  if (variant == "dot") return gf::SddmmKind::dot(scale, l2);
  if (variant == "add") return gf::SddmmKind::add(leaky_slope);
  throw std::invalid_argument("variant must be 'dot' or 'add'");
}

py::dict counters_dict(const gf::ExecCounters& c) {
  py::dict d;
  for (const auto& [k, v] : c.to_map()) d[py::str(k)] = v;
  d["mean_group_load"] = c.mean_group_load();
  d["per_group_edge_loads"] = c.per_group_edge_loads;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fused sparse attention kernels (SDDMM, edge softmax, SpMM) with "
            "scheduling and memory-traffic models";

  py::class_<gf::Graph>(m, "Graph")
      .def_property_readonly("num_nodes", [](const gf::Graph& g) { return g.num_nodes; })
      .def_property_readonly("num_edges", [](const gf::Graph& g) { return g.num_edges; })
      .def_property_readonly("csr_row_ptr", [](const gf::Graph& g) { return g.csr_row_ptr; })
      .def_property_readonly("csr_col_idx", [](const gf::Graph& g) { return g.csr_col_idx; })
      .def_property_readonly("coo_src", [](const gf::Graph& g) { return g.coo_src; })
      .def_property_readonly("coo_dst", [](const gf::Graph& g) { return g.coo_dst; });

  m.def("from_coo",
        [](gf::NodeId n, py::array_t<std::int64_t> src, py::array_t<std::int64_t> dst) {
          return gf::from_coo(n, to_ids(src), to_ids(dst));
        },
        py::arg("num_nodes"), py::arg("src"), py::arg("dst"));
  m.def("gen_random", &gf::gen_random, py::arg("n"), py::arg("avg_degree"), py::arg("seed"));
  m.def("gen_super_node", &gf::gen_super_node, py::arg("n"), py::arg("avg_degree"),
        py::arg("hub_degree"), py::arg("seed"));
  m.def("load_graph", &gf::load_graph);
  m.def("save_graph", &gf::save_graph);

  m.def("degree_stats", [](const gf::Graph& g) {
    auto s = gf::degree_stats(g);
    return py::make_tuple(s.avg_degree, s.max_degree, s.min_degree);
  });
  m.def("super_node_threshold", &gf::super_node_threshold,
        py::arg("shared_mem_bytes"), py::arg("dtype_bytes"));

  m.def("select_strategy",
        [](const gf::Graph& g, const std::string& variant, std::int64_t shared_mem,
           std::int64_t dtype_bytes) {
          gf::SddmmKind kind = kind_from_args(variant, 1.0, 0.2, false);
          return gf::to_string(
              gf::select_strategy(gf::degree_stats(g), kind, shared_mem, dtype_bytes));
        },
        py::arg("graph"), py::arg("variant"), py::arg("shared_mem_bytes") = 49152,
        py::arg("dtype_bytes") = 4);

  m.def("forward",
        [](const gf::Graph& g, py::array_t<double> Q, py::array_t<double> K,
           py::array_t<double> V, const std::string& variant, double scale,
           double leaky_slope, bool l2_normalize, const std::string& strategy) {
          auto kind = kind_from_args(variant, scale, leaky_slope, l2_normalize);
          gf::FusionPlan plan;
          plan.dtype_bytes = 8;
          plan.strategy = gf::strategy_from_string(strategy);
          auto res = gf::run_strategy(g, to_matrix(Q), to_matrix(K), to_matrix(V),
                                      kind, plan);
          return py::make_tuple(from_matrix(res.O), from_edges(res.ctx.P),
                                counters_dict(res.counters));
        },
        py::arg("graph"), py::arg("Q"), py::arg("K"), py::arg("V"),
        py::arg("variant") = "dot", py::arg("scale") = 1.0,
        py::arg("leaky_slope") = 0.2, py::arg("l2_normalize") = false,
        py::arg("strategy") = "smmf");

  m.def("backward",
        [](const gf::Graph& g, py::array_t<double> Q, py::array_t<double> K,
           py::array_t<double> V, py::array_t<double> dO, const std::string& variant,
           double scale, double leaky_slope, bool l2_normalize, bool fused) {
          auto kind = kind_from_args(variant, scale, leaky_slope, l2_normalize);
          gf::ForwardContext<double> ctx;
          ctx.g = &g;
          ctx.Q = to_matrix(Q);
          ctx.K = to_matrix(K);
          ctx.V = to_matrix(V);
          ctx.kind = kind;
          ctx.P = gf::edge_softmax(g, gf::sddmm(g, ctx.Q, ctx.K, kind));
          auto res = fused ? gf::fused_backward(g, ctx, to_matrix(dO), gf::FusionPlan{})
                           : gf::unfused_backward(g, ctx, to_matrix(dO));
          return py::make_tuple(from_matrix(res.grads.dQ), from_matrix(res.grads.dK),
                                from_matrix(res.grads.dV), counters_dict(res.counters));
        },
        py::arg("graph"), py::arg("Q"), py::arg("K"), py::arg("V"), py::arg("dO"),
        py::arg("variant") = "dot", py::arg("scale") = 1.0,
        py::arg("leaky_slope") = 0.2, py::arg("l2_normalize") = false,
        py::arg("fused") = true);

  m.def("gradcheck",
        [](const gf::Graph& g, const std::string& model, std::int64_t dim,
           std::uint64_t seed, double h) {
          gf::ConvSpec spec;
          spec.model = gf::model_from_string(model);
          spec.dim = dim;
          auto in = gf::make_pipeline_inputs<double>(g, spec, seed);
          return gf::finite_difference_check(g, in.Q, in.K, in.V, in.kind, h);
        },
        py::arg("graph"), py::arg("model") = "gt", py::arg("dim") = 4,
        py::arg("seed") = 0, py::arg("h") = 1e-5);

  m.def("run_benchmark_json", [](const std::string& json_text) {
    auto report = gf::run_benchmark(gf::config_from_json(json_text));
    return gf::report_csv(report);
  });
}
