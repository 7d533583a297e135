#include "graphfuse/models.hpp"

#include <cmath>
#include <stdexcept>

namespace graphfuse {

std::string to_string(Model m) {
  switch (m) {
    case Model::GT: return "gt";
    case Model::AGNN: return "agnn";
    case Model::GAT: return "gat";
  }
  return "?";
}

Model model_from_string(const std::string& name) {
  if (name == "gt") return Model::GT;
  if (name == "agnn") return Model::AGNN;
  if (name == "gat") return Model::GAT;
  throw std::invalid_argument("unknown model: " + name);
}

SddmmKind kind_for(const ConvSpec& spec) {
  switch (spec.model) {
    case Model::GT:
      return SddmmKind::dot(spec.scale > 0
                                ? spec.scale
                                : 1.0 / std::sqrt(static_cast<double>(spec.dim)));
    case Model::AGNN:
      return SddmmKind::dot(spec.scale > 0 ? spec.scale : 1.0, /*l2=*/true);
    case Model::GAT:
      return SddmmKind::add(spec.leaky_slope);
  }
  throw std::invalid_argument("kind_for: bad model");
}

double bandwidth_utilization(std::uint64_t bytes, double elapsed_s,
                             double peak_bw_bytes_per_s) {
  if (elapsed_s <= 0) throw std::invalid_argument("bandwidth_utilization: elapsed must be > 0");
  if (peak_bw_bytes_per_s <= 0)
    throw std::invalid_argument("bandwidth_utilization: peak bandwidth must be > 0");
  return static_cast<double>(bytes) / (peak_bw_bytes_per_s * elapsed_s);
}

} // namespace graphfuse
