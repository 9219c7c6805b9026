#include "cleann/params.hpp"

namespace cleann {

EngineMode parse_engine(std::string_view name) {
  if (name == "cleann") return EngineMode::CleANN;
  if (name == "naive") return EngineMode::Naive;
  if (name == "fresh") return EngineMode::Fresh;
  if (name == "rebuild") return EngineMode::Rebuild;
  throw std::invalid_argument("unknown engine: " + std::string(name));
}

std::string_view engine_name(EngineMode m) {
  switch (m) {
    case EngineMode::CleANN: return "cleann";
    case EngineMode::Naive: return "naive";
    case EngineMode::Fresh: return "fresh";
    case EngineMode::Rebuild: return "rebuild";
  }
  return "?";
}

void IndexParams::validate() const {
  if (dim == 0) throw std::invalid_argument("IndexParams: dim must be >= 1");
  if (capacity == 0) throw std::invalid_argument("IndexParams: capacity must be >= 1");
  if (capacity >= kInvalidNode) throw std::invalid_argument("IndexParams: capacity too large");
  if (max_degree < 1) throw std::invalid_argument("IndexParams: R must be >= 1");
  if (search_width < 1) throw std::invalid_argument("IndexParams: L must be >= 1");
  if (insert_width < 1) throw std::invalid_argument("IndexParams: L_I must be >= 1");
  if (!(alpha >= 1.0f)) throw std::invalid_argument("IndexParams: alpha must be >= 1");
  for (auto d : bridge.depths) {
    if (d < 1) throw std::invalid_argument("IndexParams: bridge depths must be >= 1");
  }
  if (bridge.enabled && !bridge.auto_depths && bridge.depths.empty()) {
    throw std::invalid_argument("IndexParams: bridge building enabled with no depths");
  }
}

}  // namespace cleann
