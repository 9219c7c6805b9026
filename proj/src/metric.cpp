#include "cleann/metric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cleann {

Metric parse_metric(std::string_view name) {
  if (name == "l2") return Metric::L2;
  if (name == "ip") return Metric::InnerProduct;
  if (name == "cosine") return Metric::Cosine;
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::L2: return "l2";
    case Metric::InnerProduct: return "ip";
    case Metric::Cosine: return "cosine";
  }
  return "?";
}

namespace {

float squared_l2(const float* x, const float* y, std::size_t dim) noexcept {
  float acc = 0.0f;
  for (std::size_t i = 0; i < dim; ++i) {
    const float d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

float dot(const float* x, const float* y, std::size_t dim) noexcept {
  float acc = 0.0f;
  for (std::size_t i = 0; i < dim; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

float distance_unchecked(const float* x, const float* y, std::size_t dim, Metric m) noexcept {
  switch (m) {
    case Metric::L2:
      return squared_l2(x, y, dim);
    case Metric::InnerProduct:
      return -dot(x, y, dim);
    case Metric::Cosine: {
      const float nx = dot(x, x, dim);
      const float ny = dot(y, y, dim);
      if (nx == 0.0f || ny == 0.0f) return std::numeric_limits<float>::infinity();
      return -dot(x, y, dim) / std::sqrt(nx * ny);
    }
  }
  return std::numeric_limits<float>::infinity();
}

float distance(std::span<const float> x, std::span<const float> y, Metric m) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
  return distance_unchecked(x.data(), y.data(), x.size(), m);
}

}  // namespace cleann
