#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace cleann {

/// Distance functions. Every kind is reported as a score where smaller means
/// closer, so search and pruning code only ever minimizes.
///
///   L2           squared Euclidean distance
///   InnerProduct negated dot product
///   Cosine       negated cosine similarity; a zero vector scores +inf
enum class Metric { L2, InnerProduct, Cosine };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

/// Throws std::invalid_argument if the dimensions differ or are zero.
float distance(std::span<const float> x, std::span<const float> y, Metric m);

/// Hot-path variant; the caller guarantees both buffers hold `dim` floats.
float distance_unchecked(const float* x, const float* y, std::size_t dim, Metric m) noexcept;

}  // namespace cleann
