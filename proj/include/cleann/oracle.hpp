#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cleann/metric.hpp"

namespace cleann {

/// Row-major points with optional external labels. When `labels` is empty,
/// row i is labeled i.
struct PointSet {
  std::span<const float> values;
  std::size_t dim = 0;
  std::span<const std::uint32_t> labels;

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::uint32_t label(std::size_t row) const {
    return labels.empty() ? static_cast<std::uint32_t>(row) : labels[row];
  }
  const float* row(std::size_t i) const { return values.data() + i * dim; }
};

/// Exact k nearest labels by full sort; ties broken by the lower label.
/// k larger than the point count truncates (with a warning on stderr).
std::vector<std::uint32_t> exact_knn(std::span<const float> query, std::size_t k,
                                     const PointSet& points, Metric metric);

/// Same contract as exact_knn via a bounded max-heap. Kept as an independent
/// second implementation for cross-checking.
std::vector<std::uint32_t> exact_knn_heap(std::span<const float> query, std::size_t k,
                                          const PointSet& points, Metric metric);

/// exact_knn for every row of `queries` (nq x dim), OpenMP-parallel over
/// queries. Row i of the result answers query i.
std::vector<std::vector<std::uint32_t>> exact_knn_batch(std::span<const float> queries,
                                                        std::size_t k, const PointSet& points,
                                                        Metric metric, int threads = 0);

/// |result ∩ truth| / |truth|. Empty truth yields 1.
double recall(std::span<const std::uint32_t> result, std::span<const std::uint32_t> truth);

}  // namespace cleann
