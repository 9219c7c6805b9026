#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "cleann/dataset_io.hpp"
#include "cleann/metric.hpp"

namespace cleann {

/// Clustered generator: `clusters` seed points drawn uniformly from
/// [0, extent]^dim, each spawning Gaussian clusters of `cluster_size` points
/// (std `sigma`). Seeds are cycled until n points exist. With `clustered_order`
/// rows come cluster by cluster (the order an adversarial stream sees);
/// otherwise they are shuffled.
struct ClusterSpec {
  std::size_t n = 10000;
  std::size_t dim = 16;
  std::size_t clusters = 100;
  std::size_t cluster_size = 100;
  float extent = 1.0f;
  float sigma = 0.05f;
  bool clustered_order = true;
  std::uint64_t seed = 0;
};

Dataset generate_clusters(const ClusterSpec& spec);

/// Queries drawn the same way as the data (fresh Gaussian samples around
/// randomly chosen seeds of `spec`), always in random order.
Dataset generate_cluster_queries(const ClusterSpec& spec, std::size_t count, std::uint64_t seed);

/// Mean exact 1-NN distance (Euclidean, not squared) between points of a
/// seeded sample of at most `sample_limit` rows, each measured against the
/// rest of the sample.
double mean_nn_distance(const Dataset& data, std::size_t sample_limit, std::uint64_t seed);

struct TrainingQuerySpec {
  double fraction = 0.02;
  /// Overrides the fraction-derived count when set.
  std::optional<std::size_t> fixed_count;
  /// Multiplier on the noise variance (1000 for out-of-distribution).
  double variance_scale = 1.0;
  /// Overrides the estimated noise std when set (0 disables noise).
  std::optional<double> noise_std;
  std::uint64_t seed = 0;
};

/// Samples ceil(fraction * |test|) test queries with replacement and adds
/// isotropic Gaussian noise with std = mean 1-NN distance over a 1,000-point
/// sample of `data`, scaled by sqrt(variance_scale).
Dataset generate_training_queries(const Dataset& test, const Dataset& data,
                                  const TrainingQuerySpec& spec);

}  // namespace cleann
