#include "cleann/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cleann {

namespace {

std::vector<float> draw_seeds(const ClusterSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> uni(0.0f, spec.extent);
  std::vector<float> seeds(spec.clusters * spec.dim);
  for (auto& s : seeds) s = uni(rng);
  return seeds;
}

void check(const ClusterSpec& spec) {
  if (spec.dim == 0) throw std::invalid_argument("dim must be positive");
  if (spec.clusters == 0) throw std::invalid_argument("clusters must be positive");
  if (spec.cluster_size == 0) throw std::invalid_argument("cluster_size must be positive");
  if (!(spec.sigma >= 0.0f)) throw std::invalid_argument("sigma must be non-negative");
}

}  // namespace

Dataset generate_clusters(const ClusterSpec& spec) {
  check(spec);
  std::mt19937_64 rng(spec.seed);
  const auto seeds = draw_seeds(spec, rng);
  std::normal_distribution<float> noise(0.0f, spec.sigma);

  Dataset out;
  out.dim = spec.dim;
  out.values.resize(spec.n * spec.dim);
  std::size_t row = 0;
  for (std::size_t c = 0; row < spec.n; c = (c + 1) % spec.clusters) {
    const float* center = seeds.data() + c * spec.dim;
    for (std::size_t j = 0; j < spec.cluster_size && row < spec.n; ++j, ++row) {
      float* dst = out.values.data() + row * spec.dim;
      for (std::size_t d = 0; d < spec.dim; ++d) dst[d] = center[d] + noise(rng);
    }
  }
  if (!spec.clustered_order) {
    std::vector<std::size_t> perm(spec.n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> shuffled(out.values.size());
    for (std::size_t i = 0; i < spec.n; ++i) {
      std::copy_n(out.values.begin() + perm[i] * spec.dim, spec.dim,
                  shuffled.begin() + i * spec.dim);
    }
    out.values = std::move(shuffled);
  }
  return out;
}

Dataset generate_cluster_queries(const ClusterSpec& spec, std::size_t count, std::uint64_t seed) {
  check(spec);
  std::mt19937_64 seed_rng(spec.seed);
  const auto seeds = draw_seeds(spec, seed_rng);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, spec.clusters - 1);
  std::normal_distribution<float> noise(0.0f, spec.sigma);
  Dataset out;
  out.dim = spec.dim;
  out.values.resize(count * spec.dim);
  for (std::size_t i = 0; i < count; ++i) {
    const float* center = seeds.data() + pick(rng) * spec.dim;
    for (std::size_t d = 0; d < spec.dim; ++d) out.values[i * spec.dim + d] = center[d] + noise(rng);
  }
  return out;
}

double mean_nn_distance(const Dataset& data, std::size_t sample_limit, std::uint64_t seed) {
  const auto n = data.size();
  if (n < 2) throw std::invalid_argument("need at least two points to estimate 1-NN distance");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  if (n > sample_limit) {
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(std::max<std::size_t>(sample_limit, 2));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    float best = std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, distance_unchecked(data.row(ids[i]).data(), data.row(ids[j]).data(),
                                               data.dim, Metric::L2));
    }
    total += std::sqrt(static_cast<double>(best));
  }
  return total / static_cast<double>(ids.size());
}

Dataset generate_training_queries(const Dataset& test, const Dataset& data,
                                  const TrainingQuerySpec& spec) {
  if (test.size() == 0) throw std::invalid_argument("no test queries to sample from");
  if (!spec.fixed_count && !(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
    throw std::invalid_argument("training fraction must be in (0, 1]");
  }
  const std::size_t count =
      spec.fixed_count ? *spec.fixed_count
                       : static_cast<std::size_t>(std::ceil(spec.fraction * double(test.size())));
  double std_dev = 0.0;
  if (spec.noise_std) {
    std_dev = *spec.noise_std;
  } else {
    if (data.size() == 0) throw std::invalid_argument("dataset sample is empty");
    std_dev = mean_nn_distance(data, 1000, spec.seed ^ 0x9e3779b97f4a7c15ull);
  }
  std_dev *= std::sqrt(spec.variance_scale);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, test.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset out;
  out.dim = test.dim;
  out.values.resize(count * test.dim);
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = test.row(pick(rng));
    for (std::size_t d = 0; d < test.dim; ++d) {
      // Draw even when std_dev is 0 so the sampled rows do not depend on it.
      const double z = noise(rng);
      out.values[i * test.dim + d] = static_cast<float>(src[d] + std_dev * z);
    }
  }
  return out;
}

}  // namespace cleann
