#include "cleann/oracle.hpp"

#include <algorithm>
#include <iostream>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include <omp.h>

namespace cleann {

namespace {

std::size_t clamp_k(std::size_t k, std::size_t n) {
  if (k > n) {
    std::cerr << "warning: k=" << k << " exceeds point count " << n << "; truncating\n";
    return n;
  }
  return k;
}

void check_query(std::span<const float> query, const PointSet& points) {
  if (query.size() != points.dim) throw std::invalid_argument("exact_knn: dimension mismatch");
}

}  // namespace

std::vector<std::uint32_t> exact_knn(std::span<const float> query, std::size_t k,
                                     const PointSet& points, Metric metric) {
  check_query(query, points);
  const std::size_t n = points.size();
  k = clamp_k(k, n);
  std::vector<std::pair<float, std::uint32_t>> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    scored[i] = {distance_unchecked(query.data(), points.row(i), points.dim, metric),
                 points.label(i)};
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                    scored.end());
  std::vector<std::uint32_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

std::vector<std::uint32_t> exact_knn_heap(std::span<const float> query, std::size_t k,
                                          const PointSet& points, Metric metric) {
  check_query(query, points);
  const std::size_t n = points.size();
  k = clamp_k(k, n);
  if (k == 0) return {};
  // Max-heap on (distance, label): top is the current worst kept entry.
  std::priority_queue<std::pair<float, std::uint32_t>> heap;
  for (std::size_t i = 0; i < n; ++i) {
    std::pair<float, std::uint32_t> cand{
        distance_unchecked(query.data(), points.row(i), points.dim, metric), points.label(i)};
    if (heap.size() < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
  }
  std::vector<std::uint32_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> exact_knn_batch(std::span<const float> queries,
                                                        std::size_t k, const PointSet& points,
                                                        Metric metric, int threads) {
  if (points.dim == 0 || queries.size() % points.dim != 0) {
    throw std::invalid_argument("exact_knn_batch: query block is not a multiple of dim");
  }
  const auto nq = static_cast<std::int64_t>(queries.size() / points.dim);
  k = clamp_k(k, points.size());
  std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(nq));
  const int t = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(t)
  for (std::int64_t i = 0; i < nq; ++i) {
    out[i] = exact_knn(queries.subspan(static_cast<std::size_t>(i) * points.dim, points.dim), k,
                       points, metric);
  }
  return out;
}

double recall(std::span<const std::uint32_t> result, std::span<const std::uint32_t> truth) {
  if (truth.empty()) return 1.0;
  const std::unordered_set<std::uint32_t> wanted(truth.begin(), truth.end());
  std::unordered_set<std::uint32_t> hit;
  for (auto id : result) {
    if (wanted.contains(id)) hit.insert(id);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(truth.size());
}

}  // namespace cleann
