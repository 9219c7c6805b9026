#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cleann/graph_store.hpp"
#include "cleann/params.hpp"

namespace cleann {

/// Record of one pruning run: which candidate knocked out which.
struct PruneTrace {
  std::vector<NodeId> selected;                       // in selection order
  std::vector<std::pair<NodeId, NodeId>> removed_by;  // (pruned candidate, witness)
};

/// Removes `v` and repeated ids, keeping first occurrences in order.
std::vector<NodeId> dedup_candidates(NodeId v, std::span<const NodeId> candidates);

/// Alpha-RNG neighbor selection over an arbitrary distance `dist(a, b)`.
///
/// Candidates at or under the bound are returned unchanged (after dedup).
/// Otherwise the closest remaining candidate p is selected repeatedly, and
/// every remaining p' with alpha * dist(p', p) < dist(p', v) is discarded,
/// until R nodes are selected or no candidates remain. Distance ties go to
/// the lower id.
template <class DistFn>
std::vector<NodeId> robust_prune_with(NodeId v, std::span<const NodeId> candidates, float alpha,
                                      std::size_t max_degree, DistFn&& dist,
                                      PruneTrace* trace = nullptr) {
  auto pool = dedup_candidates(v, candidates);
  if (pool.size() <= max_degree) {
    if (trace) trace->selected = pool;
    return pool;
  }

  std::vector<Neighbor> ranked;
  ranked.reserve(pool.size());
  for (auto c : pool) ranked.push_back({c, dist(c, v)});
  std::sort(ranked.begin(), ranked.end());

  std::vector<NodeId> out;
  out.reserve(max_degree);
  std::vector<bool> removed(ranked.size(), false);
  for (std::size_t i = 0; i < ranked.size() && out.size() < max_degree; ++i) {
    if (removed[i]) continue;
    const NodeId p = ranked[i].id;
    removed[i] = true;
    out.push_back(p);
    if (trace) trace->selected.push_back(p);
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      if (removed[j]) continue;
      if (alpha * dist(ranked[j].id, p) < ranked[j].distance) {
        removed[j] = true;
        if (trace) trace->removed_by.emplace_back(ranked[j].id, p);
      }
    }
  }
  return out;
}

/// robust_prune over the vectors held by `store`.
std::vector<NodeId> robust_prune(const GraphStore& store, NodeId v,
                                 std::span<const NodeId> candidates, float alpha,
                                 std::size_t max_degree, PruneTrace* trace = nullptr);

/// N(v) := N(v) U new, pruned back to R when the union reaches the bound.
/// Runs entirely under v's exclusive adjacency lock. Self loops, duplicates
/// and ids of empty slots are dropped first.
void add_neighbors(GraphStore& store, NodeId v, std::span<const NodeId> added, float alpha);

}  // namespace cleann
