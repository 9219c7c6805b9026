#include "cleann/prune.hpp"

namespace cleann {

std::vector<NodeId> dedup_candidates(NodeId v, std::span<const NodeId> candidates) {
  std::vector<NodeId> out;
  out.reserve(candidates.size());
  for (auto c : candidates) {
    if (c == v || c == kInvalidNode) continue;
    if (std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<NodeId> robust_prune(const GraphStore& store, NodeId v,
                                 std::span<const NodeId> candidates, float alpha,
                                 std::size_t max_degree, PruneTrace* trace) {
  return robust_prune_with(
      v, candidates, alpha, max_degree,
      [&store](NodeId a, NodeId b) { return store.distance(a, b); }, trace);
}

void add_neighbors(GraphStore& store, NodeId v, std::span<const NodeId> added, float alpha) {
  const std::size_t bound = store.max_degree();
  store.modify_neighbors(v, [&](std::vector<NodeId>& list) {
    std::vector<NodeId> merged;
    merged.reserve(list.size() + added.size());
    auto keep = [&](NodeId u) {
      if (u == v || u >= store.capacity()) return;
      if (store.status(u) == SlotStatus::Empty) return;
      if (std::find(merged.begin(), merged.end(), u) != merged.end()) return;
      merged.push_back(u);
    };
    for (auto u : list) keep(u);
    for (auto u : added) keep(u);
    if (merged.size() < bound) {
      list = std::move(merged);
    } else {
      list = robust_prune(store, v, merged, alpha, bound);
    }
  });
}

}  // namespace cleann
