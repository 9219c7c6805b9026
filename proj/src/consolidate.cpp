#include "cleann/consolidate.hpp"

#include <algorithm>

#include "cleann/prune.hpp"

namespace cleann {

namespace {

// Candidate set for v given a snapshot of N(v). Returns false when the
// snapshot contains no deleted neighbor.
bool gather_candidates(const GraphStore& store, NodeId v, const std::vector<NodeId>& current,
                       std::vector<NodeId>& out) {
  out.clear();
  bool saw_deleted = false;
  std::vector<NodeId> grand;
  auto push = [&](NodeId u) {
    if (std::find(out.begin(), out.end(), u) == out.end()) out.push_back(u);
  };
  for (auto w : current) {
    const auto st = store.status(w);
    if (st == SlotStatus::Live) {
      push(w);
      continue;
    }
    saw_deleted = true;
    if (st == SlotStatus::Empty) continue;
    store.read_neighbors_into(w, grand);
    for (auto u : grand) {
      if (u != v && store.is_live(u)) push(u);
    }
  }
  return saw_deleted;
}

std::vector<NodeId> bound(const GraphStore& store, NodeId v, std::vector<NodeId> candidates,
                          float alpha) {
  if (candidates.size() < store.max_degree()) return candidates;
  return robust_prune(store, v, candidates, alpha, store.max_degree());
}

}  // namespace

bool consolidate(GraphStore& store, NodeId v, float alpha) {
  std::vector<NodeId> current, candidates;
  // Optimistic: gather without holding v's lock (reading other lists while
  // holding it could deadlock against a mirror-image consolidation), then
  // commit only if N(v) is unchanged.
  constexpr int kOptimisticAttempts = 4;
  for (int attempt = 0; attempt < kOptimisticAttempts; ++attempt) {
    const auto version = store.read_neighbors_into(v, current);
    if (!gather_candidates(store, v, current, candidates)) return false;
    auto next = bound(store, v, std::move(candidates), alpha);
    if (store.write_neighbors_if_unchanged(v, next, version)) return true;
  }
  // Contended: fold in whatever was added since the last snapshot.
  store.read_neighbors_into(v, current);
  if (!gather_candidates(store, v, current, candidates)) return false;
  store.modify_neighbors(v, [&](std::vector<NodeId>& list) {
    auto merged = candidates;
    for (auto u : list) {
      if (u != v && store.is_live(u) &&
          std::find(merged.begin(), merged.end(), u) == merged.end()) {
        merged.push_back(u);
      }
    }
    list = bound(store, v, std::move(merged), alpha);
  });
  return true;
}

std::vector<NodeId> clean_consolidate(GraphStore& store, NodeId v, float alpha) {
  std::vector<NodeId> deleted;
  for (auto w : store.read_neighbors(v)) {
    if (store.is_tombstoned(w)) deleted.push_back(w);
  }
  if (deleted.empty()) return {};
  consolidate(store, v, alpha);
  std::vector<NodeId> counted;
  for (auto w : deleted) {
    if (store.increment_consolidations(w)) counted.push_back(w);
  }
  return counted;
}

std::size_t global_consolidate_baseline(GraphStore& store, float alpha) {
  std::vector<NodeId> doomed;
  const auto cap = static_cast<NodeId>(store.capacity());
  for (NodeId v = 0; v < cap; ++v) {
    if (store.status(v) == SlotStatus::Tombstoned && !store.pinned(v)) doomed.push_back(v);
  }
  if (doomed.empty()) return 0;
  for (NodeId v = 0; v < cap; ++v) {
    if (store.is_live(v)) consolidate(store, v, alpha);
  }
  std::size_t freed = 0;
  for (auto t : doomed) {
    if (store.status(t) == SlotStatus::Tombstoned) {
      store.release_to_empty(t);
      ++freed;
    }
  }
  return freed;
}

}  // namespace cleann
