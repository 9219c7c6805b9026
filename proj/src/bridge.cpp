#include "cleann/bridge.hpp"

#include <algorithm>
#include <bit>

#include "cleann/prune.hpp"

namespace cleann {

std::vector<std::uint32_t> default_depth_set(std::size_t n) {
  if (n == 0) throw std::invalid_argument("default_depth_set: n must be >= 1");
  const auto lg = static_cast<std::uint32_t>(std::bit_width(n) - 1);
  return {lg + 2, lg + 3, lg + 4};
}

std::vector<std::uint32_t> effective_depths(const BridgeConfig& cfg, std::size_t n) {
  if (!cfg.enabled) return {};
  if (cfg.auto_depths && cfg.depths.empty()) return default_depth_set(std::max<std::size_t>(n, 1));
  return cfg.depths;
}

bool heuristic_predicate(NodeId v, NodeId w, const SearchTree& tree, const BridgeConfig& cfg) {
  switch (cfg.predicate) {
    case BridgePredicate::AlwaysTrue:
      return true;
    case BridgePredicate::SameDepth:
      return tree.depth(v) == tree.depth(w);
  }
  return false;
}

std::vector<std::pair<NodeId, NodeId>> guided_bridge_build(GraphStore& store,
                                                           const SearchTree& tree,
                                                           const BridgeConfig& cfg,
                                                           std::span<const std::uint32_t> depths,
                                                           float alpha) {
  std::vector<std::pair<NodeId, NodeId>> linked;
  if (!cfg.enabled || depths.empty() || cfg.max_pairs_per_query == 0) return linked;

  std::vector<TreeNode> members;
  for (const auto& n : tree.nodes()) {
    if (std::find(depths.begin(), depths.end(), n.depth) != depths.end()) members.push_back(n);
  }
  if (members.size() < 2) return linked;
  std::sort(members.begin(), members.end(), [](const TreeNode& a, const TreeNode& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.id < b.id);
  });

  auto try_link = [&](const TreeNode& v, const TreeNode& w) {
    if (!store.is_live(v.id) || !store.is_live(w.id)) return;
    const NodeId target[] = {w.id};
    add_neighbors(store, v.id, target, alpha);
    linked.emplace_back(v.id, w.id);
  };

  std::size_t budget = cfg.max_pairs_per_query;
  if (cfg.predicate == BridgePredicate::SameDepth) {
    // Pairs only exist inside a depth bucket.
    for (std::size_t lo = 0; lo < members.size() && budget > 0;) {
      std::size_t hi = lo;
      while (hi < members.size() && members[hi].depth == members[lo].depth) ++hi;
      for (std::size_t i = lo; i < hi && budget > 0; ++i) {
        for (std::size_t j = lo; j < hi && budget > 0; ++j) {
          if (i == j) continue;
          --budget;
          try_link(members[i], members[j]);
        }
      }
      lo = hi;
    }
  } else {
    for (std::size_t i = 0; i < members.size() && budget > 0; ++i) {
      for (std::size_t j = 0; j < members.size() && budget > 0; ++j) {
        if (i == j) continue;
        --budget;
        try_link(members[i], members[j]);
      }
    }
  }
  return linked;
}

}  // namespace cleann
