#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "cleann/graph_store.hpp"
#include "cleann/params.hpp"
#include "cleann/search.hpp"

namespace cleann {

/// {floor(log2 n) + 2, floor(log2 n) + 3, floor(log2 n) + 4}; n >= 1.
std::vector<std::uint32_t> default_depth_set(std::size_t n);

/// Depths in effect for `cfg` on an index currently holding n points.
std::vector<std::uint32_t> effective_depths(const BridgeConfig& cfg, std::size_t n);

bool heuristic_predicate(NodeId v, NodeId w, const SearchTree& tree, const BridgeConfig& cfg);

/// Links search-tree cousins: for each ordered pair (v, w), v != w, with both
/// depths in S and the predicate satisfied, runs add_neighbors(v, {w}).
/// Pairs are taken in ascending (depth(v), v, w) order and at most
/// cfg.max_pairs_per_query are processed. Endpoints that are no longer live
/// are skipped. Returns the pairs that were linked.
std::vector<std::pair<NodeId, NodeId>> guided_bridge_build(GraphStore& store,
                                                           const SearchTree& tree,
                                                           const BridgeConfig& cfg,
                                                           std::span<const std::uint32_t> depths,
                                                           float alpha);

}  // namespace cleann
