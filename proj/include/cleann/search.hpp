#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cleann/graph_store.hpp"
#include "cleann/params.hpp"

namespace cleann {

/// Bounded candidate pool realizing both the frontier and the best-L set of
/// a beam search: entries sorted by (distance, id), each flagged once it has
/// been expanded. The loop runs while an unexpanded entry remains.
class CandidatePool {
 public:
  struct Entry {
    Neighbor nb;
    bool expanded = false;
  };

  explicit CandidatePool(std::size_t width);

  /// Inserts (id, dist) if the pool has room or it beats the current worst
  /// entry (which is then evicted). Returns whether it was inserted.
  bool insert(NodeId id, float dist);

  /// Index of the closest unexpanded entry, if any.
  std::optional<std::size_t> next_unexpanded();
  void mark_expanded(std::size_t i) { entries_[i].expanded = true; }

  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  std::size_t width() const { return width_; }
  bool full() const { return entries_.size() >= width_; }

  std::vector<Neighbor> neighbors() const;

 private:
  std::size_t width_;
  std::size_t cursor_ = 0;
  std::vector<Entry> entries_;
};

struct TreeNode {
  NodeId id = kInvalidNode;
  NodeId parent = kInvalidNode;  // kInvalidNode for roots
  std::uint32_t depth = 0;
};

/// Parent/depth record of one beam search. The first node to put a child on
/// the frontier becomes its parent; roots are the start nodes at depth 0.
class SearchTree {
 public:
  void add_root(NodeId id);
  /// Returns false (and records nothing) if `child` is already in the tree.
  bool add_child(NodeId parent, NodeId child);
  /// Appends a node whose depth is already known; used by the search loop.
  void append(const TreeNode& node) {
    nodes_.push_back(node);
    if (!index_.empty()) index_.clear();
  }

  bool contains(NodeId id) const;
  std::optional<std::uint32_t> depth(NodeId id) const;
  std::optional<NodeId> parent(NodeId id) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  const TreeNode* find(NodeId id) const;

  std::vector<TreeNode> nodes_;
  mutable std::unordered_map<NodeId, std::size_t> index_;
};

struct SearchResult {
  std::vector<Neighbor> best;     // the final beam, ascending
  std::vector<NodeId> visited;    // expansion order
  SearchTree tree;

  // Side effects performed by a clean search.
  std::vector<NodeId> consolidated;  // nodes that ran clean_consolidate
  std::vector<NodeId> released;      // tombstones marked replaceable
  std::vector<std::pair<NodeId, NodeId>> bridge_links;

  std::size_t distance_evals = 0;
  /// Worst beam distance after each expansion once the beam was full.
  std::vector<float> beam_trace;
};

struct SearchOptions {
  bool record_tree = false;
  bool trace_beam = false;
};

/// Best-first beam search of width L from the start nodes. Slots found Empty
/// during traversal are skipped. Read-only on the graph.
SearchResult greedy_beam_search(const GraphStore& store, std::span<const float> query,
                                std::size_t width, std::span<const NodeId> start,
                                const SearchOptions& opts = {});

/// Beam search with on-the-fly cleaning:
///  - a tombstone expanded with H >= C is marked replaceable;
///  - every frontier addition is recorded in the search tree;
///  - a live node whose unvisited neighbors include a tombstone runs
///    clean_consolidate;
///  - performance-sensitive queries never place tombstones in the beam;
///  - other queries finish with guided_bridge_build over the tree.
SearchResult clean_dynamic_beam_search(GraphStore& store, std::span<const float> query,
                                       std::size_t width, std::span<const NodeId> start,
                                       bool performance_sensitive, const IndexParams& params,
                                       const SearchOptions& opts = {});

}  // namespace cleann
