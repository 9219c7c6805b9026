#include "cleann/search.hpp"

#include <algorithm>

#include "cleann/bridge.hpp"
#include "cleann/consolidate.hpp"

namespace cleann {

CandidatePool::CandidatePool(std::size_t width) : width_(width) {
  if (width == 0) throw std::invalid_argument("beam width must be >= 1");
  entries_.reserve(width + 1);
}

bool CandidatePool::insert(NodeId id, float dist) {
  const Neighbor nb{id, dist};
  if (entries_.size() >= width_ && !(nb < entries_.back().nb)) return false;
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), nb,
                              [](const Entry& e, const Neighbor& n) { return e.nb < n; });
  const auto at = static_cast<std::size_t>(pos - entries_.begin());
  entries_.insert(pos, Entry{nb, false});
  if (entries_.size() > width_) entries_.pop_back();
  if (at < cursor_) cursor_ = at;
  return true;
}

std::optional<std::size_t> CandidatePool::next_unexpanded() {
  while (cursor_ < entries_.size() && entries_[cursor_].expanded) ++cursor_;
  if (cursor_ >= entries_.size()) return std::nullopt;
  return cursor_;
}

std::vector<Neighbor> CandidatePool::neighbors() const {
  std::vector<Neighbor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.nb);
  return out;
}

void SearchTree::add_root(NodeId id) {
  if (contains(id)) return;
  append({id, kInvalidNode, 0});
}

bool SearchTree::add_child(NodeId parent, NodeId child) {
  if (contains(child)) return false;
  const auto* p = find(parent);
  if (!p) throw std::invalid_argument("SearchTree: parent not in tree");
  append({child, parent, p->depth + 1});
  return true;
}

const TreeNode* SearchTree::find(NodeId id) const {
  if (index_.size() != nodes_.size()) {
    index_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i].id, i);
  }
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

bool SearchTree::contains(NodeId id) const { return find(id) != nullptr; }

std::optional<std::uint32_t> SearchTree::depth(NodeId id) const {
  const auto* n = find(id);
  if (!n) return std::nullopt;
  return n->depth;
}

std::optional<NodeId> SearchTree::parent(NodeId id) const {
  const auto* n = find(id);
  if (!n) return std::nullopt;
  return n->parent;
}

namespace {

// Per-thread seen/visited marks, reset in O(1) per query by bumping an epoch.
class VisitMarks {
 public:
  void begin(std::size_t capacity) {
    if (stamp_.size() < capacity) {
      stamp_.resize(capacity, 0);
      depth_.resize(capacity, 0);
    }
    if (epoch_ >= 0xFFFFFFF0u) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 0;
    }
    epoch_ += 2;
  }
  bool seen(NodeId v) const { return stamp_[v] >= epoch_; }
  bool visited(NodeId v) const { return stamp_[v] == epoch_ + 1; }
  void mark_seen(NodeId v, std::uint32_t depth) {
    stamp_[v] = epoch_;
    depth_[v] = depth;
  }
  void mark_visited(NodeId v) { stamp_[v] = epoch_ + 1; }
  std::uint32_t depth(NodeId v) const { return depth_[v]; }

 private:
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> depth_;
  std::uint32_t epoch_ = 0;
};

VisitMarks& thread_marks() {
  thread_local VisitMarks marks;
  return marks;
}

struct CleanHooks {
  GraphStore* store = nullptr;
  bool performance_sensitive = false;
  const IndexParams* params = nullptr;
};

SearchResult run_beam_search(const GraphStore& store, std::span<const float> query,
                             std::size_t width, std::span<const NodeId> start,
                             const SearchOptions& opts, const CleanHooks* clean) {
  if (query.size() != store.dim()) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                " does not match index dimension " +
                                std::to_string(store.dim()));
  }
  SearchResult result;
  CandidatePool pool(width);
  auto& marks = thread_marks();
  marks.begin(store.capacity());
  const bool record_tree = opts.record_tree || clean != nullptr;
  const bool skip_tombstones = clean && clean->performance_sensitive;
  const float* q = query.data();

  for (auto s : start) {
    if (s >= store.capacity() || store.status(s) == SlotStatus::Empty || marks.seen(s)) continue;
    marks.mark_seen(s, 0);
    if (record_tree) result.tree.append({s, kInvalidNode, 0});
    pool.insert(s, store.distance_to(s, q));
    ++result.distance_evals;
  }

  std::vector<NodeId> nbrs;
  while (auto slot = pool.next_unexpanded()) {
    const NodeId w = pool[*slot].nb.id;
    pool.mark_expanded(*slot);
    marks.mark_visited(w);
    result.visited.push_back(w);

    if (clean && store.status(w) == SlotStatus::Tombstoned) {
      if (clean->store->try_mark_replaceable(w, clean->params->eagerness)) {
        result.released.push_back(w);
      }
    }

    store.read_neighbors_into(w, nbrs);
    const std::uint32_t child_depth = marks.depth(w) + 1;
    bool unvisited_tombstone = false;
    for (auto u : nbrs) {
      if (u >= store.capacity()) continue;
      const auto st = store.status(u);
      if (st == SlotStatus::Empty || marks.visited(u)) continue;
      const bool deleted = st == SlotStatus::Tombstoned || st == SlotStatus::Replaceable;
      unvisited_tombstone |= deleted;
      if (marks.seen(u)) continue;
      marks.mark_seen(u, child_depth);
      if (record_tree) result.tree.append({u, w, child_depth});
      if (skip_tombstones && deleted) continue;
      pool.insert(u, store.distance_to(u, q));
      ++result.distance_evals;
    }

    if (clean && unvisited_tombstone && store.is_live(w)) {
      clean_consolidate(*clean->store, w, clean->params->alpha);
      result.consolidated.push_back(w);
    }
    if (opts.trace_beam && pool.full()) result.beam_trace.push_back(pool[pool.size() - 1].nb.distance);
  }

  result.best = pool.neighbors();
  return result;
}

}  // namespace

SearchResult greedy_beam_search(const GraphStore& store, std::span<const float> query,
                                std::size_t width, std::span<const NodeId> start,
                                const SearchOptions& opts) {
  return run_beam_search(store, query, width, start, opts, nullptr);
}

SearchResult clean_dynamic_beam_search(GraphStore& store, std::span<const float> query,
                                       std::size_t width, std::span<const NodeId> start,
                                       bool performance_sensitive, const IndexParams& params,
                                       const SearchOptions& opts) {
  const CleanHooks hooks{&store, performance_sensitive, &params};
  auto result = run_beam_search(store, query, width, start, opts, &hooks);
  if (!performance_sensitive && params.bridge.enabled) {
    const auto depths = effective_depths(params.bridge, store.live_count());
    result.bridge_links =
        guided_bridge_build(store, result.tree, params.bridge, depths, params.alpha);
  }
  return result;
}

}  // namespace cleann
