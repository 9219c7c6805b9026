#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "cleann/metric.hpp"
#include "cleann/params.hpp"

namespace cleann {

/// Lifecycle of a slot. The normal cycle is Empty -> Live -> Tombstoned ->
/// Replaceable -> Live. The global-consolidation baseline additionally sends
/// tombstoned slots straight back to Empty.
enum class SlotStatus : std::uint8_t { Empty = 0, Live = 1, Tombstoned = 2, Replaceable = 3 };

struct AcquiredSlot {
  NodeId id = kInvalidNode;
  bool reused = false;
  /// Out-neighbors the slot carried while it represented its previous point.
  std::vector<NodeId> retained_neighbors;
};

struct StoreStats {
  std::size_t live = 0;
  std::size_t tombstoned = 0;
  std::size_t replaceable = 0;
  std::size_t edges = 0;
  std::size_t peak_slots = 0;
};

/// Fixed-capacity slot arena holding vectors, adjacency lists, tombstone
/// counters and the pool of reusable slots.
///
/// Locking: each slot has a reader-writer lock guarding its adjacency list and
/// an exclusive lock guarding its consolidation counter H together with its
/// status. One pool lock guards the empty list and the replaceable set. The
/// only nested acquisition is H lock -> pool lock (mark_replaceable, release)
/// and H lock -> adjacency lock (acquire_slot on reuse, release).
///
/// Vector payloads are written without a lock when a slot is (re)acquired. A
/// concurrent search reaching a reused slot through a stale edge may read a
/// mix of old and new coordinates; this only perturbs a distance estimate.
class GraphStore {
 public:
  GraphStore(std::size_t dim, std::size_t capacity, std::uint32_t max_degree, Metric metric,
             ReusePolicy reuse = ReusePolicy::FreshFirst);

  GraphStore(const GraphStore&) = delete;
  GraphStore& operator=(const GraphStore&) = delete;

  std::size_t dim() const { return dim_; }
  std::size_t capacity() const { return capacity_; }
  std::uint32_t max_degree() const { return max_degree_; }
  Metric metric() const { return metric_; }
  ReusePolicy reuse_policy() const { return reuse_; }

  const float* vector_data(NodeId v) const { return values_.data() + std::size_t{v} * dim_; }
  std::span<const float> vector(NodeId v) const { return {vector_data(v), dim_}; }
  void set_vector(NodeId v, std::span<const float> x);

  float distance(NodeId a, NodeId b) const {
    return distance_unchecked(vector_data(a), vector_data(b), dim_, metric_);
  }
  float distance_to(NodeId a, const float* q) const {
    return distance_unchecked(vector_data(a), q, dim_, metric_);
  }

  SlotStatus status(NodeId v) const {
    return static_cast<SlotStatus>(slots_[v].status.load(std::memory_order_acquire));
  }
  bool is_live(NodeId v) const { return status(v) == SlotStatus::Live; }
  /// True for deleted points, whether or not the slot is already reusable.
  bool is_tombstoned(NodeId v) const {
    const auto s = status(v);
    return s == SlotStatus::Tombstoned || s == SlotStatus::Replaceable;
  }

  // --- slot lifecycle -----------------------------------------------------

  /// Hands out an Empty or Replaceable slot (order per ReusePolicy) and marks
  /// it Live. Throws CapacityExhausted when neither kind is available.
  AcquiredSlot acquire_slot();

  /// Marks a specific Empty slot Live with the given vector. Used by static
  /// builds and snapshot loading, never concurrently with acquire_slot.
  void place_live(NodeId v, std::span<const float> x);

  /// Delete: Live -> Tombstoned with H = 0. Touches only v's H entry.
  /// Throws InvalidOperation if v is not Live.
  void tombstone(NodeId v);

  /// Contract-checked transition Tombstoned -> Replaceable. Requires
  /// H(v) >= threshold and v not pinned; otherwise throws InvalidOperation.
  void mark_replaceable(NodeId v, std::uint32_t threshold);

  /// Search-side variant: performs the transition if the preconditions hold
  /// and reports whether it did.
  bool try_mark_replaceable(NodeId v, std::uint32_t threshold);

  /// Increments H(v) if it is present. Returns false when H(v) is absent
  /// (slot already replaceable, reused or live).
  bool increment_consolidations(NodeId v);

  std::optional<std::uint32_t> consolidation_count(NodeId v) const;

  /// Tombstoned/Replaceable -> Empty, dropping the adjacency list.
  void release_to_empty(NodeId v);

  /// Pinned slots are never made replaceable (used for the start node).
  void pin(NodeId v) { slots_[v].pinned.store(true, std::memory_order_release); }
  bool pinned(NodeId v) const { return slots_[v].pinned.load(std::memory_order_acquire); }

  std::vector<NodeId> replaceable_snapshot() const;

  // --- adjacency ----------------------------------------------------------

  std::vector<NodeId> read_neighbors(NodeId v) const;
  /// Copies N(v) into `out` and returns the list's version stamp.
  std::uint64_t read_neighbors_into(NodeId v, std::vector<NodeId>& out) const;

  /// Replaces N(v). Throws InvariantViolation on lists longer than R, with
  /// self loops, duplicates or out-of-range ids.
  void write_neighbors(NodeId v, std::span<const NodeId> list);

  /// Replaces N(v) only if it was not modified since `version` was read.
  bool write_neighbors_if_unchanged(NodeId v, std::span<const NodeId> list,
                                    std::uint64_t version);

  /// Read-modify-write of N(v) under its exclusive lock. `fn` receives a
  /// mutable copy; the result is validated before it is committed.
  template <class Fn>
  void modify_neighbors(NodeId v, Fn&& fn) {
    auto& slot = slots_[v];
    std::unique_lock lock(slot.adj_mutex);
    std::vector<NodeId> next = slot.neighbors;
    fn(next);
    validate_list(v, next);
    slot.neighbors = std::move(next);
    ++slot.version;
    adjacency_writes_.fetch_add(1, std::memory_order_relaxed);
  }

  void validate_list(NodeId v, std::span<const NodeId> list) const;

  // --- introspection ------------------------------------------------------

  StoreStats stats() const;
  std::size_t live_count() const { return live_.load(std::memory_order_relaxed); }

  /// Quiescent audit of every slot and pool invariant; returns one message
  /// per violation found.
  std::vector<std::string> check_invariants() const;

  std::uint64_t h_writes() const { return h_writes_.load(std::memory_order_relaxed); }
  std::uint64_t adjacency_writes() const {
    return adjacency_writes_.load(std::memory_order_relaxed);
  }

  // --- snapshot -----------------------------------------------------------

  void save(std::ostream& out, NodeId start) const;
  static std::unique_ptr<GraphStore> load(std::istream& in, NodeId& start,
                                          ReusePolicy reuse = ReusePolicy::FreshFirst);

 private:
  struct Slot {
    mutable std::shared_mutex adj_mutex;
    std::vector<NodeId> neighbors;
    std::uint64_t version = 0;

    mutable std::mutex h_mutex;
    std::int32_t h = -1;  // -1: absent

    std::atomic<std::uint8_t> status{0};
    std::atomic<bool> pinned{false};
  };

  void set_status(Slot& s, SlotStatus st) {
    s.status.store(static_cast<std::uint8_t>(st), std::memory_order_release);
  }
  void note_occupied();

  std::size_t dim_;
  std::size_t capacity_;
  std::uint32_t max_degree_;
  Metric metric_;
  ReusePolicy reuse_;

  std::vector<float> values_;
  std::unique_ptr<Slot[]> slots_;

  mutable std::mutex pool_mutex_;
  std::vector<NodeId> empty_slots_;    // stack, lowest id on top
  std::deque<NodeId> replaceable_;     // oldest first

  std::atomic<std::size_t> live_{0};
  std::atomic<std::size_t> tombstoned_{0};
  std::atomic<std::size_t> replaceable_count_{0};
  std::atomic<std::size_t> occupied_{0};
  std::atomic<std::size_t> peak_{0};

  std::atomic<std::uint64_t> h_writes_{0};
  std::atomic<std::uint64_t> adjacency_writes_{0};
};

}  // namespace cleann
