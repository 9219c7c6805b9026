#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "cleann/graph_store.hpp"
#include "cleann/params.hpp"
#include "cleann/search.hpp"

namespace cleann {

struct IndexStats {
  std::size_t live = 0;
  std::size_t tombstoned = 0;
  std::size_t replaceable = 0;
  std::size_t edges = 0;
  std::size_t peak_slots = 0;
};

struct BuildOptions {
  int passes = 1;          // 1 or 2
  std::uint64_t seed = 0;  // insertion-order permutation
  int threads = 1;         // >1 links points concurrently (order then varies)
};

/// Node minimizing the summed distance to the other points; computed over a
/// seeded sample of at most `sample_limit` ids (exact when fewer).
NodeId compute_medoid(const GraphStore& store, std::span<const NodeId> ids,
                      std::size_t sample_limit = 10000, std::uint64_t seed = 0);

/// Dynamic graph index. All public operations may be called concurrently,
/// except build(), rebuild() and load() which replace the graph wholesale.
///
/// Engines:
///   CleANN   robust insert with bridge building, clean searches that
///            consolidate around tombstones and recycle their slots
///   Naive    plain insert and beam search; tombstones are never cleaned
///   Fresh    Naive plus consolidate_all(), a periodic global pass
///   Rebuild  Naive between calls to rebuild(), which re-creates the graph of
///            the live points with a two-pass static build
class Index {
 public:
  explicit Index(IndexParams params, EngineMode mode = EngineMode::CleANN);

  Index(const Index&) = delete;
  Index& operator=(const Index&) = delete;

  EngineMode mode() const { return mode_; }
  const IndexParams& params() const { return params_; }
  NodeId start() const { return start_.load(std::memory_order_acquire); }
  GraphStore& store() { return *store_; }
  const GraphStore& store() const { return *store_; }

  /// Adds a point and returns the slot representing it. Throws
  /// CapacityExhausted or std::invalid_argument (dimension mismatch).
  NodeId insert(std::span<const float> x);

  /// Tombstones v in O(1). Throws InvalidOperation if v is not live.
  void remove(NodeId v);

  /// Up to k live points closest to q, ascending. k above L is clamped to L.
  std::vector<Neighbor> search(std::span<const float> q, std::size_t k,
                               bool performance_sensitive = true);

  /// The engine's beam search without result filtering.
  SearchResult beam_search(std::span<const float> q, std::size_t width,
                           bool performance_sensitive);

  /// Static build of rows of `data` (n x dim, row-major) into slots 0..n-1.
  /// The index must be empty. Deterministic for a given seed when
  /// threads == 1. Returns the slot ids (row i -> ids[i]).
  std::vector<NodeId> build(std::span<const float> data, std::size_t n, const BuildOptions& opts);

  /// Rebuild engine: replaces the graph with a two-pass static build of the
  /// current live points, keeping their slot ids. Tombstones disappear.
  void rebuild(std::uint64_t seed, int threads = 1);

  /// Fresh engine: one global consolidation pass. Returns freed slot count.
  std::size_t consolidate_all();

  IndexStats stats() const;

  void save(const std::filesystem::path& path) const;
  /// dim, capacity, R and metric come from the file; the rest from `params`.
  static std::unique_ptr<Index> load(const std::filesystem::path& path, IndexParams params,
                                     EngineMode mode = EngineMode::CleANN);

 private:
  // Links slot v (vector already stored) into the graph. `extra` joins the
  // candidate set, e.g. the out-neighbors a reused slot carried.
  void link_node(NodeId v, std::span<const NodeId> extra, float alpha, bool bridge);
  void build_graph(std::span<const NodeId> ids, const BuildOptions& opts);

  IndexParams params_;
  EngineMode mode_;
  std::unique_ptr<GraphStore> store_;
  std::atomic<NodeId> start_{kInvalidNode};
  std::mutex start_mutex_;
  std::size_t carried_peak_ = 0;
};

}  // namespace cleann
