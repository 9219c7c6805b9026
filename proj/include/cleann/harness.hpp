#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cleann/dataset_io.hpp"
#include "cleann/index.hpp"
#include "cleann/params.hpp"

namespace cleann {

enum class Protocol { BatchedUpdate, BatchedInsert, MixedUpdate };
Protocol parse_protocol(std::string_view name);  // batched-update|batched-insert|mixed-update
std::string_view protocol_name(Protocol p);

enum class TrainingMode { None, InDistribution, OutOfDistribution };
TrainingMode parse_training(std::string_view name);  // none|in-dist|ood
std::string_view training_name(TrainingMode m);

struct WorkloadConfig {
  EngineMode engine = EngineMode::CleANN;
  Protocol protocol = Protocol::BatchedUpdate;
  std::size_t window_size = 5000;
  double batch_fraction = 0.01;
  std::size_t rounds = 50;
  int threads = 1;
  double train_fraction = 0.02;
  std::optional<std::size_t> train_count;
  TrainingMode training = TrainingMode::InDistribution;
  std::size_t k = 10;
  std::uint64_t seed = 0;

  /// dim and capacity are filled in by the harness; capacity from
  /// capacity_factor * window for engines that recycle slots, and from the
  /// total number of points for Naive.
  IndexParams index;
  double capacity_factor = 1.2;
  int initial_passes = 2;

  /// Directory for cached per-round ground truth; empty disables caching.
  std::filesystem::path truth_cache_dir;
  /// Record every completed insert/delete with timestamps (MixedUpdate).
  bool record_history = false;
  /// Run the arena's quiescent invariant audit after every round.
  bool check_invariants = false;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  std::size_t batch_size() const;
};

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  std::optional<double> recall_at_k;  // absent for MixedUpdate
  double insert_qps = 0.0;
  double delete_qps = 0.0;
  double search_qps = 0.0;
  std::size_t live_nodes = 0;
  std::size_t tombstones = 0;
  std::size_t replaceable = 0;
  std::size_t peak_slots = 0;
  double seconds = 0.0;
};

enum class OpKind : std::uint8_t { Insert, Delete };

/// One completed update. `row` is the data point (stream position), `slot`
/// the index slot representing it. Times are steady-clock nanoseconds.
struct OpRecord {
  OpKind kind;
  std::uint32_t row;
  NodeId slot;
  std::int64_t invoked_ns;
  std::int64_t returned_ns;
};

struct WorkloadResult {
  std::vector<RoundMetrics> rounds;
  bool stopped_early = false;
  std::string stop_reason;
  /// Conservation and arena invariant failures, one message each.
  std::vector<std::string> violations;
  /// Populated when record_history is set.
  std::vector<OpRecord> history;
  /// (row, slot) pairs of the initial window.
  std::vector<std::pair<std::uint32_t, NodeId>> initial;
  /// (row, slot) pairs live at the end, as tracked by the driver.
  std::vector<std::pair<std::uint32_t, NodeId>> final_live;
};

using RoundCallback = std::function<void(const RoundMetrics&)>;

/// Runs the sliding-window experiment over `data` (in stream order) with
/// `queries` as the test set. The first window_size rows are built
/// statically; each round then streams batch_size() further rows. Stops
/// early, keeping the metrics so far, when the data runs out. When
/// record_history is set the history is audited at the end and any findings
/// join `violations`.
WorkloadResult run_sliding_window(const WorkloadConfig& cfg, const Dataset& data,
                                  const Dataset& queries, const RoundCallback& on_round = {});

/// Checks a recorded update history against the final index state: the live
/// slots must be exactly those implied by replaying the completed operations,
/// no slot may host two live points, and a reused slot's insert must not
/// complete before the previous occupant's delete was invoked.
std::vector<std::string> audit_history(const std::vector<std::pair<std::uint32_t, NodeId>>& initial,
                                       const std::vector<OpRecord>& history,
                                       const GraphStore& store);

inline constexpr int kMetricsSchemaVersion = 1;

void write_round_jsonl(std::ostream& out, const WorkloadConfig& cfg, const RoundMetrics& m);
void write_rounds_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds);
/// Parses a CSV written by write_rounds_csv.
std::vector<RoundMetrics> read_rounds_csv(std::istream& in);

/// Mean recall over rounds [first, last] (1-based, inclusive) that have one.
double mean_recall(const std::vector<RoundMetrics>& rounds, std::size_t first = 1,
                   std::size_t last = static_cast<std::size_t>(-1));

}  // namespace cleann
