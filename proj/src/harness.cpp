#include "cleann/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "cleann/oracle.hpp"
#include "cleann/synth.hpp"

namespace cleann {

Protocol parse_protocol(std::string_view name) {
  if (name == "batched-update") return Protocol::BatchedUpdate;
  if (name == "batched-insert") return Protocol::BatchedInsert;
  if (name == "mixed-update") return Protocol::MixedUpdate;
  throw std::invalid_argument("unknown protocol '" + std::string(name) +
                              "' (expected batched-update|batched-insert|mixed-update)");
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::BatchedUpdate: return "batched-update";
    case Protocol::BatchedInsert: return "batched-insert";
    case Protocol::MixedUpdate: return "mixed-update";
  }
  return "?";
}

TrainingMode parse_training(std::string_view name) {
  if (name == "none") return TrainingMode::None;
  if (name == "in-dist") return TrainingMode::InDistribution;
  if (name == "ood") return TrainingMode::OutOfDistribution;
  throw std::invalid_argument("unknown training mode '" + std::string(name) +
                              "' (expected none|in-dist|ood)");
}

std::string_view training_name(TrainingMode m) {
  switch (m) {
    case TrainingMode::None: return "none";
    case TrainingMode::InDistribution: return "in-dist";
    case TrainingMode::OutOfDistribution: return "ood";
  }
  return "?";
}

void WorkloadConfig::validate() const {
  if (window_size == 0) throw std::invalid_argument("window_size must be positive");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw std::invalid_argument("batch_fraction must be in (0, 1]");
  }
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!train_count && !(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0, 1]");
  }
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (!(capacity_factor >= 1.0)) throw std::invalid_argument("capacity_factor must be >= 1");
  if (initial_passes != 1 && initial_passes != 2) {
    throw std::invalid_argument("initial_passes must be 1 or 2");
  }
}

std::size_t WorkloadConfig::batch_size() const {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(batch_fraction * double(window_size))));
}

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch())
      .count();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

enum class Task : std::uint8_t { Insert, Delete, TrainSearch, TestSearch };

struct Op {
  Task task;
  std::uint32_t arg;  // row for Insert, FIFO position for Delete, query index otherwise
};

// Per-thread counters, merged after each parallel phase.
struct alignas(64) ThreadTally {
  double insert_s = 0, delete_s = 0, search_s = 0;
  std::size_t inserts = 0, deletes = 0, searches = 0;
  std::vector<std::pair<std::uint32_t, NodeId>> inserted;
  std::vector<OpRecord> history;
};

double rate(std::size_t count, double busy_s, int threads) {
  if (count == 0 || busy_s <= 0.0) return 0.0;
  return double(count) * threads / busy_s;
}

class TruthSource {
 public:
  TruthSource(const WorkloadConfig& cfg, const Dataset& data, const Dataset& queries)
      : cfg_(cfg), data_(data), queries_(queries) {
    if (!cfg.truth_cache_dir.empty()) {
      std::filesystem::create_directories(cfg.truth_cache_dir);
      base_ = dataset_hash(data) ^ (dataset_hash(queries) * 31);
    }
  }

  std::vector<std::vector<std::uint32_t>> get(std::size_t round,
                                              const std::deque<std::pair<std::uint32_t, NodeId>>& live) {
    std::filesystem::path file;
    if (!cfg_.truth_cache_dir.empty()) {
      const std::uint64_t fields[] = {base_,
                                      cfg_.window_size,
                                      cfg_.batch_size(),
                                      round,
                                      cfg_.k,
                                      static_cast<std::uint64_t>(cfg_.index.metric),
                                      cfg_.protocol == Protocol::BatchedInsert ? 1u : 0u};
      const auto key = fnv1a(std::as_bytes(std::span{fields}));
      char name[40];
      std::snprintf(name, sizeof(name), "truth_%016llx.bin",
                    static_cast<unsigned long long>(key));
      file = cfg_.truth_cache_dir / name;
      if (std::filesystem::exists(file)) {
        auto t = read_truth(file);
        if (t.k == cfg_.k && t.rows.size() == queries_.size()) return std::move(t.rows);
      }
    }
    std::vector<std::uint32_t> rows;
    rows.reserve(live.size());
    for (const auto& e : live) rows.push_back(e.first);
    std::sort(rows.begin(), rows.end());
    std::vector<float> values(rows.size() * data_.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(data_.row(rows[i]).data(), data_.dim, values.begin() + i * data_.dim);
    }
    PointSet points{values, data_.dim, rows};
    auto truth = exact_knn_batch(queries_.values, cfg_.k, points, cfg_.index.metric, cfg_.threads);
    if (!file.empty()) write_truth(file, GroundTruth{cfg_.k, truth});
    return truth;
  }

 private:
  const WorkloadConfig& cfg_;
  const Dataset& data_;
  const Dataset& queries_;
  std::uint64_t base_ = 0;
};

std::size_t pick_capacity(const WorkloadConfig& cfg, std::size_t total_rows) {
  const std::size_t b = cfg.batch_size();
  const std::size_t streamed = std::min(total_rows - cfg.window_size, cfg.rounds * b);
  std::size_t cap = static_cast<std::size_t>(std::ceil(cfg.capacity_factor * cfg.window_size));
  cap = std::max(cap, cfg.window_size + 1);
  if (cfg.protocol == Protocol::BatchedInsert) cap += streamed;
  // Naive never frees a slot.
  if (cfg.engine == EngineMode::Naive) cap = std::max(cap, cfg.window_size + streamed + 1);
  return cap;
}

}  // namespace

WorkloadResult run_sliding_window(const WorkloadConfig& cfg, const Dataset& data,
                                  const Dataset& queries, const RoundCallback& on_round) {
  cfg.validate();
  if (data.dim == 0 || data.dim != queries.dim) {
    throw std::invalid_argument("data and queries must share a positive dimension");
  }
  if (data.size() < cfg.window_size) {
    throw std::invalid_argument("dataset smaller than the window");
  }
  if (queries.size() == 0) throw std::invalid_argument("no test queries");

  const int threads = cfg.threads;
  const std::size_t batch = cfg.batch_size();
  const std::size_t window = cfg.window_size;

  IndexParams params = cfg.index;
  params.dim = data.dim;
  params.capacity = pick_capacity(cfg, data.size());
  Index index(params, cfg.engine);
  const auto ids = index.build(data.rows(0, window), window,
                               BuildOptions{cfg.initial_passes, cfg.seed, threads});

  WorkloadResult result;
  std::vector<std::uint32_t> slot_row(params.capacity, std::numeric_limits<std::uint32_t>::max());
  std::deque<std::pair<std::uint32_t, NodeId>> fifo;
  for (std::size_t i = 0; i < window; ++i) {
    slot_row[ids[i]] = static_cast<std::uint32_t>(i);
    fifo.emplace_back(static_cast<std::uint32_t>(i), ids[i]);
  }
  result.initial.assign(fifo.begin(), fifo.end());

  Dataset training;
  training.dim = data.dim;
  if (cfg.training != TrainingMode::None) {
    Dataset sample;
    sample.dim = data.dim;
    sample.values.assign(data.values.begin(), data.values.begin() + window * data.dim);
    TrainingQuerySpec spec;
    spec.fraction = cfg.train_fraction;
    spec.fixed_count = cfg.train_count;
    spec.variance_scale = cfg.training == TrainingMode::OutOfDistribution ? 1000.0 : 1.0;
    spec.seed = cfg.seed ^ 0x5851f42d4c957f2dull;
    training = generate_training_queries(queries, sample, spec);
  }

  TruthSource truth_source(cfg, data, queries);
  std::vector<ThreadTally> tallies(static_cast<std::size_t>(threads));
  std::mt19937_64 rng(cfg.seed);
  std::size_t next_row = window;
  const bool deletes = cfg.protocol != Protocol::BatchedInsert;
  const bool mixed = cfg.protocol == Protocol::MixedUpdate;

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    if (next_row + batch > data.size()) {
      result.stopped_early = true;
      result.stop_reason = "dataset exhausted after " + std::to_string(round - 1) + " rounds";
      break;
    }
    const auto round_start = Clock::now();
    for (auto& t : tallies) t = ThreadTally{};

    std::vector<std::pair<std::uint32_t, NodeId>> doomed;
    if (deletes) {
      for (std::size_t i = 0; i < batch; ++i) {
        doomed.push_back(fifo.front());
        fifo.pop_front();
      }
    }
    std::vector<Op> ops;
    for (std::size_t i = 0; i < batch; ++i) {
      ops.push_back({Task::Insert, static_cast<std::uint32_t>(next_row + i)});
    }
    for (std::size_t i = 0; i < doomed.size(); ++i) {
      ops.push_back({Task::Delete, static_cast<std::uint32_t>(i)});
    }
    if (mixed) {
      for (std::size_t i = 0; i < training.size(); ++i) {
        ops.push_back({Task::TrainSearch, static_cast<std::uint32_t>(i)});
      }
      for (std::size_t i = 0; i < queries.size(); ++i) {
        ops.push_back({Task::TestSearch, static_cast<std::uint32_t>(i)});
      }
    }
    std::shuffle(ops.begin(), ops.end(), rng);

    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto nops = static_cast<std::int64_t>(ops.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t i = 0; i < nops; ++i) {
      auto& tally = tallies[static_cast<std::size_t>(omp_get_thread_num())];
      const Op op = ops[static_cast<std::size_t>(i)];
      try {
        const auto t0 = now_ns();
        switch (op.task) {
          case Task::Insert: {
            const NodeId slot = index.insert(data.row(op.arg));
            const auto t1 = now_ns();
            slot_row[slot] = op.arg;
            tally.inserted.emplace_back(op.arg, slot);
            tally.insert_s += double(t1 - t0) * 1e-9;
            ++tally.inserts;
            if (cfg.record_history) tally.history.push_back({OpKind::Insert, op.arg, slot, t0, t1});
            break;
          }
          case Task::Delete: {
            const auto [row, slot] = doomed[op.arg];
            index.remove(slot);
            const auto t1 = now_ns();
            tally.delete_s += double(t1 - t0) * 1e-9;
            ++tally.deletes;
            if (cfg.record_history) tally.history.push_back({OpKind::Delete, row, slot, t0, t1});
            break;
          }
          case Task::TrainSearch:
            index.search(training.row(op.arg), cfg.k, false);
            tally.search_s += double(now_ns() - t0) * 1e-9;
            ++tally.searches;
            break;
          case Task::TestSearch:
            index.search(queries.row(op.arg), cfg.k, true);
            tally.search_s += double(now_ns() - t0) * 1e-9;
            ++tally.searches;
            break;
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    bool out_of_slots = false;
    if (failure) {
      try {
        std::rethrow_exception(failure);
      } catch (const CapacityExhausted&) {
        out_of_slots = true;
      }
    }

    double rebuild_s = 0.0;
    if (cfg.engine == EngineMode::Rebuild && !out_of_slots) {
      const auto t = Clock::now();
      index.rebuild(cfg.seed + round, threads);
      rebuild_s = seconds_since(t);
    }

    std::vector<std::pair<std::uint32_t, NodeId>> inserted;
    for (auto& t : tallies) {
      inserted.insert(inserted.end(), t.inserted.begin(), t.inserted.end());
      if (cfg.record_history) {
        result.history.insert(result.history.end(), t.history.begin(), t.history.end());
      }
    }
    std::sort(inserted.begin(), inserted.end());
    fifo.insert(fifo.end(), inserted.begin(), inserted.end());
    next_row += batch;
    if (out_of_slots) {
      // The partial round is not reported; the operations that completed
      // still count for the audit.
      result.stopped_early = true;
      result.stop_reason = "index capacity exhausted in round " + std::to_string(round);
      std::erase_if(fifo, [&](const auto& e) { return index.store().status(e.second) != SlotStatus::Live; });
      break;
    }

    RoundMetrics m;
    m.round = round;

    if (!mixed) {
      std::thread fresh_pass;
      if (cfg.engine == EngineMode::Fresh) fresh_pass = std::thread([&] { index.consolidate_all(); });

      const auto ntrain = static_cast<std::int64_t>(training.size());
      const auto ntest = static_cast<std::int64_t>(queries.size());
      std::vector<std::vector<std::uint32_t>> answers(queries.size());
      std::exception_ptr search_failure;
#pragma omp parallel num_threads(threads)
      {
        auto& tally = tallies[static_cast<std::size_t>(omp_get_thread_num())];
        try {
#pragma omp for schedule(dynamic, 1)
          for (std::int64_t i = 0; i < ntrain; ++i) {
            const auto t0 = now_ns();
            index.search(training.row(static_cast<std::size_t>(i)), cfg.k, false);
            tally.search_s += double(now_ns() - t0) * 1e-9;
            ++tally.searches;
          }
#pragma omp for schedule(dynamic, 1)
          for (std::int64_t i = 0; i < ntest; ++i) {
            const auto t0 = now_ns();
            const auto res = index.search(queries.row(static_cast<std::size_t>(i)), cfg.k, true);
            tally.search_s += double(now_ns() - t0) * 1e-9;
            ++tally.searches;
            auto& out = answers[static_cast<std::size_t>(i)];
            for (const auto& nb : res) out.push_back(slot_row[nb.id]);
          }
        } catch (...) {
#pragma omp critical
          if (!search_failure) search_failure = std::current_exception();
        }
      }
      if (fresh_pass.joinable()) fresh_pass.join();
      if (search_failure) std::rethrow_exception(search_failure);

      const auto truth = truth_source.get(round, fifo);
      double acc = 0.0;
      for (std::size_t i = 0; i < answers.size(); ++i) acc += recall(answers[i], truth[i]);
      m.recall_at_k = acc / double(answers.size());
    }

    ThreadTally sum;
    for (const auto& t : tallies) {
      sum.insert_s += t.insert_s;
      sum.delete_s += t.delete_s;
      sum.search_s += t.search_s;
      sum.inserts += t.inserts;
      sum.deletes += t.deletes;
      sum.searches += t.searches;
    }
    // Rebuild's rebuild is charged to the updates that made it necessary.
    sum.insert_s += rebuild_s * threads;
    if (sum.deletes > 0) sum.delete_s += rebuild_s * threads;
    m.insert_qps = rate(sum.inserts, sum.insert_s, threads);
    m.delete_qps = rate(sum.deletes, sum.delete_s, threads);
    m.search_qps = rate(sum.searches, sum.search_s, threads);

    const auto st = index.stats();
    m.live_nodes = st.live;
    m.tombstones = st.tombstoned;
    m.replaceable = st.replaceable;
    m.peak_slots = st.peak_slots;
    m.seconds = seconds_since(round_start);

    const std::size_t expected_live =
        cfg.protocol == Protocol::BatchedInsert ? window + round * batch : window;
    if (m.live_nodes != expected_live || fifo.size() != expected_live) {
      result.violations.push_back("round " + std::to_string(round) + ": live_nodes " +
                                  std::to_string(m.live_nodes) + ", expected " +
                                  std::to_string(expected_live));
    }
    if (cfg.check_invariants) {
      for (auto& v : index.store().check_invariants()) {
        result.violations.push_back("round " + std::to_string(round) + ": " + v);
      }
    }
    result.rounds.push_back(m);
    if (on_round) on_round(m);
  }

  result.final_live.assign(fifo.begin(), fifo.end());
  if (cfg.record_history) {
    for (auto& v : audit_history(result.initial, result.history, index.store())) {
      result.violations.push_back("history: " + v);
    }
  }
  return result;
}

std::vector<std::string> audit_history(const std::vector<std::pair<std::uint32_t, NodeId>>& initial,
                                       const std::vector<OpRecord>& history,
                                       const GraphStore& store) {
  std::vector<std::string> out;
  constexpr auto kNever = std::numeric_limits<std::int64_t>::min();

  // One tenancy per data point: the slot it occupied, when it got there and
  // when its deletion was invoked.
  struct Tenancy {
    NodeId slot = kInvalidNode;
    std::int64_t arrived = kNever;
    std::optional<std::int64_t> delete_invoked;
  };
  std::unordered_map<std::uint32_t, Tenancy> tenancy;
  for (const auto& [row, slot] : initial) tenancy[row] = {slot, kNever, std::nullopt};
  for (const auto& op : history) {
    if (op.kind != OpKind::Insert) continue;
    if (!tenancy.emplace(op.row, Tenancy{op.slot, op.returned_ns, std::nullopt}).second) {
      out.push_back("row " + std::to_string(op.row) + " inserted twice");
    }
  }
  for (const auto& op : history) {
    if (op.kind != OpKind::Delete) continue;
    auto it = tenancy.find(op.row);
    if (it == tenancy.end()) {
      out.push_back("row " + std::to_string(op.row) + " deleted but never inserted");
      continue;
    }
    if (it->second.slot != op.slot) {
      out.push_back("row " + std::to_string(op.row) + " deleted through slot " +
                    std::to_string(op.slot) + " but lives in slot " +
                    std::to_string(it->second.slot));
    }
    if (it->second.delete_invoked) out.push_back("row " + std::to_string(op.row) + " deleted twice");
    it->second.delete_invoked = op.invoked_ns;
  }

  // Replay: the live set implied by the history, per slot.
  std::map<NodeId, std::vector<std::pair<std::int64_t, std::uint32_t>>> by_slot;
  for (const auto& [row, t] : tenancy) by_slot[t.slot].emplace_back(t.arrived, row);
  std::vector<bool> expected_live(store.capacity(), false);
  for (auto& [slot, stays] : by_slot) {
    if (slot >= store.capacity()) {
      out.push_back("slot " + std::to_string(slot) + " out of range");
      continue;
    }
    std::sort(stays.begin(), stays.end());
    for (std::size_t i = 0; i < stays.size(); ++i) {
      const auto& t = tenancy[stays[i].second];
      const bool last = i + 1 == stays.size();
      if (!last) {
        const auto next_arrival = stays[i + 1].first;
        if (!t.delete_invoked) {
          out.push_back("slot " + std::to_string(slot) + " reused while row " +
                        std::to_string(stays[i].second) + " was live");
        } else if (*t.delete_invoked >= next_arrival) {
          out.push_back("slot " + std::to_string(slot) + " reused before the delete of row " +
                        std::to_string(stays[i].second) + " was invoked");
        }
      } else if (!t.delete_invoked) {
        expected_live[slot] = true;
      }
    }
  }
  for (NodeId v = 0; v < store.capacity(); ++v) {
    const bool live = store.is_live(v);
    if (live != expected_live[v]) {
      out.push_back("slot " + std::to_string(v) + (live ? " is live" : " is not live") +
                    " but the history implies otherwise");
    }
  }
  return out;
}

void write_round_jsonl(std::ostream& out, const WorkloadConfig& cfg, const RoundMetrics& m) {
  nlohmann::json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["engine"] = engine_name(cfg.engine);
  j["protocol"] = protocol_name(cfg.protocol);
  j["round"] = m.round;
  j["recall_at_k"] = m.recall_at_k ? nlohmann::json(*m.recall_at_k) : nlohmann::json(nullptr);
  j["k"] = cfg.k;
  j["insert_qps"] = m.insert_qps;
  j["delete_qps"] = m.delete_qps;
  j["search_qps"] = m.search_qps;
  j["live_nodes"] = m.live_nodes;
  j["tombstones"] = m.tombstones;
  j["replaceable"] = m.replaceable;
  j["peak_slots"] = m.peak_slots;
  j["seconds"] = m.seconds;
  out << j.dump() << '\n';
}

namespace {
constexpr const char* kCsvHeader =
    "schema_version,round,recall_at_k,insert_qps,delete_qps,search_qps,live_nodes,tombstones,"
    "replaceable,peak_slots,seconds";
}

void write_rounds_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds) {
  out << kCsvHeader << '\n';
  for (const auto& m : rounds) {
    out << kMetricsSchemaVersion << ',' << m.round << ',';
    if (m.recall_at_k) out << *m.recall_at_k;
    out << ',' << m.insert_qps << ',' << m.delete_qps << ',' << m.search_qps << ','
        << m.live_nodes << ',' << m.tombstones << ',' << m.replaceable << ',' << m.peak_slots
        << ',' << m.seconds << '\n';
  }
}

std::vector<RoundMetrics> read_rounds_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("unrecognized metrics CSV header");
  }
  std::vector<RoundMetrics> rounds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11) {
      throw std::runtime_error("metrics CSV line " + std::to_string(lineno) + ": expected 11 fields");
    }
    RoundMetrics m;
    m.round = std::stoul(f[1]);
    if (!f[2].empty()) m.recall_at_k = std::stod(f[2]);
    m.insert_qps = std::stod(f[3]);
    m.delete_qps = std::stod(f[4]);
    m.search_qps = std::stod(f[5]);
    m.live_nodes = std::stoul(f[6]);
    m.tombstones = std::stoul(f[7]);
    m.replaceable = std::stoul(f[8]);
    m.peak_slots = std::stoul(f[9]);
    m.seconds = std::stod(f[10]);
    rounds.push_back(m);
  }
  return rounds;
}

double mean_recall(const std::vector<RoundMetrics>& rounds, std::size_t first, std::size_t last) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& m : rounds) {
    if (m.round < first || m.round > last || !m.recall_at_k) continue;
    acc += *m.recall_at_k;
    ++n;
  }
  return n == 0 ? 0.0 : acc / double(n);
}

}  // namespace cleann
