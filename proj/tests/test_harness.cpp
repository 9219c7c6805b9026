#include <doctest.h>

#include <stdexcept>

#include <sstream>

#include "cleann/harness.hpp"
#include "cleann/synth.hpp"

using namespace cleann;

namespace {

WorkloadConfig small_config(Protocol protocol, EngineMode engine) {
  WorkloadConfig cfg;
  cfg.engine = engine;
  cfg.protocol = protocol;
  cfg.window_size = 300;
  cfg.batch_fraction = 0.05;
  cfg.rounds = 4;
  cfg.threads = 2;
  cfg.k = 5;
  cfg.seed = 1;
  cfg.index.max_degree = 12;
  cfg.index.search_width = 16;
  cfg.index.insert_width = 16;
  cfg.capacity_factor = 2.0;
  cfg.check_invariants = true;
  return cfg;
}

struct Data {
  Dataset points, queries;
  Data() {
    ClusterSpec s;
    s.n = 600;
    s.dim = 4;
    s.clusters = 30;
    s.cluster_size = 20;
    s.sigma = 0.02f;
    s.clustered_order = false;
    s.seed = 2;
    points = generate_clusters(s);
    queries = generate_cluster_queries(s, 20, 3);
  }
};

}  // namespace

TEST_CASE("config validation") {
  WorkloadConfig cfg;
  cfg.rounds = 0;
  CHECK_THROWS(cfg.validate());
  cfg.rounds = 1;
  cfg.batch_fraction = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.batch_fraction = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg.batch_fraction = 0.01;
  cfg.k = 0;
  CHECK_THROWS(cfg.validate());
  cfg.k = 10;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.batch_size() == 50);
}

TEST_CASE("protocol and training names round trip") {
  for (auto p : {Protocol::BatchedUpdate, Protocol::BatchedInsert, Protocol::MixedUpdate}) {
    CHECK(parse_protocol(protocol_name(p)) == p);
  }
  for (auto t : {TrainingMode::None, TrainingMode::InDistribution, TrainingMode::OutOfDistribution}) {
    CHECK(parse_training(training_name(t)) == t);
  }
  CHECK_THROWS(parse_protocol("bogus"));
}

TEST_CASE("batched update conserves the window in every engine") {
  const Data d;
  for (auto e : {EngineMode::CleANN, EngineMode::Naive, EngineMode::Fresh, EngineMode::Rebuild}) {
    auto cfg = small_config(Protocol::BatchedUpdate, e);
    cfg.record_history = true;
    const auto r = run_sliding_window(cfg, d.points, d.queries);
    CHECK(r.violations.empty());
    REQUIRE(r.rounds.size() == 4);
    for (const auto& m : r.rounds) {
      CHECK(m.live_nodes == 300);
      REQUIRE(m.recall_at_k.has_value());
      CHECK(*m.recall_at_k >= 0.0);
      CHECK(*m.recall_at_k <= 1.0);
      CHECK(m.peak_slots <= 600);
    }
    CHECK(r.final_live.size() == 300);
  }
}

TEST_CASE("batched insert grows the window") {
  const Data d;
  const auto cfg = small_config(Protocol::BatchedInsert, EngineMode::CleANN);
  const auto r = run_sliding_window(cfg, d.points, d.queries);
  CHECK(r.violations.empty());
  for (const auto& m : r.rounds) CHECK(m.live_nodes == 300 + m.round * 15);
}

TEST_CASE("mixed update reports throughput only and passes the audit") {
  const Data d;
  auto cfg = small_config(Protocol::MixedUpdate, EngineMode::CleANN);
  cfg.record_history = true;
  const auto r = run_sliding_window(cfg, d.points, d.queries);
  CHECK(r.violations.empty());
  for (const auto& m : r.rounds) CHECK_FALSE(m.recall_at_k.has_value());
}

TEST_CASE("running out of data stops early with partial metrics") {
  const Data d;
  auto cfg = small_config(Protocol::BatchedUpdate, EngineMode::Naive);
  cfg.rounds = 100;
  const auto r = run_sliding_window(cfg, d.points, d.queries);
  CHECK(r.stopped_early);
  CHECK(r.rounds.size() == 20);
}

TEST_CASE("running out of slots stops early") {
  const Data d;
  auto cfg = small_config(Protocol::BatchedUpdate, EngineMode::CleANN);
  cfg.capacity_factor = 1.0;
  cfg.index.eagerness = 1000;
  cfg.rounds = 10;
  const auto r = run_sliding_window(cfg, d.points, d.queries);
  CHECK(r.stopped_early);
  CHECK(r.rounds.empty());
}

TEST_CASE("audit flags a history that disagrees with the store") {
  GraphStore s(1, 4, 2, Metric::L2);
  const float x[] = {0};
  s.place_live(0, x);
  s.place_live(1, x);
  std::vector<std::pair<std::uint32_t, NodeId>> initial{{0, 0}, {1, 1}};
  std::vector<OpRecord> history{{OpKind::Delete, 0, 0, 10, 20}};
  // Row 0 was deleted but slot 0 is still live.
  CHECK_FALSE(audit_history(initial, history, s).empty());
  s.tombstone(0);
  CHECK(audit_history(initial, history, s).empty());
  // Reusing a slot before the previous tenant's delete was invoked is a violation.
  history.push_back({OpKind::Insert, 2, 1, 1, 5});
  history.push_back({OpKind::Delete, 1, 1, 30, 40});
  CHECK_FALSE(audit_history(initial, history, s).empty());
}

TEST_CASE("metrics csv round trip and json lines") {
  std::vector<RoundMetrics> rounds(2);
  rounds[0].round = 1;
  rounds[0].recall_at_k = 0.75;
  rounds[0].insert_qps = 100.5;
  rounds[0].live_nodes = 42;
  rounds[1].round = 2;
  rounds[1].peak_slots = 7;
  std::stringstream csv;
  write_rounds_csv(csv, rounds);
  const auto back = read_rounds_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].recall_at_k == 0.75);
  CHECK(back[0].insert_qps == doctest::Approx(100.5));
  CHECK(back[0].live_nodes == 42);
  CHECK_FALSE(back[1].recall_at_k.has_value());
  CHECK(back[1].peak_slots == 7);

  std::stringstream js;
  write_round_jsonl(js, WorkloadConfig{}, rounds[0]);
  const auto line = js.str();
  CHECK(line.find("\"schema_version\":1") != std::string::npos);
  CHECK(line.back() == '\n');

  CHECK(mean_recall(rounds) == doctest::Approx(0.75));
}
