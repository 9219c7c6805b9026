#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <random>
#include <set>

#include "cleann/bridge.hpp"
#include "cleann/index.hpp"
#include "test_util.hpp"

using namespace cleann;

TEST_CASE("default depth sets") {
  CHECK(default_depth_set(1024) == std::vector<std::uint32_t>{12, 13, 14});
  CHECK(default_depth_set(1) == std::vector<std::uint32_t>{2, 3, 4});
  CHECK(default_depth_set(1000000) == std::vector<std::uint32_t>{21, 22, 23});
  CHECK_THROWS(default_depth_set(0));
}

TEST_CASE("effective depths honour the config") {
  BridgeConfig cfg;
  CHECK(effective_depths(cfg, 1024) == std::vector<std::uint32_t>{12, 13, 14});
  cfg.depths = {3, 5};
  CHECK(effective_depths(cfg, 1024) == std::vector<std::uint32_t>{3, 5});
  cfg.enabled = false;
  CHECK(effective_depths(cfg, 1024).empty());
}

TEST_CASE("heuristic predicates") {
  SearchTree t;
  t.add_root(0);
  t.add_child(0, 1);
  t.add_child(1, 2);
  t.add_child(1, 3);
  t.add_child(2, 4);
  BridgeConfig cfg;
  cfg.predicate = BridgePredicate::SameDepth;
  CHECK(heuristic_predicate(2, 3, t, cfg));
  CHECK_FALSE(heuristic_predicate(3, 4, t, cfg));
  cfg.predicate = BridgePredicate::AlwaysTrue;
  CHECK(heuristic_predicate(3, 4, t, cfg));
  CHECK(heuristic_predicate(0, 4, t, cfg));
}

TEST_CASE("depths beyond the tree add nothing") {
  auto s = testutil::make_store(testutil::random_points(4, 2, 1), 2, 4);
  SearchTree t;
  t.add_root(0);
  t.add_child(0, 1);
  t.add_child(0, 2);
  t.add_child(0, 3);
  BridgeConfig cfg;
  cfg.predicate = BridgePredicate::AlwaysTrue;
  const std::uint32_t depths[] = {5, 6, 7};
  const auto a0 = s->adjacency_writes();
  CHECK(guided_bridge_build(*s, t, cfg, depths, 1.2f).empty());
  CHECK(s->adjacency_writes() == a0);
}

TEST_CASE("bridge edges join cousins and prune displaced edges") {
  // v0 is the root. v2 (depth 1) and u1 (depth 2, under u2) are close to each
  // other but unlinked. u2 holds a long edge back to v0.
  const std::vector<float> pts{
      0.0f, 0.0f,   // 0 v0
      3.0f, 0.0f,   // 1 v2
      3.0f, 1.0f,   // 2 u1
      3.0f, 3.0f,   // 3 u2
  };
  auto s = testutil::make_store(pts, 2, 1);
  const NodeId to_v0[] = {0};
  s->write_neighbors(3, to_v0);
  SearchTree t;
  t.add_root(0);
  t.add_child(0, 1);
  t.add_child(0, 3);
  t.add_child(3, 2);
  BridgeConfig cfg;
  cfg.predicate = BridgePredicate::AlwaysTrue;
  const std::uint32_t depths[] = {1, 2};
  const auto links = guided_bridge_build(*s, t, cfg, depths, 1.2f);

  CHECK(std::find(links.begin(), links.end(), std::pair<NodeId, NodeId>{1, 2}) != links.end());
  CHECK(std::find(links.begin(), links.end(), std::pair<NodeId, NodeId>{2, 1}) != links.end());
  CHECK(s->read_neighbors(1) == std::vector<NodeId>{2});
  CHECK(s->read_neighbors(2) == std::vector<NodeId>{1});
  // R = 1: u2's edge to v0 loses to the closer u1.
  CHECK(s->read_neighbors(3) == std::vector<NodeId>{2});
  CHECK(s->check_invariants().empty());
}

TEST_CASE("same-depth bridging only links equal-depth members of S") {
  const std::size_t n = 200, dim = 2;
  const auto pts = testutil::random_points(n, dim, 7);
  IndexParams p;
  p.dim = dim;
  p.capacity = n;
  p.max_degree = 8;
  p.insert_width = 16;
  p.bridge.enabled = false;
  Index index(p);
  index.build(pts, n, BuildOptions{1, 7, 1});
  auto& s = index.store();

  BridgeConfig cfg;
  cfg.predicate = BridgePredicate::SameDepth;
  cfg.max_pairs_per_query = 1000;
  const std::uint32_t depths[] = {2, 3};
  const auto queries = testutil::random_points(20, dim, 8);
  const NodeId start[] = {index.start()};
  std::size_t total = 0;
  for (int i = 0; i < 20; ++i) {
    const std::span<const float> q(queries.data() + i * dim, dim);
    SearchOptions opts;
    opts.record_tree = true;
    const auto r = greedy_beam_search(s, q, 16, start, opts);
    const auto links = guided_bridge_build(s, r.tree, cfg, depths, 1.2f);
    total += links.size();
    for (auto [v, w] : links) {
      const auto dv = r.tree.depth(v), dw = r.tree.depth(w);
      REQUIRE(dv.has_value());
      REQUIRE(dw.has_value());
      CHECK(*dv == *dw);
      CHECK((*dv == 2 || *dv == 3));
      CHECK(s.read_neighbors(v).size() <= p.max_degree);
    }
  }
  CHECK(total > 0);
  CHECK(s.check_invariants().empty());
}

TEST_CASE("pair cap bounds the work per query") {
  const auto pts = testutil::random_points(30, 2, 9);
  auto s = testutil::make_store(pts, 2, 8);
  SearchTree t;
  t.add_root(0);
  for (NodeId v = 1; v < 30; ++v) t.add_child(0, v);
  BridgeConfig cfg;
  cfg.max_pairs_per_query = 5;
  const std::uint32_t depths[] = {1};
  CHECK(guided_bridge_build(*s, t, cfg, depths, 1.2f).size() == 5);
  cfg.max_pairs_per_query = 0;
  CHECK(guided_bridge_build(*s, t, cfg, depths, 1.2f).empty());
}

TEST_CASE("bridging never changes the triggering search result") {
  const std::size_t n = 300, dim = 4;
  const auto pts = testutil::random_points(n, dim, 11);
  IndexParams p;
  p.dim = dim;
  p.capacity = n;
  p.max_degree = 8;
  p.insert_width = 16;
  p.bridge.enabled = false;
  Index a(p), b(p);
  a.build(pts, n, BuildOptions{1, 3, 1});
  b.build(pts, n, BuildOptions{1, 3, 1});
  IndexParams on = p, off = p;
  on.bridge.enabled = true;
  on.bridge.auto_depths = false;
  on.bridge.depths = {1, 2, 3, 4};
  const auto queries = testutil::random_points(10, dim, 12);
  for (int i = 0; i < 10; ++i) {
    const std::span<const float> q(queries.data() + i * dim, dim);
    const NodeId sa[] = {a.start()};
    const NodeId sb[] = {b.start()};
    const auto ra = clean_dynamic_beam_search(a.store(), q, 16, sa, false, on);
    const auto rb = clean_dynamic_beam_search(b.store(), q, 16, sb, false, off);
    CHECK(ra.visited == rb.visited);
    CHECK(ra.best == rb.best);
    CHECK_FALSE(ra.bridge_links.empty());
    CHECK(rb.bridge_links.empty());
    // Re-sync b so both start the next query from the same graph.
    for (NodeId v = 0; v < n; ++v) b.store().write_neighbors(v, a.store().read_neighbors(v));
  }
}

TEST_CASE("disabled bridging makes inserts match the plain insert") {
  const std::size_t n = 300, dim = 3;
  const auto pts = testutil::random_points(n, dim, 13);
  IndexParams p;
  p.dim = dim;
  p.capacity = n;
  p.max_degree = 10;
  p.insert_width = 20;
  p.bridge.enabled = false;
  Index clean(p, EngineMode::CleANN), naive(p, EngineMode::Naive);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const float> x(pts.data() + i * dim, dim);
    CHECK(clean.insert(x) == naive.insert(x));
  }
  for (NodeId v = 0; v < n; ++v) {
    CHECK(clean.store().read_neighbors(v) == naive.store().read_neighbors(v));
  }
}
