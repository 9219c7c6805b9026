#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <set>

#include "cleann/index.hpp"
#include "cleann/oracle.hpp"
#include "cleann/synth.hpp"
#include "test_util.hpp"

using namespace cleann;

namespace {

IndexParams small_params(std::size_t dim, std::size_t capacity) {
  IndexParams p;
  p.dim = dim;
  p.capacity = capacity;
  p.max_degree = 16;
  p.search_width = 32;
  p.insert_width = 32;
  return p;
}

double index_recall(Index& index, const Dataset& data, const Dataset& queries, std::size_t k) {
  const PointSet ps{data.values, data.dim, {}};
  double acc = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto truth = exact_knn(queries.row(i), k, ps, Metric::L2);
    std::vector<std::uint32_t> got;
    for (const auto& nb : index.search(queries.row(i), k)) got.push_back(nb.id);
    acc += recall(got, truth);
  }
  return acc / double(queries.size());
}

}  // namespace

TEST_CASE("empty index") {
  Index index(small_params(2, 8));
  const float q[] = {0, 0};
  CHECK(index.search(q, 1).empty());
  const float bad[] = {0, 0, 0};
  CHECK_THROWS_AS(index.search(bad, 1), std::invalid_argument);
  CHECK_THROWS_AS(index.search(q, 0), std::invalid_argument);
}

TEST_CASE("first insert becomes the start and is found") {
  Index index(small_params(2, 8));
  const float x[] = {1, 2};
  const auto id = index.insert(x);
  CHECK(index.start() == id);
  CHECK(index.store().read_neighbors(id).empty());
  const auto r = index.search(x, 1);
  REQUIRE(r.size() == 1);
  CHECK(r[0].id == id);
}

TEST_CASE("insert validates dimension and capacity") {
  Index index(small_params(2, 2));
  const float bad[] = {1};
  CHECK_THROWS_AS(index.insert(bad), std::invalid_argument);
  const float x[] = {1, 2}, y[] = {3, 4}, z[] = {5, 6};
  index.insert(x);
  index.insert(y);
  CHECK_THROWS_AS(index.insert(z), CapacityExhausted);
}

TEST_CASE("deleted points never come back from search") {
  const auto pts = testutil::random_points(200, 3, 1);
  Index index(small_params(3, 200));
  index.build(pts, 200, BuildOptions{1, 1, 1});
  for (NodeId v = 0; v < 200; v += 3) {
    if (v == index.start()) continue;
    index.remove(v);
    const std::span<const float> x(pts.data() + v * 3, 3);
    for (const auto& nb : index.search(x, 1)) CHECK(nb.id != v);
    for (const auto& nb : index.search(x, 10, false)) CHECK(nb.id != v);
  }
  CHECK_THROWS_AS(index.remove(3), InvalidOperation);
}

TEST_CASE("search results are live, unique and sorted in every engine") {
  const auto pts = testutil::random_points(300, 4, 2);
  for (auto mode : {EngineMode::CleANN, EngineMode::Naive, EngineMode::Fresh, EngineMode::Rebuild}) {
    Index index(small_params(4, 300), mode);
    index.build(pts, 300, BuildOptions{1, 2, 1});
    for (NodeId v = 1; v < 300; v += 4) {
      if (v != index.start()) index.remove(v);
    }
    const auto qs = testutil::random_points(20, 4, 3);
    for (std::size_t i = 0; i < 20; ++i) {
      const auto r = index.search({qs.data() + i * 4, 4}, 10);
      std::set<NodeId> ids;
      for (std::size_t j = 0; j < r.size(); ++j) {
        CHECK(index.store().is_live(r[j].id));
        CHECK(ids.insert(r[j].id).second);
        if (j > 0) CHECK(r[j - 1].distance <= r[j].distance);
      }
    }
  }
}

TEST_CASE("delete is constant work") {
  const auto pts = testutil::random_points(100, 2, 4);
  for (auto mode : {EngineMode::CleANN, EngineMode::Naive, EngineMode::Fresh, EngineMode::Rebuild}) {
    Index index(small_params(2, 100), mode);
    index.build(pts, 100, BuildOptions{1, 4, 1});
    for (NodeId v = 10; v < 20; ++v) {
      const auto h0 = index.store().h_writes();
      const auto a0 = index.store().adjacency_writes();
      index.remove(v);
      CHECK(index.store().h_writes() - h0 == 1);
      CHECK(index.store().adjacency_writes() == a0);
    }
  }
}

TEST_CASE("build of a single point") {
  Index index(small_params(2, 4));
  const float x[] = {0.5f, 0.5f};
  index.build(x, 1, BuildOptions{2, 0, 1});
  CHECK(index.start() == 0);
  CHECK(index.store().read_neighbors(0).empty());
  CHECK(index.stats().live == 1);
  CHECK(index.stats().edges == 0);
}

TEST_CASE("build rejects bad input") {
  Index index(small_params(2, 4));
  const float x[] = {0, 0, 1};
  CHECK_THROWS_AS(index.build(x, 2, BuildOptions{}), std::invalid_argument);
  CHECK_THROWS_AS(index.build({}, 0, BuildOptions{}), std::invalid_argument);
  const float y[] = {0, 0};
  CHECK_THROWS_AS(index.build(y, 1, BuildOptions{3, 0, 1}), std::invalid_argument);
}

TEST_CASE("builds are deterministic per seed and always valid") {
  const auto pts = testutil::random_points(300, 3, 5);
  auto edges = [&](std::uint64_t seed) {
    Index index(small_params(3, 300));
    index.build(pts, 300, BuildOptions{2, seed, 1});
    CHECK(index.store().check_invariants().empty());
    std::vector<std::vector<NodeId>> out;
    for (NodeId v = 0; v < 300; ++v) out.push_back(index.store().read_neighbors(v));
    return out;
  };
  CHECK(edges(1) == edges(1));
  edges(2);
}

TEST_CASE("two-pass builds beat one-pass builds on average") {
  double one = 0.0, two = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ClusterSpec spec;
    spec.n = 2000;
    spec.dim = 16;
    spec.clusters = 200;
    spec.cluster_size = 10;
    spec.sigma = 0.02f;
    spec.clustered_order = false;
    spec.seed = seed;
    const auto data = generate_clusters(spec);
    const auto queries = generate_cluster_queries(spec, 100, seed + 100);
    auto p = small_params(spec.dim, spec.n);
    p.max_degree = 12;
    p.search_width = 12;
    p.bridge.enabled = false;
    Index a(p, EngineMode::Naive), b(p, EngineMode::Naive);
    a.build(data.values, spec.n, BuildOptions{1, seed, 1});
    b.build(data.values, spec.n, BuildOptions{2, seed, 1});
    one += index_recall(a, data, queries, 10);
    two += index_recall(b, data, queries, 10);
  }
  CHECK(two >= one);
}

TEST_CASE("incremental inserts reach high recall on clustered 2-D data") {
  ClusterSpec spec;
  spec.n = 500;
  spec.dim = 2;
  spec.clusters = 10;
  spec.cluster_size = 50;
  spec.sigma = 0.02f;
  spec.seed = 9;
  const auto data = generate_clusters(spec);
  const auto queries = generate_cluster_queries(spec, 100, 10);
  IndexParams p;
  p.dim = 2;
  p.capacity = 500;
  p.max_degree = 32;
  p.search_width = 64;
  p.insert_width = 64;
  Index index(p);
  for (std::size_t i = 0; i < data.size(); ++i) index.insert(data.row(i));
  CHECK(index_recall(index, data, queries, 10) >= 0.95);
  CHECK(index.store().check_invariants().empty());
}

TEST_CASE("reused slots start from their retained neighbors") {
  const auto pts = testutil::random_points(50, 2, 11);
  auto p = small_params(2, 50);
  p.eagerness = 0;
  Index index(p);
  index.build(pts, 50, BuildOptions{1, 11, 1});
  const NodeId victim = index.start() == 7 ? 8 : 7;
  index.remove(victim);
  index.store().mark_replaceable(victim, 0);
  const float x[] = {0.25f, 0.75f};
  CHECK(index.insert(x) == victim);
  CHECK(index.store().is_live(victim));
  CHECK(index.store().check_invariants().empty());
}

TEST_CASE("rebuild keeps the live set and drops tombstones") {
  const auto pts = testutil::random_points(200, 3, 12);
  Index index(small_params(3, 200), EngineMode::Rebuild);
  index.build(pts, 200, BuildOptions{2, 12, 1});
  std::set<NodeId> live;
  for (NodeId v = 0; v < 200; ++v) {
    if (v % 5 == 0 && v != index.start()) {
      index.remove(v);
    } else {
      live.insert(v);
    }
  }
  index.rebuild(13);
  const auto st = index.stats();
  CHECK(st.live == live.size());
  CHECK(st.tombstoned == 0);
  for (NodeId v = 0; v < 200; ++v) CHECK(index.store().is_live(v) == (live.count(v) == 1));
  CHECK(index.store().check_invariants().empty());
}

TEST_CASE("save and load round trip") {
  const auto pts = testutil::random_points(100, 4, 14);
  Index index(small_params(4, 120));
  index.build(pts, 100, BuildOptions{1, 14, 1});
  index.remove(5 == index.start() ? 6 : 5);
  const auto path = std::filesystem::temp_directory_path() / "index_roundtrip.bin";
  index.save(path);
  auto loaded = Index::load(path, small_params(0, 0));
  std::filesystem::remove(path);
  CHECK(loaded->start() == index.start());
  const auto a = index.stats(), b = loaded->stats();
  CHECK(a.live == b.live);
  CHECK(a.tombstoned == b.tombstoned);
  CHECK(a.edges == b.edges);
  const auto qs = testutil::random_points(10, 4, 15);
  for (std::size_t i = 0; i < 10; ++i) {
    const std::span<const float> q(qs.data() + i * 4, 4);
    CHECK(index.search(q, 5) == loaded->search(q, 5));
  }
}

TEST_CASE("medoid is the point with the smallest distance sum") {
  const std::vector<float> pts{0, 0, 1, 0, 2, 0};
  auto s = testutil::make_store(pts, 2, 4);
  const NodeId ids[] = {0, 1, 2};
  CHECK(compute_medoid(*s, ids) == 1);
}

TEST_CASE("engine names round trip") {
  for (auto m : {EngineMode::CleANN, EngineMode::Naive, EngineMode::Fresh, EngineMode::Rebuild}) {
    CHECK(parse_engine(engine_name(m)) == m);
  }
  CHECK_THROWS(parse_engine("nope"));
}
