#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <random>

#include "cleann/oracle.hpp"
#include "test_util.hpp"

using namespace cleann;

TEST_CASE("k = n returns every point in distance order") {
  const std::vector<float> pts{3, 1, 2, 0, 5};
  const PointSet ps{pts, 1, {}};
  const float q[] = {0};
  CHECK(exact_knn(q, 5, ps, Metric::L2) == std::vector<std::uint32_t>{3, 1, 2, 0, 4});
}

TEST_CASE("a dataset point is its own nearest neighbor") {
  const auto pts = testutil::random_points(100, 5, 1);
  const PointSet ps{pts, 5, {}};
  for (std::size_t i = 0; i < 100; i += 7) {
    CHECK(exact_knn({pts.data() + i * 5, 5}, 1, ps, Metric::L2).front() == i);
  }
}

TEST_CASE("ties break towards the lower id") {
  const std::vector<float> pts{1, -1, 1, -1};
  const PointSet ps{pts, 1, {}};
  const float q[] = {0};
  CHECK(exact_knn(q, 4, ps, Metric::L2) == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(exact_knn_heap(q, 4, ps, Metric::L2) == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("k larger than n is truncated") {
  const std::vector<float> pts{1, 2};
  const PointSet ps{pts, 1, {}};
  const float q[] = {0};
  CHECK(exact_knn(q, 5, ps, Metric::L2).size() == 2);
}

TEST_CASE("sort-based and heap-based oracles agree") {
  const auto pts = testutil::random_points(1000, 8, 2);
  const auto qs = testutil::random_points(100, 8, 3);
  const PointSet ps{pts, 8, {}};
  for (auto metric : {Metric::L2, Metric::Cosine, Metric::InnerProduct}) {
    for (std::size_t i = 0; i < 100; ++i) {
      const std::span<const float> q(qs.data() + i * 8, 8);
      CHECK(exact_knn(q, 10, ps, metric) == exact_knn_heap(q, 10, ps, metric));
    }
  }
}

TEST_CASE("batch oracle matches single queries and respects labels") {
  const auto pts = testutil::random_points(300, 4, 4);
  const auto qs = testutil::random_points(20, 4, 5);
  std::vector<std::uint32_t> labels(300);
  for (std::uint32_t i = 0; i < 300; ++i) labels[i] = 1000 + i;
  const PointSet plain{pts, 4, {}};
  const PointSet labelled{pts, 4, labels};
  const auto batch = exact_knn_batch(qs, 5, labelled, Metric::L2, 2);
  REQUIRE(batch.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    auto single = exact_knn({qs.data() + i * 4, 4}, 5, plain, Metric::L2);
    for (auto& id : single) id += 1000;
    CHECK(batch[i] == single);
  }
}

TEST_CASE("recall arithmetic") {
  const std::vector<std::uint32_t> a{1, 2, 3, 4};
  CHECK(recall(a, a) == doctest::Approx(1.0));
  const std::vector<std::uint32_t> b{5, 6, 7, 8};
  CHECK(recall(b, a) == doctest::Approx(0.0));
  std::vector<std::uint32_t> truth(50), half(50);
  for (std::uint32_t i = 0; i < 50; ++i) {
    truth[i] = i;
    half[i] = i < 25 ? i : 100 + i;
  }
  CHECK(recall(half, truth) == doctest::Approx(0.5));
  std::vector<std::uint32_t> shuffled = half;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(recall(shuffled, truth) == recall(half, truth));
  CHECK(recall(truth, half) == recall(half, truth));
}

TEST_CASE("cosine ground truth ignores query scale") {
  const auto pts = testutil::random_points(200, 6, 6, -1, 1);
  const PointSet ps{pts, 6, {}};
  auto q = testutil::random_points(1, 6, 7, -1, 1);
  const auto base = exact_knn(q, 10, ps, Metric::Cosine);
  for (float s : {0.01f, 3.0f, 250.0f}) {
    std::vector<float> scaled = q;
    for (auto& x : scaled) x *= s;
    CHECK(exact_knn(scaled, 10, ps, Metric::Cosine) == base);
  }
}
