#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "cleann/synth.hpp"

using namespace cleann;

namespace {

ClusterSpec tiny() {
  ClusterSpec s;
  s.n = 400;
  s.dim = 4;
  s.clusters = 20;
  s.cluster_size = 20;
  s.sigma = 0.01f;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("cluster generation is deterministic and sized") {
  const auto a = generate_clusters(tiny());
  const auto b = generate_clusters(tiny());
  CHECK(a.values == b.values);
  CHECK(a.size() == 400);
  CHECK(a.dim == 4);
  auto other = tiny();
  other.seed = 4;
  CHECK(generate_clusters(other).values != a.values);
}

TEST_CASE("clustered order keeps cluster members adjacent") {
  const auto a = generate_clusters(tiny());
  // Neighbours in clustered order are much closer than the cluster extent.
  double near = 0.0;
  for (std::size_t i = 0; i + 1 < 20; ++i) {
    for (std::size_t d = 0; d < 4; ++d) near += std::fabs(a.row(i)[d] - a.row(i + 1)[d]);
  }
  CHECK(near / 19.0 < 0.2);
}

TEST_CASE("shuffled order is a permutation of the clustered order") {
  auto s = tiny();
  const auto a = generate_clusters(s);
  s.clustered_order = false;
  const auto b = generate_clusters(s);
  auto x = a.values, y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  CHECK(x == y);
  CHECK(a.values != b.values);
}

TEST_CASE("training queries") {
  const auto data = generate_clusters(tiny());
  const auto test = generate_cluster_queries(tiny(), 100, 9);
  CHECK(test.size() == 100);

  TrainingQuerySpec spec;
  spec.seed = 5;
  const auto a = generate_training_queries(test, data, spec);
  const auto b = generate_training_queries(test, data, spec);
  CHECK(a.size() == 2);
  CHECK(a.values == b.values);

  spec.fixed_count = 80;
  CHECK(generate_training_queries(test, data, spec).size() == 80);

  spec.noise_std = 0.0;
  const auto exact = generate_training_queries(test, data, spec);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < test.size() && !found; ++j) {
      found = std::equal(exact.row(i).begin(), exact.row(i).end(), test.row(j).begin());
    }
    CHECK(found);
  }
}

TEST_CASE("out-of-distribution training queries spread much further") {
  const auto data = generate_clusters(tiny());
  const auto test = generate_cluster_queries(tiny(), 50, 9);
  // Mean distance from each training query to the closest test query.
  auto spread = [&](double scale) {
    TrainingQuerySpec spec;
    spec.fixed_count = 200;
    spec.variance_scale = scale;
    spec.seed = 6;
    const auto out = generate_training_queries(test, data, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double best = 1e30;
      for (std::size_t j = 0; j < test.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < out.dim; ++c) {
          const double diff = out.row(i)[c] - test.row(j)[c];
          d2 += diff * diff;
        }
        best = std::min(best, d2);
      }
      acc += std::sqrt(best);
    }
    return acc / double(out.size());
  };
  CHECK(spread(1000.0) > 10.0 * spread(1.0));
}

TEST_CASE("mean nearest-neighbor distance") {
  Dataset d;
  d.dim = 1;
  d.values = {0, 1, 3, 4};
  CHECK(mean_nn_distance(d, 1000, 0) == doctest::Approx(1.0));
}
