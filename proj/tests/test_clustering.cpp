// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "shed/clustering.hpp"
#include "shed/error.hpp"
#include "support.hpp"

using namespace shed;
using shed::testing::blob_dataset;
using shed::testing::line_dataset;

namespace {

// Oracle: minimal 1-D SSE over every labelling of the points into k
// non-empty groups (k^N enumeration; tiny inputs only).
double brute_force_sse(const std::vector<double>& xs, std::size_t k) {
  const std::size_t n = xs.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<double> sum(k, 0.0), sq(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= k) {
      sum[c % k] += xs[i];
      sq[c % k] += xs[i] * xs[i];
      ++cnt[c % k];
    }
    if (std::count(cnt.begin(), cnt.end(), 0u)) continue;
    double sse = 0.0;
    for (std::size_t g = 0; g < k; ++g) sse += sq[g] - sum[g] * sum[g] / double(cnt[g]);
    best = std::min(best, sse);
  }
  return best;
}

void check_model_invariants(const EmbeddedDataset& ds, const ClusterModel& m) {
  std::vector<std::size_t> sizes(m.num_clusters, 0);
  for (auto a : m.assignments) {
    REQUIRE(a < m.num_clusters);
    ++sizes[a];
  }
  for (auto s : sizes) CHECK(s > 0);
  CHECK(m.sse == doctest::Approx(within_cluster_sse(ds, m)).epsilon(1e-12));
  for (std::size_t i = 1; i < m.sse_history.size(); ++i) {
    CHECK(m.sse_history[i] <= m.sse_history[i - 1] * (1 + 1e-12) + 1e-12);
  }
}

}  // namespace

TEST_CASE("kmeans_fit: two well separated 1-D pairs") {
  const std::vector<float> xs{0.0f, 0.1f, 10.0f, 10.1f};
  const auto ds = line_dataset(xs);
  const double oracle = brute_force_sse({0.0f, 0.1f, 10.0f, 10.1f}, 2);
  CHECK(oracle == doctest::Approx(0.01).epsilon(1e-6));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = kmeans_fit(ds, {.num_clusters = 2, .seed = seed});
    std::vector<double> c{m.centroids[0], m.centroids[1]};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(c[1] == doctest::Approx(10.05).epsilon(1e-6));
    CHECK(m.sse == doctest::Approx(oracle).epsilon(1e-6));
    check_model_invariants(ds, m);
  }
}

TEST_CASE("kmeans_fit: C = N gives zero SSE, C = 1 gives the mean") {
  const auto ds = blob_dataset(2, 4, 3, 5);
  const auto every = kmeans_fit(ds, {.num_clusters = ds.count(), .seed = 3});
  CHECK(every.sse == 0.0);
  check_model_invariants(ds, every);

  const auto one = kmeans_fit(ds, {.num_clusters = 1, .seed = 3});
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.count(); ++i) mean += ds.row(i)[j];
    mean /= double(ds.count());
    CHECK(one.centroids[j] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("kmeans_fit: errors and degenerate input") {
  const auto ds = line_dataset({1, 2, 3});
  CHECK_THROWS_AS(kmeans_fit(ds, {.num_clusters = 4}), Error);
  try {
    kmeans_fit(ds, {.num_clusters = 4});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyClusters);
  }

  // Identical points with C > 1 still produce non-empty clusters.
  const auto same = line_dataset({5, 5, 5, 5, 5});
  for (std::size_t c = 1; c <= 5; ++c) {
    const auto m = kmeans_fit(same, {.num_clusters = c, .seed = c});
    check_model_invariants(same, m);
    CHECK(m.sse == 0.0);
  }
}

TEST_CASE("kmeans_fit: default C is round(3 sqrt N)") {
  CHECK(default_cluster_count(10000) == 300);
  CHECK(default_cluster_count(2000) == 134);
  CHECK(default_cluster_count(1) == 1);
  CHECK(default_cluster_count(4) == 4);  // 6 clamps to N
  const auto ds = blob_dataset(3, 10, 2, 2);
  CHECK(kmeans_fit(ds, {.seed = 1}).num_clusters == 16);
}

TEST_CASE("kmeans_fit properties on random blobs") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto ds = blob_dataset(5, 40, 4, seed, 1.5);
    ClusterConfig cfg{.num_clusters = 3 + seed % 5, .max_iterations = 500, .rel_sse_tolerance = 1e-12, .seed = seed};
    const auto m = kmeans_fit(ds, cfg);
    check_model_invariants(ds, m);
    CHECK(m.converged);

    // Assignment optimality at convergence.
    for (std::size_t i = 0; i < ds.count(); ++i) {
      const double own = squared_distance(ds.row(i), m.centroid(m.assignments[i]));
      for (std::size_t c = 0; c < m.num_clusters; ++c) CHECK(own <= squared_distance(ds.row(i), m.centroid(c)));
    }

    // Seed determinism, independent of thread count.
    cfg.threads = 4;
    const auto again = kmeans_fit(ds, cfg);
    CHECK(again.centroids == m.centroids);
    CHECK(again.assignments == m.assignments);
    CHECK(again.sse == m.sse);
  }
}

TEST_CASE("select_proxies") {
  SUBCASE("tie at equal distance goes to the lower row") {
    auto ds = line_dataset({0.0f, 0.1f});
    auto m = kmeans_fit(ds, {.num_clusters = 1});
    // centroid is the float mean; force the exact midpoint of the two stored values
    m.centroids[0] = (double(0.0f) + double(0.1f)) / 2.0;
    m = select_proxies(ds, m);
    CHECK(m.proxy_index[0] == 0);
  }
  SUBCASE("singleton cluster") {
    auto ds = line_dataset({0.0f, 100.0f});
    auto m = select_proxies(ds, kmeans_fit(ds, {.num_clusters = 2}));
    for (std::size_t c = 0; c < 2; ++c) CHECK(m.assignments[m.proxy_index[c]] == c);
  }
  SUBCASE("argmin of distance") {
    // rows 3 and 7 share a cluster with centroid 0: distances 0.2 and 0.1
    auto ds = line_dataset({50, 51, 52, 0.2f, 53, 54, 55, -0.1f});
    ClusterModel m;
    m.num_clusters = 2;
    m.dim = 1;
    m.centroids = {52.5, 0.0};
    m.assignments = {0, 0, 0, 1, 0, 0, 0, 1};
    m = select_proxies(ds, m);
    CHECK(m.proxy_index[1] == 7);
  }
  SUBCASE("proxy optimality on random data") {
    const auto ds = blob_dataset(4, 25, 3, 11, 2.0);
    const auto m = select_proxies(ds, kmeans_fit(ds, {.num_clusters = 9, .seed = 4}));
    for (std::size_t i = 0; i < ds.count(); ++i) {
      const auto c = m.assignments[i];
      CHECK(squared_distance(ds.row(m.proxy_index[c]), m.centroid(c)) <= squared_distance(ds.row(i), m.centroid(c)));
    }
  }
}

TEST_CASE("cluster model dump round-trips") {
  const auto ds = blob_dataset(3, 7, 2, 9);
  const auto m = select_proxies(ds, kmeans_fit(ds, {.num_clusters = 4, .seed = 77}));
  const auto text = format_cluster_model(m);
  CHECK(text.rfind("4 2 77 ", 0) == 0);
  const auto back = parse_cluster_model(text);
  CHECK(back.centroids == m.centroids);
  CHECK(back.assignments == m.assignments);
  CHECK(back.proxy_index == m.proxy_index);
  CHECK(back.sse == m.sse);
  CHECK(format_cluster_model(back) == text);
}
