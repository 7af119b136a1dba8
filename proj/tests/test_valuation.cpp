// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "shed/error.hpp"
#include "shed/shapley.hpp"
#include "shed/value_function.hpp"

using namespace shed;

namespace {

std::vector<std::string> names(std::size_t m) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back("p" + std::to_string(i));
  return ids;
}

// Oracle: average marginal contribution over all m! arrival orders.
std::vector<double> permutation_shapley(const ValueFunctionSpec& spec, const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> total(ids.size(), 0.0);
  double perms = 0.0;
  do {
    std::vector<std::string> coalition;
    double prev = evaluate_value(spec, coalition);
    for (auto i : order) {
      coalition.push_back(ids[i]);
      const double next = evaluate_value(spec, coalition);
      total[i] += next - prev;
      prev = next;
    }
    perms += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& t : total) t /= perms;
  return total;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected shed::Error");
  return ErrorCode::IoFailure;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("builtin_value") {
  SUBCASE("additive") {
    AdditiveGame g{{{"a", 0.1}, {"b", 0.2}}};
    const std::vector<std::string> ab{"a", "b"};
    CHECK(builtin_value(g, ab) == doctest::Approx(0.3));
    CHECK(evaluate_value(ValueFunctionSpec::from_builtin(g), ab) == doctest::Approx(0.3));
    const std::vector<std::string> unknown{"c"};
    CHECK(code_of([&] { builtin_value(g, unknown); }) == ErrorCode::MissingParameter);
  }
  SUBCASE("cardinality p=2 on three members") {
    const std::vector<std::string> s{"x", "y", "z"};
    CHECK(builtin_value(CardinalityGame{2.0}, s) == 9.0);
  }
  SUBCASE("glove") {
    GloveGame g{"L", {"R1", "R2"}};
    CHECK(builtin_value(g, std::vector<std::string>{"L"}) == 0.0);
    CHECK(builtin_value(g, std::vector<std::string>{"L", "R1"}) == 1.0);
    CHECK(builtin_value(g, std::vector<std::string>{"R1", "R2"}) == 0.0);
  }
  SUBCASE("pair synergy") {
    PairSynergyGame g{{{"a", 1.0}, {"b", 2.0}, {"c", 4.0}}, {{"a", "b", 0.5}}};
    CHECK(builtin_value(g, std::vector<std::string>{"a", "c"}) == 5.0);
    CHECK(builtin_value(g, std::vector<std::string>{"b", "a"}) == 3.5);
  }
  SUBCASE("demographic parity: rates 0.6 and 0.4") {
    DemographicParityGame g;
    g.group_a = "A";
    g.group_b = "B";
    std::vector<std::string> subset;
    for (int i = 0; i < 5; ++i) {
      g.members["a" + std::to_string(i)] = {"A", i < 3};
      g.members["b" + std::to_string(i)] = {"B", i < 2};
      subset.push_back("a" + std::to_string(i));
      subset.push_back("b" + std::to_string(i));
    }
    // rate_A = 3/5, rate_B = 2/5, v = -|0.6 - 0.4|
    CHECK(builtin_value(g, subset) == doctest::Approx(-0.2).epsilon(1e-12));
    // A group absent from the subset has rate 0.
    CHECK(builtin_value(g, std::vector<std::string>{"a0", "a1"}) == -1.0);
    g.members["u"] = {std::nullopt, true};
    CHECK(code_of([&] { builtin_value(g, std::vector<std::string>{"u"}); }) == ErrorCode::MissingGroupLabel);
  }
  SUBCASE("nearest centroid") {
    NearestCentroidGame g;
    g.dim = 1;
    g.num_classes = 2;
    g.train = {-1.0f, -2.0f, 1.0f, 2.0f, 8.0f};
    g.train_labels = {0, 0, 1, 1, 0};
    for (std::size_t i = 0; i < 5; ++i) g.rows["t" + std::to_string(i)] = i;
    g.dev = {-1.5f, 1.5f, 3.0f, -0.1f};
    g.dev_labels = {0, 1, 1, 0};
    CHECK(builtin_value(g, std::vector<std::string>{"t0", "t2"}) == 1.0);
    CHECK(builtin_value(g, std::vector<std::string>{"t0"}) == 0.5);
    // the mislabelled far point drags the class-0 mean to 5/3, past the class-1 mean of 1.5;
    // only the dev point at 1.5 is still classified correctly
    CHECK(builtin_value(g, std::vector<std::string>{"t0", "t1", "t4", "t2", "t3"}) == 0.25);
    CHECK(builtin_value(g, {}) == 0.0);
  }
}

TEST_CASE("evaluate_value: empty subset returns the declared constant") {
  int calls = 0;
  auto spec = ValueFunctionSpec::from_callback([&](std::span<const std::string>) { return ++calls, 1.0; }, -3.5);
  CHECK(evaluate_value(spec, {}) == -3.5);
  CHECK(calls == 0);
  auto nan_spec = ValueFunctionSpec::from_callback([](auto) { return std::nan(""); }, 0.0);
  CHECK(code_of([&] { evaluate_value(nan_spec, std::vector<std::string>{"x"}); }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("exact_shapley") {
  SUBCASE("additive weights [1, 2, 3]") {
    auto spec = ValueFunctionSpec::from_builtin(AdditiveGame{{{"a", 1}, {"b", 2}, {"c", 3}}});
    const auto s = exact_shapley(spec, std::vector<std::string>{"a", "b", "c"});
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(2.0));
    CHECK(s[2] == doctest::Approx(3.0));
  }
  SUBCASE("3-player majority") {
    auto spec = ValueFunctionSpec::from_callback([](auto p) { return p.size() >= 2 ? 1.0 : 0.0; }, 0.0);
    for (double v : exact_shapley(spec, names(3))) CHECK(v == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("glove {L, R1, R2} against the 6 arrival orders") {
    auto spec = ValueFunctionSpec::from_builtin(GloveGame{"L", {"R1", "R2"}});
    const std::vector<std::string> ids{"L", "R1", "R2"};
    const auto oracle = permutation_shapley(spec, ids);
    CHECK(oracle[0] == doctest::Approx(2.0 / 3.0));
    CHECK(oracle[1] == doctest::Approx(1.0 / 6.0));
    const auto s = exact_shapley(spec, ids);
    for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }
  SUBCASE("random pair-synergy games match the permutation oracle") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int game = 0; game < 10; ++game) {
      const auto ids = names(3 + game % 4);
      PairSynergyGame g;
      for (const auto& id : ids) g.weights[id] = u(gen);
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
          if (gen() % 2) g.pairs.push_back({ids[i], ids[j], u(gen)});
      auto spec = ValueFunctionSpec::from_builtin(g);
      const auto s = exact_shapley(spec, ids);
      const auto oracle = permutation_shapley(spec, ids);
      for (std::size_t i = 0; i < ids.size(); ++i) CHECK(s[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
      CHECK(sum(s) == doctest::Approx(evaluate_value(spec, ids)).epsilon(1e-9));
    }
  }
  SUBCASE("guards") {
    auto spec = ValueFunctionSpec::from_builtin(CardinalityGame{1.0});
    CHECK(code_of([&] { exact_shapley(spec, names(21)); }) == ErrorCode::TooLargeForExact);
    CHECK(code_of([&] { exact_shapley(spec, std::vector<std::string>{"a", "a"}); }) == ErrorCode::InvalidParams);
  }
}

TEST_CASE("approximate_shapley: worked examples") {
  SUBCASE("additive [0.1, 0.2, 0.3], n=1") {
    auto spec = ValueFunctionSpec::from_builtin(AdditiveGame{{{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      for (std::size_t k : {1u, 3u, 10u}) {
        const auto r = approximate_shapley(spec, std::vector<std::string>{"a", "b", "c"}, {1, k, seed});
        // Partial sums of these decimals are not exact binary fractions; the
        // estimator adds at most a couple of ulps.
        CHECK(r.scores[0] == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(r.scores[1] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(r.scores[2] == doctest::Approx(0.3).epsilon(1e-15));
      }
    }
  }
  SUBCASE("cardinality p=2, removal order (row2, row0, row1)") {
    std::uint64_t seed = 0;
    while (removal_order(seed, 0, 3) != std::vector<std::size_t>{2, 0, 1}) ++seed;
    auto spec = ValueFunctionSpec::from_builtin(CardinalityGame{2.0});
    const auto r = approximate_shapley(spec, std::vector<std::string>{"row0", "row1", "row2"}, {1, 1, seed});
    // row2: 9 - 4, row0: 4 - 1, row1: 1 - 0
    CHECK(r.scores == std::vector<double>{3.0, 1.0, 5.0});
    CHECK(r.value_full == 9.0);
    CHECK(r.value_empty == 0.0);
    CHECK(r.evaluations_used == 4);
    CHECK(r.backend_calls == 3);
  }
  SUBCASE("remainder group is divided by its own size") {
    // 5 proxies, n = 2: groups of 2, 2, 1
    auto spec = ValueFunctionSpec::from_builtin(CardinalityGame{1.0});
    const auto r = approximate_shapley(spec, names(5), {2, 1, 4});
    for (double s : r.scores) CHECK(s == 1.0);
    CHECK(r.evaluations_used == expected_evaluations(5, 2, 1));
    CHECK(r.evaluations_used == 4);
  }
}

TEST_CASE("approximate_shapley: invariants") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + gen() % 30;
    const auto ids = names(m);
    PairSynergyGame g;
    std::uniform_real_distribution<double> u(-2, 2);
    for (const auto& id : ids) g.weights[id] = u(gen);
    for (int p = 0; p < 10; ++p) g.pairs.push_back({ids[gen() % m], ids[gen() % m], u(gen)});
    auto spec = ValueFunctionSpec::from_builtin(g);
    const ShapleyConfig cfg{1 + gen() % m, 1 + gen() % 12, gen()};
    const auto r = approximate_shapley(spec, ids, cfg);

    // Telescoping efficiency.
    const double delta = r.value_full - r.value_empty;
    CHECK(std::abs(sum(r.scores) - delta) <= 1e-9 * std::max({std::abs(delta), std::abs(r.value_full), 1.0}));
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      double chain = 0.0;
      for (std::size_t i = 0; i < m; ++i) chain += r.contribution(it, i);
      CHECK(chain == doctest::Approx(delta).epsilon(1e-9));
    }
    CHECK(r.evaluations_used == expected_evaluations(m, cfg.group_size, cfg.iterations));

    // Determinism regardless of parallelism.
    auto parallel = spec;
    parallel.max_parallel_invocations = 4;
    const auto r2 = approximate_shapley(parallel, ids, cfg);
    CHECK(r2.scores == r.scores);
    CHECK(r2.per_iteration_contributions == r.per_iteration_contributions);
  }
}

TEST_CASE("approximate_shapley: additive exactness with exactly representable weights") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = names(3 + gen() % 20);
    AdditiveGame g;
    for (const auto& id : ids) g.weights[id] = double(static_cast<int>(gen() % 2001) - 1000) / 1024.0;
    auto spec = ValueFunctionSpec::from_builtin(g);
    const auto exact = exact_shapley(spec, std::span(ids).first(std::min<std::size_t>(ids.size(), 12)));
    const auto r = approximate_shapley(spec, ids, {1, 1 + gen() % 10, gen()});
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(r.scores[i] == g.weights[ids[i]]);
    if (ids.size() <= 12)
      for (std::size_t i = 0; i < ids.size(); ++i) CHECK(r.scores[i] == doctest::Approx(exact[i]).epsilon(1e-12));
  }
}

TEST_CASE("approximate_shapley: errors") {
  auto spec = ValueFunctionSpec::from_builtin(CardinalityGame{1.0});
  CHECK(code_of([&] { approximate_shapley(spec, names(3), {4, 1, 0}); }) == ErrorCode::InvalidGroupSize);
  CHECK(code_of([&] { approximate_shapley(spec, names(3), {0, 1, 0}); }) == ErrorCode::InvalidGroupSize);
  CHECK(code_of([&] { approximate_shapley(spec, {}, {1, 1, 0}); }) == ErrorCode::InvalidParams);

  // A non-finite value aborts the run.
  auto flaky = ValueFunctionSpec::from_callback(
      [](auto p) { return p.size() == 2 ? std::numeric_limits<double>::infinity() : 1.0; }, 0.0);
  flaky.max_parallel_invocations = 3;
  CHECK(code_of([&] { approximate_shapley(flaky, names(4), {1, 6, 0}); }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("default group size and evaluation budget") {
  CHECK(default_group_size(3000) == 60);
  CHECK(default_group_size(10) == 1);
  CHECK(default_group_size(134) == 3);
  CHECK(expected_evaluations(3000, 60, 10) == 501);
  CHECK(expected_evaluations(7, 3, 2) == 7);
}
