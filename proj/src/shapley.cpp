// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/shapley.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "shed/error.hpp"
#include "shed/random.hpp"

namespace shed {

namespace {

void require_unique(std::span<const std::string> ids) {
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::InvalidParams, "player id '" + id + "' listed twice");
    }
  }
}

struct ChainResult {
  std::vector<double> shares;  // per proxy
  double value_empty = 0.0;
  std::size_t evaluations = 0;
  std::size_t backend_calls = 0;
};

ChainResult run_chain(const ValueFunctionSpec& spec, std::span<const std::string> proxies,
                      const std::vector<std::size_t>& order, std::size_t group_size,
                      double value_full) {
  const std::size_t m = proxies.size();
  ChainResult out;
  out.shares.assign(m, 0.0);

  // Keep the current coalition in removal order so each removal is a suffix drop.
  std::vector<std::string> coalition;
  coalition.reserve(m);
  for (auto it = order.rbegin(); it != order.rend(); ++it) coalition.push_back(proxies[*it]);

  double before = value_full;
  for (std::size_t start = 0; start < m; start += group_size) {
    const std::size_t size = std::min(group_size, m - start);
    coalition.resize(coalition.size() - size);
    const double after = evaluate_value(spec, coalition);
    ++out.evaluations;
    if (!coalition.empty()) ++out.backend_calls;
    const double share = (before - after) / double(size);
    for (std::size_t g = start; g < start + size; ++g) out.shares[order[g]] = share;
    before = after;
  }
  out.value_empty = before;
  return out;
}

}  // namespace

std::size_t default_group_size(std::size_t num_proxies) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(num_proxies) / 50.0)));
}

std::size_t expected_evaluations(std::size_t num_proxies, std::size_t group_size,
                                 std::size_t iterations) {
  return iterations * ((num_proxies + group_size - 1) / group_size) + 1;
}

std::vector<std::size_t> removal_order(std::uint64_t seed, std::size_t iteration,
                                       std::size_t num_proxies) {
  std::vector<std::size_t> order(num_proxies);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine engine = make_engine(derive_seed(seed, std::uint64_t{iteration}));
  shuffle(std::span<std::size_t>(order), engine);
  return order;
}

std::vector<double> exact_shapley(const ValueFunctionSpec& spec, std::span<const std::string> ids) {
  const std::size_t m = ids.size();
  if (m > kMaxExactPlayers) {
    throw Error(ErrorCode::TooLargeForExact,
                std::to_string(m) + " players exceeds the enumeration limit of " +
                    std::to_string(kMaxExactPlayers));
  }
  require_unique(ids);
  if (m == 0) return {};

  const std::size_t subsets = std::size_t{1} << m;
  std::vector<double> values(subsets);
  std::vector<std::string> members;
  members.reserve(m);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    members.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1) members.push_back(ids[i]);
    values[mask] = evaluate_value(spec, members);
  }

  // weight(s) = s! (m - s - 1)! / m! = 1 / (m * binom(m - 1, s))
  std::vector<double> weight(m);
  double binom = 1.0;
  for (std::size_t s = 0; s < m; ++s) {
    weight[s] = 1.0 / (double(m) * binom);
    binom = binom * double(m - 1 - s) / double(s + 1);
  }

  std::vector<double> scores(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      acc += weight[std::popcount(mask)] * (values[mask | bit] - values[mask]);
    }
    scores[i] = acc;
  }
  return scores;
}

ShapleyScores approximate_shapley(const ValueFunctionSpec& spec, std::span<const std::string> proxies,
                                  const ShapleyConfig& config) {
  validate(spec);
  const std::size_t m = proxies.size();
  if (m == 0) throw Error(ErrorCode::InvalidParams, "proxy set is empty");
  if (config.group_size == 0 || config.group_size > m) {
    throw Error(ErrorCode::InvalidGroupSize, "group size " + std::to_string(config.group_size) +
                                                 " not in [1, " + std::to_string(m) + "]");
  }
  if (config.iterations == 0) throw Error(ErrorCode::InvalidParams, "iterations must be positive");
  require_unique(proxies);

  const std::size_t k = config.iterations;
  std::vector<std::vector<std::size_t>> orders(k);
  for (std::size_t it = 0; it < k; ++it) orders[it] = removal_order(config.seed, it, m);

  ShapleyScores result;
  result.iterations = k;
  result.value_full = evaluate_value(spec, proxies);
  result.per_iteration_contributions.assign(k * m, 0.0);

  std::vector<ChainResult> chains(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t it = next.fetch_add(1);
      if (it >= k || failed.load()) return;
      try {
        chains[it] = run_chain(spec, proxies, orders[it], config.group_size, result.value_full);
      } catch (...) {
        errors[it] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t threads = std::min(k, spec.max_parallel_invocations);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Running mean: k identical shares average back to that exact share.
  result.scores.assign(m, 0.0);
  result.evaluations_used = 1;
  result.backend_calls = 1;
  for (std::size_t it = 0; it < k; ++it) {
    const auto& chain = chains[it];
    for (std::size_t i = 0; i < m; ++i) {
      result.per_iteration_contributions[it * m + i] = chain.shares[i];
      result.scores[i] += (chain.shares[i] - result.scores[i]) / double(it + 1);
    }
    result.evaluations_used += chain.evaluations;
    result.backend_calls += chain.backend_calls;
  }
  result.value_empty = chains[0].value_empty;
  return result;
}

}  // namespace shed
