// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shed/value_function.hpp"

namespace shed {

/// Largest player count exact_shapley will enumerate (2^20 coalitions).
inline constexpr std::size_t kMaxExactPlayers = 20;

struct ShapleyConfig {
  std::size_t group_size = 1;  // n
  std::size_t iterations = 10; // k
  std::uint64_t seed = 0;
};

/// max(1, round(num_proxies / 50)).
std::size_t default_group_size(std::size_t num_proxies);

struct ShapleyScores {
  std::vector<double> scores;  // per proxy, in input order
  /// iterations x proxies, row-major: the share c_g / |g| each proxy received.
  std::vector<double> per_iteration_contributions;
  std::size_t iterations = 0;
  double value_full = 0.0;
  double value_empty = 0.0;
  /// Value-function evaluations in the estimator's cost model (see
  /// expected_evaluations); v(empty) lookups count even though they are free.
  std::size_t evaluations_used = 0;
  /// Evaluations that actually reached the backend (non-empty coalitions).
  std::size_t backend_calls = 0;

  double contribution(std::size_t iteration, std::size_t proxy) const {
    return per_iteration_contributions[iteration * scores.size() + proxy];
  }
};

/// k * ceil(m / n) + 1: v(D_p) once, then one evaluation per removed group
/// in every iteration, the last of each chain being v(empty).
std::size_t expected_evaluations(std::size_t num_proxies, std::size_t group_size,
                                 std::size_t iterations);

/// The seeded removal order used by approximate_shapley for `iteration`.
/// Iterations draw independent streams, so chains can run in any order.
std::vector<std::size_t> removal_order(std::uint64_t seed, std::size_t iteration,
                                       std::size_t num_proxies);

/// Shapley values by enumerating all 2^m coalitions. Throws TooLargeForExact
/// when m > kMaxExactPlayers, InvalidParams on duplicate ids.
std::vector<double> exact_shapley(const ValueFunctionSpec& spec, std::span<const std::string> ids);

/// Group-removal estimator. Each iteration removes the proxies in a fresh
/// random order, n at a time (the last group may be smaller); a group's
/// contribution v(before) - v(after) is shared equally among its members,
/// and each proxy's score is the mean of its shares over the k iterations.
///
/// Iteration chains run concurrently on up to
/// min(k, spec.max_parallel_invocations) threads; results do not depend on
/// scheduling. Throws InvalidGroupSize, InvalidParams, and anything
/// evaluate_value throws (the first failing iteration's error wins).
ShapleyScores approximate_shapley(const ValueFunctionSpec& spec, std::span<const std::string> proxies,
                                  const ShapleyConfig& config);

}  // namespace shed
