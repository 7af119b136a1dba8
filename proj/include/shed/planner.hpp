// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>

#include "shed/dataset.hpp"
#include "shed/value_function.hpp"

namespace shed {

/// Recommended operating point the budget plan steers towards.
inline constexpr double kTargetIterations = 10.0;
inline constexpr std::size_t kMaxPlannedIterations = 200;
/// Allowed relative gap between theta*k*C and the budget after rounding.
inline constexpr double kBudgetTolerance = 0.05;
inline constexpr std::size_t kThetaSampleSize = 2000;

struct BudgetPlan {
  double theta = 0.0;
  double t0 = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::size_t dataset_size = 0;
  std::size_t k_star = 0;
  std::size_t c_star = 0;
  double objective = 0.0;

  double target_clusters() const;  // 3 * sqrt(N)
  double planned_seconds() const { return theta * double(k_star) * double(c_star); }
  /// (theta*k*C - t0) / t0
  double constraint_residual() const { return (planned_seconds() - t0) / t0; }
};

/// lambda1 (k - 10)^2 + lambda2 (C - 3 sqrt(N))^2
double plan_objective(std::size_t k, std::size_t c, std::size_t dataset_size, double lambda1,
                      double lambda2);

/// Integer (k, C) minimising plan_objective subject to theta*k*C = t0.
/// Substituting C = t0 / (theta k) leaves a scan over k in [1, 200]; for each
/// k the integers within 1.5 of the real-valued C are tried, and those within
/// 5% of the budget compete. Ties keep the smaller k, then the smaller C.
/// Throws InfeasibleBudget, InvalidParams.
BudgetPlan plan_budget(double theta, double t0, std::size_t dataset_size, double lambda1 = 1.0,
                       double lambda2 = 1.0);

/// theta = elapsed / (iterations * clusters), the cost model t = theta k C.
double theta_from_timing(std::chrono::duration<double> elapsed, std::size_t iterations,
                         std::size_t clusters);

struct ThetaEstimate {
  double theta = 0.0;
  double elapsed_seconds = 0.0;
  std::size_t sample_size = 0;
  std::size_t group_size = 0;
};

/// Times one iteration of approximate_shapley over `sample_size` randomly
/// chosen instances treated as proxies. Throws InvalidParams when
/// sample_size > N, plus anything the valuation raises.
ThetaEstimate estimate_theta(const EmbeddedDataset& dataset, const ValueFunctionSpec& spec,
                             std::size_t sample_size, std::size_t group_size, std::uint64_t seed);

struct ComplexityParams {
  std::size_t clusters = 0;     // C
  std::size_t group_size = 0;   // n
  std::size_t iterations = 0;   // k
  double seconds_per_instance = 0.0;  // t, fine-tuning cost of one instance
  double seconds_per_eval = 0.0;      // Tm, one evaluation on the test set
};

/// (C k / n) * ((C + n) t / 2 + Tm), read as an exact cost model in seconds.
/// Throws InvalidParams.
double estimate_runtime(const ComplexityParams& params);

/// Human-readable plan: theta, t0, (k, C), objective, constraint residual.
std::string format_plan(const BudgetPlan& plan);

}  // namespace shed
