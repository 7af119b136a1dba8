// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "shed/error.hpp"
#include "shed/random.hpp"
#include "shed/shapley.hpp"
#include "shed/text.hpp"

namespace shed {

double BudgetPlan::target_clusters() const { return 3.0 * std::sqrt(double(dataset_size)); }

double plan_objective(std::size_t k, std::size_t c, std::size_t dataset_size, double lambda1,
                      double lambda2) {
  const double dk = double(k) - kTargetIterations;
  const double dc = double(c) - 3.0 * std::sqrt(double(dataset_size));
  return lambda1 * dk * dk + lambda2 * dc * dc;
}

BudgetPlan plan_budget(double theta, double t0, std::size_t dataset_size, double lambda1,
                       double lambda2) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw Error(ErrorCode::InvalidParams, "theta must be positive");
  if (!std::isfinite(t0)) throw Error(ErrorCode::InvalidParams, "budget must be finite");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "lambda weights must be non-negative");
  }
  if (dataset_size == 0) throw Error(ErrorCode::InvalidParams, "dataset size must be positive");
  if (t0 < theta) {
    throw Error(ErrorCode::InfeasibleBudget, "budget " + format_real(t0) +
                                                 " s cannot afford one iteration over one cluster (theta = " +
                                                 format_real(theta) + " s)");
  }

  BudgetPlan plan;
  plan.theta = theta;
  plan.t0 = t0;
  plan.lambda1 = lambda1;
  plan.lambda2 = lambda2;
  plan.dataset_size = dataset_size;
  plan.objective = std::numeric_limits<double>::infinity();

  for (std::size_t k = 1; k <= kMaxPlannedIterations; ++k) {
    const double c_real = t0 / (theta * double(k));
    const double lo = std::max(1.0, std::ceil(c_real - 1.5));
    const double hi = std::floor(c_real + 1.5);
    for (double cd = lo; cd <= hi; cd += 1.0) {
      const auto c = static_cast<std::size_t>(cd);
      if (std::abs(theta * double(k) * cd - t0) > kBudgetTolerance * t0) continue;
      const double obj = plan_objective(k, c, dataset_size, lambda1, lambda2);
      if (obj < plan.objective) {
        plan.objective = obj;
        plan.k_star = k;
        plan.c_star = c;
      }
    }
  }
  if (plan.k_star == 0) {
    throw Error(ErrorCode::InfeasibleBudget,
                "no integer (k, C) with k <= 200 lands within 5% of the " + format_real(t0) + " s budget");
  }
  return plan;
}

double theta_from_timing(std::chrono::duration<double> elapsed, std::size_t iterations,
                         std::size_t clusters) {
  if (iterations == 0 || clusters == 0) throw Error(ErrorCode::InvalidParams, "k and C must be positive");
  return elapsed.count() / (double(iterations) * double(clusters));
}

ThetaEstimate estimate_theta(const EmbeddedDataset& dataset, const ValueFunctionSpec& spec,
                             std::size_t sample_size, std::size_t group_size, std::uint64_t seed) {
  if (sample_size == 0 || sample_size > dataset.count()) {
    throw Error(ErrorCode::InvalidParams, "timing sample of " + std::to_string(sample_size) +
                                              " instances from a dataset of " +
                                              std::to_string(dataset.count()));
  }
  std::vector<std::size_t> rows(dataset.count());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Engine engine = make_engine(seed);
  for (std::size_t i = 0; i < sample_size; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(engine, rows.size() - i));
    std::swap(rows[i], rows[j]);
  }
  std::vector<std::string> ids;
  ids.reserve(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) ids.push_back(dataset.record(rows[i]).id);

  ShapleyConfig config;
  config.group_size = std::min(group_size, sample_size);
  config.iterations = 1;
  config.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  approximate_shapley(spec, ids, config);
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
  // A clock that did not tick still has to yield theta > 0.
  if (elapsed.count() <= 0.0) elapsed = std::chrono::duration<double>(1e-9);

  ThetaEstimate est;
  est.theta = theta_from_timing(elapsed, 1, sample_size);
  est.elapsed_seconds = elapsed.count();
  est.sample_size = sample_size;
  est.group_size = config.group_size;
  return est;
}

double estimate_runtime(const ComplexityParams& p) {
  if (p.clusters == 0 || p.group_size == 0 || p.iterations == 0) {
    throw Error(ErrorCode::InvalidParams, "C, n and k must be positive");
  }
  if (p.group_size > p.clusters) throw Error(ErrorCode::InvalidParams, "group size exceeds cluster count");
  if (!(p.seconds_per_instance >= 0.0) || !(p.seconds_per_eval >= 0.0) ||
      !std::isfinite(p.seconds_per_instance) || !std::isfinite(p.seconds_per_eval)) {
    throw Error(ErrorCode::InvalidParams, "t and Tm must be finite and non-negative");
  }
  const double c = double(p.clusters);
  const double n = double(p.group_size);
  const double evaluations = c * double(p.iterations) / n;
  return evaluations * ((c + n) * p.seconds_per_instance / 2.0 + p.seconds_per_eval);
}

std::string format_plan(const BudgetPlan& plan) {
  std::ostringstream out;
  out << "theta: " << format_real(plan.theta) << " s\n"
      << "t0: " << format_real(plan.t0) << " s\n"
      << "dataset_size: " << plan.dataset_size << '\n'
      << "target: k=10, C=" << format_real(plan.target_clusters()) << '\n'
      << "k: " << plan.k_star << '\n'
      << "C: " << plan.c_star << '\n'
      << "objective: " << format_real(plan.objective) << '\n'
      << "planned_seconds: " << format_real(plan.planned_seconds()) << '\n'
      << "constraint_residual: " << format_real(plan.constraint_residual()) << '\n';
  return out.str();
}

}  // namespace shed
