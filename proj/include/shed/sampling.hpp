// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shed/clustering.hpp"
#include "shed/dataset.hpp"

namespace shed {

struct SamplingConfig {
  SamplingMethod method = SamplingMethod::QOCS;
  std::size_t target_size = 1;
  double scaling_factor = 1.0;  // f, QWCS only
  std::uint64_t seed = 0;
};

/// Per-cluster quality scores plus member rows, nearest-to-centroid first.
struct ClusterScoreTable {
  std::vector<double> scores;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> proxies;    // proxy row per cluster
  std::vector<std::string> ids;        // dataset ids by row
  std::uint64_t source_digest = 0;

  std::size_t num_clusters() const noexcept { return scores.size(); }
  std::size_t total_members() const noexcept { return ids.size(); }
};

/// Pairs each cluster with its proxy's score. `model` must carry proxies and
/// `proxy_scores` one finite value per cluster.
ClusterScoreTable build_score_table(const EmbeddedDataset& dataset, const ClusterModel& model,
                                    std::span<const double> proxy_scores);

/// Softmax over the active clusters, Pr(i) = e^{f S_i} / sum_j e^{f S_j}.
/// Inactive clusters get 0. An empty `active` span means all clusters.
/// Throws EmptyActiveSet, InvalidParams (non-finite input).
std::vector<double> cluster_probabilities(std::span<const double> scores, double scaling_factor,
                                          std::span<const bool> active = {});

/// Drains clusters in descending score order (lower index on ties), members
/// nearest-first, until target_size ids are taken. Throws TargetTooLarge.
SelectionResult qocs_sample(const ClusterScoreTable& table, const SamplingConfig& config);

/// target_size draws of (cluster by softmax over non-exhausted clusters,
/// then a uniformly chosen unselected member). Throws TargetTooLarge.
SelectionResult qwcs_sample(const ClusterScoreTable& table, const SamplingConfig& config);

/// Uniform sample without replacement over all instances.
SelectionResult random_sample(const ClusterScoreTable& table, const SamplingConfig& config);

/// Dispatches on config.method.
SelectionResult sample(const ClusterScoreTable& table, const SamplingConfig& config);

/// Tab-separated: cluster, proxy row, proxy id, size, score; '#' header lines.
std::string format_score_table(const ClusterScoreTable& table);
/// Scores column of a score-table file, by cluster index.
std::vector<double> parse_score_column(std::string_view text);

}  // namespace shed
