// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shed/dataset.hpp"

namespace shed {

struct ClusterConfig {
  /// 0 selects default_cluster_count(N).
  std::size_t num_clusters = 0;
  std::size_t max_iterations = 100;
  double rel_sse_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Worker threads for the assignment step. The result does not depend on it.
  std::size_t threads = 1;
};

/// round(3 * sqrt(N)), clamped to [1, N].
std::size_t default_cluster_count(std::size_t count);

struct ClusterModel {
  std::size_t num_clusters = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> centroids;             // num_clusters x dim, row-major
  std::vector<std::uint32_t> assignments;    // per dataset row
  std::vector<std::size_t> proxy_index;      // per cluster; empty until select_proxies
  double sse = 0.0;

  // Fit diagnostics; not serialized.
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> sse_history;  // SSE after each Lloyd iteration

  std::span<const double> centroid(std::size_t cluster) const noexcept {
    return std::span<const double>(centroids).subspan(cluster * dim, dim);
  }
};

/// Lloyd's algorithm from a k-means++ start. Empty clusters are reseeded with
/// the point farthest from its current centroid, so every cluster in the
/// returned model is non-empty. Throws TooManyClusters or InvalidConfig.
ClusterModel kmeans_fit(const EmbeddedDataset& dataset, const ClusterConfig& config);

/// Fills proxy_index with each cluster's member nearest its centroid
/// (lowest row index on ties).
ClusterModel select_proxies(const EmbeddedDataset& dataset, ClusterModel model);

double squared_distance(std::span<const float> point, std::span<const double> centroid) noexcept;

/// Member rows of every cluster, ascending by row index.
std::vector<std::vector<std::size_t>> cluster_members(const ClusterModel& model);

/// Within-cluster sum of squared distances for the model's assignments.
double within_cluster_sse(const EmbeddedDataset& dataset, const ClusterModel& model);

/// Text dump: "C d seed sse", C centroid rows, the assignment list, the proxy list.
std::string format_cluster_model(const ClusterModel& model);
ClusterModel parse_cluster_model(std::string_view text);

}  // namespace shed
