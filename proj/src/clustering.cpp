// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "shed/error.hpp"
#include "shed/random.hpp"
#include "shed/text.hpp"

namespace shed {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

std::vector<double> kmeans_plus_plus(const EmbeddedDataset& data, std::size_t k, Engine& engine) {
  const std::size_t n = data.count();
  const std::size_t d = data.dim();
  std::vector<double> centroids;
  centroids.reserve(k * d);
  std::vector<char> chosen(n, 0);

  auto add_center = [&](std::size_t row) {
    chosen[row] = 1;
    for (float v : data.row(row)) centroids.push_back(v);
  };

  add_center(static_cast<std::size_t>(uniform_index(engine, n)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const std::span<const double> last(centroids.data() + (c - 1) * d, d);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(data.row(i), last));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(engine) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        acc += nearest[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a centre: take an unused row.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[static_cast<std::size_t>(uniform_index(engine, unused.size()))];
    }
    add_center(pick);
  }
  return centroids;
}

// Nearest centroid for rows [begin, end); ties go to the lower cluster index.
void assign_range(const EmbeddedDataset& data, const std::vector<double>& centroids,
                  std::size_t k, std::size_t begin, std::size_t end,
                  std::vector<std::uint32_t>& assignments, std::vector<double>& distances) {
  const std::size_t d = data.dim();
  for (std::size_t i = begin; i < end; ++i) {
    const auto point = data.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double dist = squared_distance(point, std::span<const double>(centroids.data() + c * d, d));
      if (dist < best) {
        best = dist;
        best_c = static_cast<std::uint32_t>(c);
      }
    }
    assignments[i] = best_c;
    distances[i] = best;
  }
}

void assign_all(const EmbeddedDataset& data, const std::vector<double>& centroids, std::size_t k,
                std::size_t threads, std::vector<std::uint32_t>& assignments,
                std::vector<double>& distances) {
  const std::size_t n = data.count();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, n / 256));
  if (threads == 1) {
    assign_range(data, centroids, k, 0, n, assignments, distances);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      assign_range(data, centroids, k, begin, end, assignments, distances);
    });
  }
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
void repair_empty_clusters(const EmbeddedDataset& data, std::vector<double>& centroids,
                           std::size_t k, std::vector<std::uint32_t>& assignments,
                           std::vector<double>& distances) {
  const std::size_t d = data.dim();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = data.count();
    double far_dist = -1.0;
    for (std::size_t i = 0; i < data.count(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      if (distances[i] > far_dist) {
        far_dist = distances[i];
        far = i;
      }
    }
    // C <= N guarantees a donor cluster with at least two members.
    --sizes[assignments[far]];
    assignments[far] = static_cast<std::uint32_t>(c);
    distances[far] = 0.0;
    ++sizes[c];
    const auto point = data.row(far);
    std::copy(point.begin(), point.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
  }
}

void update_means(const EmbeddedDataset& data, std::size_t k,
                  const std::vector<std::uint32_t>& assignments, std::vector<double>& centroids) {
  const std::size_t d = data.dim();
  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < data.count(); ++i) {
    const auto a = assignments[i];
    ++sizes[a];
    const auto point = data.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[a * d + j] += point[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] / double(sizes[c]);
  }
}

}  // namespace

double squared_distance(std::span<const float> point, std::span<const double> centroid) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double diff = double(point[j]) - centroid[j];
    acc += diff * diff;
  }
  return acc;
}

std::size_t default_cluster_count(std::size_t count) {
  const auto c = static_cast<std::size_t>(std::llround(3.0 * std::sqrt(double(count))));
  return std::clamp<std::size_t>(c, 1, std::max<std::size_t>(count, 1));
}

ClusterModel kmeans_fit(const EmbeddedDataset& dataset, const ClusterConfig& config) {
  const std::size_t n = dataset.count();
  const std::size_t k = config.num_clusters == 0 ? default_cluster_count(n) : config.num_clusters;
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "cannot cluster an empty dataset");
  if (k > n) {
    throw Error(ErrorCode::TooManyClusters,
                std::to_string(k) + " clusters requested for " + std::to_string(n) + " instances");
  }
  if (config.max_iterations == 0) throw Error(ErrorCode::InvalidConfig, "max_iterations must be positive");
  if (!(config.rel_sse_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "rel_sse_tolerance must be positive");
  }

  ClusterModel model;
  model.num_clusters = k;
  model.dim = dataset.dim();
  model.seed = config.seed;
  Engine engine = make_engine(config.seed);
  model.centroids = kmeans_plus_plus(dataset, k, engine);
  model.assignments.assign(n, kUnassigned);

  std::vector<std::uint32_t> next(n);
  std::vector<double> distances(n);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    assign_all(dataset, model.centroids, k, config.threads, next, distances);
    repair_empty_clusters(dataset, model.centroids, k, next, distances);
    const bool changed = next != model.assignments;
    model.assignments = next;
    update_means(dataset, k, model.assignments, model.centroids);
    model.sse = within_cluster_sse(dataset, model);
    model.sse_history.push_back(model.sse);
    model.iterations = iter;
    if (!changed) {
      model.converged = true;
      break;
    }
    if (std::isfinite(previous) && previous - model.sse <= config.rel_sse_tolerance * previous) {
      // Stopping on the SSE test: finish with an assignment step so every
      // point sits with its nearest returned centroid.
      assign_all(dataset, model.centroids, k, config.threads, next, distances);
      repair_empty_clusters(dataset, model.centroids, k, next, distances);
      if (next != model.assignments) {
        model.assignments = next;
        model.sse = within_cluster_sse(dataset, model);
        model.sse_history.push_back(model.sse);
      }
      model.converged = true;
      break;
    }
    previous = model.sse;
  }
  return model;
}

ClusterModel select_proxies(const EmbeddedDataset& dataset, ClusterModel model) {
  if (model.assignments.size() != dataset.count() || model.dim != dataset.dim()) {
    throw Error(ErrorCode::InvalidConfig, "cluster model does not match the dataset");
  }
  std::vector<double> best(model.num_clusters, std::numeric_limits<double>::infinity());
  model.proxy_index.assign(model.num_clusters, dataset.count());
  for (std::size_t i = 0; i < dataset.count(); ++i) {
    const auto c = model.assignments[i];
    if (c >= model.num_clusters) {
      throw Error(ErrorCode::InvalidConfig, "assignment out of range at row " + std::to_string(i));
    }
    const double dist = squared_distance(dataset.row(i), model.centroid(c));
    if (dist < best[c]) {
      best[c] = dist;
      model.proxy_index[c] = i;
    }
  }
  for (std::size_t c = 0; c < model.num_clusters; ++c) {
    if (model.proxy_index[c] == dataset.count()) {
      throw Error(ErrorCode::InvalidConfig, "cluster " + std::to_string(c) + " is empty");
    }
  }
  return model;
}

std::vector<std::vector<std::size_t>> cluster_members(const ClusterModel& model) {
  std::vector<std::vector<std::size_t>> members(model.num_clusters);
  for (std::size_t i = 0; i < model.assignments.size(); ++i) members[model.assignments[i]].push_back(i);
  return members;
}

double within_cluster_sse(const EmbeddedDataset& dataset, const ClusterModel& model) {
  double sse = 0.0;
  for (std::size_t i = 0; i < dataset.count(); ++i) {
    sse += squared_distance(dataset.row(i), model.centroid(model.assignments[i]));
  }
  return sse;
}

std::string format_cluster_model(const ClusterModel& model) {
  std::ostringstream out;
  out << model.num_clusters << ' ' << model.dim << ' ' << model.seed << ' '
      << format_real(model.sse) << '\n';
  for (std::size_t c = 0; c < model.num_clusters; ++c) {
    const auto row = model.centroid(c);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << format_real(row[j]);
    out << '\n';
  }
  for (std::size_t i = 0; i < model.assignments.size(); ++i) out << (i ? " " : "") << model.assignments[i];
  out << '\n';
  for (std::size_t c = 0; c < model.proxy_index.size(); ++c) out << (c ? " " : "") << model.proxy_index[c];
  out << '\n';
  return out.str();
}

ClusterModel parse_cluster_model(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  auto fail = [](const std::string& why) { return Error(ErrorCode::MalformedRecord, "cluster model: " + why); };
  auto tokens = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t p = 0;
    while (p < line.size()) {
      while (p < line.size() && line[p] == ' ') ++p;
      auto q = line.find(' ', p);
      if (q == std::string_view::npos) q = line.size();
      if (q > p) out.push_back(line.substr(p, q - p));
      p = q;
    }
    return out;
  };
  auto to_uint = [&](std::string_view tok) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw fail("bad integer '" + std::string(tok) + "'");
    return v;
  };
  auto to_real = [&](std::string_view tok) {
    auto v = parse_real(tok);
    if (!v) throw fail("bad real '" + std::string(tok) + "'");
    return *v;
  };

  if (lines.empty()) throw fail("empty");
  const auto header = tokens(lines[0]);
  if (header.size() != 4) throw fail("header must be 'C d seed sse'");
  ClusterModel model;
  model.num_clusters = to_uint(header[0]);
  model.dim = to_uint(header[1]);
  model.seed = to_uint(header[2]);
  model.sse = to_real(header[3]);
  if (lines.size() < model.num_clusters + 3) throw fail("truncated");
  for (std::size_t c = 0; c < model.num_clusters; ++c) {
    const auto row = tokens(lines[1 + c]);
    if (row.size() != model.dim) throw fail("centroid row " + std::to_string(c) + " has wrong width");
    for (auto tok : row) model.centroids.push_back(to_real(tok));
  }
  for (auto tok : tokens(lines[1 + model.num_clusters])) {
    const auto a = to_uint(tok);
    if (a >= model.num_clusters) throw fail("assignment out of range");
    model.assignments.push_back(static_cast<std::uint32_t>(a));
  }
  for (auto tok : tokens(lines[2 + model.num_clusters])) model.proxy_index.push_back(to_uint(tok));
  if (!model.proxy_index.empty() && model.proxy_index.size() != model.num_clusters) {
    throw fail("proxy list length differs from C");
  }
  return model;
}

}  // namespace shed
