// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "shed/error.hpp"
#include "shed/random.hpp"
#include "shed/text.hpp"

namespace shed {

namespace {

void check_target(const ClusterScoreTable& table, const SamplingConfig& config) {
  if (config.target_size == 0) throw Error(ErrorCode::InvalidConfig, "target size must be at least 1");
  if (config.target_size > table.total_members()) {
    throw Error(ErrorCode::TargetTooLarge, "target size " + std::to_string(config.target_size) +
                                               " exceeds the " + std::to_string(table.total_members()) +
                                               " available instances");
  }
}

SelectionResult make_result(const ClusterScoreTable& table, const SamplingConfig& config) {
  SelectionResult r;
  r.method = config.method;
  r.target_size = config.target_size;
  r.scaling_factor = config.scaling_factor;
  r.seed = config.seed;
  r.source_digest = table.source_digest;
  r.selected_ids.reserve(config.target_size);
  return r;
}

}  // namespace

ClusterScoreTable build_score_table(const EmbeddedDataset& dataset, const ClusterModel& model,
                                    std::span<const double> proxy_scores) {
  if (model.proxy_index.size() != model.num_clusters) {
    throw Error(ErrorCode::InvalidConfig, "cluster model has no proxies; run select_proxies first");
  }
  if (proxy_scores.size() != model.num_clusters) {
    throw Error(ErrorCode::InvalidParams, std::to_string(proxy_scores.size()) + " scores for " +
                                              std::to_string(model.num_clusters) + " clusters");
  }
  ClusterScoreTable table;
  table.scores.assign(proxy_scores.begin(), proxy_scores.end());
  for (double s : table.scores)
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidParams, "cluster score is not finite");
  table.proxies = model.proxy_index;
  table.source_digest = dataset.digest();
  table.ids.reserve(dataset.count());
  for (const auto& rec : dataset.records()) table.ids.push_back(rec.id);

  table.members = cluster_members(model);
  for (std::size_t c = 0; c < model.num_clusters; ++c) {
    auto& rows = table.members[c];
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(rows.size());
    for (auto row : rows) keyed.emplace_back(squared_distance(dataset.row(row), model.centroid(c)), row);
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = keyed[i].second;
  }
  return table;
}

std::vector<double> cluster_probabilities(std::span<const double> scores, double scaling_factor,
                                          std::span<const bool> active) {
  if (!std::isfinite(scaling_factor)) throw Error(ErrorCode::InvalidParams, "scaling factor is not finite");
  if (!active.empty() && active.size() != scores.size()) {
    throw Error(ErrorCode::InvalidParams, "active mask length differs from score count");
  }
  auto is_active = [&](std::size_t i) { return active.empty() || active[i]; };

  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::InvalidParams, "cluster score is not finite");
    if (is_active(i)) top = std::max(top, scaling_factor * scores[i]);
  }
  if (top == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::EmptyActiveSet, "no active clusters to sample from");
  }
  std::vector<double> probs(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_active(i)) continue;
    probs[i] = std::exp(scaling_factor * scores[i] - top);
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  return probs;
}

SelectionResult qocs_sample(const ClusterScoreTable& table, const SamplingConfig& config) {
  check_target(table, config);
  std::vector<std::size_t> order(table.num_clusters());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return table.scores[a] > table.scores[b]; });

  auto result = make_result(table, config);
  for (auto c : order) {
    for (auto row : table.members[c]) {
      if (result.selected_ids.size() == config.target_size) return result;
      result.selected_ids.push_back(table.ids[row]);
    }
  }
  return result;
}

SelectionResult qwcs_sample(const ClusterScoreTable& table, const SamplingConfig& config) {
  check_target(table, config);
  const std::size_t k = table.num_clusters();
  std::vector<std::vector<std::size_t>> remaining = table.members;
  std::unique_ptr<bool[]> active(new bool[k]);
  for (std::size_t c = 0; c < k; ++c) active[c] = !remaining[c].empty();
  const std::span<const bool> mask(active.get(), k);

  Engine engine = make_engine(config.seed);
  auto result = make_result(table, config);
  std::vector<double> cumulative(k);
  bool stale = true;
  while (result.selected_ids.size() < config.target_size) {
    if (stale) {
      const auto probs = cluster_probabilities(table.scores, config.scaling_factor, mask);
      std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
      stale = false;
    }
    const double u = uniform01(engine) * cumulative.back();
    auto cluster = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    // Rounding can land past the last active cluster, or on an inactive one
    // whose cumulative equals its predecessor's; step back to an active one.
    if (cluster >= k) cluster = k - 1;
    while (!active[cluster] && cluster > 0) --cluster;
    while (!active[cluster]) ++cluster;

    auto& pool = remaining[cluster];
    const auto pick = static_cast<std::size_t>(uniform_index(engine, pool.size()));
    result.selected_ids.push_back(table.ids[pool[pick]]);
    pool[pick] = pool.back();
    pool.pop_back();
    if (pool.empty()) {
      active[cluster] = false;
      stale = true;
    }
  }
  return result;
}

SelectionResult random_sample(const ClusterScoreTable& table, const SamplingConfig& config) {
  check_target(table, config);
  std::vector<std::size_t> rows(table.total_members());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Engine engine = make_engine(config.seed);
  auto result = make_result(table, config);
  for (std::size_t i = 0; i < config.target_size; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(engine, rows.size() - i));
    std::swap(rows[i], rows[j]);
    result.selected_ids.push_back(table.ids[rows[i]]);
  }
  return result;
}

SelectionResult sample(const ClusterScoreTable& table, const SamplingConfig& config) {
  switch (config.method) {
    case SamplingMethod::QOCS: return qocs_sample(table, config);
    case SamplingMethod::QWCS: return qwcs_sample(table, config);
    case SamplingMethod::RANDOM: return random_sample(table, config);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown sampling method");
}

std::string format_score_table(const ClusterScoreTable& table) {
  std::ostringstream out;
  out << "# shed-scores v1\n"
      << "# clusters: " << table.num_clusters() << '\n'
      << "# source_digest: " << hex_digest(table.source_digest) << '\n'
      << "# cluster\tproxy_row\tproxy_id\tsize\tscore\n";
  for (std::size_t c = 0; c < table.num_clusters(); ++c) {
    const auto proxy = table.proxies.empty() ? 0 : table.proxies[c];
    out << c << '\t' << proxy << '\t' << table.ids[proxy] << '\t' << table.members[c].size() << '\t'
        << format_real(table.scores[c]) << '\n';
  }
  return out.str();
}

std::vector<double> parse_score_column(std::string_view text) {
  std::vector<double> scores;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.rfind('\t');
    const auto first_tab = line.find('\t');
    std::size_t cluster = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + first_tab, cluster);
    const auto value = tab == std::string_view::npos ? std::nullopt : parse_real(line.substr(tab + 1));
    if (ec != std::errc() || !value || cluster != scores.size()) {
      throw Error(ErrorCode::MalformedRecord, "score table line '" + std::string(line) + "'");
    }
    scores.push_back(*value);
  }
  return scores;
}

}  // namespace shed
