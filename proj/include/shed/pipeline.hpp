// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shed/clustering.hpp"
#include "shed/dataset.hpp"
#include "shed/planner.hpp"
#include "shed/sampling.hpp"
#include "shed/shapley.hpp"
#include "shed/value_function.hpp"

namespace shed {

inline constexpr const char* kVersion = "0.3.0";

/// Declarative description of the value function; turned into a
/// ValueFunctionSpec once the dataset is known.
struct ValueConfig {
  /// Run through /bin/sh -c when `argv` is empty.
  std::string command;
  std::vector<std::string> argv;
  std::string builtin;
  nlohmann::json params = nlohmann::json::object();
  std::optional<double> empty_value;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  std::size_t max_parallel = 1;
};

struct RunConfig {
  std::filesystem::path embeddings;
  std::filesystem::path records;
  std::filesystem::path out;
  bool l2_normalize = false;

  ClusterConfig cluster;   // num_clusters 0 = round(3 sqrt N)
  ShapleyConfig shapley;   // group_size 0 = max(1, round(C / 50))
  ValueConfig value;
  SamplingConfig sampling;

  std::optional<double> budget;
  std::optional<double> theta;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::size_t theta_sample_size = kThetaSampleSize;

  std::uint64_t seed = 0;
  // Per-stage seeds; unset ones derive from `seed` and the stage name.
  std::optional<std::uint64_t> cluster_seed;
  std::optional<std::uint64_t> shapley_seed;
  std::optional<std::uint64_t> sampling_seed;

  std::uint64_t stage_seed(std::string_view stage) const;
  /// Copy with every stage seed filled in.
  RunConfig resolved() const;
};

/// Reads a JSON config file. Relative paths resolve against the file's
/// directory. Throws InvalidConfig.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& config);

/// Builds the value function for `dataset`. Built-in parameters come from
/// `config.params`, falling back to record fields (labels, group labels).
ValueFunctionSpec make_value_spec(const ValueConfig& config, const EmbeddedDataset& dataset);

struct RunManifest {
  nlohmann::json config;
  std::uint64_t dataset_digest = 0;
  std::size_t dataset_size = 0;
  std::size_t clusters = 0;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::size_t evaluations_used = 0;
  std::size_t expected_evaluations = 0;
  std::size_t backend_calls = 0;
  std::uint64_t cluster_model_digest = 0;
  std::uint64_t score_table_digest = 0;
  std::uint64_t selection_digest = 0;
  std::size_t selection_size = 0;
  std::optional<BudgetPlan> plan;
  std::string version = kVersion;

  nlohmann::json to_json() const;
};

/// Output files written into RunConfig::out by run_pipeline.
inline constexpr const char* kClusterModelFile = "clusters.txt";
inline constexpr const char* kScoreTableFile = "scores.tsv";
inline constexpr const char* kSelectionFile = "selection.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

/// load -> k-means -> proxies -> Shapley -> score table -> sampler -> export.
/// Any stage failure surfaces as StageError naming the stage; files written
/// by this call are removed first.
RunManifest run_pipeline(const RunConfig& config);

// Individual stages, as exposed by the CLI subcommands.

EmbeddedDataset load_stage(const RunConfig& config);
/// Clusters and picks proxies; writes the cluster dump to `out_path`.
ClusterModel cluster_stage(const RunConfig& config, const std::filesystem::path& out_path);
/// Scores proxies of a saved cluster model; writes the score table.
ShapleyScores score_stage(const RunConfig& config, const std::filesystem::path& cluster_model_path,
                          const std::filesystem::path& out_path);
/// Samples from a saved cluster model and score table; exports the selection.
SelectionResult sample_stage(const RunConfig& config, const std::filesystem::path& cluster_model_path,
                             const std::filesystem::path& scores_path,
                             const std::filesystem::path& out_path);
/// Uses config.theta when set, otherwise times one iteration on the dataset.
BudgetPlan plan_stage(const RunConfig& config, std::optional<std::size_t> dataset_size = std::nullopt);

}  // namespace shed
