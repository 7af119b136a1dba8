// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: plan, cluster, score, sample, run, exact-shapley.
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "shed/error.hpp"
#include "shed/pipeline.hpp"
#include "shed/shapley.hpp"
#include "shed/text.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Flags {
  std::string config;
  std::string embeddings, records, out;
  std::optional<std::size_t> clusters, group_size, iterations, target_size, max_parallel;
  std::optional<std::string> method, value_cmd, builtin, params;
  std::optional<double> scaling_factor, budget, theta, lambda1, lambda2, empty_value, timeout;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dataset_size, sample_size;
  bool normalize = false;
  std::string cluster_model, scores, ids;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration; flags override it");
  cmd->add_option("--embeddings", f.embeddings, "Embedding matrix (SHEDEMB1)");
  cmd->add_option("--records", f.records, "Records file, one JSON object per line");
  cmd->add_option("--out", f.out, "Output path");
  cmd->add_option("--clusters", f.clusters, "Number of clusters C (default round(3 sqrt N))");
  cmd->add_option("--group-size", f.group_size, "Proxies removed per step n (default round(C/50))");
  cmd->add_option("--iterations", f.iterations, "Shapley iterations k (default 10)");
  cmd->add_option("--method", f.method, "qocs | qwcs | random");
  cmd->add_option("--target-size", f.target_size, "Instances to select");
  cmd->add_option("--scaling-factor", f.scaling_factor, "QWCS scaling factor f (default 1)");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--value-cmd", f.value_cmd, "Value-function command (run via /bin/sh -c)");
  cmd->add_option("--builtin", f.builtin, "Built-in value function");
  cmd->add_option("--params", f.params, "Built-in parameters: inline JSON or a JSON file");
  cmd->add_option("--empty-value", f.empty_value, "v(empty set)");
  cmd->add_option("--timeout", f.timeout, "Per-invocation timeout in seconds");
  cmd->add_option("--max-parallel", f.max_parallel, "Concurrent value-function chains");
  cmd->add_option("--budget", f.budget, "Time budget t0 in seconds");
  cmd->add_option("--theta", f.theta, "Seconds per (iteration x cluster)");
  cmd->add_option("--lambda1", f.lambda1, "Weight on (k - 10)^2");
  cmd->add_option("--lambda2", f.lambda2, "Weight on (C - 3 sqrt N)^2");
  cmd->add_flag("--normalize", f.normalize, "L2-normalize embeddings at load");
}

nlohmann::json parse_params(const std::string& text) {
  const auto trimmed = shed::trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') return nlohmann::json::parse(trimmed);
  return nlohmann::json::parse(shed::read_file(std::string(trimmed)));
}

shed::RunConfig build_config(const Flags& f) {
  shed::RunConfig c = f.config.empty() ? shed::RunConfig{} : shed::load_run_config(f.config);
  if (!f.embeddings.empty()) c.embeddings = f.embeddings;
  if (!f.records.empty()) c.records = f.records;
  if (!f.out.empty()) c.out = f.out;
  if (f.normalize) c.l2_normalize = true;
  if (f.clusters) c.cluster.num_clusters = *f.clusters;
  if (f.group_size) c.shapley.group_size = *f.group_size;
  if (f.iterations) c.shapley.iterations = *f.iterations;
  if (f.method) c.sampling.method = shed::parse_sampling_method(*f.method);
  if (f.target_size) c.sampling.target_size = *f.target_size;
  if (f.scaling_factor) c.sampling.scaling_factor = *f.scaling_factor;
  if (f.seed) c.seed = *f.seed;
  if (f.value_cmd) {
    c.value.command = *f.value_cmd;
    c.value.argv.clear();
    c.value.builtin.clear();
  }
  if (f.builtin) {
    c.value.builtin = *f.builtin;
    c.value.command.clear();
    c.value.argv.clear();
  }
  if (f.params) {
    try {
      c.value.params = parse_params(*f.params);
    } catch (const nlohmann::json::exception& e) {
      throw shed::Error(shed::ErrorCode::InvalidConfig, std::string("--params: ") + e.what());
    }
  }
  if (f.empty_value) c.value.empty_value = *f.empty_value;
  if (f.timeout) c.value.timeout = std::chrono::milliseconds(static_cast<long long>(*f.timeout * 1000.0));
  if (f.max_parallel) c.value.max_parallel = *f.max_parallel;
  if (f.budget) c.budget = *f.budget;
  if (f.theta) c.theta = *f.theta;
  if (f.lambda1) c.lambda1 = *f.lambda1;
  if (f.lambda2) c.lambda2 = *f.lambda2;
  if (f.sample_size) c.theta_sample_size = *f.sample_size;
  return c;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw shed::Error(shed::ErrorCode::InvalidConfig, what);
}

shed::EmbeddedDataset players_dataset(const shed::RunConfig& c) {
  if (!c.embeddings.empty()) return shed::load_stage(c);
  require(!c.records.empty(), "exact-shapley needs --records");
  auto records = shed::parse_records(shed::read_file(c.records));
  std::vector<float> zeros(records.size(), 0.0f);
  return shed::EmbeddedDataset(std::move(records), std::move(zeros), 1);
}

int run_exact(const shed::RunConfig& c, const std::string& ids_flag) {
  const auto data = players_dataset(c);
  std::vector<std::string> ids;
  if (ids_flag.empty()) {
    for (const auto& r : data.records()) ids.push_back(r.id);
  } else {
    std::size_t pos = 0;
    while (pos <= ids_flag.size()) {
      auto end = ids_flag.find(',', pos);
      if (end == std::string::npos) end = ids_flag.size();
      if (end > pos) ids.emplace_back(shed::trim(std::string_view(ids_flag).substr(pos, end - pos)));
      pos = end + 1;
    }
  }
  const auto spec = shed::make_value_spec(c.value, data);
  const auto scores = shed::exact_shapley(spec, ids);
  for (std::size_t i = 0; i < ids.size(); ++i) std::cout << ids[i] << '\t' << shed::format_real(scores[i]) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-based dataset refinement: cluster, score proxies, sample a subset."};
  app.require_subcommand(1);
  Flags f;

  auto* plan = app.add_subcommand("plan", "Choose (k, C) for a time budget");
  add_common(plan, f);
  plan->add_option("--dataset-size", f.dataset_size, "N, when no embeddings are given");
  plan->add_option("--sample-size", f.sample_size, "Instances timed when estimating theta (default 2000)");

  auto* cluster = app.add_subcommand("cluster", "Run k-means and pick proxies; --out is the cluster dump");
  add_common(cluster, f);

  auto* score = app.add_subcommand("score", "Estimate proxy Shapley values; --out is the score table");
  add_common(score, f);
  score->add_option("--cluster-model", f.cluster_model, "Cluster dump from 'cluster'")->required();

  auto* samp = app.add_subcommand("sample", "Sample a subset; --out is the selection file");
  add_common(samp, f);
  samp->add_option("--cluster-model", f.cluster_model, "Cluster dump from 'cluster'")->required();
  samp->add_option("--scores", f.scores, "Score table from 'score'")->required();

  auto* run = app.add_subcommand("run", "Full pipeline; --out is the output directory");
  add_common(run, f);

  auto* exact = app.add_subcommand("exact-shapley", "Exact Shapley values by enumeration (<= 20 players)");
  add_common(exact, f);
  exact->add_option("--ids", f.ids, "Comma-separated player ids (default: every record)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  shed::RunConfig config;
  try {
    config = build_config(f);
  } catch (const shed::Error& e) {
    std::cerr << "shed: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*plan) {
      const auto p = shed::plan_stage(config, f.dataset_size);
      std::cout << shed::format_plan(p);
    } else if (*cluster) {
      require(!config.out.empty(), "--out is required");
      const auto m = shed::cluster_stage(config, config.out);
      std::cerr << "clusters: " << m.num_clusters << ", sse: " << shed::format_real(m.sse) << '\n';
    } else if (*score) {
      require(!config.out.empty(), "--out is required");
      const auto s = shed::score_stage(config, f.cluster_model, config.out);
      std::cerr << "evaluations: " << s.evaluations_used << ", v(full): " << shed::format_real(s.value_full)
                << ", v(empty): " << shed::format_real(s.value_empty) << '\n';
    } else if (*samp) {
      require(!config.out.empty(), "--out is required");
      const auto r = shed::sample_stage(config, f.cluster_model, f.scores, config.out);
      std::cerr << "selected: " << r.selected_ids.size() << '\n';
    } else if (*run) {
      const auto m = shed::run_pipeline(config);
      std::cout << m.to_json().dump(2) << '\n';
    } else if (*exact) {
      return run_exact(config, f.ids);
    }
  } catch (const shed::Error& e) {
    // Stage errors keep their cause's code, so a bad value-function setup
    // found mid-run is still a configuration error.
    std::cerr << "shed: " << e.what() << '\n';
    return e.code() == shed::ErrorCode::InvalidConfig ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "shed: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
