// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <type_traits>

#include "shed/error.hpp"
#include "shed/random.hpp"
#include "shed/text.hpp"

namespace shed {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) {
      config_error(std::string("config field '") + key + "' must be a non-negative integer");
    }
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    config_error(std::string("config field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return get_or<T>(obj, key, T{});
}

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_object()) config_error(std::string("config section '") + name + "' must be an object");
  return *it;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::exception& e) {
    throw StageError(stage, Error(ErrorCode::IoFailure, e.what()));
  }
}

double label_as_weight(const InstanceRecord& rec) {
  if (rec.label) {
    if (auto v = parse_real(*rec.label)) return *v;
  }
  throw Error(ErrorCode::MissingParameter,
              "record '" + rec.id + "' has no numeric label to use as its weight");
}

std::unordered_map<std::string, double> weights_from(const json& params, const EmbeddedDataset& data) {
  std::unordered_map<std::string, double> weights;
  if (auto it = params.find("weights"); it != params.end()) {
    if (!it->is_object()) config_error("'weights' must map ids to numbers");
    for (auto& [id, w] : it->items()) {
      if (!w.is_number()) config_error("weight for '" + id + "' is not a number");
      weights[id] = w.get<double>();
    }
    return weights;
  }
  for (const auto& rec : data.records()) weights[rec.id] = label_as_weight(rec);
  return weights;
}

std::vector<std::string> label_classes(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  return {all.begin(), all.end()};
}

NearestCentroidGame nearest_centroid_from(const json& params, const EmbeddedDataset& data) {
  const auto dev_emb = get_or<std::string>(params, "dev_embeddings", "");
  const auto dev_rec = get_or<std::string>(params, "dev_records", "");
  if (dev_emb.empty() || dev_rec.empty()) {
    config_error("NEAREST_CENTROID needs params.dev_embeddings and params.dev_records");
  }
  const auto dev = load_embeddings(dev_emb, dev_rec);
  if (dev.dim() != data.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dev set dimension differs from the corpus");
  }
  auto labels_of = [](const EmbeddedDataset& d) {
    std::vector<std::string> out;
    for (const auto& rec : d.records()) {
      if (!rec.label) throw Error(ErrorCode::MissingParameter, "record '" + rec.id + "' has no label");
      out.push_back(*rec.label);
    }
    return out;
  };
  const auto train_labels = labels_of(data);
  const auto dev_labels = labels_of(dev);
  const auto classes = label_classes(train_labels, dev_labels);
  auto class_index = [&](const std::string& label) {
    return static_cast<std::uint32_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };

  NearestCentroidGame game;
  game.dim = data.dim();
  game.num_classes = classes.size();
  game.scale = get_or<double>(params, "scale", 1.0);
  game.train.assign(data.embeddings().begin(), data.embeddings().end());
  game.dev.assign(dev.embeddings().begin(), dev.embeddings().end());
  for (std::size_t i = 0; i < data.count(); ++i) {
    game.rows.emplace(data.record(i).id, i);
    game.train_labels.push_back(class_index(train_labels[i]));
  }
  for (const auto& l : dev_labels) game.dev_labels.push_back(class_index(l));
  return game;
}

DemographicParityGame demographic_parity_from(const json& params, const EmbeddedDataset& data) {
  DemographicParityGame game;
  const auto positive = get_or<std::string>(params, "positive_label", "1");
  std::set<std::string> groups;
  for (const auto& rec : data.records()) {
    game.members[rec.id] = {rec.group_label, rec.label && *rec.label == positive};
    if (rec.group_label) groups.insert(*rec.group_label);
  }
  game.group_a = get_or<std::string>(params, "group_a", "");
  game.group_b = get_or<std::string>(params, "group_b", "");
  if (game.group_a.empty() || game.group_b.empty()) {
    if (groups.size() < 2) {
      throw Error(ErrorCode::MissingGroupLabel, "need two group labels for DEMOGRAPHIC_PARITY");
    }
    auto it = groups.begin();
    if (game.group_a.empty()) game.group_a = *it;
    if (game.group_b.empty()) game.group_b = *std::next(it);
  }
  return game;
}

BuiltinGame builtin_from(BuiltinKind kind, const json& params, const EmbeddedDataset& data) {
  switch (kind) {
    case BuiltinKind::Additive:
      return AdditiveGame{weights_from(params, data)};
    case BuiltinKind::Cardinality:
      return CardinalityGame{get_or<double>(params, "exponent", 1.0)};
    case BuiltinKind::Glove: {
      GloveGame g;
      g.left = get_or<std::string>(params, "left", "");
      g.rights = get_or<std::vector<std::string>>(params, "rights", {});
      if (g.left.empty() || g.rights.empty()) config_error("GLOVE needs params.left and params.rights");
      return g;
    }
    case BuiltinKind::PairSynergy: {
      PairSynergyGame g;
      g.weights = weights_from(params, data);
      for (const auto& p : params.value("pairs", json::array())) {
        if (!p.is_array() || p.size() != 3) config_error("PAIR_SYNERGY pairs are [id, id, bonus]");
        g.pairs.push_back({p[0].get<std::string>(), p[1].get<std::string>(), p[2].get<double>()});
      }
      return g;
    }
    case BuiltinKind::DemographicParity:
      return demographic_parity_from(params, data);
    case BuiltinKind::NearestCentroid:
      return nearest_centroid_from(params, data);
  }
  config_error("unknown built-in");
}

struct Stopwatch {
  Clock::time_point start = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

std::vector<std::string> proxy_ids(const EmbeddedDataset& data, const ClusterModel& model) {
  std::vector<std::string> ids;
  ids.reserve(model.proxy_index.size());
  for (auto row : model.proxy_index) ids.push_back(data.record(row).id);
  return ids;
}

ShapleyConfig effective_shapley(const RunConfig& config, std::size_t proxies) {
  ShapleyConfig s = config.shapley;
  if (s.group_size == 0) s.group_size = default_group_size(proxies);
  s.seed = config.stage_seed("shapley");
  return s;
}

ClusterModel load_cluster_model(const std::filesystem::path& path, const EmbeddedDataset& data) {
  auto model = parse_cluster_model(read_file(path));
  if (model.assignments.size() != data.count() || model.dim != data.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "cluster model '" + path.string() + "' does not match the dataset");
  }
  if (model.proxy_index.empty()) model = select_proxies(data, std::move(model));
  return model;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

std::uint64_t RunConfig::stage_seed(std::string_view stage) const {
  if (stage == "cluster" && cluster_seed) return *cluster_seed;
  if (stage == "shapley" && shapley_seed) return *shapley_seed;
  if (stage == "sampling" && sampling_seed) return *sampling_seed;
  return derive_seed(seed, stage);
}

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  r.cluster_seed = stage_seed("cluster");
  r.shapley_seed = stage_seed("shapley");
  r.sampling_seed = stage_seed("sampling");
  r.cluster.seed = *r.cluster_seed;
  r.shapley.seed = *r.shapley_seed;
  r.sampling.seed = *r.sampling_seed;
  return r;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  RunConfig c;
  c.seed = get_or<std::uint64_t>(doc, "seed", 0);

  const auto& paths = section(doc, "paths");
  c.embeddings = resolve(base_dir, get_or<std::string>(paths, "embeddings", ""));
  c.records = resolve(base_dir, get_or<std::string>(paths, "records", ""));
  c.out = resolve(base_dir, get_or<std::string>(paths, "out", ""));
  c.l2_normalize = get_or<bool>(section(doc, "dataset"), "l2_normalize", false);

  const auto& cl = section(doc, "cluster");
  c.cluster.num_clusters = get_or<std::size_t>(cl, "clusters", 0);
  c.cluster.max_iterations = get_or<std::size_t>(cl, "max_iterations", 100);
  c.cluster.rel_sse_tolerance = get_or<double>(cl, "tolerance", 1e-6);
  c.cluster.threads = get_or<std::size_t>(cl, "threads", 1);
  c.cluster_seed = get_opt<std::uint64_t>(cl, "seed");

  const auto& sh = section(doc, "shapley");
  c.shapley.group_size = get_or<std::size_t>(sh, "group_size", 0);
  c.shapley.iterations = get_or<std::size_t>(sh, "iterations", 10);
  c.shapley_seed = get_opt<std::uint64_t>(sh, "seed");

  const auto& v = section(doc, "value");
  if (auto it = v.find("command"); it != v.end() && !it->is_null()) {
    if (it->is_string()) c.value.command = it->get<std::string>();
    else if (it->is_array() && std::all_of(it->begin(), it->end(), [](const json& a) { return a.is_string(); }))
      c.value.argv = it->get<std::vector<std::string>>();
    else config_error("value.command must be a string or an array of strings");
  }
  c.value.builtin = get_or<std::string>(v, "builtin", "");
  if (auto it = v.find("params"); it != v.end() && it->is_object()) {
    c.value.params = *it;
    for (const char* key : {"dev_embeddings", "dev_records"}) {
      if (auto p = c.value.params.find(key); p != c.value.params.end() && p->is_string()) {
        *p = resolve(base_dir, p->get<std::string>()).string();
      }
    }
  }
  c.value.empty_value = get_opt<double>(v, "empty_value");
  c.value.timeout = std::chrono::milliseconds(
      static_cast<long long>(get_or<double>(v, "timeout_seconds", 600.0) * 1000.0));
  c.value.max_parallel = get_or<std::size_t>(v, "max_parallel", 1);

  const auto& sa = section(doc, "sampling");
  c.sampling.method = parse_sampling_method(get_or<std::string>(sa, "method", "qocs"));
  c.sampling.target_size = get_or<std::size_t>(sa, "target_size", 1);
  c.sampling.scaling_factor = get_or<double>(sa, "scaling_factor", 1.0);
  c.sampling_seed = get_opt<std::uint64_t>(sa, "seed");

  const auto& b = section(doc, "budget");
  c.budget = get_opt<double>(b, "t0");
  c.theta = get_opt<double>(b, "theta");
  c.lambda1 = get_or<double>(b, "lambda1", 1.0);
  c.lambda2 = get_or<double>(b, "lambda2", 1.0);
  c.theta_sample_size = get_or<std::size_t>(b, "sample_size", kThetaSampleSize);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    config_error(e.detail());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("'" + path.string() + "': " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

json to_json(const RunConfig& config) {
  const RunConfig c = config.resolved();
  json value = json::object();
  if (!c.value.argv.empty()) value["command"] = c.value.argv;
  else if (!c.value.command.empty()) value["command"] = c.value.command;
  if (!c.value.builtin.empty()) value["builtin"] = c.value.builtin;
  value["params"] = c.value.params;
  if (c.value.empty_value) value["empty_value"] = *c.value.empty_value;
  value["timeout_seconds"] = double(c.value.timeout.count()) / 1000.0;
  value["max_parallel"] = c.value.max_parallel;

  json budget = json::object();
  if (c.budget) budget["t0"] = *c.budget;
  if (c.theta) budget["theta"] = *c.theta;
  budget["lambda1"] = c.lambda1;
  budget["lambda2"] = c.lambda2;
  budget["sample_size"] = c.theta_sample_size;

  return json{
      {"seed", c.seed},
      {"paths", {{"embeddings", c.embeddings.string()}, {"records", c.records.string()}, {"out", c.out.string()}}},
      {"dataset", {{"l2_normalize", c.l2_normalize}}},
      {"cluster",
       {{"clusters", c.cluster.num_clusters},
        {"max_iterations", c.cluster.max_iterations},
        {"tolerance", c.cluster.rel_sse_tolerance},
        {"threads", c.cluster.threads},
        {"seed", *c.cluster_seed}}},
      {"shapley", {{"group_size", c.shapley.group_size}, {"iterations", c.shapley.iterations}, {"seed", *c.shapley_seed}}},
      {"value", value},
      {"sampling",
       {{"method", std::string(to_string(c.sampling.method))},
        {"target_size", c.sampling.target_size},
        {"scaling_factor", c.sampling.scaling_factor},
        {"seed", *c.sampling_seed}}},
      {"budget", budget},
  };
}

ValueFunctionSpec make_value_spec(const ValueConfig& config, const EmbeddedDataset& dataset) {
  const bool has_command = !config.command.empty() || !config.argv.empty();
  if (has_command == !config.builtin.empty()) {
    config_error("exactly one of a value command or a built-in value function is required");
  }
  ValueFunctionSpec spec;
  if (has_command) {
    auto argv = config.argv.empty() ? std::vector<std::string>{"/bin/sh", "-c", config.command} : config.argv;
    spec = ValueFunctionSpec::from_command(std::move(argv), config.empty_value.value_or(0.0));
  } else {
    spec = ValueFunctionSpec::from_builtin(builtin_from(parse_builtin_kind(config.builtin), config.params, dataset));
    if (config.empty_value) spec.empty_subset_value = *config.empty_value;
  }
  spec.timeout = config.timeout;
  spec.max_parallel_invocations = config.max_parallel;
  validate(spec);
  return spec;
}

// ---------------------------------------------------------------------------
// Manifest

json RunManifest::to_json() const {
  json stages = json::array();
  double total = 0.0;
  for (const auto& [name, secs] : stage_seconds) {
    stages.push_back({{"stage", name}, {"seconds", secs}});
    total += secs;
  }
  json doc{
      {"version", version},
      {"config", config},
      {"dataset", {{"digest", hex_digest(dataset_digest)}, {"count", dataset_size}}},
      {"clusters", clusters},
      {"stages", stages},
      {"total_seconds", total},
      {"evaluations_used", evaluations_used},
      {"expected_evaluations", expected_evaluations},
      {"backend_calls", backend_calls},
      {"artifacts",
       {{kClusterModelFile, hex_digest(cluster_model_digest)},
        {kScoreTableFile, hex_digest(score_table_digest)},
        {kSelectionFile, hex_digest(selection_digest)}}},
      {"selection_size", selection_size},
  };
  if (plan) {
    doc["plan"] = {{"theta", plan->theta},   {"t0", plan->t0},         {"k", plan->k_star},
                   {"C", plan->c_star},      {"objective", plan->objective},
                   {"constraint_residual", plan->constraint_residual()}};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Stages

EmbeddedDataset load_stage(const RunConfig& config) {
  return in_stage("load", [&] {
    if (config.embeddings.empty() || config.records.empty()) {
      throw Error(ErrorCode::InvalidConfig, "embeddings and records paths are required");
    }
    return load_embeddings(config.embeddings, config.records, LoadOptions{config.l2_normalize});
  });
}

ClusterModel cluster_stage(const RunConfig& config, const std::filesystem::path& out_path) {
  const auto data = load_stage(config);
  auto model = in_stage("cluster", [&] {
    ClusterConfig cc = config.cluster;
    cc.seed = config.stage_seed("cluster");
    return select_proxies(data, kmeans_fit(data, cc));
  });
  in_stage("export", [&] { write_file(out_path, format_cluster_model(model)); });
  return model;
}

ShapleyScores score_stage(const RunConfig& config, const std::filesystem::path& cluster_model_path,
                          const std::filesystem::path& out_path) {
  const auto data = load_stage(config);
  const auto model = in_stage("cluster", [&] { return load_cluster_model(cluster_model_path, data); });
  const auto spec = in_stage("configure-value", [&] { return make_value_spec(config.value, data); });
  const auto ids = proxy_ids(data, model);
  auto scores = in_stage("shapley", [&] { return approximate_shapley(spec, ids, effective_shapley(config, ids.size())); });
  in_stage("export", [&] {
    const auto table = build_score_table(data, model, scores.scores);
    write_file(out_path, format_score_table(table));
  });
  return scores;
}

SelectionResult sample_stage(const RunConfig& config, const std::filesystem::path& cluster_model_path,
                             const std::filesystem::path& scores_path, const std::filesystem::path& out_path) {
  const auto data = load_stage(config);
  const auto model = in_stage("cluster", [&] { return load_cluster_model(cluster_model_path, data); });
  const auto table = in_stage("score-table", [&] {
    return build_score_table(data, model, parse_score_column(read_file(scores_path)));
  });
  auto result = in_stage("sample", [&] {
    SamplingConfig sc = config.sampling;
    sc.seed = config.stage_seed("sampling");
    return sample(table, sc);
  });
  in_stage("export", [&] { export_selection(data, result, out_path); });
  return result;
}

BudgetPlan plan_stage(const RunConfig& config, std::optional<std::size_t> dataset_size) {
  if (!config.budget) config_error("a budget (--budget) is required for planning");
  if (config.theta && dataset_size) {
    return in_stage("plan", [&] {
      return plan_budget(*config.theta, *config.budget, *dataset_size, config.lambda1, config.lambda2);
    });
  }
  const auto data = load_stage(config);
  double theta = 0.0;
  if (config.theta) {
    theta = *config.theta;
  } else {
    const auto spec = in_stage("configure-value", [&] { return make_value_spec(config.value, data); });
    theta = in_stage("theta", [&] {
      const std::size_t sample = std::min(config.theta_sample_size, data.count());
      const std::size_t clusters = config.cluster.num_clusters ? config.cluster.num_clusters
                                                               : default_cluster_count(data.count());
      const std::size_t group = config.shapley.group_size ? config.shapley.group_size : default_group_size(clusters);
      return estimate_theta(data, spec, sample, group, config.stage_seed("theta")).theta;
    });
  }
  return in_stage("plan", [&] {
    return plan_budget(theta, *config.budget, dataset_size.value_or(data.count()), config.lambda1, config.lambda2);
  });
}

RunManifest run_pipeline(const RunConfig& input) {
  const RunConfig config = input.resolved();
  if (config.out.empty()) config_error("an output directory (--out) is required");

  RunManifest manifest;
  manifest.config = to_json(config);
  std::vector<std::filesystem::path> written;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
  };

  try {
    Stopwatch sw;
    const auto data = load_stage(config);
    manifest.stage_seconds.emplace_back("load", sw.seconds());
    manifest.dataset_digest = data.digest();
    manifest.dataset_size = data.count();

    sw = {};
    const auto spec = in_stage("configure-value", [&] { return make_value_spec(config.value, data); });

    ClusterConfig cc = config.cluster;
    ShapleyConfig sc = config.shapley;
    if (config.budget) {
      manifest.plan = in_stage("plan", [&] {
        double theta = 0.0;
        if (config.theta) {
          theta = *config.theta;
        } else {
          const std::size_t clusters = cc.num_clusters ? cc.num_clusters : default_cluster_count(data.count());
          const std::size_t group = sc.group_size ? sc.group_size : default_group_size(clusters);
          theta = estimate_theta(data, spec, std::min(config.theta_sample_size, data.count()), group,
                                 config.stage_seed("theta"))
                      .theta;
        }
        return plan_budget(theta, *config.budget, data.count(), config.lambda1, config.lambda2);
      });
      cc.num_clusters = std::min(manifest.plan->c_star, data.count());
      sc.iterations = manifest.plan->k_star;
    }
    manifest.stage_seconds.emplace_back("plan", sw.seconds());

    sw = {};
    const auto model = in_stage("cluster", [&] { return select_proxies(data, kmeans_fit(data, cc)); });
    manifest.stage_seconds.emplace_back("cluster", sw.seconds());
    manifest.clusters = model.num_clusters;

    sw = {};
    const auto ids = proxy_ids(data, model);
    if (sc.group_size == 0) sc.group_size = default_group_size(ids.size());
    const auto scores = in_stage("shapley", [&] { return approximate_shapley(spec, ids, sc); });
    manifest.stage_seconds.emplace_back("shapley", sw.seconds());
    manifest.evaluations_used = scores.evaluations_used;
    manifest.expected_evaluations = expected_evaluations(ids.size(), sc.group_size, sc.iterations);
    manifest.backend_calls = scores.backend_calls;

    sw = {};
    const auto table = in_stage("score-table", [&] { return build_score_table(data, model, scores.scores); });
    const auto selection = in_stage("sample", [&] { return sample(table, config.sampling); });
    manifest.stage_seconds.emplace_back("sample", sw.seconds());
    manifest.selection_size = selection.selected_ids.size();

    sw = {};
    in_stage("export", [&] {
      std::filesystem::create_directories(config.out);
      const auto cluster_text = format_cluster_model(model);
      const auto score_text = format_score_table(table);
      const auto selection_text = format_selection(data, selection);
      const std::pair<const char*, const std::string*> files[] = {
          {kClusterModelFile, &cluster_text}, {kScoreTableFile, &score_text}, {kSelectionFile, &selection_text}};
      for (const auto& [name, text] : files) {
        written.push_back(config.out / name);
        write_file(written.back(), *text);
      }
      manifest.cluster_model_digest = fnv1a(cluster_text);
      manifest.score_table_digest = fnv1a(score_text);
      manifest.selection_digest = fnv1a(selection_text);
      manifest.stage_seconds.emplace_back("export", sw.seconds());
      written.push_back(config.out / kManifestFile);
      write_file(written.back(), manifest.to_json().dump(2) + "\n");
    });
  } catch (...) {
    cleanup();
    throw;
  }
  return manifest;
}

}  // namespace shed
