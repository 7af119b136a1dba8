// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "shed/clustering.hpp"
#include "shed/dataset.hpp"
#include "shed/error.hpp"
#include "shed/pipeline.hpp"
#include "shed/planner.hpp"
#include "shed/sampling.hpp"
#include "shed/shapley.hpp"
#include "shed/text.hpp"
#include "shed/value_function.hpp"

namespace py = pybind11;
using namespace shed;

namespace {

// A value function given from Python: either a callable taking a list of ids
// or an argument vector for an external command.
ValueFunctionSpec make_spec(const py::object& value, double empty_value, double timeout_seconds,
                            std::size_t max_parallel) {
  ValueFunctionSpec spec;
  if (py::isinstance<py::function>(value)) {
    // Copies of the spec may die on worker threads; drop the Python reference under the GIL.
    std::shared_ptr<py::function> fn(new py::function(value.cast<py::function>()), [](py::function* f) {
      py::gil_scoped_acquire gil;
      delete f;
    });
    spec = ValueFunctionSpec::from_callback(
        [fn](std::span<const std::string> subset) {
          py::gil_scoped_acquire gil;
          py::list ids;
          for (const auto& id : subset) ids.append(id);
          return (*fn)(ids).cast<double>();
        },
        empty_value);
  } else {
    spec = ValueFunctionSpec::from_command(value.cast<std::vector<std::string>>(), empty_value);
  }
  spec.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds * 1000.0));
  spec.max_parallel_invocations = max_parallel;
  return spec;
}

py::array_t<float> embeddings_array(const EmbeddedDataset& ds) {
  py::array_t<float> out({ds.count(), ds.dim()});
  std::copy(ds.embeddings().begin(), ds.embeddings().end(), out.mutable_data());
  return out;
}

EmbeddedDataset dataset_from_arrays(std::vector<std::string> ids,
                                    py::array_t<float, py::array::c_style | py::array::forcecast> values) {
  if (values.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "embeddings must be a 2-D array");
  std::vector<InstanceRecord> records;
  records.reserve(ids.size());
  for (auto& id : ids) records.push_back({std::move(id), "", std::nullopt, std::nullopt});
  std::vector<float> flat(values.data(), values.data() + values.size());
  return EmbeddedDataset(std::move(records), std::move(flat), static_cast<std::size_t>(values.shape(1)));
}

nlohmann::json to_nlohmann(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_shed, m) {
  m.doc() = "Proxy-based Shapley data selection";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "ShedError", PyExc_RuntimeError);

  py::enum_<SamplingMethod>(m, "SamplingMethod")
      .value("QOCS", SamplingMethod::QOCS)
      .value("QWCS", SamplingMethod::QWCS)
      .value("RANDOM", SamplingMethod::RANDOM);

  py::class_<EmbeddedDataset>(m, "EmbeddedDataset")
      .def(py::init(&dataset_from_arrays), py::arg("ids"), py::arg("embeddings"))
      .def_static(
          "load",
          [](const std::filesystem::path& embeddings, const std::filesystem::path& records, bool normalize) {
            return load_embeddings(embeddings, records, {normalize});
          },
          py::arg("embeddings"), py::arg("records"), py::arg("l2_normalize") = false)
      .def_property_readonly("count", &EmbeddedDataset::count)
      .def_property_readonly("dim", &EmbeddedDataset::dim)
      .def_property_readonly("digest", [](const EmbeddedDataset& d) { return hex_digest(d.digest()); })
      .def_property_readonly("ids",
                             [](const EmbeddedDataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& r : d.records()) ids.push_back(r.id);
                               return ids;
                             })
      .def_property_readonly("embeddings", &embeddings_array)
      .def("write", [](const EmbeddedDataset& d, const std::filesystem::path& embeddings,
                       const std::filesystem::path& records) { write_dataset(d, embeddings, records); },
           py::arg("embeddings"), py::arg("records"))
      .def("__len__", &EmbeddedDataset::count);

  py::class_<ClusterModel>(m, "ClusterModel")
      .def_readonly("num_clusters", &ClusterModel::num_clusters)
      .def_readonly("dim", &ClusterModel::dim)
      .def_readonly("seed", &ClusterModel::seed)
      .def_readonly("assignments", &ClusterModel::assignments)
      .def_readonly("proxy_index", &ClusterModel::proxy_index)
      .def_readonly("sse", &ClusterModel::sse)
      .def_readonly("sse_history", &ClusterModel::sse_history)
      .def_readonly("iterations", &ClusterModel::iterations)
      .def_readonly("converged", &ClusterModel::converged)
      .def_property_readonly("centroids", [](const ClusterModel& cm) {
        py::array_t<double> out({cm.num_clusters, cm.dim});
        std::copy(cm.centroids.begin(), cm.centroids.end(), out.mutable_data());
        return out;
      });

  m.def(
      "kmeans_fit",
      [](const EmbeddedDataset& ds, std::size_t clusters, std::size_t max_iterations, double tolerance,
         std::uint64_t seed, std::size_t threads) {
        py::gil_scoped_release release;
        return select_proxies(ds, kmeans_fit(ds, {clusters, max_iterations, tolerance, seed, threads}));
      },
      py::arg("dataset"), py::arg("clusters") = 0, py::arg("max_iterations") = 100, py::arg("tolerance") = 1e-6,
      py::arg("seed") = 0, py::arg("threads") = 1,
      "k-means++ then Lloyd iterations; proxies are filled in. clusters=0 means round(3 sqrt N).");
  m.def("default_cluster_count", &default_cluster_count, py::arg("n"));

  py::class_<ShapleyScores>(m, "ShapleyScores")
      .def_readonly("scores", &ShapleyScores::scores)
      .def_readonly("iterations", &ShapleyScores::iterations)
      .def_readonly("value_full", &ShapleyScores::value_full)
      .def_readonly("value_empty", &ShapleyScores::value_empty)
      .def_readonly("evaluations_used", &ShapleyScores::evaluations_used)
      .def_readonly("backend_calls", &ShapleyScores::backend_calls)
      .def_property_readonly("per_iteration_contributions", [](const ShapleyScores& s) {
        py::array_t<double> out({s.iterations, s.scores.size()});
        std::copy(s.per_iteration_contributions.begin(), s.per_iteration_contributions.end(),
                  out.mutable_data());
        return out;
      });

  m.def(
      "approximate_shapley",
      [](const py::object& value, const std::vector<std::string>& ids, std::size_t group_size,
         std::size_t iterations, std::uint64_t seed, double empty_value, double timeout, std::size_t max_parallel) {
        const auto spec = make_spec(value, empty_value, timeout, max_parallel);
        py::gil_scoped_release release;
        return approximate_shapley(spec, ids, {group_size, iterations, seed});
      },
      py::arg("value"), py::arg("ids"), py::arg("group_size") = 1, py::arg("iterations") = 10, py::arg("seed") = 0,
      py::arg("empty_value") = 0.0, py::arg("timeout") = 600.0, py::arg("max_parallel") = 1,
      "Group-removal Shapley estimate. `value` is a callable on a list of ids or a command argv.");
  m.def(
      "exact_shapley",
      [](const py::object& value, const std::vector<std::string>& ids, double empty_value, double timeout) {
        const auto spec = make_spec(value, empty_value, timeout, 1);
        py::gil_scoped_release release;
        return exact_shapley(spec, ids);
      },
      py::arg("value"), py::arg("ids"), py::arg("empty_value") = 0.0, py::arg("timeout") = 600.0);
  m.def("default_group_size", &default_group_size, py::arg("num_proxies"));
  m.def("expected_evaluations", &expected_evaluations, py::arg("num_proxies"), py::arg("group_size"),
        py::arg("iterations"));

  m.def(
      "cluster_probabilities",
      [](const std::vector<double>& scores, double f) { return cluster_probabilities(scores, f); },
      py::arg("scores"), py::arg("scaling_factor") = 1.0);

  py::class_<SelectionResult>(m, "SelectionResult")
      .def_readonly("selected_ids", &SelectionResult::selected_ids)
      .def_readonly("method", &SelectionResult::method)
      .def_readonly("target_size", &SelectionResult::target_size)
      .def_readonly("scaling_factor", &SelectionResult::scaling_factor)
      .def_readonly("seed", &SelectionResult::seed)
      .def_property_readonly("source_digest", [](const SelectionResult& r) { return hex_digest(r.source_digest); })
      .def("__eq__", [](const SelectionResult& a, const SelectionResult& b) { return a == b; });

  m.def(
      "sample",
      [](const EmbeddedDataset& ds, const ClusterModel& model, const std::vector<double>& scores,
         const std::string& method, std::size_t target_size, double scaling_factor, std::uint64_t seed) {
        const auto table = build_score_table(ds, model, scores);
        return sample(table, {parse_sampling_method(method), target_size, scaling_factor, seed});
      },
      py::arg("dataset"), py::arg("model"), py::arg("scores"), py::arg("method") = "qocs",
      py::arg("target_size") = 1, py::arg("scaling_factor") = 1.0, py::arg("seed") = 0,
      "Select instances from clusters ranked or weighted by their proxy scores.");

  py::class_<BudgetPlan>(m, "BudgetPlan")
      .def_readonly("theta", &BudgetPlan::theta)
      .def_readonly("t0", &BudgetPlan::t0)
      .def_readonly("dataset_size", &BudgetPlan::dataset_size)
      .def_readonly("k", &BudgetPlan::k_star)
      .def_readonly("C", &BudgetPlan::c_star)
      .def_readonly("objective", &BudgetPlan::objective)
      .def_property_readonly("planned_seconds", &BudgetPlan::planned_seconds)
      .def_property_readonly("constraint_residual", &BudgetPlan::constraint_residual)
      .def("__repr__", &format_plan);

  m.def("plan_budget", &plan_budget, py::arg("theta"), py::arg("t0"), py::arg("dataset_size"),
        py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0);
  m.def(
      "estimate_runtime",
      [](std::size_t clusters, std::size_t group_size, std::size_t iterations, double t, double tm) {
        return estimate_runtime({clusters, group_size, iterations, t, tm});
      },
      py::arg("clusters"), py::arg("group_size"), py::arg("iterations"), py::arg("seconds_per_instance"),
      py::arg("seconds_per_eval"));

  m.def(
      "run_pipeline",
      [](const py::object& config, const std::filesystem::path& base_dir) {
        const auto cfg = parse_run_config(to_nlohmann(config), base_dir);
        RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = run_pipeline(cfg);
        }
        return to_python(manifest.to_json());
      },
      py::arg("config"), py::arg("base_dir") = std::filesystem::path{},
      "Run the full pipeline from a config dict (same schema as the CLI's --config file); returns the manifest.");
}
