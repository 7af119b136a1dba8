# Copyright 2026 The SHED Authors
# SPDX-License-Identifier: Apache-2.0
"""Proxy-based Shapley data selection.

Cluster an embedded corpus, score one proxy per cluster with a group-removal
Shapley estimate, then sample instances from the best-scoring clusters.
"""

from ._shed import (
    BudgetPlan,
    ClusterModel,
    EmbeddedDataset,
    SamplingMethod,
    SelectionResult,
    ShapleyScores,
    ShedError,
    __version__,
    approximate_shapley,
    cluster_probabilities,
    default_cluster_count,
    default_group_size,
    estimate_runtime,
    exact_shapley,
    expected_evaluations,
    kmeans_fit,
    plan_budget,
    run_pipeline,
    sample,
)

__all__ = [
    "BudgetPlan",
    "ClusterModel",
    "EmbeddedDataset",
    "SamplingMethod",
    "SelectionResult",
    "ShapleyScores",
    "ShedError",
    "__version__",
    "approximate_shapley",
    "cluster_probabilities",
    "default_cluster_count",
    "default_group_size",
    "estimate_runtime",
    "exact_shapley",
    "expected_evaluations",
    "kmeans_fit",
    "plan_budget",
    "run_pipeline",
    "sample",
]
