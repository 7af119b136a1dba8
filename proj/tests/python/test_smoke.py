# Copyright 2026 The SHED Authors
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the Python bindings."""

import json
import math

import numpy as np
import pytest

import shed


def blobs(seed=0, per_blob=30, centres=((0, 0), (10, 0), (0, 10))):
    rng = np.random.default_rng(seed)
    points = np.vstack([rng.normal(c, 0.5, size=(per_blob, 2)) for c in centres]).astype(np.float32)
    ids = [f"x{i}" for i in range(len(points))]
    return shed.EmbeddedDataset(ids, points)


def test_dataset_round_trip(tmp_path):
    ds = blobs()
    ds.write(tmp_path / "emb.bin", tmp_path / "records.jsonl")
    again = shed.EmbeddedDataset.load(tmp_path / "emb.bin", tmp_path / "records.jsonl")
    assert again.count == 90 and again.dim == 2
    assert again.digest == ds.digest
    np.testing.assert_array_equal(again.embeddings, ds.embeddings)


def test_bad_embeddings_raise():
    with pytest.raises(shed.ShedError, match="NonFiniteEmbedding"):
        shed.EmbeddedDataset(["a"], np.array([[math.nan]], dtype=np.float32))


def test_kmeans_and_proxies():
    ds = blobs()
    model = shed.kmeans_fit(ds, clusters=3, seed=1)
    assert model.converged
    assert sorted(np.bincount(model.assignments)) == [30, 30, 30]
    assert len(model.proxy_index) == 3
    assert model.centroids.shape == (3, 2)


def test_shapley_with_python_callable():
    weights = {"a": 0.5, "b": 0.25, "c": -1.0}
    value = lambda ids: sum(weights[i] for i in ids)
    approx = shed.approximate_shapley(value, list(weights), iterations=4, seed=3)
    assert approx.scores == list(weights.values())
    assert approx.evaluations_used == shed.expected_evaluations(3, 1, 4)
    assert shed.exact_shapley(value, list(weights)) == pytest.approx(list(weights.values()))


def test_shapley_parallel_matches_serial():
    value = lambda ids: len(ids) ** 1.5
    ids = [f"p{i}" for i in range(12)]
    serial = shed.approximate_shapley(value, ids, group_size=5, iterations=6, seed=9)
    parallel = shed.approximate_shapley(value, ids, group_size=5, iterations=6, seed=9, max_parallel=3)
    assert serial.scores == parallel.scores
    assert sum(serial.scores) == pytest.approx(serial.value_full - serial.value_empty)


def test_callback_errors_propagate():
    def broken(ids):
        raise ValueError("boom")

    with pytest.raises(ValueError, match="boom"):
        shed.approximate_shapley(broken, ["a", "b"])


def test_probabilities_and_sampling():
    p = shed.cluster_probabilities([1.0, 0.0])
    assert p[0] == pytest.approx(math.e / (math.e + 1))
    ds = blobs()
    model = shed.kmeans_fit(ds, clusters=3, seed=1)
    best = model.assignments[0]
    scores = [1.0 if c == best else 0.0 for c in range(3)]
    qocs = shed.sample(ds, model, scores, method="qocs", target_size=10)
    assert all(model.assignments[int(i[1:])] == best for i in qocs.selected_ids)
    qwcs = shed.sample(ds, model, scores, method="qwcs", target_size=40, seed=2)
    assert len(set(qwcs.selected_ids)) == 40
    assert qwcs == shed.sample(ds, model, scores, method="qwcs", target_size=40, seed=2)


def test_planner():
    plan = shed.plan_budget(1.0, 1500.0, 10000)
    assert (plan.k, plan.C, plan.objective) == (5, 300, 25.0)
    with pytest.raises(shed.ShedError, match="InfeasibleBudget"):
        shed.plan_budget(1.0, 0.5, 10000)
    assert shed.estimate_runtime(3000, 60, 10, 1.0, 100.0) == 815000.0


def test_run_pipeline(tmp_path):
    ds = blobs()
    ds.write(tmp_path / "emb.bin", tmp_path / "records.jsonl")
    config = {
        "seed": 4,
        "paths": {"embeddings": "emb.bin", "records": "records.jsonl", "out": "out"},
        "cluster": {"clusters": 6},
        "value": {"builtin": "CARDINALITY", "params": {"exponent": 1.0}},
        "sampling": {"method": "qwcs", "target_size": 12},
    }
    manifest = shed.run_pipeline(config, tmp_path)
    assert manifest["selection_size"] == 12
    assert manifest["evaluations_used"] == manifest["expected_evaluations"]
    assert (tmp_path / "out" / "selection.jsonl").exists()
    again = shed.run_pipeline(dict(config, paths=dict(config["paths"], out="out2")), tmp_path)
    assert again["artifacts"]["selection.jsonl"] == manifest["artifacts"]["selection.jsonl"]
    json.dumps(manifest)
