"""End-to-end smoke tests for the python module."""

import math

import numpy as np
import pytest

import kgeval


@pytest.fixture(scope="module")
def kg():
    return kgeval.generate(
        shape="ontology", seed=3, subjects=80, cardinalities=[4, 8], partners=8, density=1.0
    )


@pytest.fixture(scope="module")
def model(kg):
    return kgeval.train(kg, k=8, epochs=25, seed=2)


def test_generate_shape(kg):
    assert kg.entity_count == 80 + 4 + 8 + 8
    assert set(kg.relations()) == {"PGroup", "PSubgroup", "isRestrictedBy"}
    sizes = kg.split_sizes()
    assert sum(sizes.values()) == 80 * 2 + 80
    kg.validate()


def test_derive_labels(kg):
    labels = kgeval.derive_labels(kg, "PGroup")
    assert labels["L"] == 4
    assert labels["target_type"] == "Procedure"
    assert len(labels["labels"]) == 80


def test_train_and_score(kg, model):
    assert model.kind == "transe"
    assert model.k == 8
    vectors = model.entity_vectors()
    assert vectors.shape == (kg.entity_count, 8)
    # entity rows stay inside the unit ball
    assert np.linalg.norm(vectors, axis=1).max() <= 1.0 + 1e-9
    s = model.score(kg, "P0000", "PGroup", "PGroup000")
    assert math.isfinite(s) and s >= 0.0


def test_evaluate_lp(kg, model):
    report = kgeval.evaluate_lp(model, kg, split="TST")
    assert report["scope"] == "typed"
    assert report["mrank"] >= 1.0
    assert 0.0 < report["mrr"] <= 1.0
    assert set(report["per_relation"]) <= {"PGroup", "PSubgroup", "isRestrictedBy"}


def test_training_beats_random_init(kg, model):
    random_model = kgeval.init_model(kg, k=8, seed=2)
    before = kgeval.evaluate_lp(random_model, kg, split="TST")["mrr"]
    after = kgeval.evaluate_lp(model, kg, split="TST")["mrr"]
    assert after > before


def test_evaluate_cep(kg, model):
    report = kgeval.evaluate_cep(model, kg, relation="PGroup", multiplier=2, seed=1)
    assert report["K"] == 8
    assert report["L"] == 4
    assert 0.0 < report["a_mean"] <= 1.0
    assert 0.0 < report["w_mean"] <= 1.0
    assert len(report["clusters"]) == report["N"]


def test_model_save_load_roundtrip(kg, model, tmp_path):
    path = tmp_path / "m.bin"
    model.save(path)
    loaded = kgeval.load_model(path)
    original = kgeval.evaluate_lp(model, kg, split="TST")
    reloaded = kgeval.evaluate_lp(loaded, kg, split="TST")
    assert original["mrr"] == reloaded["mrr"]


def test_kg_save_load_roundtrip(kg, tmp_path):
    kg.save(tmp_path / "kg", name="smoke", seed=3)
    loaded = kgeval.load_kg(tmp_path / "kg")
    assert loaded.entity_count == kg.entity_count
    assert loaded.split_sizes() == kg.split_sizes()


def test_pearson_spearman_fixtures():
    assert kgeval.pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert kgeval.spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert kgeval.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert kgeval.pearson([1.0, 1.0, 1.0], [1, 2, 3]) is None  # undefined, not 0


def test_kmeans_recovers_blobs():
    rng = np.random.default_rng(5)
    blobs = np.concatenate(
        [rng.normal(loc, 0.3, size=(50, 2)) for loc in ((0, 0), (8, 0), (0, 8))]
    )
    assignment, centers, wcss = kgeval.kmeans(blobs, K=3, seed=1)
    assert centers.shape == (3, 2)
    assert all(b <= a + 1e-9 for a, b in zip(wcss, wcss[1:]))
    for blob in range(3):
        members = assignment[blob * 50 : (blob + 1) * 50]
        assert len(set(members.tolist())) == 1
    assert len(set(assignment.tolist())) == 3


def test_parse_and_split():
    text = "".join(f"p{i}:P\thasG\tg{i % 3}:G\n" for i in range(24))
    kg = kgeval.parse_and_split(text, ratios=(0.75, 0.08, 0.08, 0.09), seed=4)
    sizes = kg.split_sizes()
    assert sum(sizes.values()) == 24
    assert sizes["LRN"] >= 18


def test_errors_surface_as_python_exceptions(kg):
    with pytest.raises(ValueError):
        kgeval.derive_labels(kg, "isRestrictedBy")  # many-to-many target
    with pytest.raises(ValueError):
        kgeval.generate(shape="nope")
    with pytest.raises(ArithmeticError):
        kgeval.train(kg, k=8, epochs=5, lr=1e9)


def test_sweep_runs_from_spec(kg, tmp_path):
    kg.save(tmp_path / "data", name="smoke", seed=3)
    spec = tmp_path / "sweep.ini"
    spec.write_text(
        f"dataset = {tmp_path / 'data'}\n"
        f"out = {tmp_path / 'out'}\n"
        "[grid]\nk = 8\ngamma = 1 2\nseed = 1\nepochs = 6\n"
        "[cep]\ntargets = PGroup\nmultiplier = 2\n"
    )
    summary = kgeval.run_sweep(spec, threads=1)
    assert summary["rows"] == 2
    assert summary["failed"] == 0
    assert (tmp_path / "out" / "sweep.csv").exists()
    assert (tmp_path / "out" / "correlations.csv").exists()
