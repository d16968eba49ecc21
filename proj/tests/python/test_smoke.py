import pathlib

import numpy as np
import pytest

import nyspec

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"


def blobs(n=150, k=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % k
    points = np.abs(5.0 * np.eye(k)[labels] + rng.normal(size=(n, k)))
    return points, labels


def test_similarity_is_symmetric_with_unit_diagonal():
    points, _ = blobs(20)
    s = nyspec.similarity(points)
    assert s.shape == (20, 20)
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    np.testing.assert_allclose(np.diag(s), 1.0, atol=1e-12)


def test_samplers_return_distinct_landmarks():
    points, _ = blobs(60)
    for name in nyspec.SAMPLERS:
        out = nyspec.sample_landmarks(points, 6, sampler=name, seed=3)
        if out["virtual"]:
            assert out["coordinates"].shape == (6, 3)
        else:
            assert len(set(out["indices"])) == 6
    tuned = nyspec.sample_landmarks(points, 6, sampler="cms3-tuned", seed=3)
    assert tuned["switch"]["branch"] in ("ms3", "cms3")


def test_full_landmark_set_reproduces_similarity():
    points, _ = blobs(30)
    absolute, relative = nyspec.frobenius_error(points, list(range(30)))
    assert relative < 1e-8
    fit = nyspec.nystrom_fit(points, [0, 1, 2, 3], k=2)
    assert fit["extended_eigvecs"].shape == (30, 2)


def test_spectral_cluster_recovers_blobs():
    points, labels = blobs(300)
    out = nyspec.spectral_cluster(points, 3, sampler="ms3", fraction=0.1, seed=1)
    assert len(out["labels"]) == 300
    assert out["pipeline"] == "nystrom/ms3"
    assert nyspec.clustering_accuracy(out["labels"], labels.tolist()) >= 0.95
    exact = nyspec.spectral_cluster(points, 3, exact=True)
    assert exact["pipeline"] == "exact"


def test_errors_map_to_python_exceptions():
    points, _ = blobs(30)
    with pytest.raises(ValueError):
        nyspec.sample_landmarks(points, 4, sampler="dpp")
    with pytest.raises(nyspec.DegenerateClustering):
        nyspec.kmeans(np.ones((10, 2)), 3)


def test_bundled_wine():
    points, labels, name, warnings = nyspec.load_dataset(str(DATA / "wine.json"))
    assert points.shape == (178, 13)
    assert name == "wine"
    assert not warnings
    assert nyspec.landmark_count(0.1, 178) == 18
    out = nyspec.spectral_cluster(points, 3, sampler="cms3-tuned", fraction=0.1, seed=4)
    assert 0.0 < nyspec.clustering_accuracy(out["labels"], labels) <= 1.0
