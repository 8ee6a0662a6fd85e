import numpy as np
import pytest

from modelmatch import errors
from modelmatch.kernels import KernelConfig, WeightedKmePoints, kme_sq_distance
from modelmatch.reduced_set import build_reduced_set


@pytest.fixture
def gamma2():
    return KernelConfig(gamma=2.0)


def reconstruction_error(reduced, samples, cfg):
    return kme_sq_distance(reduced, WeightedKmePoints.uniform(samples), cfg)


def test_full_size_is_exact(cfg):
    rng = np.random.default_rng(0)
    samples = rng.normal(size=(12, 5)).astype(np.float32)
    reduced = build_reduced_set(samples, 12, cfg, seed=1)
    assert reconstruction_error(reduced, samples, cfg) <= 1e-9
    assert np.array_equal(reduced.points, samples)


def test_degenerate_cluster(cfg):
    v = np.array([0.25, -0.5, 1.0], dtype=np.float32)
    samples = np.tile(v, (9, 1))
    reduced = build_reduced_set(samples, 1, cfg, seed=0)
    assert np.allclose(reduced.points[0], v, atol=1e-7)
    assert reduced.weights[0] == pytest.approx(1.0, abs=1e-8)
    assert reconstruction_error(reduced, samples, cfg) <= 1e-12


def brute_force_single_center(samples, cfg):
    # best single sample point with its optimal scalar weight
    best = np.inf
    emp = WeightedKmePoints.uniform(samples)
    for candidate in samples:
        k_cs = np.exp(-cfg.gamma * np.sum((samples - candidate) ** 2, axis=1))
        w = float(np.mean(k_cs))  # k(c,c)=1, so w* = mean kernel to samples
        reduced = WeightedKmePoints.build(candidate.reshape(1, -1), [w])
        best = min(best, kme_sq_distance(reduced, emp, cfg))
    return best


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_single_center_beats_best_sample_scan(gamma2, seed):
    rng = np.random.default_rng(100 + seed)
    samples = rng.normal(size=(16, 4)).astype(np.float32)
    reduced = build_reduced_set(samples, 1, gamma2, seed=seed)
    err = reconstruction_error(reduced, samples, gamma2)
    assert err <= brute_force_single_center(samples, gamma2) + 1e-12


@pytest.mark.parametrize("gamma", [0.02, 2.0])
def test_error_non_increasing_in_size(gamma):
    cfg = KernelConfig(gamma=gamma)
    rng = np.random.default_rng(5)
    samples = rng.normal(size=(24, 6)).astype(np.float32)
    errs = [
        reconstruction_error(build_reduced_set(samples, size, cfg, seed=7), samples, cfg)
        for size in (1, 2, 4, 8)
    ]
    for small, large in zip(errs[1:], errs[:-1]):
        assert small <= large + 1e-12


def test_deterministic_given_seed(cfg):
    rng = np.random.default_rng(9)
    samples = rng.normal(size=(10, 3)).astype(np.float32)
    a = build_reduced_set(samples, 3, cfg, seed=42)
    b = build_reduced_set(samples, 3, cfg, seed=42)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.weights.tobytes() == b.weights.tobytes()


def test_input_validation(cfg):
    with pytest.raises(errors.InvalidInput):
        build_reduced_set(np.ones((3, 2)), 0, cfg)
    with pytest.raises(errors.EmptyInput):
        build_reduced_set(np.ones((0, 2)), 1, cfg)
