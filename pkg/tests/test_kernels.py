import math

import numpy as np
import pytest

from modelmatch import errors
from modelmatch.kernels import (
    KernelConfig,
    WeightedKmePoints,
    _clamp_nonnegative,
    clamp_event_count,
    kme_inner,
    kme_sq_distance,
    rbf_kernel,
    rbf_kernel_matrix,
    reset_clamp_events,
)


def oracle_inner(a, b, gamma):
    # independent double loop, scalar math only
    total = 0.0
    for i in range(len(a)):
        for j in range(len(b)):
            d = 0.0
            for k in range(a.dim):
                diff = float(a.points[i][k]) - float(b.points[j][k])
                d += diff * diff
            total += float(a.weights[i]) * float(b.weights[j]) * math.exp(-gamma * d)
    return total


def mixture(rng, n, dim):
    return WeightedKmePoints.build(
        rng.normal(size=(n, dim)).astype(np.float32), rng.normal(size=n)
    )


class TestRbfKernel:
    def test_identical_inputs(self, cfg):
        assert rbf_kernel([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], cfg) == 1.0

    def test_unit_distance_default_gamma(self, cfg):
        # exp(-0.02 * 1), evaluated independently to 10 significant digits
        assert rbf_kernel([0.0, 0.0], [1.0, 0.0], cfg) == pytest.approx(
            0.9801986733, abs=1e-9
        )

    def test_default_gamma_value(self):
        assert KernelConfig().gamma == 0.02

    def test_range(self, cfg):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=(2, 5))
        v = rbf_kernel(x, y, cfg)
        assert 0.0 < v <= 1.0

    def test_monotone_in_distance(self, cfg):
        base = np.zeros(4)
        values = [rbf_kernel(base, np.array([r, 0, 0, 0]), cfg) for r in (0.5, 1.0, 2.0, 4.0)]
        assert all(values[i] > values[i + 1] for i in range(len(values) - 1))

    def test_dim_mismatch(self, cfg):
        with pytest.raises(errors.DimensionMismatch):
            rbf_kernel([1.0, 2.0], [1.0, 2.0, 3.0], cfg)
        with pytest.raises(errors.DimensionMismatch):
            rbf_kernel_matrix(np.ones((2, 3)), np.ones((2, 4)), cfg)

    def test_gamma_must_be_positive(self):
        with pytest.raises(errors.InvalidConfig):
            KernelConfig(gamma=0.0)


class TestKmeInner:
    def test_single_point_unit_weight(self, cfg):
        p = WeightedKmePoints.build([[0.3, 0.4]], [1.0])
        assert kme_inner(p, p, cfg) == 1.0

    def test_bilinearity_in_weights(self, cfg):
        a = WeightedKmePoints.build([[0.3, 0.4]], [2.0])
        b = WeightedKmePoints.build([[0.3, 0.4]], [3.0])
        assert kme_inner(a, b, cfg) == pytest.approx(6.0, rel=1e-14)

    def test_matches_double_loop_oracle(self, cfg):
        rng = np.random.default_rng(42)
        a, b = mixture(rng, 4, 8), mixture(rng, 3, 8)
        got = kme_inner(a, b, cfg)
        want = oracle_inner(a, b, cfg.gamma)
        assert got == pytest.approx(want, rel=1e-12)

    def test_symmetry(self, cfg):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b = mixture(rng, 5, 6), mixture(rng, 4, 6)
            assert kme_inner(a, b, cfg) == pytest.approx(kme_inner(b, a, cfg), rel=1e-12)

    def test_dim_mismatch(self, cfg):
        rng = np.random.default_rng(1)
        with pytest.raises(errors.DimensionMismatch):
            kme_inner(mixture(rng, 2, 3), mixture(rng, 2, 4), cfg)


class TestKmeSqDistance:
    def test_identical_mixture_is_zero(self, cfg):
        rng = np.random.default_rng(9)
        a = mixture(rng, 6, 5)
        assert kme_sq_distance(a, a, cfg) == 0.0

    def test_two_single_points(self, cfg):
        zm = np.array([[0.1, 0.9]], dtype=np.float32)
        zt = np.array([[0.7, 0.2]], dtype=np.float32)
        a = WeightedKmePoints.build(zm, [1.0])
        b = WeightedKmePoints.build(zt, [1.0])
        expected = 2.0 - 2.0 * rbf_kernel(zm[0], zt[0], cfg)
        assert kme_sq_distance(a, b, cfg) == pytest.approx(expected, rel=1e-12)

    def test_matches_oracle_expansion(self, cfg):
        rng = np.random.default_rng(11)
        for _ in range(25):
            a, b = mixture(rng, 4, 7), mixture(rng, 5, 7)
            want = (
                oracle_inner(a, a, cfg.gamma)
                - 2.0 * oracle_inner(a, b, cfg.gamma)
                + oracle_inner(b, b, cfg.gamma)
            )
            got = kme_sq_distance(a, b, cfg)
            assert got == pytest.approx(max(want, 0.0), rel=1e-12, abs=1e-12)

    def test_nonnegative_before_clamp_on_random_mixtures(self, cfg):
        rng = np.random.default_rng(13)
        for _ in range(50):
            a, b = mixture(rng, 6, 4), mixture(rng, 6, 4)
            raw = (
                kme_inner(a, a, cfg) - 2.0 * kme_inner(a, b, cfg) + kme_inner(b, b, cfg)
            )
            assert raw >= -1e-12

    def test_clamp_records_events(self):
        reset_clamp_events()
        assert _clamp_nonnegative(-1e-18) == 0.0
        assert _clamp_nonnegative(0.5) == 0.5
        assert clamp_event_count() == 1
        reset_clamp_events()
        assert clamp_event_count() == 0


def test_weighted_points_validation():
    with pytest.raises(errors.MismatchedLengths):
        WeightedKmePoints.build(np.ones((2, 3)), [1.0])
    with pytest.raises(errors.NonFiniteValue):
        WeightedKmePoints.build(np.ones((2, 3)), [1.0, np.nan])
    uniform = WeightedKmePoints.uniform(np.ones((4, 3)))
    assert np.allclose(uniform.weights, 0.25)


def test_empirical_kme_converges_with_sample_size(cfg):
    # two independent N-sample draws from one Gaussian get closer as N grows
    rng = np.random.default_rng(123)
    medians = []
    for n in (8, 32, 128):
        dists = []
        for _ in range(21):
            x = WeightedKmePoints.uniform(rng.normal(size=(n, 4)).astype(np.float32))
            y = WeightedKmePoints.uniform(rng.normal(size=(n, 4)).astype(np.float32))
            dists.append(kme_sq_distance(x, y, cfg))
        medians.append(float(np.median(dists)))
    assert medians[0] > medians[1] > medians[2]
