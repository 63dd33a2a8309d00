import math

import numpy as np
import pytest

from kbiq.dpp import (
    RngStream,
    conditional_density,
    envelope,
    joint_density,
    mix64,
    node_set,
    sample_projection_dpp,
)
from kbiq.errors import ParameterError, SamplerStallError
from kbiq.linalg import condition_estimate, lu_factor


def draw_many(model, n, count, seed):
    return np.array([sample_projection_dpp(model, n, RngStream(seed, t)).points for t in range(count)])


def kappa_diag(model, n, x):
    f = model.features(x, n)
    return (f * f).sum(0)


def trapezoid_weights(points):
    w = np.full(points, 1.0 / (points - 1))
    w[[0, -1]] /= 2
    return w


class TestRngStream:
    def test_replay(self):
        a = RngStream(42, 3).generator().random(5)
        b = RngStream(42, 3).generator().random(5)
        assert np.array_equal(a, b)

    def test_distinct_streams(self):
        a = RngStream(42, 3).generator().random(20000)
        b = RngStream(42, 4).generator().random(20000)
        assert not np.array_equal(a, b)
        # independent uniforms: correlation ~ N(0, 1/20000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20000)

    def test_mix64_spreads(self):
        vals = {mix64(0, n, t) for n in range(10) for t in range(100)}
        assert len(vals) == 1000
        assert all(0 <= v < 2**64 for v in vals)


class TestEnvelope:
    @pytest.mark.parametrize("n", range(1, 12))
    def test_envelope_is_sup(self, model2, n):
        x = np.linspace(0, 1, 4001)
        diag = kappa_diag(model2, n, x)
        assert diag.max() <= envelope(n) + 1e-12
        assert diag.max() == pytest.approx(envelope(n), rel=1e-9)

    def test_odd_n_is_constant(self, model2):
        x = np.linspace(0, 1, 101)
        assert np.allclose(kappa_diag(model2, 7, x), 7.0)


class TestJointDensity:
    def test_examples(self, model2):
        assert joint_density(model2, [0.42]) == pytest.approx(1.0)
        assert joint_density(model2, [0.0, 0.25]) == pytest.approx(1.0)
        assert joint_density(model2, [0.3, 0.3]) == 0.0
        assert joint_density(model2, [0.1, 0.6, 0.1]) == 0.0

    def test_matches_gram_determinant(self, model2, rng):
        for n in (2, 3, 5):
            x = rng.random(n)
            f = model2.features(x, n)
            assert joint_density(model2, x) == pytest.approx(np.linalg.det(f.T @ f) / math.factorial(n), rel=1e-9)

    def test_integrates_to_one_n2(self, model2):
        # det^2 Phi_2 is a low-degree trigonometric polynomial: the periodic grid is exact
        grid = np.arange(64) / 64
        total = sum(joint_density(model2, [a, b]) for a in grid for b in grid) / 64**2
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_marginal_n2(self, model2):
        # integrating x2 out of the joint density leaves kappa_2(x, x) / 2
        grid = np.arange(256) / 256
        for x1 in (0.0, 0.13, 0.5, 0.81):
            marg = np.mean([joint_density(model2, [x1, b]) for b in grid])
            assert marg == pytest.approx(kappa_diag(model2, 2, x1)[0] / 2, rel=1e-10)


class TestConditionalDensity:
    def test_chain_rule_matches_joint(self, model2):
        grid = (np.arange(200) + 0.5) / 200
        worst = 0.0
        for x1 in grid:
            p1 = conditional_density(model2, 2, [], [x1])[0]
            p2 = conditional_density(model2, 2, [x1], grid)
            joint = np.array([joint_density(model2, [x1, b]) for b in grid])
            worst = max(worst, float(np.abs(p1 * p2 - joint).max()))
        assert worst <= 1e-10

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_normalised_at_every_step(self, model2, n):
        x = np.linspace(0, 1, 2**14 + 1)
        w = trapezoid_weights(x.size)
        points = sample_projection_dpp(model2, n, RngStream(5, n)).points
        for i in range(n):
            dens = conditional_density(model2, n, points[:i], x)
            assert dens.min() >= -1e-12
            assert float(w @ dens) == pytest.approx(1.0, abs=1e-3)

    def test_vanishes_at_previous_points(self, model2):
        prev = [0.2, 0.7]
        assert np.allclose(conditional_density(model2, 5, prev, prev), 0.0, atol=1e-12)

    def test_full_configuration_rejected(self, model2):
        with pytest.raises(ParameterError):
            conditional_density(model2, 2, [0.1, 0.2], [0.3])


class TestSampler:
    def test_single_point_uniform(self, model2):
        pts = draw_many(model2, 1, 4000, seed=1)[:, 0]
        # Kolmogorov-Smirnov distance against U[0, 1]
        u = np.sort(pts)
        d = np.max(np.maximum(np.arange(1, u.size + 1) / u.size - u, u - np.arange(u.size) / u.size))
        assert d < 1.63 / math.sqrt(u.size)

    def test_node_set_invariants(self, model2):
        for t in range(50):
            ns = sample_projection_dpp(model2, 9, RngStream(11, t))
            assert ns.n == 9
            assert np.all((ns.points >= 0) & (ns.points <= 1))
            assert np.unique(ns.points).size == 9
            assert np.isfinite(condition_estimate(lu_factor(ns.feature_matrix)))
            assert np.array_equal(ns.feature_matrix, model2.features(ns.points, 9))
            assert ns.seed_used == 11 and ns.stream_id == t

    def test_determinism(self, model2):
        a = sample_projection_dpp(model2, 5, RngStream(42, 0))
        b = sample_projection_dpp(model2, 5, RngStream(42, 0))
        assert a.points.tobytes() == b.points.tobytes()
        assert a.rejection_count == b.rejection_count

    def test_immutable(self, model2):
        ns = sample_projection_dpp(model2, 3, RngStream(1, 1))
        with pytest.raises(ValueError):
            ns.points[0] = 0.5

    def test_one_point_intensity_n3(self, model2):
        # kappa_3(x, x) = 3, so E sum_i g(x_i) = 3 int g
        pts = draw_many(model2, 3, 50000, seed=3)
        for g, target in ((lambda x: x, 1.5), (lambda x: x * x, 1.0)):
            vals = g(pts).sum(1)
            se = vals.std(ddof=1) / math.sqrt(vals.size)
            assert abs(vals.mean() - target) <= 3 * se

    def test_one_point_intensity_n2(self, model2):
        # E sum_i cos(4 pi x_i) = int cos(4 pi x) (1 + 2 cos^2(2 pi x)) dx = 1/2
        pts = draw_many(model2, 2, 20000, seed=4)
        vals = np.cos(4 * np.pi * pts).sum(1)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - 0.5) <= 3 * se

    def test_acceptance_rate(self, model2):
        # expected proposals for point i is sup kappa / (n - i + 1)
        n, count = 6, 2000
        rejected = sum(sample_projection_dpp(model2, n, RngStream(8, t)).rejection_count for t in range(count))
        expected = sum(envelope(n) / (n - i) - 1 for i in range(n))
        assert rejected / count == pytest.approx(expected, rel=0.05)

    def test_stall_guard(self, model2):
        with pytest.raises(SamplerStallError):
            sample_projection_dpp(model2, 40, RngStream(1, 1), max_proposals=1)

    def test_resample_guard(self, model2):
        conds = [sample_projection_dpp(model2, 5, RngStream(2, t)).condition for t in range(40)]
        limit = float(np.median(conds))
        for t in range(40):
            ns = sample_projection_dpp(model2, 5, RngStream(2, t), cond_limit=limit)
            assert ns.condition <= limit
            assert (ns.resample_count > 0) == (conds[t] > limit)

    def test_bad_n(self, model2):
        with pytest.raises(ParameterError):
            sample_projection_dpp(model2, 0, RngStream(0))


def test_node_set_wraps_points(model2):
    ns = node_set(model2, [0.1, 0.4, 0.8])
    assert ns.n == 3
    assert ns.feature_matrix.shape == (3, 3)
    assert np.isfinite(ns.condition)
