"""Jump kernels: tails, the tail-jump constant, and validation."""

import numpy as np
import pytest

from ultraheat import isotropic_kernel, from_matrix, power_profile, tj_constant
from ultraheat.errors import (
    Asymmetric,
    NegativeProfile,
    NegativeWeight,
    NonzeroDiagonal,
    NotIsotropic,
)
from ultraheat.kernel import ExponentConfig, kernel_from_csv, kernel_to_csv

from conftest import random_scenario


class TestConstruction:
    def test_isotropic_values(self, s4):
        k = isotropic_kernel(s4, power_profile(3.0), scaling="none")
        assert k.w[0, 1] == 1.0          # d = 1
        assert k.w[0, 2] == 0.125        # d = 2, 2^-3

    def test_unit_profile(self, k2):
        assert k2.w[0, 1] == 1.0

    def test_negative_profile(self, s4):
        with pytest.raises(NegativeProfile):
            isotropic_kernel(s4, lambda r: -1.0)

    def test_mass_scaling(self, s4):
        masses = np.array([1.0, 2.0, 3.0, 4.0])
        space_spec = s4.to_spec()
        for child, m in zip(space_spec["children"][0]["children"], masses[:2]):
            child["mass"] = float(m)
        for child, m in zip(space_spec["children"][1]["children"], masses[2:]):
            child["mass"] = float(m)
        from ultraheat import build_tree
        space = build_tree(space_spec)
        k = isotropic_kernel(space, power_profile(3.0), scaling="mass")
        D = space.distance_matrix()
        safe = np.where(D > 0, D, 1.0)
        expected = np.where(D > 0, safe ** -3.0 * np.outer(space.masses, space.masses), 0.0)
        assert np.allclose(k.w, expected)

    def test_from_matrix_ok(self, s4):
        w = np.array([[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]], float)
        assert from_matrix(s4, w).w[0, 3] == 3.0

    def test_asymmetric_rejected(self, s4):
        w = np.zeros((4, 4)); w[0, 1] = 1.0
        with pytest.raises(Asymmetric):
            from_matrix(s4, w)

    def test_nonzero_diagonal_rejected(self, s4):
        w = np.zeros((4, 4)); w[0, 0] = 1.0
        with pytest.raises(NonzeroDiagonal):
            from_matrix(s4, w)

    def test_negative_weight_rejected(self, s4):
        w = np.zeros((4, 4)); w[0, 1] = w[1, 0] = -1.0
        with pytest.raises(NegativeWeight):
            from_matrix(s4, w)

    def test_csv_round_trip(self, k4):
        text = kernel_to_csv(k4)
        k = kernel_from_csv(k4.space, text)
        assert np.array_equal(k.w, k4.w)


class TestTail:
    def test_tail_values(self, k4):
        assert k4.tail("a", 1) == pytest.approx(0.25, rel=1e-15)
        assert k4.tail("a", 2) == 0.0
        assert k4.tail("a", 0.5) == pytest.approx(1.25, rel=1e-15)

    def test_tail_non_increasing_right_continuous(self):
        for seed in range(6):
            _, kernel = random_scenario(seed)
            space = kernel.space
            radii = np.concatenate([[0.0], space.distance_levels,
                                    np.array(space.distance_levels) * 1.0001,
                                    [space.diam * 2]])
            for x in space.ids[:4]:
                vals = [kernel.tail(x, r) for r in np.sort(radii)]
                assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))
                assert vals[-1] == 0.0
            for level in space.distance_levels:
                v_at = kernel.tail_vector(level)
                v_eps = kernel.tail_vector(level * (1 + 1e-13))
                assert np.allclose(v_at, v_eps, rtol=0, atol=0)


class TestTailJumpConstant:
    def test_s4_value(self, k4):
        assert tj_constant(k4, 1.0, 2.0) == pytest.approx(1.25, rel=1e-15)

    def test_s2_value(self, k2):
        assert tj_constant(k2, 1.0, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_small_range_vanishes(self, k4):
        assert tj_constant(k4, 1.0, 1e-9) == pytest.approx(1.25e-9, rel=1e-12)

    def test_grid_scan_oracle(self):
        # brute force straight from the definition sup r^beta tail(., r):
        # a log grid plus points just below each distance level (the tail
        # is right-continuous, so sups are approached from the left)
        for seed in range(6):
            _, kernel = random_scenario(seed)
            space = kernel.space
            beta = 1.3
            r0 = space.diam
            exact = tj_constant(kernel, beta, r0)
            rs = np.concatenate([
                np.exp(np.linspace(np.log(r0 * 1e-8), np.log(r0 * (1 - 1e-12)), 2001)),
                [lvl * (1 - 1e-12) for lvl in space.distance_levels if lvl <= r0],
            ])
            brute = max(r ** beta * kernel.tail_sup(r) for r in rs)
            assert brute <= exact * (1 + 1e-12)
            assert brute >= exact * (1 - 1e-9)

    def test_monotone_in_range(self):
        _, kernel = random_scenario(2)
        r0s = np.linspace(0.1, kernel.space.diam, 8)
        vals = [tj_constant(kernel, 1.0, r) for r in r0s]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_scale_covariance(self, k4):
        doubled = from_matrix(k4.space, 2.0 * k4.w)
        assert tj_constant(doubled, 1.0, 2.0) == pytest.approx(
            2.0 * tj_constant(k4, 1.0, 2.0), rel=1e-15)


def test_symmetry_over_ball_pairs():
    rng = np.random.default_rng(0)
    for seed in range(4):
        _, kernel = random_scenario(seed)
        space = kernel.space
        balls = space.balls(include_points=True)
        for _ in range(10):
            b1 = balls[rng.integers(0, len(balls))]
            b2 = balls[rng.integers(0, len(balls))]
            i1, i2 = b1.indices, b2.indices
            assert kernel.w[np.ix_(i1, i2)].sum() == pytest.approx(
                kernel.w[np.ix_(i2, i1)].sum(), rel=1e-13, abs=1e-300)


def test_isotropy_profile_detection(s4, k4):
    levels = k4.isotropy_profile()
    assert levels[1.0] == 1.0 and levels[2.0] == 0.125
    w = k4.w.copy()
    w[0, 2] = w[2, 0] = 0.3  # break level constancy
    with pytest.raises(NotIsotropic):
        from_matrix(s4, w).isotropy_profile()


def test_exponent_config():
    cfg = ExponentConfig(2.0, 1.0, 4.0)
    assert cfg.nu == 0.5
    assert cfg.k0(1.0) == pytest.approx(1.0 + 0.25)
    with pytest.raises(ValueError):
        ExponentConfig(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ExponentConfig(1.0, 1.0, 0.0)
