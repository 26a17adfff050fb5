"""Generators, heat kernels, block exactness, and the fast hierarchical path."""

import numpy as np
import pytest
from scipy.linalg import expm

from ultraheat import (
    HierarchicalHeatKernel,
    Perturbation,
    apply,
    energy,
    energy_trunc,
    fast_isotropic_heat_kernel,
    generator,
    heat_kernel,
    isotropic_kernel,
    perturbed_apply,
    power_profile,
    semigroup_selfcheck,
    truncated_heat_kernel,
)
from ultraheat.errors import EmptyDomain, NotIsotropic
from ultraheat.semigroup import HeatKernelTable
from ultraheat.cli import generate_space

from conftest import random_scenario


class TestGenerator:
    def test_two_point_matrix(self, k2):
        # the duality <-Lf, g> = E(f, g) forces the factor 2
        gen = generator(k2)
        assert np.array_equal(gen.matrix, [[-2.0, 2.0], [2.0, -2.0]])

    def test_truncated_block_diagonal(self, k4):
        gen = generator(k4, rho=1.0)
        assert gen.matrix[0, 2] == 0.0 and gen.matrix[0, 3] == 0.0
        assert len(gen.blocks) == 2

    def test_restricted_single_point_kill_rate(self, k4):
        gen = generator(k4, omega=["a"])
        assert gen.matrix.shape == (1, 1)
        assert gen.matrix[0, 0] == pytest.approx(-2.0 * 1.25, rel=1e-15)

    def test_empty_domain(self, k4):
        with pytest.raises(EmptyDomain):
            generator(k4, omega=[])

    def test_duality_exact(self):
        rng = np.random.default_rng(0)
        for seed in range(6):
            _, kernel = random_scenario(seed, max_points=64)
            mu = kernel.mu
            for rho in (None,) + kernel.space.distance_levels:
                gen = generator(kernel, rho=rho)
                for _ in range(5):
                    f = rng.normal(size=len(kernel.space))
                    g = rng.normal(size=len(kernel.space))
                    lhs = -float((g * mu) @ (gen.matrix @ f))
                    rhs = energy(kernel, f, g) if rho is None else \
                        energy_trunc(kernel, f, g, rho)
                    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_eigen_residual_small(self):
        for seed in range(4):
            _, kernel = random_scenario(seed)
            gen = generator(kernel)
            scale = max(1.0, float(np.abs(gen.matrix).max()))
            assert gen.eigen_residual() <= 1e-12 * scale

    def test_zero_eigenvalue_constant_mode(self, k4):
        gen = generator(k4)
        lams = gen.eigenvalues()
        assert lams[0] == 0.0 and np.all(lams >= 0.0)
        ones = np.ones(4)
        assert np.allclose(gen.apply(5.0, ones), ones, atol=1e-12)


class TestHeatKernel:
    def test_two_point_closed_form(self, k2):
        gen = generator(k2)
        entry = heat_kernel(gen, 0.25)
        assert entry.values[0, 1] == pytest.approx((1 - np.exp(-1)) / 2, abs=1e-15)
        assert entry.values[0, 0] == pytest.approx((1 + np.exp(-1)) / 2, abs=1e-15)

    def test_long_time_limit(self, k4):
        dens = generator(k4).density(1e6)
        assert np.allclose(dens, 1.0 / 4.0, atol=1e-12)

    def test_spectral_matches_expm(self):
        for seed in range(6):
            _, kernel = random_scenario(seed, max_points=64)
            gen = generator(kernel)
            for t in (1e-3, 0.1, 1.0, 10.0):
                a = gen.heat_matrix(t)
                b = expm(t * gen.matrix)
                assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(b).max())

    def test_truncated_cross_block_bitwise_zero(self, k4):
        for t in (1e-3, 0.5, 1e3):
            entry = truncated_heat_kernel(k4, 1.0, t)
            assert entry.values[0, 2] == 0.0
            assert entry.values[0, 3] == 0.0
            assert entry.values[1, 2] == 0.0

    def test_truncated_block_closed_form(self, k4):
        entry = truncated_heat_kernel(k4, 1.0, 0.5)
        assert entry.values[0, 1] == pytest.approx((1 - np.exp(-2)) / 2, abs=1e-15)

    def test_truncation_beyond_diam_is_full(self, k4):
        full = generator(k4).density(0.7)
        trunc = truncated_heat_kernel(k4, 2.0, 0.7).values
        assert np.allclose(full, trunc, atol=1e-14)

    def test_restricted_domination(self):
        # killed semigroups on random unions of balls stay between 0 and
        # the full semigroup on nonnegative functions
        rng = np.random.default_rng(2)
        for seed in range(4):
            space, kernel = random_scenario(seed)
            cells = space.partition(space.distance_levels[0])
            pick = rng.random(len(cells)) < 0.6
            if not pick.any():
                pick[0] = True
            omega_ids = [p for cell, used in zip(cells, pick) if used
                         for p in cell.members]
            mask = np.zeros(len(space))
            for p in omega_ids:
                mask[space.index(p)] = 1.0
            gfull, gom = generator(kernel), generator(kernel, omega=omega_ids)
            f = rng.uniform(0, 1, len(space)) * mask
            for t in (0.1, 1.0):
                po, pf = gom.apply(t, f), gfull.apply(t, f)
                assert np.all(po >= -1e-12)
                assert np.all(po <= pf + 1e-12)

    def test_table_csv(self, k4):
        table = HeatKernelTable.from_generator(generator(k4, rho=1.0), [0.5])
        lines = table.to_csv().splitlines()
        assert lines[0] == "t,x,y,value"
        cross = [l for l in lines[1:] if l.split(",")[1] == "a" and l.split(",")[2] == "c"]
        assert all(float(l.split(",")[3]) == 0.0 for l in cross)


class TestPerturbedSemigroup:
    def test_time_zero_identity(self, s4, k4):
        gen = generator(k4, rho=1.0)
        pert = Perturbation(s4.ball("a", 1), 3.0, rho=1.0)
        f = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.allclose(perturbed_apply(gen, 0.0, pert, f), f, atol=1e-14)

    def test_zero_tilt_matches_plain(self, s4, k4):
        gen = generator(k4, rho=1.0)
        pert = Perturbation(s4.ball("a", 1), 0.0)
        f = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.allclose(perturbed_apply(gen, 0.7, pert, f),
                           apply(gen, 0.7, f), atol=1e-14)

    def test_block_constant_tilt_cancels(self, s4, k4):
        # psi constant on each block of the rho-partition: the conjugation
        # cancels exactly and the tilted evolution equals the plain one
        gen = generator(k4, rho=1.0)
        pert = Perturbation(s4.ball("a", 1), 3.0, rho=1.0)
        f = np.array([1.0, 0.0, 0.0, 0.0])
        got = perturbed_apply(gen, 0.9, pert, f)
        assert np.isfinite(got).all()
        assert np.allclose(got, apply(gen, 0.9, f), atol=1e-13)


class TestSelfCheck:
    def test_clean_pass(self, k2, k4):
        grid = [0.05, 0.5, 5.0]
        assert semigroup_selfcheck(generator(k2), grid).passed
        assert semigroup_selfcheck(generator(k4), grid).passed
        assert semigroup_selfcheck(generator(k4, rho=1.0), grid).passed

    def test_random_scenarios(self):
        for seed in range(5):
            _, kernel = random_scenario(seed)
            report = semigroup_selfcheck(generator(kernel), [0.05, 0.5, 5.0])
            assert report.passed, [r.name for r in report.failures()]

    def test_corrupted_generator_fails_duality(self, k4):
        gen = generator(k4)
        gen.matrix = gen.matrix + np.triu(np.full((4, 4), 1e-3), 1)
        report = semigroup_selfcheck(gen, [0.5])
        assert [r.name for r in report.failures()] == ["semigroup.duality"]


class TestFastIsotropicPath:
    def test_agrees_with_dense_oracle_small(self, s4):
        k = isotropic_kernel(s4, power_profile(3.0), scaling="mass")
        gen = generator(k)
        fast = HierarchicalHeatKernel.from_kernel(k)
        for t in (0.01, 1.0, 100.0):
            dens = gen.density(t)
            for i, x in enumerate(s4.ids):
                for j, y in enumerate(s4.ids):
                    assert fast.value(t, x, y) == pytest.approx(
                        dens[i, j], rel=1e-12, abs=1e-12)

    def test_agrees_on_larger_spaces(self):
        for kind, kwargs in (("dyadic", {"depth": 6}), ("bary", {"branching": 3, "depth": 4})):
            space, _ = generate_space(kind, mass_law="uniform", seed=5, **kwargs)
            k = isotropic_kernel(space, power_profile(2.2), scaling="mass")
            gen = generator(k)
            fast = HierarchicalHeatKernel.from_kernel(k)
            rng = np.random.default_rng(0)
            for t in (0.05, 2.0):
                dens = gen.density(t)
                diag = fast.diagonal(t)
                assert np.abs(diag - np.diagonal(dens)).max() <= 1e-10
                for _ in range(40):
                    i, j = rng.integers(0, len(space), 2)
                    assert fast.value(t, space.ids[i], space.ids[j]) == pytest.approx(
                        dens[i, j], rel=1e-10, abs=1e-12)

    def test_function_entry_point(self, s4):
        k = isotropic_kernel(s4, power_profile(3.0), scaling="mass")
        dens = generator(k).density(0.3)
        vals = fast_isotropic_heat_kernel(s4, power_profile(3.0), 0.3,
                                          [("a", "b"), ("a", "c"), ("d", "d")])
        assert vals == pytest.approx([dens[0, 1], dens[0, 2], dens[3, 3]], rel=1e-12)

    def test_not_isotropic_rejected(self, s4):
        rng = np.random.default_rng(0)
        w = rng.uniform(0.1, 1.0, (4, 4))
        w = (w + w.T) / 2
        np.fill_diagonal(w, 0.0)
        from ultraheat import from_matrix
        with pytest.raises(NotIsotropic):
            HierarchicalHeatKernel.from_kernel(from_matrix(s4, w))

    def test_trace_identity(self):
        space, _ = generate_space("dyadic", depth=8, seed=0)
        fast = HierarchicalHeatKernel(space, power_profile(3.0))
        for t in (0.1, 1.0):
            diag_trace = float((fast.diagonal(t) * space.masses).sum())
            assert diag_trace == pytest.approx(fast.trace(t), rel=1e-12)

    def test_eigenvalues_match_dense(self):
        space, _ = generate_space("dyadic", depth=4, mass_law="uniform", seed=3)
        k = isotropic_kernel(space, power_profile(2.0), scaling="mass")
        fast = HierarchicalHeatKernel.from_kernel(k)
        dense = generator(k).eigenvalues()
        assert np.allclose(np.sort(fast.eigenvalues()), dense, rtol=1e-10, atol=1e-10)

    def test_single_child_chain_node(self):
        # a nested ball with one child is a legal tree node whose radius is
        # not a realised distance; it must not disturb the fast path
        from ultraheat import build_tree
        space = build_tree({"radius": 4, "children": [
            {"radius": 3, "children": [
                {"radius": 1, "children": [{"id": "a", "mass": 1},
                                           {"id": "b", "mass": 2}]},
            ]},
            {"id": "c", "mass": 1.5},
        ]})
        assert space.distance_levels == (1.0, 4.0)
        assert space.radii == (1.0, 3.0, 4.0)
        k = isotropic_kernel(space, power_profile(2.0), scaling="mass")
        fast = HierarchicalHeatKernel.from_kernel(k)
        dens = generator(k).density(0.7)
        for i, x in enumerate(space.ids):
            for j, y in enumerate(space.ids):
                assert fast.value(0.7, x, y) == pytest.approx(
                    dens[i, j], rel=1e-12, abs=1e-13)
        assert np.allclose(np.sort(fast.eigenvalues()),
                           generator(k).eigenvalues(), atol=1e-12)
