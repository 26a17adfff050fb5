import numpy as np
import pytest

from ultraheat import build_tree, isotropic_kernel, power_profile
from ultraheat.cli import generate_space
from ultraheat.kernel import ExponentConfig, from_matrix

S4_SPEC = {
    "radius": 2,
    "children": [
        {"radius": 1, "children": [{"id": "a", "mass": 1}, {"id": "b", "mass": 1}]},
        {"radius": 1, "children": [{"id": "c", "mass": 1}, {"id": "d", "mass": 1}]},
    ],
}

S2_SPEC = {"radius": 1, "children": [{"id": "0", "mass": 1}, {"id": "1", "mass": 1}]}


@pytest.fixture
def s4():
    return build_tree(S4_SPEC)


@pytest.fixture
def s2():
    return build_tree(S2_SPEC)


@pytest.fixture
def k4(s4):
    """The canonical 4-point kernel: w = d^-3, no mass scaling."""
    return isotropic_kernel(s4, power_profile(3.0), scaling="none")


@pytest.fixture
def k2(s2):
    """Two points at distance 1, unit weight."""
    return isotropic_kernel(s2, lambda r: 1.0)


@pytest.fixture
def dyadic8():
    space, _ = generate_space("dyadic", depth=3, q=2.0)
    return space


@pytest.fixture
def k8(dyadic8):
    return isotropic_kernel(dyadic8, power_profile(3.0), scaling="mass")


def random_scenario(seed: int, max_points: int = 24, mass_law: str = "uniform"):
    """Seeded (space, kernel) pair; even seeds isotropic, odd seeds raw."""
    space, _ = generate_space("random", seed=seed, max_points=max_points,
                              mass_law=mass_law, depth=5)
    rng = np.random.default_rng(10_000 + seed)
    if seed % 2 == 0:
        kernel = isotropic_kernel(space, power_profile(float(rng.uniform(1, 4))),
                                  scaling="mass")
    else:
        w = rng.uniform(0, 1, (len(space), len(space)))
        w = (w + w.T) / 2
        np.fill_diagonal(w, 0.0)
        kernel = from_matrix(space, w)
    return space, kernel


def tilt_scenario(seed: int, max_points: int = 24):
    """Seeded (kernel, exponents, ball, rho, lam, f) for evolution checks."""
    space, kernel = random_scenario(seed, max_points=max_points)
    rng = np.random.default_rng(20_000 + seed)
    cfg = ExponentConfig(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)),
                         space.diam)
    balls = [b for b in space.balls() if 0 < b.radius < space.diam]
    ball = balls[int(rng.integers(0, len(balls)))] if balls else space.whole()
    levels = [r for r in space.distance_levels if r <= ball.radius]
    rho = levels[-1] if levels else ball.radius
    lam = float(rng.uniform(0.0, 4.0))
    f = np.abs(rng.normal(size=len(space))) + 0.01
    return kernel, cfg, ball, rho, lam, f
