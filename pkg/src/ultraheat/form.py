"""
The quadratic jump energy, its range truncation, and simple functions.

The energy of a pair of functions is the sum over ordered pairs of
distinct points

    E(f, g) = sum_{x != y} (f(x) - f(y)) (g(x) - g(y)) w(x, y),

which matches the double integral over the product space minus the
diagonal; indicator energies then satisfy E(1_B) = 2 j(B, B^c) with no
extra factor.  The rho-truncation keeps the pairs with d(x, y) <= rho
(closed ball convention, as everywhere in the package).
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OverlappingBalls
from .kernel import JumpKernel
from .reporting import CheckRecord, record
from .space import Ball


def _as_vector(kernel: JumpKernel, f) -> np.ndarray:
    v = np.asarray(f, dtype=float)
    if v.shape != (kernel.n,):
        raise DimensionMismatch(f"expected vector of length {kernel.n}, got shape {v.shape}")
    return v


def _pair_mask(kernel: JumpKernel, rho) -> np.ndarray | None:
    if rho is None:
        return None
    return kernel.space.distance_matrix() <= rho


def energy_and_scale(kernel: JumpKernel, f, g, rho=None) -> tuple[float, float]:
    """Energy value together with its absolute-term sum.

    The scale sum_{pairs} |df| |dg| w bounds how much cancellation the
    signed sum contains; relative tolerances downstream are taken against
    it so that near-zero energies are not tested against rounding noise.
    """
    fv = _as_vector(kernel, f)
    gv = _as_vector(kernel, g)
    df = fv[:, None] - fv[None, :]
    dg = gv[:, None] - gv[None, :]
    terms = df * dg * kernel.w
    mask = _pair_mask(kernel, rho)
    if mask is not None:
        terms = np.where(mask, terms, 0.0)
    return float(terms.sum()), float(np.abs(terms).sum())


def energy(kernel: JumpKernel, f, g) -> float:
    """Bilinear energy E(f, g) over all ordered off-diagonal pairs."""
    return energy_and_scale(kernel, f, g, None)[0]


def energy_trunc(kernel: JumpKernel, f, g, rho: float) -> float:
    """Truncated energy: pairs restricted to jump lengths d(x, y) <= rho."""
    if rho <= 0:
        raise ValueError(f"truncation range must be > 0, got {rho}")
    return energy_and_scale(kernel, f, g, rho)[0]


def quadratic_operator(kernel: JumpKernel, rho=None) -> np.ndarray:
    """Symmetric matrix Q with f^T Q g = E_rho(f, g); used for fast batches."""
    w = kernel.w if rho is None else np.where(_pair_mask(kernel, rho), kernel.w, 0.0)
    q = -2.0 * w
    np.fill_diagonal(q, 2.0 * w.sum(axis=1))
    return q


def energy_batch(kernel: JumpKernel, functions: np.ndarray, rho=None) -> np.ndarray:
    """E_rho(u, u) for every column of `functions` (n x m)."""
    q = quadratic_operator(kernel, rho)
    return np.einsum("im,im->m", functions, q @ functions)


def indicator_energy_check(kernel: JumpKernel, ball: Ball, rtol: float = 1e-12) -> CheckRecord:
    """Check E(1_B, 1_B) = 2 j(B, B^c) by direct summation of both sides."""
    ind = ball.indicator()
    lhs = energy(kernel, ind, ind)
    inside = slice(ball.start, ball.stop)
    cross = kernel.w[inside, :].sum() - kernel.w[inside, inside].sum()
    rhs = 2.0 * float(cross)
    margin = rtol * max(abs(lhs), abs(rhs), 1.0)
    return record(
        "form.indicator_energy",
        {"ball": list(ball.members), "radius": ball.radius},
        measured=lhs,
        bound=rhs,
        margin=margin,
        ok=abs(lhs - rhs) <= margin,
    )


@dataclass(frozen=True)
class SimpleFunction:
    """Finite linear combination of indicators of pairwise disjoint balls."""

    coefficients: tuple
    balls: tuple

    def __post_init__(self):
        spans = sorted((b.start, b.stop) for b in self.balls)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if b0 < a1:
                raise OverlappingBalls(f"balls overlap on leaf span [{b0}, {min(a1, b1)})")
        if len(self.coefficients) != len(self.balls):
            raise DimensionMismatch(
                f"{len(self.coefficients)} coefficients for {len(self.balls)} balls"
            )

    def values(self) -> np.ndarray:
        space = self.balls[0].space
        out = np.zeros(len(space))
        for c, b in zip(self.coefficients, self.balls):
            out[b.start:b.stop] = c
        return out

    def __call__(self, point_id) -> float:
        space = self.balls[0].space
        i = space.index(point_id)
        for c, b in zip(self.coefficients, self.balls):
            if b.contains_index(i):
                return float(c)
        return 0.0


def simple_function(coefficients, balls) -> SimpleFunction:
    """Validated simple function f = sum_i c_i 1_{B_i} on disjoint balls."""
    return SimpleFunction(tuple(float(c) for c in coefficients), tuple(balls))


def function_from_csv(kernel_or_space, text_or_path) -> np.ndarray:
    """Read a function vector from CSV rows `id,value` keyed by point id."""
    space = getattr(kernel_or_space, "space", kernel_or_space)
    if isinstance(text_or_path, str) and "\n" not in text_or_path:
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = text_or_path
    out = np.zeros(len(space))
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().lower() == "id":
            continue
        out[space.index(row[0].strip())] = float(row[1])
    return out
