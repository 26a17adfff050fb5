"""
Symmetric jump kernels over an ultrametric space.

A kernel assigns a weight w(x, y) >= 0 to every ordered pair of distinct
points, symmetric with zero diagonal; w is the discrete symmetric jump
measure on off-diagonal pairs.  The associated transition function is

    J(x, A) = sum_{y in A} w(x, y) / mu(x),

and `tail(x, r) = J(x, {y : d(x, y) > r})` is its tail beyond radius r.

`tj_constant` returns the smallest C with r^beta * tail(x, r) <= C for all
points x and all r in (0, R0).  Tails are piecewise constant in r with
jumps exactly at the distance levels, so the supremum over continuous r is
computed exactly by scanning consecutive levels (no grid error).
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Asymmetric,
    NegativeProfile,
    NegativeWeight,
    NonzeroDiagonal,
    NotIsotropic,
)
from .space import UltrametricSpace


class JumpKernel:
    """Symmetric nonnegative weight matrix over point pairs, zero diagonal.

    Immutable after construction; concurrent reads are safe.
    """

    def __init__(self, space: UltrametricSpace, weights):
        w = np.asarray(weights, dtype=float)
        n = len(space)
        if w.shape != (n, n):
            raise NegativeWeight(f"weight matrix shape {w.shape} does not match {n} points")
        if not np.all(np.isfinite(w)):
            raise NegativeWeight("weights must be finite")
        if np.any(w < 0):
            i, j = map(int, np.argwhere(w < 0)[0])
            raise NegativeWeight(f"w({space.ids[i]},{space.ids[j]}) = {w[i, j]} < 0")
        if not np.array_equal(w, w.T):
            i, j = map(int, np.argwhere(w != w.T)[0])
            raise Asymmetric(
                f"w({space.ids[i]},{space.ids[j]}) = {w[i, j]} != "
                f"w({space.ids[j]},{space.ids[i]}) = {w[j, i]}"
            )
        if np.any(np.diagonal(w) != 0):
            i = int(np.nonzero(np.diagonal(w))[0][0])
            raise NonzeroDiagonal(f"w({space.ids[i]},{space.ids[i]}) = {w[i, i]} != 0")
        self.space = space
        self.w = w
        self.w.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.space)

    @property
    def mu(self) -> np.ndarray:
        return self.space.masses

    def tail_vector(self, r: float) -> np.ndarray:
        """J(x, B(x, r)^c) for every point x."""
        D = self.space.distance_matrix()
        return np.where(D > r, self.w, 0.0).sum(axis=1) / self.mu

    def tail(self, x, r: float) -> float:
        """J(x, B(x, r)^c) = sum_{d(x,y) > r} w(x, y) / mu(x)."""
        if r < 0:
            raise ValueError(f"tail radius must be >= 0, got {r}")
        i = self.space.index(x)
        D = self.space.distance_matrix()
        return float(self.w[i, D[i] > r].sum() / self.mu[i])

    def tail_sup(self, r: float) -> float:
        return float(self.tail_vector(r).max())

    def isotropy_profile(self, rtol: float = 1e-12) -> dict:
        """Return {distance level: profile value} for w = g(d) mu(x) mu(y).

        Raises NotIsotropic when the mass-scaled weights are not a function
        of the distance level alone.
        """
        D = self.space.distance_matrix()
        mu = self.mu
        scaled = self.w / np.outer(mu, mu)
        out = {}
        for level in self.space.distance_levels:
            vals = scaled[D == level]
            lo, hi = float(vals.min()), float(vals.max())
            if hi - lo > rtol * max(abs(hi), 1e-300):
                raise NotIsotropic(
                    f"mass-scaled weights vary on level {level}: [{lo}, {hi}]"
                )
            out[level] = 0.5 * (lo + hi)
        return out

    def __repr__(self):
        return f"JumpKernel(n={self.n})"


def power_profile(exponent: float, scale: float = 1.0):
    """Radial profile r -> scale * r**(-exponent)."""
    def profile(r: float) -> float:
        return scale * float(r) ** (-exponent)
    return profile


def profile_from_config(cfg: dict):
    """Profile callable from {"kind": "power", "exponent": s, "scale": c}."""
    if cfg.get("kind") != "power":
        raise ValueError(f"unknown profile kind {cfg.get('kind')!r}")
    return power_profile(float(cfg["exponent"]), float(cfg.get("scale", 1.0)))


def isotropic_kernel(space: UltrametricSpace, profile, scaling: str = "none") -> JumpKernel:
    """Kernel w(x, y) = profile(d(x, y)), optionally scaled by mu(x) mu(y).

    `profile` is a callable on distances or a power-profile config dict.
    Mass scaling is the canonical family for the fast hierarchical solver.
    """
    if isinstance(profile, dict):
        profile = profile_from_config(profile)
    if scaling not in ("none", "mass"):
        raise ValueError(f"scaling must be 'none' or 'mass', got {scaling!r}")
    D = space.distance_matrix()
    values = {}
    for level in space.distance_levels:
        g = float(profile(level))
        if g < 0:
            raise NegativeProfile(f"profile({level}) = {g} < 0")
        values[level] = g
    w = np.zeros_like(D)
    for level, g in values.items():
        w[D == level] = g
    if scaling == "mass":
        w = w * np.outer(space.masses, space.masses)
    return JumpKernel(space, w)


def from_matrix(space: UltrametricSpace, weights) -> JumpKernel:
    """Validated kernel from an explicit weight matrix."""
    return JumpKernel(space, weights)


def kernel_from_csv(space: UltrametricSpace, text_or_path) -> JumpKernel:
    """Read a weight matrix CSV with a header row of point ids."""
    if isinstance(text_or_path, str) and "\n" not in text_or_path:
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = text_or_path
    rows = list(csv.reader(io.StringIO(text)))
    ids = [c.strip() for c in rows[0]]
    perm = [space.index(i) for i in ids]
    raw = np.array([[float(v) for v in row] for row in rows[1:len(ids) + 1]])
    w = np.zeros((len(space), len(space)))
    w[np.ix_(perm, perm)] = raw
    return JumpKernel(space, w)


def tj_constant(kernel: JumpKernel, beta: float, r0: float) -> float:
    """Smallest C with r^beta * tail(x, r) <= C for all x, r in (0, R0).

    The tail is right-continuous and constant between consecutive distance
    levels d_i < d_{i+1}, so the supremum over each interval is attained in
    the limit r -> min(d_{i+1}, R0) and the scan over levels is exact.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not 0 < r0 <= kernel.space.diam or kernel.space.diam == 0:
        if kernel.space.diam == 0:
            return 0.0
        raise ValueError(f"R0 must lie in (0, diam] = (0, {kernel.space.diam}], got {r0}")
    levels = [0.0] + list(kernel.space.distance_levels)
    best = 0.0
    for i, lo in enumerate(levels):
        if lo >= r0:
            break
        if i + 1 < len(levels):
            cap = min(levels[i + 1], r0)
        else:
            cap = r0  # tail is 0 here anyway
        best = max(best, cap ** beta * kernel.tail_sup(lo))
    return best


def tj_witness(kernel: JumpKernel, beta: float, r0: float) -> dict:
    """Argmax data for the tail-jump scan: point and radius interval."""
    levels = [0.0] + list(kernel.space.distance_levels)
    best, info = 0.0, {"point": None, "r_sup": 0.0}
    for i, lo in enumerate(levels):
        if lo >= r0:
            break
        cap = min(levels[i + 1], r0) if i + 1 < len(levels) else r0
        tails = kernel.tail_vector(lo)
        x = int(np.argmax(tails))
        val = cap ** beta * float(tails[x])
        if val > best:
            best = val
            info = {"point": kernel.space.ids[x], "r_sup": cap, "level": lo}
    info["constant"] = best
    return info


@dataclass
class ExponentConfig:
    """Dimension/scaling exponents and the tail-range parameter.

    nu = beta / alpha is derived; c_tj stores the measured tail-jump
    constant once computed.
    """

    alpha: float
    beta: float
    r0: float
    nu: float = field(init=False)
    c_tj: float | None = None

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.r0 <= 0:
            raise ValueError("R0 must be > 0")
        self.nu = self.beta / self.alpha

    def k0(self, rho: float) -> float:
        """Zero-order rate rho^-beta + R0^-beta entering the Nash bound."""
        return rho ** (-self.beta) + self.r0 ** (-self.beta)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "R0": self.r0, "nu": self.nu}


def kernel_to_csv(kernel: JumpKernel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(kernel.space.ids)
    for row in kernel.w:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
