"""
Config-driven scenario runner.

    ultraheat run --config cfg.json [--out DIR] [--checks a,b,c] [--seed N]
    ultraheat generate --kind dyadic --depth 3 --out DIR
    ultraheat curves --config cfg.json

`run` builds the space and kernel from the config, executes the selected
checks, and writes report.json (plus certificate.json when the pipeline
check is selected, and curves/*.csv).  Exit code 0 means every non-vacuous
check passed, 1 means some check failed, 2 means the config was invalid.

Reports are byte-identical across runs for the same (config, seed); the
environment stamp carries only the package version and the seed.
ULTRAHEAT_THREADS caps how many checks may run concurrently (default 1;
results are merged in registry order either way).
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bounds_mod
from . import davies
from .errors import ConfigError, UltraheatError, UnknownGenerator
from .form import indicator_energy_check, energy_and_scale
from .kernel import (
    ExponentConfig,
    JumpKernel,
    isotropic_kernel,
    kernel_from_csv,
    tj_constant,
)
from .reporting import FAIL, CheckRecord, CheckReport, record
from .semigroup import generator, semigroup_selfcheck
from .space import (
    UltrametricSpace,
    build_tree,
    from_distance_csv,
    load_space,
    save_space,
    validate_ultrametric,
)

ALL_CHECKS = (
    "ultrametric", "form", "semigroup", "vanishing", "perturbation", "power",
    "lp_derivative", "moser", "supbound", "ode", "nash", "due", "wue",
    "energy_diff", "p8", "tail", "theorem1",
)

DEFAULT_TOLERANCES = {
    "identity": 1e-12,
    "spectral": 1e-10,
    "finite_difference": 1e-6,
}


# -- configuration -----------------------------------------------------------------


@dataclass
class RunConfig:
    space: dict
    kernel: dict
    alpha: float = 1.0
    beta: float = 1.0
    r0: float | None = None
    grid_min: float = 1e-3
    grid_max: float = 1.0
    grid_points: int = 17
    grid_scale: str = "log"
    checks: tuple = ALL_CHECKS
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "."
    seed: int = 0
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if "space" not in raw:
            raise ConfigError("config needs a 'space' section")
        if "kernel" not in raw:
            raise ConfigError("config needs a 'kernel' section")
        exps = raw.get("exponents", {})
        grid = raw.get("time_grid", {})
        gmin = float(grid.get("min", 1e-3))
        gmax = float(grid.get("max", 1.0))
        if gmin <= 0:
            raise ConfigError("time grid min must be > 0")
        if gmax < gmin:
            raise ConfigError("time grid max must be >= min")
        points = int(grid.get("points", 17))
        if points < 2:
            raise ConfigError("time grid needs at least 2 points")
        scale = grid.get("scale", "log")
        if scale not in ("log", "linear"):
            raise ConfigError(f"unknown time grid scale {scale!r}")
        # an empty list is tolerated here so that `curves` can run without
        # checks; `run` itself insists on a nonempty selection
        checks = tuple(raw.get("checks", ALL_CHECKS))
        for c in checks:
            if c not in ALL_CHECKS:
                raise ConfigError(f"unknown check {c!r}; known: {', '.join(ALL_CHECKS)}")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(raw.get("tolerances", {}))
        return cls(
            space=raw["space"],
            kernel=raw["kernel"],
            alpha=float(exps.get("alpha", 1.0)),
            beta=float(exps.get("beta", 1.0)),
            r0=None if exps.get("R0") is None else float(exps["R0"]),
            grid_min=gmin,
            grid_max=gmax,
            grid_points=points,
            grid_scale=scale,
            checks=checks,
            tolerances=tol,
            output_dir=raw.get("output_dir", "."),
            seed=int(raw.get("seed", 0)),
            options=raw.get("options", {}),
        )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(raw)


def build_space(section: dict, seed: int = 0) -> UltrametricSpace:
    if "file" in section:
        path = section["file"]
        if str(path).endswith(".csv"):
            return from_distance_csv(path)
        return load_space(path)
    if "inline" in section:
        return build_tree(section["inline"])
    if "generator" in section:
        gen = dict(section["generator"])
        kind = gen.pop("kind", None)
        gen.setdefault("seed", seed)
        space, _ = generate_space(kind, **gen)
        return space
    raise ConfigError("space section needs 'file', 'inline', or 'generator'")


def build_kernel(space: UltrametricSpace, section: dict) -> JumpKernel:
    try:
        if "file" in section:
            return kernel_from_csv(space, section["file"])
        if "matrix" in section:
            return JumpKernel(space, np.asarray(section["matrix"], dtype=float))
        if "isotropic" in section:
            return isotropic_kernel(space, section["isotropic"],
                                    scaling=section.get("scaling", "none"))
    except UltraheatError as exc:
        raise ConfigError(f"kernel: {exc}") from exc
    raise ConfigError("kernel section needs 'file', 'matrix', or 'isotropic'")


def time_grid_of(cfg: RunConfig) -> np.ndarray:
    if cfg.grid_scale == "linear":
        return np.linspace(cfg.grid_min, cfg.grid_max, cfg.grid_points)
    return np.exp(np.linspace(math.log(cfg.grid_min), math.log(cfg.grid_max),
                              cfg.grid_points))


# -- generators ----------------------------------------------------------------------


def _regular_tree(branching: int, depth: int, q: float, masses) -> dict:
    counter = [0]

    def node(level):
        if level == 0:
            i = counter[0]
            counter[0] += 1
            return {"id": f"p{i}", "mass": float(masses[i])}
        return {"radius": q ** (level - 1),
                "children": [node(level - 1) for _ in range(branching)]}

    return node(depth)


def generate_space(kind: str, depth: int = 3, branching: int = 3, q: float = 2.0,
                   mass_law: str = "unit", seed: int = 0, max_points: int = 64,
                   **extra) -> tuple[UltrametricSpace, dict]:
    """Build a named family member; returns (space, kernel spec dict)."""
    if extra:
        raise ConfigError(f"unknown generator parameters: {sorted(extra)}")
    rng = np.random.default_rng(seed)

    def draw_masses(count):
        if mass_law == "unit":
            return np.ones(count)
        if mass_law == "uniform":
            return rng.uniform(0.5, 2.0, count)
        if mass_law == "loguniform":
            return np.exp(rng.uniform(math.log(0.25), math.log(4.0), count))
        raise UnknownGenerator(f"unknown mass law {mass_law!r}")

    if kind == "dyadic":
        n = 2 ** depth
        spec = _regular_tree(2, depth, q, draw_masses(n))
    elif kind == "bary":
        n = branching ** depth
        spec = _regular_tree(branching, depth, q, draw_masses(n))
    elif kind == "random":
        spec = _random_tree(rng, depth, q, mass_law, max_points, draw_masses)
    else:
        raise UnknownGenerator(f"unknown generator kind {kind!r}")
    space = build_tree(spec)
    kernel_spec = {"isotropic": {"kind": "power", "exponent": 3.0, "scale": 1.0},
                   "scaling": "mass"}
    return space, kernel_spec


def _random_tree(rng, max_depth: int, q: float, mass_law: str, max_points: int,
                 draw_masses) -> dict:
    counter = [0]

    def node(level, budget):
        if level == 0 or budget <= 1:
            i = counter[0]
            counter[0] += 1
            return {"id": f"p{i}", "mass": float(draw_masses(1)[0])}
        width = int(min(rng.integers(2, 5), budget))
        base, extra = divmod(budget, width)
        children = [node(level - 1, base + (1 if c < extra else 0))
                    for c in range(width)]
        return {"radius": q ** level, "children": children}

    depth = int(rng.integers(2, max(3, max_depth + 1)))
    return node(depth, max_points)


# -- check registry --------------------------------------------------------------------


@dataclass
class RunContext:
    space: UltrametricSpace
    kernel: JumpKernel
    exponents: ExponentConfig
    grid: np.ndarray
    seed: int
    tolerances: dict
    options: dict
    artifacts: dict = field(default_factory=dict)


def _pick_scenario(ctx: RunContext):
    """Canonical (ball, rho) for the tilted-evolution checks: the first
    proper ball, truncated at its own radius."""
    balls = [b for b in ctx.space.balls() if 0 < b.radius < ctx.space.diam]
    ball = balls[0] if balls else ctx.space.whole()
    levels = [r for r in ctx.space.distance_levels if r <= ball.radius]
    rho = levels[-1] if levels else ball.radius
    return ball, rho


def _check_ultrametric(ctx):
    return validate_ultrametric(ctx.space)


def _check_form(ctx):
    report = CheckReport()
    rtol = ctx.tolerances["identity"]
    for ball in ctx.space.balls(include_points=True):
        report.add(indicator_energy_check(ctx.kernel, ball, rtol=rtol))
    rng = np.random.default_rng(ctx.seed)
    levels = list(ctx.space.distance_levels)
    worst = -np.inf
    for _ in range(8):
        f = rng.normal(size=len(ctx.space))
        prev = 0.0
        for rho in levels:
            val, _ = energy_and_scale(ctx.kernel, f, f, rho)
            worst = max(worst, prev - val)
            prev = val
        full, _ = energy_and_scale(ctx.kernel, f, f, None)
        worst = max(worst, prev - full, abs(full - prev) - rtol * max(1.0, abs(full)))
        clamped = np.clip(f, 0.0, 1.0)
        cl, _ = energy_and_scale(ctx.kernel, clamped, clamped, None)
        worst = max(worst, cl - full)
    report.add(record("form.truncation_monotone_and_markov", {"n_random": 8},
                      worst, 0.0, 0.0, worst <= 0.0))
    return report


def _check_semigroup(ctx):
    report = semigroup_selfcheck(generator(ctx.kernel), ctx.grid, seed=ctx.seed)
    for rho in ctx.space.distance_levels:
        report.extend(semigroup_selfcheck(generator(ctx.kernel, rho=rho), ctx.grid,
                                          seed=ctx.seed))
    return report


def _check_vanishing(ctx):
    return davies.vanishing_check(ctx.kernel, ctx.grid)


def _check_perturbation(ctx):
    opts = ctx.options
    return davies.perturbation_battery(
        ctx.kernel,
        lambdas=tuple(opts.get("lambdas", (-50, -5, 0, 5, 50))),
        n_pairs=int(opts.get("n_random_pairs", 5)),
        seed=ctx.seed,
        rtol=ctx.tolerances["identity"],
    )


def _check_power(ctx):
    opts = ctx.options
    return davies.power_battery(
        ctx.kernel,
        p_values=tuple(opts.get("power_p", (1, 1.5, 2, 4, 8))),
        n_functions=int(opts.get("n_power_functions", 25)),
        seed=ctx.seed,
        rtol=ctx.tolerances["identity"],
    )


def _nash_for(ctx, rho):
    est = bounds_mod.nash_constant(ctx.kernel, rho=rho, nu=ctx.exponents.nu,
                                   k0=ctx.exponents.k0(rho), seed=ctx.seed)
    return est.constant


def _check_lp_derivative(ctx):
    ball, rho = _pick_scenario(ctx)
    c_n = _nash_for(ctx, rho)
    report = CheckReport()
    grid = ctx.grid if len(ctx.grid) >= 8 else bounds_mod.log_time_grid(
        ctx.grid[0], ctx.grid[-1], 8)
    rng = np.random.default_rng(ctx.seed)
    f = rng.uniform(0.1, 1.0, len(ctx.space))
    for p in ctx.options.get("derivative_p", (1, 2)):
        for lam in ctx.options.get("derivative_lambdas", (0.0, 2.0)):
            report.extend(davies.lp_derivative_check(
                ctx.kernel, ctx.exponents, rho, ball, lam, f, p, grid, c_n))
    return report


def _check_moser(ctx):
    ball, rho = _pick_scenario(ctx)
    c_n = _nash_for(ctx, rho)
    lam = float(ctx.options.get("moser_lambda", 2.0))
    k_max = int(ctx.options.get("moser_k_max", 6))
    f = np.zeros(len(ctx.space))
    f[ball.start] = 1.0
    _, report = davies.moser_iteration(
        ctx.kernel, ctx.exponents, rho, ball, lam, f, t=float(ctx.grid[-1]),
        k_max=k_max, c_n=c_n)
    return report


def _check_supbound(ctx):
    ball, rho = _pick_scenario(ctx)
    c_n = _nash_for(ctx, rho)
    lam = float(ctx.options.get("moser_lambda", 2.0))
    times = ctx.grid[:: max(1, len(ctx.grid) // 8)]
    return davies.sup_bound_check(ctx.kernel, ctx.exponents, rho, ball, lam,
                                  times, c_n)


def _check_ode(ctx):
    report = davies.ode_sweep(n_samples=int(ctx.options.get("ode_sweep", 25)),
                              seed=ctx.seed)
    return report


def _estimate_record(est) -> CheckRecord:
    ok = np.isfinite(est.constant)
    return record(f"bounds.{est.kind.lower()}_constant", est.scan, est.constant,
                  None, 0.0, bool(ok), witness={"witnesses": est.witnesses})


def _check_nash(ctx):
    _, rho = _pick_scenario(ctx)
    report = CheckReport()
    report.add(_estimate_record(bounds_mod.nash_constant(
        ctx.kernel, rho=rho, nu=ctx.exponents.nu, k0=ctx.exponents.k0(rho),
        seed=ctx.seed)))
    return report


def _check_due(ctx):
    report = CheckReport()
    report.add(_estimate_record(bounds_mod.due_constant(
        ctx.kernel, ctx.exponents.alpha, ctx.exponents.beta, ctx.exponents.r0)))
    return report


def _check_wue(ctx):
    report = CheckReport()
    report.add(_estimate_record(bounds_mod.wue_constant(
        ctx.kernel, ctx.exponents.alpha, ctx.exponents.beta, ctx.exponents.r0)))
    return report


def _check_energy_diff(ctx):
    report = CheckReport()
    for rho in ctx.space.distance_levels:
        report.extend(bounds_mod.energy_difference_check(
            ctx.kernel, rho, seed=ctx.seed, rtol=ctx.tolerances["identity"]))
    return report


def _check_p8(ctx):
    report = CheckReport()
    rng = np.random.default_rng(ctx.seed)
    cells = ctx.space.partition(ctx.space.distance_levels[0]) \
        if ctx.space.distance_levels else [ctx.space.whole()]
    fs = [np.ones(len(ctx.space)), 1.0 - cells[0].indicator(),
          rng.uniform(0.0, 1.0, len(ctx.space))]
    for rho in ctx.space.distance_levels:
        for f in fs:
            report.extend(bounds_mod.truncation_comparison_check(
                ctx.kernel, rho, None, f, ctx.grid,
                c_factor=float(ctx.options.get("p8_c_factor", 4.0)),
                rtol=ctx.tolerances["identity"]))
    return report


def _check_tail(ctx):
    c_tj = tj_constant(ctx.kernel, ctx.exponents.beta, ctx.exponents.r0)
    return bounds_mod.tail_probability_check(
        ctx.kernel, ctx.exponents.beta, c_tj, ctx.exponents.r0, ctx.grid,
        rtol=ctx.tolerances["identity"])


def _check_theorem1(ctx):
    cert = bounds_mod.wue_certificate(
        ctx.kernel, ctx.exponents.alpha, ctx.exponents.beta, ctx.exponents.r0,
        seed=ctx.seed)
    ctx.artifacts["certificate"] = cert
    report = CheckReport()
    for rec in cert.checks:
        report.add(rec)
    report.add(record("pipeline.status", {"constants": cert.constants}, None, None,
                      0.0, cert.status == "pass"))
    return report


CHECK_REGISTRY = {
    "ultrametric": _check_ultrametric,
    "form": _check_form,
    "semigroup": _check_semigroup,
    "vanishing": _check_vanishing,
    "perturbation": _check_perturbation,
    "power": _check_power,
    "lp_derivative": _check_lp_derivative,
    "moser": _check_moser,
    "supbound": _check_supbound,
    "ode": _check_ode,
    "nash": _check_nash,
    "due": _check_due,
    "wue": _check_wue,
    "energy_diff": _check_energy_diff,
    "p8": _check_p8,
    "tail": _check_tail,
    "theorem1": _check_theorem1,
}


# -- report assembly ---------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    return obj


@dataclass
class VerificationReport:
    records: list
    summary: dict
    environment: dict

    def to_dict(self) -> dict:
        return _jsonable({
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary,
            "environment": self.environment,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def execute_checks(ctx: RunContext, checks) -> VerificationReport:
    cap = max(1, int(os.environ.get("ULTRAHEAT_THREADS", "1")))
    names = [c for c in checks]
    reports: dict[str, CheckReport] = {}
    if cap == 1 or len(names) == 1:
        for name in names:
            reports[name] = CHECK_REGISTRY[name](ctx)
    else:
        with ThreadPoolExecutor(max_workers=min(cap, len(names))) as pool:
            futures = {name: pool.submit(CHECK_REGISTRY[name], ctx) for name in names}
            for name in names:
                reports[name] = futures[name].result()
    merged = CheckReport()
    for name in names:  # deterministic merge order
        for rec in reports[name].records:
            rec.params = dict(rec.params)
            rec.params["check"] = name
            merged.add(rec)
    counts = merged.counts()
    return VerificationReport(
        records=merged.records,
        summary=counts,
        environment={"version": __version__, "seed": ctx.seed},
    )


def write_curves(ctx: RunContext, out_dir: Path) -> None:
    """CSV tables: kernel curves per flavor plus the tracked supremum
    quantities.  For large spaces only the first row and the diagonal are
    emitted (documented policy; keeps files plottable)."""
    curves = out_dir / "curves"
    curves.mkdir(parents=True, exist_ok=True)
    space, kernel, cfg = ctx.space, ctx.kernel, ctx.exponents
    n = len(space)
    pair_budget = n <= 24

    def emit(path, gen):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "x", "y", "value"])
            for t in ctx.grid:
                dens = gen.density(float(t))
                if pair_budget:
                    pairs = [(i, j) for i in range(n) for j in range(n)]
                else:
                    pairs = [(0, j) for j in range(n)] + [(i, i) for i in range(n)]
                for i, j in pairs:
                    wr.writerow([repr(float(t)), space.ids[i], space.ids[j],
                                 repr(float(dens[i, j]))])

    emit(curves / "p_full.csv", generator(kernel))
    for k, rho in enumerate(space.distance_levels):
        emit(curves / f"q_truncated_{k}.csv", generator(kernel, rho=rho))

    gen = generator(kernel)
    with open(curves / "supremum.csv", "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "max_density", "ondiag_quantity", "offdiag_quantity",
                     "exit_quantity"])
        D = space.distance_matrix()
        capped = np.minimum(D, cfg.r0)
        balls = [b for b in space.balls() if b.radius > 0]
        for t in ctx.grid:
            t = float(t)
            dens = gen.density(t)
            factor = (1.0 + capped / t ** (1.0 / cfg.beta)) ** cfg.beta
            heat = gen.heat_matrix(t)
            exit_q = 0.0
            for ball in balls:
                comp = 1.0 - ball.indicator()
                e = float((heat[ball.start:ball.stop] @ comp).max())
                exit_q = max(exit_q, e * min(ball.radius, cfg.r0) ** cfg.beta / t)
            wr.writerow([repr(t), repr(float(dens.max())),
                         repr(float(t ** (cfg.alpha / cfg.beta) * dens.max())),
                         repr(float((t ** (cfg.alpha / cfg.beta) * dens * factor).max())),
                         repr(exit_q)])


def build_context(cfg: RunConfig) -> RunContext:
    space = build_space(cfg.space, seed=cfg.seed)
    kernel = build_kernel(space, cfg.kernel)
    r0 = cfg.r0 if cfg.r0 is not None else space.diam
    if space.diam > 0 and not 0 < r0 <= space.diam:
        raise ConfigError(f"R0={r0} must lie in (0, diam={space.diam}]")
    try:
        exponents = ExponentConfig(cfg.alpha, cfg.beta, r0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunContext(
        space=space,
        kernel=kernel,
        exponents=exponents,
        grid=time_grid_of(cfg),
        seed=cfg.seed,
        tolerances=cfg.tolerances,
        options=cfg.options,
    )


def run(cfg: RunConfig) -> int:
    """Execute the configured checks; write report, certificate, curves."""
    if not cfg.checks:
        raise ConfigError("checks must be nonempty")
    ctx = build_context(cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = execute_checks(ctx, cfg.checks)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    if "certificate" in ctx.artifacts:
        with open(out_dir / "certificate.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(_jsonable(ctx.artifacts["certificate"].to_dict()),
                                indent=2, sort_keys=True))
            fh.write("\n")
    write_curves(ctx, out_dir)
    failed = any(r.status == FAIL for r in report.records)
    return 1 if failed else 0


def curves_only(cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_curves(ctx, out_dir)
    return 0


def generate_files(kind: str, out_dir, **params) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, kernel_spec = generate_space(kind, **params)
    space_path = out / "space.json"
    kernel_path = out / "kernel.json"
    save_space(space, space_path)
    with open(kernel_path, "w", encoding="utf-8") as fh:
        json.dump(kernel_spec, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return space_path, kernel_path


# -- entry point -----------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ultraheat",
                                     description="heat kernel verification runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run configured checks")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--checks", default=None, help="comma-separated subset")
    p_run.add_argument("--seed", type=int, default=None)

    p_gen = sub.add_parser("generate", help="write space and kernel spec files")
    p_gen.add_argument("--kind", required=True)
    p_gen.add_argument("--depth", type=int, default=3)
    p_gen.add_argument("--branching", type=int, default=3)
    p_gen.add_argument("--q", type=float, default=2.0)
    p_gen.add_argument("--mass-law", default="unit")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--max-points", type=int, default=64)
    p_gen.add_argument("--out", default=".")

    p_curves = sub.add_parser("curves", help="emit CSV curves, run no checks")
    p_curves.add_argument("--config", required=True)
    p_curves.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.out is not None:
                cfg.output_dir = args.out
            if args.seed is not None:
                cfg.seed = args.seed
            if args.checks is not None:
                names = tuple(c.strip() for c in args.checks.split(",") if c.strip())
                for c in names:
                    if c not in ALL_CHECKS:
                        raise ConfigError(f"unknown check {c!r}")
                cfg.checks = names
            return run(cfg)
        if args.command == "generate":
            space_path, kernel_path = generate_files(
                args.kind, args.out, depth=args.depth, branching=args.branching,
                q=args.q, mass_law=args.mass_law, seed=args.seed,
                max_points=args.max_points)
            print(space_path)
            print(kernel_path)
            return 0
        if args.command == "curves":
            cfg = load_config(args.config)
            if args.out is not None:
                cfg.output_dir = args.out
            return curves_only(cfg)
    except (ConfigError, UnknownGenerator) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UltraheatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
