"""Runner, generators, curves, exit codes, and report determinism."""

import csv
import json
import math

import pytest

from ultraheat.cli import (
    ALL_CHECKS,
    RunConfig,
    build_context,
    execute_checks,
    generate_files,
    generate_space,
    load_config,
    main,
)
from ultraheat.errors import ConfigError, UnknownGenerator

from conftest import S2_SPEC, S4_SPEC


def write_config(tmp_path, **overrides):
    cfg = {
        "space": {"inline": S4_SPEC},
        "kernel": {"isotropic": {"kind": "power", "exponent": 3.0, "scale": 1.0},
                   "scaling": "none"},
        "exponents": {"alpha": 1.0, "beta": 2.0, "R0": 2.0},
        "time_grid": {"min": 1e-3, "max": 1.0, "points": 9, "scale": "log"},
        "checks": ["ultrametric", "form", "semigroup", "vanishing", "due", "tail"],
        "output_dir": str(tmp_path / "out"),
        "seed": 7,
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestRun:
    def test_full_suite_exit_zero(self, tmp_path):
        path = write_config(tmp_path, checks=list(ALL_CHECKS))
        code = main(["run", "--config", str(path)])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["summary"]["fail"] == 0
        assert report["environment"] == {"seed": 7, "version": "0.1.0"}
        record_keys = {"name", "params", "measured", "bound", "margin",
                       "status", "witness"}
        for rec in report["records"]:
            assert set(rec) == record_keys
            assert rec["status"] in ("pass", "fail", "vacuous")
        assert (tmp_path / "out" / "certificate.json").exists()
        assert (tmp_path / "out" / "curves" / "p_full.csv").exists()

    def test_grid_min_zero_is_config_error(self, tmp_path, capsys):
        path = write_config(tmp_path, time_grid={"min": 0, "max": 1, "points": 9})
        assert main(["run", "--config", str(path)]) == 2
        assert "time grid min must be > 0" in capsys.readouterr().err

    def test_asymmetric_kernel_is_config_error(self, tmp_path, capsys):
        path = write_config(tmp_path, kernel={"matrix": [
            [0, 1, 0, 0], [2, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]})
        assert main(["run", "--config", str(path)]) == 2
        assert "kernel" in capsys.readouterr().err

    def test_unknown_check_rejected(self, tmp_path):
        path = write_config(tmp_path, checks=["nope"])
        assert main(["run", "--config", str(path)]) == 2

    def test_empty_checks_rejected(self, tmp_path):
        path = write_config(tmp_path, checks=[])
        assert main(["run", "--config", str(path)]) == 2

    def test_checks_override(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "sub"
        code = main(["run", "--config", str(path), "--out", str(out),
                     "--checks", "ultrametric,due"])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        names = {r["params"]["check"] for r in report["records"]}
        assert names == {"ultrametric", "due"}

    def test_byte_identical_reports(self, tmp_path):
        path = write_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(path), "--out", str(a)]) == 0
        assert main(["run", "--config", str(path), "--out", str(b)]) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()

    def test_seed_changes_report_env(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "seeded"
        assert main(["run", "--config", str(path), "--out", str(out),
                     "--seed", "11", "--checks", "ultrametric"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["environment"]["seed"] == 11

    def test_failed_check_exits_one(self, tmp_path):
        # an unattainable identity tolerance forces honest failures
        path = write_config(tmp_path, checks=["perturbation"],
                            tolerances={"identity": 1e-30})
        assert main(["run", "--config", str(path)]) == 1
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["summary"]["fail"] > 0


class TestGenerate:
    def test_dyadic_depth3(self):
        space, _ = generate_space("dyadic", depth=3, q=2.0)
        assert len(space) == 8
        assert space.radii == (1.0, 2.0, 4.0)

    def test_bary(self):
        space, _ = generate_space("bary", branching=3, depth=2)
        assert len(space) == 9

    def test_random_deterministic(self, tmp_path):
        p1 = generate_files("random", tmp_path / "g1", seed=42)
        p2 = generate_files("random", tmp_path / "g2", seed=42)
        assert p1[0].read_text() == p2[0].read_text()
        assert p1[1].read_text() == p2[1].read_text()

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(UnknownGenerator):
            generate_files("nope", tmp_path)

    def test_generated_files_load(self, tmp_path):
        space_path, kernel_path = generate_files("dyadic", tmp_path, depth=2)
        cfg = RunConfig.from_dict({
            "space": {"file": str(space_path)},
            "kernel": json.loads(kernel_path.read_text()),
            "checks": ["ultrametric"],
        })
        ctx = build_context(cfg)
        assert len(ctx.space) == 4

    def test_distance_matrix_csv_space_file(self, tmp_path):
        csv_path = tmp_path / "space.csv"
        csv_path.write_text("a,b,c\n0,1,2\n1,0,2\n2,2,0\n")
        cfg = RunConfig.from_dict({
            "space": {"file": str(csv_path)},
            "kernel": {"isotropic": {"kind": "power", "exponent": 1.0, "scale": 1.0}},
            "checks": ["ultrametric"],
        })
        ctx = build_context(cfg)
        assert ctx.space.ids == ("a", "b", "c")
        assert ctx.space.distance("a", "c") == 2.0

    def test_random_respects_cap(self):
        for seed in range(20):
            space, _ = generate_space("random", seed=seed, max_points=64)
            assert 2 <= len(space) <= 64


class TestCurves:
    def test_two_point_density_curve(self, tmp_path):
        cfg_path = write_config(
            tmp_path,
            space={"inline": S2_SPEC},
            kernel={"isotropic": {"kind": "power", "exponent": 0.0, "scale": 1.0},
                    "scaling": "none"},
            exponents={"alpha": 1.0, "beta": 1.0, "R0": 1.0},
            time_grid={"min": 1e-2, "max": 10.0, "points": 64, "scale": "log"},
        )
        assert main(["curves", "--config", str(cfg_path)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "out" / "curves" / "p_full.csv")))
        offdiag = [(float(r["t"]), float(r["value"])) for r in rows
                   if r["x"] == "0" and r["y"] == "1"]
        vals = [v for _, v in sorted(offdiag)]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(0.5, abs=1e-4)
        for t, v in offdiag:
            assert v == pytest.approx((1 - math.exp(-4 * t)) / 2, abs=1e-12)

    def test_truncated_cross_block_column_zero(self, tmp_path):
        cfg_path = write_config(tmp_path)
        assert main(["curves", "--config", str(cfg_path)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "out" / "curves" / "q_truncated_0.csv")))
        cross = [float(r["value"]) for r in rows
                 if (r["x"], r["y"]) in (("a", "c"), ("a", "d"), ("b", "c"))]
        assert cross and all(v == 0.0 for v in cross)

    def test_no_checks_run(self, tmp_path):
        cfg_path = write_config(tmp_path)
        assert main(["curves", "--config", str(cfg_path)]) == 0
        assert not (tmp_path / "out" / "report.json").exists()

    def test_empty_check_list_allowed_for_curves_only(self, tmp_path):
        cfg_path = write_config(tmp_path, checks=[])
        assert main(["curves", "--config", str(cfg_path)]) == 0
        assert main(["run", "--config", str(cfg_path)]) == 2


class TestConfigParsing:
    def test_missing_sections(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"kernel": {}})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"space": {}})

    def test_r0_validation(self, tmp_path):
        path = write_config(tmp_path, exponents={"alpha": 1, "beta": 1, "R0": 99.0})
        assert main(["run", "--config", str(path)]) == 2

    def test_r0_defaults_to_diameter(self, tmp_path):
        path = write_config(tmp_path, exponents={"alpha": 1.0, "beta": 2.0})
        cfg = load_config(path)
        ctx = build_context(cfg)
        assert ctx.exponents.r0 == ctx.space.diam

    def test_unreadable_config(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")


def test_thread_cap_keeps_report_identical(tmp_path, monkeypatch):
    path = write_config(tmp_path, checks=["ultrametric", "form", "due", "wue"])
    cfg = load_config(path)
    ctx = build_context(cfg)
    seq = execute_checks(ctx, cfg.checks).to_json()
    monkeypatch.setenv("ULTRAHEAT_THREADS", "4")
    ctx2 = build_context(cfg)
    par = execute_checks(ctx2, cfg.checks).to_json()
    assert seq == par
