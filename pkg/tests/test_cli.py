"""Sweep driver: config parsing, CSV determinism, regressions, exit codes."""

from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from ccnscale import cli
from ccnscale.cli import (
    ConfigError,
    Mode,
    NetworkConfig,
    SweepRow,
    parse_config,
    run_sweep,
    slope_regression,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


BASIC = """\
# a comment line
mode = adhoc
n = 1000, 3162, 10000, 31623
alpha = 0.8
beta = 0.9          # inline comment
seed = 7
trials = 3
"""


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


class TestParseConfig:
    def test_basic_values_and_defaults(self, tmp_path):
        cfg = parse_config(_write(tmp_path, "a.conf", BASIC))
        v = cfg.values
        assert v["mode"] == (Mode.ADHOC,)
        assert v["n"] == (1000, 3162, 10000, 31623)
        assert v["alpha"] == (0.8,)
        assert v["beta"] == (0.9,)
        assert v["seed"] == 7
        assert v["trials"] == 3
        # untouched keys fall back to documented defaults
        assert v["K"] == (1.0,)
        assert v["W"] == 1.0
        assert v["sim"] is False
        assert v["max_sim_n"] == 100_000

    def test_points_cross_product_deterministic_order(self, tmp_path):
        cfg = parse_config(
            _write(
                tmp_path,
                "b.conf",
                "mode = adhoc\nn = 10, 20\nalpha = 0.5, 1.5\nbeta = 0.9\n",
            )
        )
        pts = cfg.points()
        assert [(p["n"], p["alpha"]) for p in pts] == [
            (10, 0.5),
            (10, 1.5),
            (20, 0.5),
            (20, 1.5),
        ]

    def test_unknown_key_reports_line_number(self, tmp_path):
        path = _write(tmp_path, "c.conf", "mode = adhoc\n\nwídth = 3\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 3
        assert "line 3" in str(err.value)

    def test_bad_value_reports_line_number(self, tmp_path):
        path = _write(tmp_path, "d.conf", "n = ten\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 1

    def test_non_integer_n_rejected(self, tmp_path):
        path = _write(tmp_path, "e.conf", "n = 10.5\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_integer_scientific_notation_accepted(self, tmp_path):
        cfg = parse_config(_write(tmp_path, "f.conf", "n = 1e3, 1e4\n"))
        assert cfg.values["n"] == (1000, 10000)

    def test_duplicate_key_rejected(self, tmp_path):
        path = _write(tmp_path, "g.conf", "n = 10\nn = 20\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 2

    def test_missing_equals_rejected(self, tmp_path):
        path = _write(tmp_path, "h.conf", "just some words\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 1

    def test_scalar_key_rejects_list(self, tmp_path):
        path = _write(tmp_path, "i.conf", "seed = 1, 2\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_heterogeneous_requires_mu_or_f(self, tmp_path):
        path = _write(tmp_path, "j.conf", "mode = heterogeneous\nbeta = 0.9\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_heterogeneous_rejects_both_mu_and_f(self, tmp_path):
        path = _write(
            tmp_path,
            "k.conf",
            "mode = heterogeneous\nbeta = 0.9\nmu = 0.4\nf = 3\n",
        )
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 4

    def test_adhoc_beta_above_one_rejected_at_parse(self, tmp_path):
        path = _write(tmp_path, "l.conf", "mode = adhoc\nbeta = 1.2\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert err.value.line == 2

    def test_overrides_replace_file_values(self, tmp_path):
        path = _write(tmp_path, "m.conf", BASIC)
        cfg = parse_config(path, {"seed": 99, "sim": True, "trials": None})
        assert cfg.values["seed"] == 99
        assert cfg.values["sim"] is True
        assert cfg.values["trials"] == 3  # None override = keep file value

    def test_header_lines_cover_every_key(self, tmp_path):
        cfg = parse_config(_write(tmp_path, "n.conf", BASIC))
        lines = cfg.header_lines()
        keys = {ln.split("=")[0].strip("# ").strip() for ln in lines}
        assert keys == set(cli._SWEEP_KEYS) | set(cli._SCALAR_KEYS)


# ---------------------------------------------------------------------------
# slope regression
# ---------------------------------------------------------------------------


class TestSlopeRegression:
    def test_exact_power_law(self):
        ns = [10**k for k in range(3, 8)]
        rows = [(n, float(n) ** 0.45) for n in ns]
        res = slope_regression(rows, "n", "delay")
        assert math.isclose(res.slope, 0.45, abs_tol=1e-12)
        assert math.isclose(res.r_squared, 1.0, abs_tol=1e-12)
        assert res.stderr < 1e-12

    def test_noisy_power_law_and_stderr(self):
        rng = np.random.default_rng(5)
        ns = np.geomspace(1e3, 1e6, 12)
        rows = [
            {"n": float(n), "y": float(n**0.3 * math.exp(rng.normal(0, 0.05)))}
            for n in ns
        ]
        res = slope_regression(rows, "n", "y")
        assert abs(res.slope - 0.3) < 0.05
        assert 0.0 < res.stderr < 0.05
        assert res.r_squared > 0.95

    def test_nonpositive_values_excluded_with_warning(self):
        rows = [(10, 1.0), (100, 2.0), (1000, 4.0), (10000, 8.0), (100000, -3.0)]
        with pytest.warns(UserWarning, match="excluded 1"):
            res = slope_regression(rows, "n", "y")
        assert math.isclose(res.slope, math.log(2) / math.log(10), rel_tol=1e-9)

    def test_too_few_points_raises(self):
        with pytest.raises(ValueError):
            slope_regression([(10, 1.0), (100, 2.0), (1000, 3.0)], "n", "y")

    def test_accepts_sweep_rows(self, tmp_path):
        result = run_sweep(
            _write(
                tmp_path,
                "reg.conf",
                "mode = adhoc\nn = 1000, 3162, 10000, 31623, 100000\n"
                "alpha = 0.8\nbeta = 0.9\n",
            ),
            out_dir=None,
        )
        res = slope_regression(result.rows, "n", "optimizer_delay")
        assert abs(res.slope - 0.45) < 0.1


# ---------------------------------------------------------------------------
# run_sweep
# ---------------------------------------------------------------------------


class TestRunSweep:
    def test_single_point_theory_only(self, tmp_path):
        result = run_sweep(
            _write(tmp_path, "one.conf", "mode = adhoc\nn = 500\nalpha = 1.2\nbeta = 0.7\n"),
            out_dir=str(tmp_path / "out"),
        )
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.status == "ok"
        assert row.optimizer_delay is not None and row.optimizer_delay >= 1.0
        assert row.predicted_delay is not None
        assert row.sim_delay_mean is None  # no simulation requested
        assert row.m1 is not None and row.m2 is not None
        assert len(row.seeds) == row.trials == 4
        text = open(result.csv_path, encoding="utf-8").read()
        lines = text.splitlines()
        assert lines[0] == cli.CSV_SCHEMA_HEADER
        header_idx = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
        assert lines[header_idx].split(",")[0] == "mode"
        assert len(lines) == header_idx + 2  # one data row

    def test_csv_byte_identical_across_runs(self, tmp_path):
        conf = _write(
            tmp_path,
            "det.conf",
            "mode = adhoc\nn = 200, 400\nalpha = 0.8\nbeta = 0.9\n"
            "trials = 2\nseed = 5\nsim = true\n",
        )
        r1 = run_sweep(conf, out_dir=str(tmp_path / "o1"))
        r2 = run_sweep(conf, out_dir=str(tmp_path / "o2"))
        b1 = open(r1.csv_path, "rb").read()
        b2 = open(r2.csv_path, "rb").read()
        assert b1 == b2
        g1 = open(r1.regression_csv_path, "rb").read()
        g2 = open(r2.regression_csv_path, "rb").read()
        assert g1 == g2

    def test_theory_columns_seed_independent(self, tmp_path):
        base = "mode = adhoc\nn = 300, 900\nalpha = 1.0\nbeta = 0.8\nsim = true\ntrials = 2\n"
        r1 = run_sweep(
            _write(tmp_path, "s1.conf", base + "seed = 1\n"), out_dir=None
        )
        r2 = run_sweep(
            _write(tmp_path, "s2.conf", base + "seed = 2\n"), out_dir=None
        )
        for a, b in zip(r1.rows, r2.rows):
            assert a.optimizer_delay == b.optimizer_delay
            assert a.predicted_delay == b.predicted_delay
            assert a.predicted_throughput == b.predicted_throughput
            assert a.m1 == b.m1 and a.m2 == b.m2
            assert a.seeds != b.seeds  # sim seeds do change

    def test_infeasible_point_surfaced_per_row(self, tmp_path):
        # With beta = 0.9, K = 0.5: n = 100 gives M = 63 > budget 50
        # (infeasible), n = 100000 gives M = 31623 <= budget 50000.
        conf = _write(
            tmp_path,
            "inf.conf",
            "mode = adhoc\nn = 100, 100000\nalpha = 0.8\nbeta = 0.9\nK = 0.5\n",
        )
        result = run_sweep(conf, out_dir=str(tmp_path / "o"))
        statuses = {row.n: row.status for row in result.rows}
        assert statuses[100] == "infeasible"
        assert statuses[100000] == "ok"
        bad = next(r for r in result.rows if r.n == 100)
        assert bad.optimizer_delay is None and bad.m1 is None
        # infeasible rows still land in the CSV, with empty numeric cells
        text = open(result.csv_path, encoding="utf-8").read()
        assert ",infeasible," in text

    def test_simulation_capped_by_max_sim_n(self, tmp_path):
        conf = _write(
            tmp_path,
            "cap.conf",
            "mode = adhoc\nn = 200, 5000\nalpha = 0.8\nbeta = 0.9\n"
            "sim = true\ntrials = 2\nmax_sim_n = 1000\n",
        )
        result = run_sweep(conf, out_dir=None)
        small = next(r for r in result.rows if r.n == 200)
        big = next(r for r in result.rows if r.n == 5000)
        assert small.sim_delay_mean is not None
        assert big.sim_delay_mean is None  # theory-only beyond the cap
        assert big.optimizer_delay is not None

    def test_heterogeneous_sweep_ignores_mu_for_adhoc_rows(self, tmp_path):
        conf = _write(
            tmp_path,
            "both.conf",
            "mode = adhoc, heterogeneous\nn = 400\nalpha = 0.8\nbeta = 0.9\nmu = 0.4\n",
        )
        result = run_sweep(conf, out_dir=None)
        by_mode = {row.mode: row for row in result.rows}
        assert by_mode[Mode.ADHOC].mu is None
        assert by_mode[Mode.HETEROGENEOUS].mu == 0.4

    def test_explicit_f_gets_no_predictions_but_solves(self, tmp_path):
        conf = _write(
            tmp_path,
            "expf.conf",
            "mode = heterogeneous\nn = 400\nalpha = 0.8\nbeta = 0.9\nf = 5\n",
        )
        result = run_sweep(conf, out_dir=None)
        row = result.rows[0]
        assert row.status == "ok"
        assert row.optimizer_delay is not None
        assert row.predicted_delay is None  # orders stated for f = n^mu only

    def test_delay_curves_ordered_decreasing_in_alpha_at_large_n(self, tmp_path):
        conf = _write(
            tmp_path,
            "fig1.conf",
            "mode = adhoc\nn = 1000, 10000, 100000, 1000000\n"
            "alpha = 0.6, 1.0, 1.2, 1.4, 1.6\nbeta = 0.9\n",
        )
        result = run_sweep(conf, out_dir=None)
        largest = max(r.n for r in result.rows)
        tail = sorted(
            (r for r in result.rows if r.n == largest), key=lambda r: r.alpha
        )
        delays = [r.optimizer_delay for r in tail]
        assert delays == sorted(delays, reverse=True)
        # and growth-rate ordering: regressions per curve strictly decrease
        slopes = [
            next(
                g.slope
                for g in result.regressions
                if g.metric == "optimizer_delay" and f"alpha={a}" in g.curve
            )
            for a in (0.6, 1.0, 1.2, 1.4, 1.6)
        ]
        assert all(s1 > s2 for s1, s2 in zip(slopes, slopes[1:]))

    def test_heterogeneous_dominates_adhoc_below_three_halves(self, tmp_path):
        conf = _write(
            tmp_path,
            "fig34.conf",
            "mode = adhoc, heterogeneous\nn = 10000, 100000, 1000000, 10000000\n"
            "alpha = 0.8, 1.2\nbeta = 0.9\nmu = 0.4\n",
        )
        result = run_sweep(conf, out_dir=None)
        for alpha in (0.8, 1.2):
            for n in (1000000, 10000000):
                by_mode = {
                    r.mode: r.optimizer_delay
                    for r in result.rows
                    if r.n == n and r.alpha == alpha
                }
                assert by_mode[Mode.HETEROGENEOUS] < by_mode[Mode.ADHOC]

    def test_every_row_carries_seeds(self, tmp_path):
        conf = _write(
            tmp_path,
            "seeds.conf",
            "mode = adhoc\nn = 100, 200\nalpha = 0.8\nbeta = 0.9\ntrials = 5\n",
        )
        result = run_sweep(conf, out_dir=None)
        assert all(len(r.seeds) == 5 for r in result.rows)
        assert len({r.seeds for r in result.rows}) == len(result.rows)


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------


def _run_cli(*argv) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "ccnscale.cli", *argv],
        capture_output=True,
        text=True,
    )


class TestCommandLine:
    def test_sweep_writes_files_and_exits_zero(self, tmp_path):
        conf = _write(
            tmp_path, "ok.conf", "mode = adhoc\nn = 300\nalpha = 0.8\nbeta = 0.9\n"
        )
        out = str(tmp_path / "out")
        proc = _run_cli("sweep", conf, "--out", out)
        assert proc.returncode == 0, proc.stderr
        assert os.path.exists(os.path.join(out, "ok_sweep.csv"))
        assert os.path.exists(os.path.join(out, "ok_regressions.csv"))

    def test_sweep_cli_overrides_apply(self, tmp_path):
        conf = _write(
            tmp_path,
            "ovr.conf",
            "mode = adhoc\nn = 300\nalpha = 0.8\nbeta = 0.9\ntrials = 2\n",
        )
        out = str(tmp_path / "out")
        proc = _run_cli(
            "sweep", conf, "--out", out, "--sim", "--trials", "3", "--seed", "42"
        )
        assert proc.returncode == 0, proc.stderr
        text = open(os.path.join(out, "ovr_sweep.csv"), encoding="utf-8").read()
        assert "# trials = 3" in text
        assert "# seed = 42" in text
        assert "# sim = true" in text
        data = text.splitlines()[-1]
        assert data.count(";") == 2  # three per-trial seeds in the row

    def test_config_error_exit_code_2(self, tmp_path):
        conf = _write(tmp_path, "bad.conf", "mode = adhoc\nnope = 1\n")
        proc = _run_cli("sweep", conf, "--out", str(tmp_path))
        assert proc.returncode == 2
        assert "line 2" in proc.stderr

    def test_missing_file_exit_code_2(self, tmp_path):
        proc = _run_cli("sweep", str(tmp_path / "absent.conf"))
        assert proc.returncode == 2

    def test_infeasible_alloc_exit_code_3(self, tmp_path):
        conf = _write(
            tmp_path,
            "infeas.conf",
            "mode = adhoc\nn = 20\nalpha = 1.0\nbeta = 0.99\nK = 0.2\n",
        )
        proc = _run_cli("alloc", conf)
        assert proc.returncode == 3
        assert "infeasible" in proc.stderr.lower()

    def test_all_rows_infeasible_sweep_exit_code_3(self, tmp_path):
        conf = _write(
            tmp_path,
            "allinf.conf",
            "mode = adhoc\nn = 20, 30\nalpha = 1.0\nbeta = 0.99\nK = 0.2\n",
        )
        proc = _run_cli("sweep", conf, "--out", str(tmp_path / "o"))
        assert proc.returncode == 3
        assert "infeasible" in proc.stderr

    def test_alloc_prints_allocation_table(self, tmp_path):
        conf = _write(
            tmp_path,
            "small.conf",
            "mode = adhoc\nn = 50\nalpha = 1.2\nbeta = 0.6\n",
        )
        proc = _run_cli("alloc", conf)
        assert proc.returncode == 0
        assert "m,p_m,X_m,X_m_rounded" in proc.stdout
        # table has M = ceil(50^0.6) = 11 content rows
        rows = [ln for ln in proc.stdout.splitlines() if ln and ln[0].isdigit()]
        assert len(rows) == 11

    def test_check_passes(self):
        proc = _run_cli("check")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert "FAIL" not in proc.stdout
        assert "checks passed" in proc.stdout


class TestCsvRendering:
    def test_float_cells_roundtrip_exactly(self, tmp_path):
        conf = _write(
            tmp_path,
            "rt.conf",
            "mode = adhoc\nn = 500\nalpha = 0.8\nbeta = 0.9\nsim = true\ntrials = 2\n",
        )
        result = run_sweep(conf, out_dir=str(tmp_path / "o"))
        text = open(result.csv_path, encoding="utf-8").read()
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        header = lines[0].split(",")
        cells = lines[1].split(",")
        row = result.rows[0]
        get = dict(zip(header, cells))
        assert float(get["optimizer_delay"]) == row.optimizer_delay
        assert float(get["sim_delay_mean"]) == row.sim_delay_mean
        assert int(get["m1"]) == row.m1
        assert get["seeds"] == ";".join(str(s) for s in row.seeds)

    def test_schema_header_first_line(self, tmp_path):
        conf = _write(
            tmp_path, "hdr.conf", "mode = adhoc\nn = 100\nalpha = 0.8\nbeta = 0.9\n"
        )
        result = run_sweep(conf, out_dir=str(tmp_path / "o"))
        first = open(result.csv_path, encoding="utf-8").readline().rstrip("\n")
        assert first == f"# ccn-scale v{cli.__version__} schema=1"
