"""Experiment driver: config-file parsing, parameter sweeps, CSV output.

A sweep config is a UTF-8 key-value text file (``key = value``, ``#``
comments).  Keys holding comma-separated lists are swept; the sweep grid
is their cross product, enumerated in a fixed key order so output rows
land in a deterministic order no matter how the work is scheduled.

For every grid point the driver computes the exact optimal allocation,
its predicted delay, and the closed-form delay/throughput orders; with
``sim = true`` (or ``--sim``) it also runs Monte-Carlo trials for points
with n up to ``max_sim_n``.  Rows are written to one CSV, log-log slope
regressions per curve to a second.  Theory columns depend only on the
config; simulation columns depend only on config plus seeds, so reruns
produce byte-identical files.

Exit codes: 0 success, 2 malformed config, 3 infeasible instance
(``alloc`` on an infeasible point, or a sweep where every row failed).
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import itertools
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Sequence

import numpy as np

from . import __version__, sim
from .alloc import optimized_delay, round_to_integers, solve
from .config import Mode, NetworkConfig
from .errors import ConfigError, InfeasibleError, UnsupportedRegimeError
from .scaling import (
    ScalingRegime,
    m1_m2_orders,
    predicted_delay_order,
    predicted_throughput_order,
)

__all__ = [
    "Mode",
    "NetworkConfig",
    "RegressionResult",
    "SweepConfig",
    "SweepResult",
    "SweepRow",
    "main",
    "parse_config",
    "run_sweep",
    "slope_regression",
]

CSV_SCHEMA_HEADER = f"# ccn-scale v{__version__} schema=1"

# Keys that may hold comma-separated lists; their order fixes the row
# order of the sweep (cross product, last key fastest).
_SWEEP_KEYS = ("mode", "n", "alpha", "beta", "K", "delta", "mu", "f", "cell_area")
# Keys that must be single-valued.
_SCALAR_KEYS = ("W", "trials", "seed", "concentration_factor", "sim", "max_sim_n")

_DEFAULTS: dict[str, tuple] = {
    "mode": ("adhoc",),
    "n": (10_000,),
    "alpha": (0.8,),
    "beta": (0.9,),
    "K": (1.0,),
    "delta": (1.0,),
    "mu": (None,),
    "f": (None,),
    "cell_area": (None,),
    "W": 1.0,
    "trials": 4,
    "seed": 0,
    "concentration_factor": 4.0,
    "sim": False,
    "max_sim_n": 100_000,
}

_CANON = {k.lower(): k for k in (*_SWEEP_KEYS, *_SCALAR_KEYS)}

_CSV_COLUMNS = (
    "mode",
    "n",
    "alpha",
    "beta",
    "K",
    "delta",
    "mu",
    "f",
    "cell_area",
    "M",
    "status",
    "m1",
    "m2",
    "optimizer_delay",
    "predicted_delay",
    "predicted_throughput",
    "predicted_m1",
    "predicted_m2",
    "sim_delay_mean",
    "sim_delay_stderr",
    "sim_throughput_mean",
    "sim_throughput_stderr",
    "sim_mean_hops",
    "condition1_rate",
    "condition2_rate",
    "fallback_rate",
    "trials",
    "seeds",
)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _parse_atom(token: str, key: str, line: int):
    t = token.strip()
    low = t.lower()
    if low in {"", "none", "auto"}:
        return None
    if low == "true":
        return True
    if low == "false":
        return False
    if key == "mode":
        try:
            return Mode(low)
        except ValueError:
            raise ConfigError(
                f"mode must be 'adhoc' or 'heterogeneous', got {t!r}", line
            ) from None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        value = float(t)
    except ValueError:
        raise ConfigError(f"cannot parse value {t!r} for key {key!r}", line) from None
    if key in {"n", "trials", "seed", "max_sim_n"}:
        if not value.is_integer():
            raise ConfigError(f"key {key!r} needs an integer, got {t!r}", line)
        return int(value)
    return value


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """Parsed sweep configuration: sweep lists plus scalar settings."""

    values: dict[str, tuple]
    source: str = "<memory>"

    def __post_init__(self) -> None:
        merged = dict(_DEFAULTS)
        merged.update(self.values)
        object.__setattr__(self, "values", merged)

    def points(self) -> list[dict]:
        """Sweep grid in deterministic order (cross product of lists)."""
        axes = [self.values[k] for k in _SWEEP_KEYS]
        out = []
        for combo in itertools.product(*axes):
            out.append(dict(zip(_SWEEP_KEYS, combo)))
        return out

    def header_lines(self) -> list[str]:
        """Effective settings, defaults included, echoed into CSV headers."""
        lines = []
        empty = {"cell_area": "auto"}
        for key in (*_SWEEP_KEYS, *_SCALAR_KEYS):
            v = self.values[key]
            if key in _SWEEP_KEYS:
                text = ", ".join(_fmt(x) or empty.get(key, "none") for x in v)
            else:
                text = _fmt(v)
            lines.append(f"# {key} = {text}")
        return lines


def parse_config(path: str, overrides: dict | None = None) -> SweepConfig:
    """Parse a key-value sweep config file.

    Unknown keys, unparsable values, and repeated keys raise
    :class:`ConfigError` carrying the offending line number.
    ``overrides`` (already-typed values from the command line) replace
    file values after parsing.
    """
    values: dict[str, tuple] = {}
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key_raw, _, value_raw = text.partition("=")
            key = _CANON.get(key_raw.strip().lower())
            if key is None:
                raise ConfigError(f"unknown config key {key_raw.strip()!r}", lineno)
            if key in seen:
                raise ConfigError(
                    f"key {key!r} already set on line {seen[key]}", lineno
                )
            seen[key] = lineno
            atoms = tuple(
                _parse_atom(tok, key, lineno) for tok in value_raw.split(",")
            )
            if key in _SCALAR_KEYS:
                if len(atoms) != 1:
                    raise ConfigError(f"key {key!r} takes a single value", lineno)
                values[key] = atoms[0]
            else:
                values[key] = atoms
            _check_key_types(key, values[key], lineno)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            values[key] = value
    cfg = SweepConfig(values=values, source=path)
    _validate_config(cfg, seen)
    return cfg


def _check_key_types(key, value, line: int) -> None:
    atoms = value if isinstance(value, tuple) else (value,)
    for v in atoms:
        if key == "mode":
            if not isinstance(v, Mode):
                raise ConfigError("mode must be 'adhoc' or 'heterogeneous'", line)
        elif key in {"n", "trials", "seed", "max_sim_n"}:
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"key {key!r} needs an integer", line)
        elif key == "sim":
            if not isinstance(v, bool):
                raise ConfigError("key 'sim' needs true or false", line)
        elif isinstance(v, bool) or (
            v is not None and not isinstance(v, (int, float))
        ):
            raise ConfigError(f"key {key!r} needs a number", line)


def _validate_config(cfg: SweepConfig, seen: dict[str, int]) -> None:
    v = cfg.values
    het = Mode.HETEROGENEOUS in v["mode"]
    has_mu = any(x is not None for x in v["mu"])
    has_f = any(x is not None for x in v["f"])
    if het and has_mu and has_f:
        raise ConfigError(
            "set either 'mu' or 'f' for heterogeneous mode, not both",
            seen.get("f"),
        )
    if het and not (has_mu or has_f):
        raise ConfigError(
            "heterogeneous mode needs 'mu' or 'f'", seen.get("mode")
        )
    if Mode.ADHOC in v["mode"] and any(
        b is not None and b >= 1 for b in v["beta"]
    ):
        raise ConfigError(
            "beta must be < 1 in adhoc mode (caches must be able to hold "
            "one copy of everything)",
            seen.get("beta"),
        )


# ---------------------------------------------------------------------------
# sweep rows
# ---------------------------------------------------------------------------


class RegressionResult(NamedTuple):
    slope: float
    stderr: float
    r_squared: float


@dataclasses.dataclass(frozen=True)
class RegressionSummary:
    curve: str
    metric: str
    points: int
    slope: float
    intercept: float
    stderr: float
    r_squared: float


@dataclasses.dataclass(frozen=True)
class SweepRow:
    """One sweep grid point with everything computed for it.

    Numeric fields are ``None`` when unavailable: theory orders when no
    closed form covers the point, simulation fields when the point was
    not simulated, everything but identity when infeasible.
    """

    index: int
    mode: Mode
    n: int
    alpha: float
    beta: float
    K: float
    delta: float
    mu: float | None
    f: float | None
    cell_area: float | None
    M: int
    status: str  # "ok" | "infeasible"
    m1: int | None
    m2: int | None
    optimizer_delay: float | None
    predicted_delay: float | None
    predicted_throughput: float | None
    predicted_m1: float | None
    predicted_m2: float | None
    sim_delay_mean: float | None
    sim_delay_stderr: float | None
    sim_throughput_mean: float | None
    sim_throughput_stderr: float | None
    sim_mean_hops: float | None
    condition1_rate: float | None
    condition2_rate: float | None
    fallback_rate: float | None
    trials: int
    seeds: tuple[int, ...]

    def curve_key(self) -> tuple:
        """Identity of the curve this row belongs to (everything but n)."""
        return (
            self.mode,
            self.alpha,
            self.beta,
            self.K,
            self.delta,
            self.mu,
            self.f,
            self.cell_area,
        )


@dataclasses.dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    regressions: tuple[RegressionSummary, ...]
    csv_path: str | None
    regression_csv_path: str | None
    header_lines: tuple[str, ...]


def _network_config(point: dict, values: dict) -> NetworkConfig:
    kwargs = dict(
        n=point["n"],
        alpha=point["alpha"],
        beta=point["beta"],
        K=point["K"],
        delta=point["delta"],
        mode=point["mode"],
        cell_area=point["cell_area"],
        W=values["W"],
        trials=values["trials"],
        seed=values["seed"],
        concentration_factor=values["concentration_factor"],
    )
    if point["mode"] is Mode.HETEROGENEOUS:
        kwargs["mu"] = point["mu"]
        kwargs["f"] = point["f"]
    return NetworkConfig(**kwargs)


def _predictions(cfg: NetworkConfig):
    """Closed-form orders for a config point, or Nones where not covered."""
    if cfg.mode is Mode.HETEROGENEOUS and cfg.mu is None:
        return None, None, None, None  # orders are stated for f = n^mu
    try:
        reg = ScalingRegime(
            alpha=cfg.alpha,
            beta=cfg.beta,
            K=cfg.K,
            mu=cfg.mu,
            cell_area=(lambda _n, _a=cfg.cell_area: _a) if cfg.cell_area else None,
        )
        delay = predicted_delay_order(reg, cfg.n)
        throughput = predicted_throughput_order(reg, cfg.n)
        pm1, pm2 = m1_m2_orders(reg, cfg.n)
    except (UnsupportedRegimeError, ValueError):
        return None, None, None, None
    return delay, throughput, pm1, pm2


def _row_seeds(base_seed: int, index: int, trials: int) -> tuple[int, ...]:
    state = np.random.SeedSequence([base_seed, index]).generate_state(
        trials, dtype=np.uint64
    )
    return tuple(int(s) for s in state)


def _compute_row(
    index: int, point: dict, values: dict, do_sim: bool, max_sim_n: int
) -> SweepRow:
    cfg = _network_config(point, values)
    seeds = _row_seeds(values["seed"], index, values["trials"])
    identity = dict(
        index=index,
        mode=cfg.mode,
        n=cfg.n,
        alpha=cfg.alpha,
        beta=cfg.beta,
        K=cfg.K,
        delta=cfg.delta,
        mu=cfg.mu,
        f=point["f"],
        cell_area=point["cell_area"],
        M=cfg.M,
        trials=values["trials"],
        seeds=seeds,
    )
    empty = dict(
        m1=None,
        m2=None,
        optimizer_delay=None,
        predicted_delay=None,
        predicted_throughput=None,
        predicted_m1=None,
        predicted_m2=None,
        sim_delay_mean=None,
        sim_delay_stderr=None,
        sim_throughput_mean=None,
        sim_throughput_stderr=None,
        sim_mean_hops=None,
        condition1_rate=None,
        condition2_rate=None,
        fallback_rate=None,
    )

    prob = cfg.problem()
    try:
        alloc = solve(prob)
    except InfeasibleError:
        return SweepRow(status="infeasible", **identity, **empty)

    pred_delay, pred_tp, pred_m1, pred_m2 = _predictions(cfg)
    row = dict(
        empty,
        m1=alloc.m1,
        m2=alloc.m2,
        optimizer_delay=optimized_delay(alloc, prob),
        predicted_delay=pred_delay,
        predicted_throughput=pred_tp,
        predicted_m1=pred_m1,
        predicted_m2=pred_m2,
    )

    if do_sim and cfg.n <= max_sim_n:
        allocation = round_to_integers(alloc, prob)
        stats = sim.run_trials(cfg, allocation, seeds=seeds)
        row.update(
            sim_delay_mean=stats.realized_delay.mean,
            sim_delay_stderr=stats.realized_delay.stderr,
            sim_throughput_mean=stats.realized_throughput.mean,
            sim_throughput_stderr=stats.realized_throughput.stderr,
            sim_mean_hops=stats.mean_hops.mean,
            condition1_rate=stats.condition1_rate,
            condition2_rate=stats.condition2_rate,
            fallback_rate=stats.fallback_rate,
        )

    return SweepRow(status="ok", **identity, **row)


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------


def slope_regression(rows, x: str = "n", y: str = "optimizer_delay") -> RegressionResult:
    """Ordinary least squares of ln(y) on ln(x) over sweep rows.

    ``rows`` may hold :class:`SweepRow` instances, mappings, or plain
    ``(x, y)`` pairs.  Points with missing or nonpositive values are
    excluded with a warning.  Requires >= 4 usable points.
    """

    def get(row, name, position):
        if isinstance(row, SweepRow):
            return getattr(row, name)
        if isinstance(row, dict):
            return row[name]
        return row[position]

    xs, ys = [], []
    dropped = 0
    for row in rows:
        xv = get(row, x, 0)
        yv = get(row, y, 1)
        if xv is None or yv is None or xv <= 0 or yv <= 0:
            dropped += 1
            continue
        xs.append(math.log(float(xv)))
        ys.append(math.log(float(yv)))
    if dropped:
        warnings.warn(
            f"slope_regression: excluded {dropped} rows with missing or "
            f"nonpositive {y!r}",
            stacklevel=2,
        )
    if len(xs) < 4:
        raise ValueError(f"need >= 4 usable points for a regression, got {len(xs)}")

    lx = np.asarray(xs)
    ly = np.asarray(ys)
    npts = len(lx)
    xbar = lx.mean()
    ybar = ly.mean()
    sxx = float(((lx - xbar) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("regression needs at least two distinct x values")
    slope = float(((lx - xbar) * (ly - ybar)).sum() / sxx)
    intercept = ybar - slope * xbar
    resid = ly - (intercept + slope * lx)
    ssr = float((resid**2).sum())
    sst = float(((ly - ybar) ** 2).sum())
    stderr = math.sqrt(ssr / (npts - 2) / sxx) if npts > 2 else float("inf")
    r_squared = 1.0 if sst == 0.0 and ssr <= 1e-30 else 1.0 - ssr / sst if sst else 0.0
    return RegressionResult(slope=slope, stderr=stderr, r_squared=r_squared)


def _curve_label(key: tuple) -> str:
    mode, alpha, beta, K, delta, mu, f, cell_area = key
    parts = [mode.value, f"alpha={_fmt(alpha)}", f"beta={_fmt(beta)}"]
    if K != 1.0:
        parts.append(f"K={_fmt(K)}")
    if delta != 1.0:
        parts.append(f"delta={_fmt(delta)}")
    if mu is not None:
        parts.append(f"mu={_fmt(mu)}")
    if f is not None:
        parts.append(f"f={_fmt(f)}")
    if cell_area is not None:
        parts.append(f"a={_fmt(cell_area)}")
    return " ".join(parts)


def _regressions(rows: Sequence[SweepRow]) -> tuple[RegressionSummary, ...]:
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        groups.setdefault(row.curve_key(), []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        grp = sorted(groups[key], key=lambda r: r.n)
        for metric in ("optimizer_delay", "sim_delay_mean", "sim_throughput_mean"):
            usable = [
                r
                for r in grp
                if getattr(r, metric) is not None and getattr(r, metric) > 0
            ]
            if len({r.n for r in usable}) < 4:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = slope_regression(usable, "n", metric)
            lx = np.log([r.n for r in usable])
            ly = np.log([getattr(r, metric) for r in usable])
            intercept = float(ly.mean() - res.slope * lx.mean())
            out.append(
                RegressionSummary(
                    curve=_curve_label(key),
                    metric=metric,
                    points=len(usable),
                    slope=res.slope,
                    intercept=intercept,
                    stderr=res.stderr,
                    r_squared=res.r_squared,
                )
            )
    return tuple(out)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, Mode):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row_cells(row: SweepRow) -> list[str]:
    cells = []
    for col in _CSV_COLUMNS:
        if col == "seeds":
            cells.append(";".join(str(s) for s in row.seeds))
        else:
            cells.append(_fmt(getattr(row, col)))
    return cells


def _render_csv(rows: Sequence[SweepRow], header_lines: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA_HEADER + "\n")
    for line in header_lines:
        buf.write(line + "\n")
    buf.write(",".join(_CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_row_cells(row)) + "\n")
    return buf.getvalue()


def _render_regressions_csv(
    regs: Sequence[RegressionSummary], header_lines: Sequence[str]
) -> str:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA_HEADER + "\n")
    for line in header_lines:
        buf.write(line + "\n")
    buf.write("curve,metric,points,slope,intercept,stderr,r_squared\n")
    for r in regs:
        buf.write(
            ",".join(
                [
                    '"' + r.curve + '"',
                    r.metric,
                    str(r.points),
                    repr(r.slope),
                    repr(r.intercept),
                    repr(r.stderr),
                    repr(r.r_squared),
                ]
            )
            + "\n"
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# sweep driver
# ---------------------------------------------------------------------------


def run_sweep(
    config_path: str,
    *,
    out_dir: str | None = None,
    sim_enabled: bool | None = None,
    trials: int | None = None,
    seed: int | None = None,
    max_sim_n: int | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Run the sweep described by a config file; write CSV outputs.

    Keyword arguments override the corresponding file settings.  Points
    run on a thread pool; rows are buffered and written in config order,
    so the files are byte-identical for identical config plus seeds.
    With ``out_dir=None`` nothing is written and the result is returned
    only in memory.
    """
    overrides = {
        "sim": sim_enabled,
        "trials": trials,
        "seed": seed,
        "max_sim_n": max_sim_n,
    }
    cfg = parse_config(config_path, overrides)
    values = cfg.values
    points = cfg.points()
    do_sim = bool(values["sim"])
    cap = int(values["max_sim_n"])

    pool_size = workers or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        futures = [
            pool.submit(_compute_row, i, pt, values, do_sim, cap)
            for i, pt in enumerate(points)
        ]
        rows = tuple(f.result() for f in futures)  # config order, not finish order

    regs = _regressions(rows)
    header = tuple(cfg.header_lines())

    csv_path = reg_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        stem = os.path.splitext(os.path.basename(config_path))[0]
        csv_path = os.path.join(out_dir, f"{stem}_sweep.csv")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_render_csv(rows, header))
        reg_path = os.path.join(out_dir, f"{stem}_regressions.csv")
        with open(reg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_render_regressions_csv(regs, header))

    return SweepResult(
        rows=rows,
        regressions=regs,
        csv_path=csv_path,
        regression_csv_path=reg_path,
        header_lines=header,
    )


# ---------------------------------------------------------------------------
# invariant self-checks (the `check` subcommand)
# ---------------------------------------------------------------------------


def _self_checks() -> list[tuple[str, bool, str]]:
    """Fast invariant suite: (name, passed, detail) triples."""
    from .alloc import AllocationProblem, kkt_residual
    from .geometry import CellGrid, double_factorial_ratio_bounds
    from .popularity import zipf
    from .sched import audit_schedule, build_schedule

    checks: list[tuple[str, bool, str]] = []

    p = zipf(500, 1.2).p
    checks.append(
        (
            "popularity normalized and non-increasing",
            bool(abs(p.sum() - 1.0) <= 1e-12 and np.all(np.diff(p) <= 0)),
            f"sum={float(p.sum())!r}",
        )
    )

    ok = True
    worst = 0.0
    for n1, n2 in [(5, 3), (21, 9), (201, 35), (2001, 1999)]:
        lo, mid, hi = double_factorial_ratio_bounds(n1, n2)
        ok &= lo - 1e-12 <= mid <= hi + 1e-12
        worst = max(worst, max(lo - mid, mid - hi))
    checks.append(
        ("nearest-distance sandwich bounds", bool(ok), f"slack={worst:.2e}")
    )

    res = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        M = int(rng.integers(2, 20))
        pop = zipf(M, float(rng.uniform(0.2, 2.5)))
        n = int(rng.integers(max(M, 4), 200))
        prob = AllocationProblem.ad_hoc(pop, n=n, K=1.0, a=1.0 / 16)
        try:
            res.append(kkt_residual(solve(prob), prob))
        except InfeasibleError:
            continue
    checks.append(
        (
            "optimizer satisfies stationarity certificate",
            bool(res and max(res) <= 1e-8),
            f"max residual={max(res):.2e}" if res else "no feasible instance",
        )
    )

    violations = audit_schedule(build_schedule(CellGrid(12), 1.0))
    checks.append(
        (
            "schedule interference audit",
            violations == 0,
            f"violations={violations}",
        )
    )

    cfg = NetworkConfig(n=2000, alpha=0.8, beta=0.9, trials=2, seed=1)
    prob = cfg.problem()
    allocation = round_to_integers(solve(prob), prob)
    stats = sim.run_trials(cfg, allocation)
    ident = all(
        int(m.lines_per_cell.sum()) == int(m.hops_total)
        for m in stats.measurements
    )
    checks.append(
        (
            "simulation line-count bookkeeping identity",
            bool(ident),
            f"trials={stats.trials}",
        )
    )

    tradeoff = [
        m.realized_delay * m.realized_throughput for m in stats.measurements
    ]
    checks.append(
        (
            "delay*throughput finite and positive",
            bool(all(v > 0 and math.isfinite(v) for v in tradeoff)),
            f"values={['%.3g' % v for v in tradeoff]}",
        )
    )

    try:
        from ._kernels import _fast, _ref  # noqa: F401

        inst = sim.build_instance(cfg, allocation, seed=3)
        req = sim.draw_requests(inst, cfg.popularity(), seed=4)
        args = (
            inst._xs,
            inst._ys,
            inst.grid.side,
            req,
            inst._h_idx,
            inst._h_start,
            inst._hc_idx,
            inst._hc_cell,
            inst.base_stations[:, 0],
            inst.base_stations[:, 1],
        )
        fast_out = _fast.trace_batch(*args)
        ref_out = _ref.trace_batch(*args)
        same = all(np.array_equal(a, b) for a, b in zip(fast_out, ref_out))
        checks.append(("kernel backends bit-identical", bool(same), ""))
    except ImportError:
        checks.append(
            ("kernel backends bit-identical", True, "compiled backend not built; skipped")
        )

    return checks


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccn-scale",
        description="Cache-allocation optimizer and network simulator driver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    p_sweep.add_argument("config", help="key-value sweep config file")
    p_sweep.add_argument("--out", default=".", help="output directory (default: .)")
    p_sweep.add_argument(
        "--sim", action="store_true", default=None, help="enable Monte-Carlo trials"
    )
    p_sweep.add_argument("--trials", type=int, default=None, help="trials per point")
    p_sweep.add_argument("--seed", type=int, default=None, help="master seed")
    p_sweep.add_argument(
        "--max-sim-n",
        type=int,
        default=None,
        help="skip simulation for points with more nodes than this",
    )

    p_alloc = sub.add_parser(
        "alloc", help="print the optimal allocation for the first sweep point"
    )
    p_alloc.add_argument("config", help="key-value sweep config file")

    sub.add_parser("check", help="run the built-in invariant suite")
    return parser


def _cmd_sweep(args) -> int:
    result = run_sweep(
        args.config,
        out_dir=args.out,
        sim_enabled=args.sim,
        trials=args.trials,
        seed=args.seed,
        max_sim_n=args.max_sim_n,
    )
    ok_rows = sum(1 for r in result.rows if r.status == "ok")
    for row in result.rows:
        if row.status != "ok":
            print(
                f"row {row.index}: {row.status} "
                f"(mode={row.mode.value} n={row.n} alpha={row.alpha} "
                f"beta={row.beta} K={row.K})",
                file=sys.stderr,
            )
    print(f"wrote {result.csv_path} ({ok_rows}/{len(result.rows)} rows ok)")
    print(f"wrote {result.regression_csv_path} ({len(result.regressions)} regressions)")
    for reg in result.regressions:
        print(
            f"  {reg.metric:<22} {reg.curve:<40} slope={reg.slope:+.4f} "
            f"(stderr {reg.stderr:.4f}, R^2 {reg.r_squared:.4f}, {reg.points} pts)"
        )
    return 0 if ok_rows else 3


def _cmd_alloc(args) -> int:
    cfg_file = parse_config(args.config)
    point = cfg_file.points()[0]
    cfg = _network_config(point, cfg_file.values)
    prob = cfg.problem()
    alloc = solve(prob)  # InfeasibleError handled by main()
    allocation = round_to_integers(alloc, prob)
    print(
        f"mode={cfg.mode.value} n={cfg.n} M={cfg.M} alpha={cfg.alpha} "
        f"beta={cfg.beta} K={_fmt(cfg.K)} a={_fmt(cfg.a)} f={_fmt(cfg.f_count)}"
    )
    print(
        f"m1={alloc.m1} m2={alloc.m2} objective={_fmt(alloc.objective)} "
        f"expected_delay={_fmt(optimized_delay(alloc, prob))}"
    )
    print("m,p_m,X_m,X_m_rounded")
    pop = cfg.popularity()
    for m in range(cfg.M):
        print(f"{m + 1},{_fmt(float(pop.p[m]))},{_fmt(float(alloc.X[m]))},{allocation[m]}")
    return 0


def _cmd_check() -> int:
    checks = _self_checks()
    width = max(len(name) for name, _, _ in checks)
    failed = 0
    for name, passed, detail in checks:
        mark = "PASS" if passed else "FAIL"
        failed += not passed
        suffix = f"  ({detail})" if detail else ""
        print(f"{mark}  {name:<{width}}{suffix}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "alloc":
            return _cmd_alloc(args)
        return _cmd_check()
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        # reader closed the pipe (e.g. `... | head`); silence the
        # interpreter's flush-on-exit complaint and exit like SIGPIPE
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 141


if __name__ == "__main__":
    raise SystemExit(main())
