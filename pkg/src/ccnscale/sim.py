"""Monte-Carlo realizations of the caching network.

One trial places nodes (and base stations) uniformly on the unit
torus, draws holder sets per content according to an integer cache
allocation, lets every node request one content, routes each request
to its nearest holder along the grid cells crossed by the geodesic,
and measures per-cell line loads, hop counts, and the realized
throughput and delay of the slotted fluid model.

Routing and load accounting run in a kernel backend (compiled when
available, pure Python otherwise; bit-identical results).  Every hop
is charged to its transmitting cell, so the total cell load equals the
total hop count exactly on every trial — the bookkeeping identity the
tests pin.

The fluid model: each cell is active once per frame of N + 1 slots
(N the interfering-cell bound), the bottleneck cell divides its slot
among the lines crossing it, and a request's round trip costs twice
its hop count in active slots.  Hence

    realized_throughput = W / ((N + 1) * max_load)
    realized_delay      = 2 * (N + 1) * mean_hops.

If a cell is empty of nodes (condition 1) or the load concentrates
beyond the configured factor (condition 2), the trial falls back to a
plain time-division policy: throughput W/n, delay 2 (N + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import NetworkConfig
from .errors import NoHolderError
from .geometry import CellGrid, torus_delta
from .popularity import PopularityModel
from .sched import TdmSchedule, build_schedule

__all__ = [
    "NetworkInstance",
    "Measurement",
    "FieldStats",
    "TrialStats",
    "build_instance",
    "draw_requests",
    "trace_request",
    "measure",
    "run_trials",
]


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """One realization of node/base-station positions and holder sets.

    ``holders[m]`` lists the node indices caching content m, sorted
    ascending.  Base stations hold every content and are indexed
    ``n + b`` where routing needs a single index space.  The kernel's
    flattened holder arrays are derived once here and reused by every
    measurement on the instance.
    """

    nodes: np.ndarray  # (n, 2) float64 positions
    base_stations: np.ndarray  # (b, 2) float64 positions
    holders: tuple[np.ndarray, ...]  # per-content sorted node indices
    grid: CellGrid
    schedule: TdmSchedule
    rng_seed: int

    _xs: np.ndarray = field(init=False, repr=False)
    _ys: np.ndarray = field(init=False, repr=False)
    _node_cell: np.ndarray = field(init=False, repr=False)
    _h_idx: np.ndarray = field(init=False, repr=False)
    _h_start: np.ndarray = field(init=False, repr=False)
    _hc_idx: np.ndarray = field(init=False, repr=False)
    _hc_cell: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 1:
            raise ValueError("nodes must be an (n, 2) array with n >= 1")
        bs = np.asarray(self.base_stations, dtype=np.float64).reshape(-1, 2)
        n = nodes.shape[0]
        g = self.grid.side

        xs = np.ascontiguousarray(nodes[:, 0])
        ys = np.ascontiguousarray(nodes[:, 1])
        col = np.minimum((xs * g).astype(np.int64), g - 1)
        row = np.minimum((ys * g).astype(np.int64), g - 1)
        node_cell = row * g + col

        sizes = np.array([len(h) for h in self.holders], dtype=np.int64)
        h_start = np.zeros(len(self.holders) + 1, dtype=np.int64)
        np.cumsum(sizes, out=h_start[1:])
        h_idx = np.zeros(int(h_start[-1]), dtype=np.int64)
        hc_idx = np.zeros_like(h_idx)
        hc_cell = np.zeros_like(h_idx)
        clean_holders = []
        for m, h in enumerate(self.holders):
            seg = np.asarray(h, dtype=np.int64)
            if seg.size and (seg[0] < 0 or seg[-1] >= n):
                raise ValueError(
                    f"holder indices for content {m} fall outside [0, {n})"
                )
            if seg.size > 1 and not np.all(np.diff(seg) > 0):
                raise ValueError(
                    f"holder list for content {m} must be sorted and unique"
                )
            lo, hi = h_start[m], h_start[m + 1]
            h_idx[lo:hi] = seg
            cells = node_cell[seg]
            order = np.lexsort((seg, cells))
            hc_idx[lo:hi] = seg[order]
            hc_cell[lo:hi] = cells[order]
            clean_holders.append(seg)

        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "base_stations", bs)
        object.__setattr__(self, "holders", tuple(clean_holders))
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        object.__setattr__(self, "_node_cell", node_cell)
        object.__setattr__(self, "_h_idx", h_idx)
        object.__setattr__(self, "_h_start", h_start)
        object.__setattr__(self, "_hc_idx", hc_idx)
        object.__setattr__(self, "_hc_cell", hc_cell)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def m_count(self) -> int:
        return len(self.holders)

    def cell_occupancy(self) -> np.ndarray:
        """Node count per cell (length g², row-major)."""
        return np.bincount(self._node_cell, minlength=self.grid.side**2)


@dataclass(frozen=True, eq=False)
class Measurement:
    """Per-trial measurement of the slotted fluid model.

    ``lines_per_cell[j]`` counts the transmitting-cell charges of all
    request lines in cell j; its sum equals ``hops_total`` exactly.
    ``request_hops[i]`` is the hop count of node i's request.
    """

    lines_per_cell: np.ndarray
    request_hops: np.ndarray
    hops_total: int
    max_load: float
    mean_load: float
    mean_hops: float
    realized_delay: float
    realized_throughput: float
    condition1_ok: bool
    condition2_ok: bool
    fallback_used: bool


def build_instance(
    cfg: NetworkConfig, allocation, seed: int
) -> NetworkInstance:
    """Draw one network realization for an integer cache allocation.

    The RNG draw order is fixed: node positions, then base-station
    positions, then holder sets for contents 0, 1, ... — so a seed
    replay is bit-identical, and a heterogeneous run with zero base
    stations consumes exactly the same stream as an ad hoc one.
    """
    allocation = np.asarray(allocation, dtype=np.int64)
    if allocation.ndim != 1:
        raise ValueError("allocation must be a 1-d integer vector")
    if len(allocation) != cfg.M:
        raise ValueError(
            f"allocation length {len(allocation)} != catalog size {cfg.M}"
        )
    n = cfg.n
    if np.any(allocation < 0) or np.any(allocation > n):
        raise ValueError("holder counts must lie in [0, n]")

    rng = np.random.default_rng(seed)
    nodes = rng.random((n, 2))
    bs = rng.random((cfg.base_station_count, 2))
    holders = tuple(
        np.sort(rng.choice(n, size=int(x), replace=False))
        for x in allocation
    )
    grid = CellGrid.from_area(cfg.a)
    schedule = build_schedule(grid, cfg.delta)
    return NetworkInstance(
        nodes=nodes,
        base_stations=bs,
        holders=holders,
        grid=grid,
        schedule=schedule,
        rng_seed=int(seed),
    )


def draw_requests(
    inst: NetworkInstance, pop: PopularityModel, seed: int
) -> np.ndarray:
    """One popularity-weighted content index per node, deterministic."""
    if pop.m_count != inst.m_count:
        raise ValueError(
            f"popularity covers {pop.m_count} contents, instance has "
            f"{inst.m_count}"
        )
    rng = np.random.default_rng(seed)
    return rng.choice(pop.m_count, size=inst.n, p=pop.p).astype(np.int64)


def trace_request(
    inst: NetworkInstance, requester: int, m: int
) -> tuple[int, list[tuple[int, int]]]:
    """Route one request: nearest holder, then the geodesic cell walk.

    Returns (hop count, cells as (row, col) in traversal order).  The
    requester's own cache never serves as target; base stations are
    never excluded and lose distance ties to nodes.  A requester who is
    the sole holder serves itself locally (one hop, own cell).  Raises
    :class:`NoHolderError` when nobody holds the content at all.
    """
    n = inst.n
    if not 0 <= requester < n:
        raise ValueError(f"requester index {requester} outside [0, {n})")
    if not 0 <= m < inst.m_count:
        raise ValueError(f"content index {m} outside [0, {inst.m_count})")
    g = inst.grid.side
    px = float(inst._xs[requester])
    py = float(inst._ys[requester])
    lo = int(inst._h_start[m])
    hi = int(inst._h_start[m + 1])
    if hi - lo > _kernels.RING_MIN_HOLDERS:
        best_i, best_d2, saw_self = _kernels.nearest_ring(
            px, py, inst._xs, inst._ys, inst._hc_idx, inst._hc_cell,
            lo, hi, g, requester,
        )
    else:
        best_i, best_d2, saw_self = _kernels.nearest_linear(
            px, py, inst._xs, inst._ys, inst._h_idx[lo:hi], requester
        )
    nbs = inst.base_stations.shape[0]
    if nbs:
        bi, bd2, _ = _kernels.nearest_linear(
            px, py, inst.base_stations[:, 0], inst.base_stations[:, 1],
            range(nbs), -1,
        )
        # base stations rank behind all nodes, so ties go to the node
        if bd2 < best_d2:
            best_i, best_d2 = n + bi, bd2

    own = (int(inst._node_cell[requester]) // g, int(inst._node_cell[requester]) % g)
    if best_i < 0:
        if saw_self:
            return 1, [own]
        raise NoHolderError(
            f"content {m}: no holder and no base station"
        )

    if best_i < n:
        hx, hy = float(inst._xs[best_i]), float(inst._ys[best_i])
    else:
        hx = float(inst.base_stations[best_i - n, 0])
        hy = float(inst.base_stations[best_i - n, 1])
    cells = _kernels.segment_cells(
        px, py, torus_delta(px, hx), torus_delta(py, hy), g
    )
    target_col = min(int(hx * g), g - 1)
    target_row = min(int(hy * g), g - 1)
    target = target_row * g + target_col
    if cells[-1] != target:
        cells.append(target)
    hops = max(1, len(cells) - 1)
    return hops, [(cid // g, cid % g) for cid in cells]


def measure(
    inst: NetworkInstance,
    requests,
    *,
    W: float = 1.0,
    concentration_factor: float = 4.0,
) -> Measurement:
    """Route one request per node and measure the fluid model.

    Never raises on routing: a request nobody can serve is charged one
    hop in its own cell, keeping the load/hop identity intact (the
    feasibility of the allocation is the caller's contract).
    """
    requests = np.asarray(requests, dtype=np.int64)
    if requests.shape != (inst.n,):
        raise ValueError(
            f"need one request per node: shape {requests.shape} != ({inst.n},)"
        )
    if requests.size and (requests.min() < 0 or requests.max() >= inst.m_count):
        raise ValueError("request content indices outside catalog")
    if not W > 0:
        raise ValueError(f"W must be positive, got {W}")
    if not concentration_factor > 0:
        raise ValueError(
            f"concentration factor must be positive, got {concentration_factor}"
        )

    g = inst.grid.side
    hops, loads, _status = _kernels.trace_batch(
        inst._xs, inst._ys, g, requests,
        inst._h_idx, inst._h_start, inst._hc_idx, inst._hc_cell,
        inst.base_stations[:, 0], inst.base_stations[:, 1],
    )
    hops_total = int(hops.sum())
    n = inst.n
    mean_hops = hops_total / n
    max_load = float(loads.max())
    mean_load = hops_total / loads.size

    condition1_ok = bool(inst.cell_occupancy().min() >= 1)
    condition2_ok = bool(max_load <= concentration_factor * mean_load)
    fallback_used = not (condition1_ok and condition2_ok)

    frame = inst.schedule.bound + 1  # N + 1 slots
    if fallback_used:
        realized_throughput = W / n
        realized_delay = 2.0 * frame
    else:
        realized_throughput = W / (frame * max_load)
        realized_delay = 2.0 * frame * mean_hops

    return Measurement(
        lines_per_cell=loads,
        request_hops=hops,
        hops_total=hops_total,
        max_load=max_load,
        mean_load=mean_load,
        mean_hops=mean_hops,
        realized_delay=realized_delay,
        realized_throughput=realized_throughput,
        condition1_ok=condition1_ok,
        condition2_ok=condition2_ok,
        fallback_used=fallback_used,
    )


@dataclass(frozen=True)
class FieldStats:
    """Mean, standard error of the mean, and range across trials."""

    mean: float
    stderr: float
    min: float
    max: float


def _stats(values: list[float]) -> FieldStats:
    arr = np.asarray(values, dtype=np.float64)
    stderr = (
        float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    )
    return FieldStats(
        mean=float(arr.mean()),
        stderr=stderr,
        min=float(arr.min()),
        max=float(arr.max()),
    )


@dataclass(frozen=True, eq=False)
class TrialStats:
    """Aggregates over independent trials (order-insensitive merge)."""

    trials: int
    seeds: tuple[int, ...]
    max_load: FieldStats
    mean_load: FieldStats
    mean_hops: FieldStats
    realized_delay: FieldStats
    realized_throughput: FieldStats
    condition1_rate: float
    condition2_rate: float
    fallback_rate: float
    measurements: tuple[Measurement, ...]


def _trial_streams(trial_seed: int) -> tuple[int, int]:
    """Derive disjoint (instance, request) seeds from one trial seed."""
    inst_ss, req_ss = np.random.SeedSequence(trial_seed).spawn(2)
    return (
        int(inst_ss.generate_state(1, dtype=np.uint64)[0]),
        int(req_ss.generate_state(1, dtype=np.uint64)[0]),
    )


def run_trials(
    cfg: NetworkConfig,
    allocation,
    trials: int | None = None,
    seeds=None,
) -> TrialStats:
    """Measure independent realizations and aggregate their statistics.

    Trial t uses the per-trial seed ``seeds[t]`` (default: derived from
    ``cfg.seed``), split into one stream for the instance draw and one
    for the request draw.  Trials share nothing, so they can run in any
    order; the aggregation below is a commutative merge keyed by trial
    index.
    """
    if seeds is not None:
        seeds = [int(s) for s in seeds]
        if trials is not None and trials != len(seeds):
            raise ValueError(
                f"{len(seeds)} seeds given for {trials} trials"
            )
        trials = len(seeds)
    else:
        if trials is None:
            trials = cfg.trials
        state = np.random.SeedSequence(cfg.seed).generate_state(
            trials, dtype=np.uint64
        )
        seeds = [int(s) for s in state]
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")

    pop = cfg.popularity()
    results = []
    for s in seeds:
        inst_seed, req_seed = _trial_streams(s)
        inst = build_instance(cfg, allocation, inst_seed)
        reqs = draw_requests(inst, pop, req_seed)
        results.append(
            measure(
                inst,
                reqs,
                W=cfg.W,
                concentration_factor=cfg.concentration_factor,
            )
        )

    return TrialStats(
        trials=trials,
        seeds=tuple(seeds),
        max_load=_stats([r.max_load for r in results]),
        mean_load=_stats([r.mean_load for r in results]),
        mean_hops=_stats([r.mean_hops for r in results]),
        realized_delay=_stats([r.realized_delay for r in results]),
        realized_throughput=_stats([r.realized_throughput for r in results]),
        condition1_rate=sum(r.condition1_ok for r in results) / trials,
        condition2_rate=sum(r.condition2_ok for r in results) / trials,
        fallback_rate=sum(r.fallback_used for r in results) / trials,
        measurements=tuple(results),
    )
