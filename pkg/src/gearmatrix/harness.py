"""Seeded scenario generation and batch experiments.

Sensors never leave their *channel class*: a transfer from channel ``k`` on a
+1-spin gear always lands on channel ``-k mod C`` of the -1-spin neighbour, so
the class ``k`` (for +1 gears) / ``-k mod C`` (for -1 gears) is invariant.  A
placement survives a full rotation period exactly when, inside every class,
the occupied gears are pairwise non-adjacent.  The generator samples starts
and targets per class, which makes the rotation-safety rejection test cheap
even at full capacity.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import CostModel, GearError, GearPos, GridConfig, Slot, WorldState, capacity
from .planner import (
    PlannerParams,
    PlanningFailed,
    Scenario,
    Target,
    makespan,
    plan_greedy,
    validate_plan,
)
from .rng import XorShift64Star, derive_seed

__all__ = [
    "GenerationError",
    "ExperimentSpec",
    "TrialRecord",
    "SummaryRow",
    "channel_class",
    "class_channel",
    "generate_scenario",
    "run_trial",
    "run_experiment",
    "summarize",
    "write_records_csv",
    "write_summary_csv",
    "RECORD_FIELDS",
    "SUMMARY_FIELDS",
]

REJECTION_BUDGET = 2_000
TARGET_ATTEMPTS = 100


class GenerationError(GearError):
    pass


def channel_class(config: GridConfig, gear, k: int) -> int:
    return k if (gear[0] + gear[1]) % 2 == 0 else (-k) % config.channels


def class_channel(config: GridConfig, gear, cls: int) -> int:
    """Channel of class ``cls`` on ``gear`` (the map is an involution)."""
    return channel_class(config, gear, cls)


def _sample_independent(rng: XorShift64Star, config: GridConfig, m: int, allowed: list[int]) -> list[int] | None:
    """Random m-subset of ``allowed`` gears with no two 4-adjacent.

    Uniform rejection sampling first.  Dense requests (near a maximum
    independent set) almost never pass, so after ``REJECTION_BUDGET`` draws a
    maximal independent set is grown greedily, one checkerboard colour first,
    and an m-subset of it is returned.
    """
    if m == 0:
        return []
    if m > len(allowed):
        return None
    mask = np.zeros(config.n_gears, dtype=np.uint8)
    for _ in range(REJECTION_BUDGET):
        pick = rng.sample(allowed, m)
        mask[:] = 0
        mask[pick] = 1
        if kernels.grid_independent(mask, config.rows, config.cols):
            return pick
    first = rng.below(2)
    for parity in (first, 1 - first):
        order = []
        for want in (parity, 1 - parity):
            part = [g for g in allowed if sum(divmod(g, config.cols)) % 2 == want]
            rng.shuffle(part)
            order += part
        chosen: set[int] = set()
        for g in order:
            c = g % config.cols
            near = {g - config.cols, g + config.cols}
            if c > 0:
                near.add(g - 1)
            if c < config.cols - 1:
                near.add(g + 1)
            if not near & chosen:
                chosen.add(g)
        if len(chosen) >= m:
            return rng.sample(sorted(chosen), m)
    return None


def generate_scenario(
    config: GridConfig,
    q: int,
    seed: int,
    cost_model: CostModel = CostModel(),
) -> Scenario:
    """Random start slots and target gears for ``q`` sensors, deterministic per seed.

    Sensor counts per channel class are balanced (they differ by at most one).
    The start is rotation-safe at offset 0.  Each class's targets form a
    rotation-safe pattern too, and target gears are pairwise distinct whenever
    ``q <= rows * cols``.
    """
    if q < 0:
        raise GenerationError("sensor count must be non-negative")
    if q > capacity(config):
        raise GenerationError(f"{q} sensors exceed capacity {capacity(config)} of {config}")
    rng = XorShift64Star(seed)
    C = config.channels
    counts = [q // C] * C
    for cls in rng.sample(range(C), q % C):
        counts[cls] += 1

    all_gears = list(range(config.n_gears))
    start_gears = []
    for cls in range(C):
        pick = _sample_independent(rng, config, counts[cls], all_gears)
        if pick is None:
            raise GenerationError(f"cannot place {counts[cls]} sensors of class {cls} independently")
        start_gears.append(pick)

    distinct = q <= config.n_gears
    for _ in range(TARGET_ATTEMPTS):
        used: set[int] = set()
        target_gears = []
        for cls in range(C):
            allowed = [g for g in all_gears if g not in used] if distinct else all_gears
            pick = _sample_independent(rng, config, counts[cls], allowed)
            if pick is None:
                break
            used.update(pick)
            target_gears.append(pick)
        else:
            break
    else:
        raise GenerationError("no independent target pattern found")

    ids = list(range(q))
    rng.shuffle(ids)
    placements = {}
    targets = {}
    it = iter(ids)
    for cls in range(C):
        tg = list(target_gears[cls])
        rng.shuffle(tg)
        for g, t in zip(start_gears[cls], tg):
            sid = next(it)
            gear = GearPos(*divmod(g, config.cols))
            placements[sid] = Slot(gear, class_channel(config, gear, cls))
            targets[sid] = Target(GearPos(*divmod(t, config.cols)))
    return Scenario(config, WorldState(0, placements), targets, cost_model)


# -- experiments --------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str  # "grid_size" | "population"
    sizes: tuple[int, ...]  # grid side n, or sensor counts q
    channels: int = 4
    sensors: int = 4  # q for grid_size
    grid: int = 3  # side length for population
    trials: int = 16
    seed: int = 0
    params: PlannerParams = PlannerParams()

    def __post_init__(self):
        if self.kind not in ("grid_size", "population"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sizes:
            raise ValueError("at least one point is required")
        for cfg, q in self.points():
            if q > capacity(cfg):
                raise ValueError(f"q={q} exceeds capacity {capacity(cfg)} at {cfg.rows}x{cfg.cols}")

    def points(self) -> list[tuple[GridConfig, int]]:
        if self.kind == "grid_size":
            return [(GridConfig(n, n, self.channels), self.sensors) for n in self.sizes]
        cfg = GridConfig(self.grid, self.grid, self.channels)
        return [(cfg, q) for q in self.sizes]


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    rows: int
    cols: int
    channels: int
    q: int
    trial: int
    seed: int
    solved: bool
    steps: int
    total_cost: float
    makespan_s: float
    runtime_ms: float
    lower_bound: int = 0


@dataclass(frozen=True)
class SummaryRow:
    key: int
    mean_steps: float
    std_steps: float
    solved_fraction: float
    n_trials: int
    warning: str | None = None


RECORD_FIELDS = [
    "experiment", "rows", "cols", "channels", "q", "trial", "seed",
    "solved", "steps", "total_cost", "makespan_s", "runtime_ms",
]
SUMMARY_FIELDS = ["key", "mean_steps", "std_steps", "solved_fraction"]


def trial_seed(seed: int, point: int, trial: int) -> int:
    return derive_seed(seed, point, trial)


def run_trial(kind: str, config: GridConfig, q: int, trial: int, seed: int, params: PlannerParams) -> TrialRecord:
    sc = generate_scenario(config, q, seed)
    lb = max(
        (abs(slot.gear.row - sc.targets[sid].gear.row) + abs(slot.gear.col - sc.targets[sid].gear.col)
         for sid, slot in sc.start.placements),
        default=0,
    )
    p = PlannerParams(
        mode="greedy",
        step_budget=params.step_budget,
        stall_limit=params.stall_limit,
        seed=seed,
    )
    t0 = time.perf_counter()
    try:
        result = plan_greedy(sc, p)
        solved = True
    except PlanningFailed as exc:
        result = exc.partial
        solved = False
    runtime = (time.perf_counter() - t0) * 1000.0
    if solved:
        report = validate_plan(sc, result)
        solved = report.valid and report.targets_met
    return TrialRecord(
        experiment=kind,
        rows=config.rows,
        cols=config.cols,
        channels=config.channels,
        q=q,
        trial=trial,
        seed=seed,
        solved=solved,
        steps=result.step_count,
        total_cost=result.total_cost,
        makespan_s=makespan(result, config, sc.cost_model),
        runtime_ms=runtime,
        lower_bound=lb,
    )


def _run_job(job):
    return run_trial(*job)


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> tuple[list[TrialRecord], list[SummaryRow]]:
    """Run every (point, trial); records come back in (point, trial) order.

    ``workers`` > 1 spreads trials over processes; results do not depend on it.
    """
    jobs = []
    for cfg, q in spec.points():
        point = cfg.rows if spec.kind == "grid_size" else q
        for t in range(spec.trials):
            jobs.append((spec.kind, cfg, q, t, trial_seed(spec.seed, point, t), spec.params))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        records = [_run_job(j) for j in jobs]
    key = "rows" if spec.kind == "grid_size" else "q"
    return records, summarize(records, key)


def summarize(records: Sequence[TrialRecord], key: str) -> list[SummaryRow]:
    """Mean and population standard deviation of steps over solved trials per group."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[int, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(getattr(r, key), []).append(r)
    rows = []
    for k, recs in groups.items():
        steps = [r.steps for r in recs if r.solved]
        frac = len(steps) / len(recs)
        if not steps:
            warnings.warn(f"group {key}={k} has no solved trials", stacklevel=2)
            rows.append(SummaryRow(k, math.nan, math.nan, frac, len(recs), "no solved trials"))
            continue
        mean = math.fsum(steps) / len(steps)
        var = math.fsum((s - mean) ** 2 for s in steps) / len(steps)
        rows.append(SummaryRow(k, mean, math.sqrt(var), frac, len(recs)))
    return rows


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else f"{x:.6f}"


def records_csv(records: Iterable[TrialRecord], with_runtime: bool = False) -> str:
    """CSV text for ``records``.  ``runtime_ms`` is left blank unless
    ``with_runtime``; wall-clock timings would break byte-reproducibility."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([
            r.experiment, r.rows, r.cols, r.channels, r.q, r.trial, r.seed,
            "true" if r.solved else "false", r.steps, _fmt(r.total_cost), _fmt(r.makespan_s),
            _fmt(r.runtime_ms) if with_runtime else "",
        ])
    return buf.getvalue()


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for r in rows:
        w.writerow([r.key, _fmt(r.mean_steps), _fmt(r.std_steps), _fmt(r.solved_fraction)])
    return buf.getvalue()


def write_records_csv(path: str | os.PathLike, records, with_runtime: bool = False) -> None:
    Path(path).write_text(records_csv(records, with_runtime), encoding="utf-8")


def write_summary_csv(path: str | os.PathLike, rows) -> None:
    Path(path).write_text(summary_csv(rows), encoding="utf-8")
