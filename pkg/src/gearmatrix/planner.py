"""Multi-sensor relocation planning on a gear matrix.

Two planners share one step model (rotate, then a set of concurrent
transfers):

* :func:`plan_exact` - A* over (offset, placements) with the summed gear
  Manhattan distance, scaled by the transfer cost, as the heuristic.
* :func:`plan_greedy` - repeatedly takes the step that removes the most
  Manhattan distance, with revisit hashing and seeded random escapes.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from . import kernels
from .core import (
    CostModel,
    GearError,
    GearPos,
    GridConfig,
    PlanStep,
    Slot,
    Transfer,
    WorldState,
    apply_step,
    capacity,
    geometry,
    validate_state,
)
from .rng import XorShift64Star

__all__ = [
    "Target",
    "Scenario",
    "Plan",
    "PlannerParams",
    "PlanReport",
    "PlanningFailed",
    "ScenarioError",
    "heuristic",
    "step_cost",
    "plan_cost",
    "cost_from_counts",
    "successors",
    "plan",
    "plan_exact",
    "plan_greedy",
    "validate_plan",
    "makespan",
    "targets_met",
]


class ScenarioError(GearError):
    pass


class PlanningFailed(RuntimeError):
    """Raised when a planner gives up.

    ``reason`` is ``"expansion-budget-exhausted"``, ``"unsolvable"`` or
    ``"budget-exhausted"``; ``best_distance`` is the smallest summed Manhattan
    distance reached on the way.
    """

    def __init__(self, reason: str, best_distance: int | None = None, partial=None):
        self.reason = reason
        self.best_distance = best_distance
        self.partial = partial
        msg = reason if best_distance is None else f"{reason} (best distance {best_distance})"
        super().__init__(msg)


class Target(NamedTuple):
    gear: GearPos
    channel: int | None = None


@dataclass(frozen=True)
class Scenario:
    config: GridConfig
    start: WorldState
    targets: Mapping[int, Target]
    cost_model: CostModel = CostModel()

    def __post_init__(self):
        targets = {
            int(sid): Target(GearPos(*t[0]), None if len(t) < 2 or t[1] is None else int(t[1]))
            for sid, t in dict(self.targets).items()
        }
        object.__setattr__(self, "targets", targets)
        cfg = self.config
        if set(targets) != set(self.start.sensors):
            raise ScenarioError("every placed sensor needs exactly one target")
        if len(targets) > capacity(cfg):
            raise ScenarioError(f"{len(targets)} sensors exceed capacity {capacity(cfg)}")
        if not 0 <= self.start.offset < cfg.slot_count:
            raise ScenarioError(f"rotation offset {self.start.offset} outside [0, {cfg.slot_count})")
        geo = geometry(cfg)
        seen_channel_targets = set()
        for sid, t in targets.items():
            if not (0 <= t.gear.row < cfg.rows and 0 <= t.gear.col < cfg.cols):
                raise ScenarioError(f"target of sensor {sid} is off the grid")
            if t.channel is not None:
                slot = geo.slot_index(Slot(t.gear, t.channel))
                if slot in seen_channel_targets:
                    raise ScenarioError(f"two sensors target slot {tuple(t.gear)}/{t.channel}")
                seen_channel_targets.add(slot)
        try:
            bad = validate_state(cfg, self.start)
        except GearError as exc:
            raise ScenarioError(str(exc)) from exc
        if bad:
            raise ScenarioError(f"start state violates parity: {bad}")


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...] = ()
    total_cost: float = 0.0
    solved: bool = True

    @property
    def step_count(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PlannerParams:
    mode: str = "greedy"
    max_expansions: int = 1_000_000
    step_budget: int | None = None  # default 64 * rows * cols
    stall_limit: int | None = None  # default 8 * rows * cols
    successor_cap: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "greedy"):
            raise ValueError(f"unknown planner mode {self.mode!r}")
        for name in ("max_expansions", "step_budget", "stall_limit", "successor_cap"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PlanReport:
    valid: bool
    targets_met: bool
    final_state: WorldState
    failing_step: int | None = None
    error: str | None = None


# -- cost model ---------------------------------------------------------------


def heuristic(state: WorldState, targets: Mapping[int, Target], cost_model: CostModel = CostModel()) -> float:
    """Transfer cost times the summed gear Manhattan distance to the targets."""
    placed = state.as_dict()
    ids = sorted(targets)
    try:
        cur = np.array([placed[sid].gear for sid in ids], dtype=np.int64).reshape(-1, 2)
    except KeyError as exc:
        raise KeyError(f"unknown sensor id {exc.args[0]}") from None
    tgt = np.array([tuple(targets[sid][0]) for sid in ids], dtype=np.int64).reshape(-1, 2)
    return cost_model.transfer_cost * kernels.manhattan_sum(cur, tgt)


def step_cost(step: PlanStep, config: GridConfig, cost_model: CostModel = CostModel()) -> float:
    return (
        cost_model.rotation_cost(abs(step.rotate) * config.slot_angle)
        + len(step.transfers) * cost_model.transfer_cost
    )


def cost_from_counts(slots: int, transfers: int, config: GridConfig, cost_model: CostModel = CostModel()) -> float:
    """Cost of ``slots`` rotation slots and ``transfers`` sensor moves.

    Every plan cost is a function of these two counts only; computing it from
    them (rather than summing per-step floats) makes equal-cost plans compare
    bit-for-bit equal regardless of how the steps were grouped.
    """
    return slots * cost_model.rotation_cost(config.slot_angle) + transfers * cost_model.transfer_cost


def plan_cost(steps, config: GridConfig, cost_model: CostModel = CostModel()) -> float:
    return cost_from_counts(
        sum(abs(s.rotate) for s in steps), sum(len(s.transfers) for s in steps), config, cost_model
    )


def makespan(plan: Plan, config: GridConfig, cost_model: CostModel = CostModel()) -> float:
    """Wall-clock estimate: one rotation run then one concurrent transfer phase per step."""
    return sum(
        cost_model.rotation_cost(abs(s.rotate) * config.slot_angle)
        + (cost_model.transfer_cost if s.transfers else 0.0)
        for s in plan.steps
    )


def targets_met(config: GridConfig, state: WorldState, targets: Mapping[int, Target]) -> bool:
    placed = state.as_dict()
    for sid, t in targets.items():
        slot = placed.get(sid)
        if slot is None or tuple(slot.gear) != tuple(t[0]):
            return False
        if len(t) > 1 and t[1] is not None and slot.channel != t[1]:
            return False
    return True


# -- encoded search problem ---------------------------------------------------


class _Problem:
    """Scenario flattened into integer tuples for the search loops."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.config = scenario.config
        self.geo = geometry(scenario.config)
        self.ids = tuple(scenario.start.sensors)
        self.offset0, self.slots0 = self.geo.encode(scenario.start)
        cols = self.config.cols
        C = self.config.channels
        self.t_row = tuple(scenario.targets[s].gear.row for s in self.ids)
        self.t_col = tuple(scenario.targets[s].gear.col for s in self.ids)
        self.t_gear = tuple(r * cols + c for r, c in zip(self.t_row, self.t_col))
        self.t_slot = tuple(
            -1 if scenario.targets[s].channel is None else g * C + scenario.targets[s].channel
            for s, g in zip(self.ids, self.t_gear)
        )
        self.slot_gear = self.geo.slot_gear
        cm = scenario.cost_model
        self.rot_unit = cm.rotation_cost_per_degree * self.config.slot_angle
        self.a = cm.transfer_cost

    def dist(self, i: int, slot: int) -> int:
        r, c = self.slot_gear[slot]
        return abs(r - self.t_row[i]) + abs(c - self.t_col[i])

    def total(self, slots) -> int:
        return sum(self.dist(i, s) for i, s in enumerate(slots))

    def goal(self, slots) -> bool:
        C = self.config.channels
        for i, s in enumerate(slots):
            if s // C != self.t_gear[i]:
                return False
            if self.t_slot[i] >= 0 and s != self.t_slot[i]:
                return False
        return True

    def cost(self, rot: int, n_moves: int) -> float:
        return abs(rot) * self.rot_unit + n_moves * self.a

    def make_step(self, rot: int, moves) -> PlanStep:
        geo = self.geo
        return PlanStep(
            rot,
            tuple(
                Transfer(self.ids[i], *geo.slot_of(d)) for i, d in moves
            ),
        )

    def candidates(self, occ, slots, offset: int) -> list[list[int]]:
        plist = self.geo.partner_lists[offset]
        return [[t for t in plist[s] if t not in occ] for s in slots]

    def subsets(self, slots, offset: int, cap: int | None):
        """Conflict-free transfer subsets at ``offset`` as (moves, new_slots, reduction)."""
        occ = set(slots)
        cands = self.candidates(occ, slots, offset)
        movable = [i for i, c in enumerate(cands) if c]
        out = []
        options = [[None] + cands[i] for i in movable]
        for choice in itertools.product(*options):
            moves = tuple((i, d) for i, d in zip(movable, choice) if d is not None)
            if not moves:
                continue
            dests = [d for _, d in moves]
            if len(set(dests)) != len(dests):
                continue
            new = list(slots)
            for i, d in moves:
                new[i] = d
            if not self.geo.is_valid(set(new), offset):
                continue
            red = sum(self.dist(i, slots[i]) - self.dist(i, d) for i, d in moves)
            out.append((moves, tuple(new), red))
        if cap is not None and len(out) > cap:
            out.sort(key=lambda m: (-m[2], -len(m[0]), tuple(self.ids[i] for i, _ in m[0])))
            out = out[:cap]
        return out

    def successors(self, offset: int, slots, cap: int | None) -> Iterator[tuple]:
        occ = set(slots)
        for o, rot in sorted(self.geo.reachable_offsets(occ, offset).items()):
            if rot:
                yield rot, o, (), slots, 0
            for moves, new, red in self.subsets(slots, o, cap):
                yield rot, o, moves, new, red


def successors(
    config: GridConfig,
    state: WorldState,
    cost_model: CostModel = CostModel(),
    successor_cap: int | None = 256,
    targets: Mapping[int, Target] | None = None,
) -> list[tuple[PlanStep, WorldState, float]]:
    """All single steps out of ``state``.

    With ``targets`` the cap keeps the subsets removing the most Manhattan
    distance; without, every sensor counts as already home.
    """
    if targets is None:
        targets = {sid: Target(slot.gear) for sid, slot in state.placements}
    prob = _Problem(Scenario(config, state, targets, cost_model))
    out = []
    for rot, o, moves, new, _ in prob.successors(prob.offset0, prob.slots0, successor_cap):
        out.append(
            (prob.make_step(rot, moves), prob.geo.decode(o, new, prob.ids), prob.cost(rot, len(moves)))
        )
    return out


def _build_plan(prob: _Problem, steps: list[PlanStep], solved: bool = True) -> Plan:
    cm = prob.scenario.cost_model
    return Plan(tuple(steps), plan_cost(steps, prob.config, cm), solved)


# -- exact A* -----------------------------------------------------------------


def plan_exact(scenario: Scenario, params: PlannerParams = PlannerParams(mode="exact")) -> Plan:
    prob = _Problem(scenario)
    start = (prob.offset0, prob.slots0)
    if prob.goal(prob.slots0):
        return Plan()
    a = prob.a
    h0 = a * prob.total(prob.slots0)
    counter = itertools.count()
    openh = [(h0, h0, next(counter), start)]
    g = {start: 0.0}
    parent: dict = {start: None}
    closed = set()
    expansions = 0
    best = prob.total(prob.slots0)
    while openh:
        f, h, _, key = heapq.heappop(openh)
        if key in closed:
            continue
        offset, slots = key
        if prob.goal(slots):
            steps = []
            while parent[key] is not None:
                key, step = parent[key]
                steps.append(step)
            steps.reverse()
            return _build_plan(prob, steps)
        closed.add(key)
        expansions += 1
        if expansions > params.max_expansions:
            raise PlanningFailed("expansion-budget-exhausted", best)
        gk = g[key]
        for rot, o, moves, new, _ in prob.successors(offset, slots, params.successor_cap):
            nkey = (o, new)
            if nkey in closed:
                continue
            ng = gk + prob.cost(rot, len(moves))
            if ng < g.get(nkey, float("inf")) - 1e-12:
                g[nkey] = ng
                parent[nkey] = (key, prob.make_step(rot, moves))
                d = prob.total(new)
                best = min(best, d)
                nh = a * d
                heapq.heappush(openh, (ng + nh, nh, next(counter), nkey))
    raise PlanningFailed("unsolvable", best)


# -- greedy -------------------------------------------------------------------


def _greedy_set(prob: _Problem, slots, dists, offset: int, order) -> tuple:
    """Maximal conflict-free set of distance-reducing transfers at ``offset``."""
    geo = prob.geo
    plist = geo.partner_lists[offset]
    occ = set(slots)
    chosen = []
    for i in order:
        if dists[i] == 0:
            continue
        s = slots[i]
        for d in plist[s]:
            if d in occ or prob.dist(i, d) >= dists[i]:
                continue
            if any(t in occ and t != s for t in plist[d]):
                continue
            occ.discard(s)
            occ.add(d)
            chosen.append((i, d))
            break
    return tuple(chosen)


def plan_greedy(scenario: Scenario, params: PlannerParams = PlannerParams()) -> Plan:
    prob = _Problem(scenario)
    cfg = prob.config
    geo = prob.geo
    step_budget = params.step_budget or 64 * cfg.rows * cfg.cols
    stall_limit = params.stall_limit or 8 * cfg.rows * cfg.cols
    rng = XorShift64Star(params.seed)

    offset, slots = prob.offset0, prob.slots0
    n = len(slots)
    seen = {(offset, slots)}
    steps: list[PlanStep] = []
    best = prob.total(slots)
    stall = 0

    def take(rot, o, moves):
        nonlocal offset, slots
        new = list(slots)
        for i, d in moves:
            new[i] = d
        offset, slots = o, tuple(new)
        seen.add((offset, slots))
        steps.append(prob.make_step(rot, moves))

    for _ in range(step_budget):
        if prob.goal(slots):
            return _build_plan(prob, steps)
        dists = [prob.dist(i, s) for i, s in enumerate(slots)]
        order = sorted(range(n), key=lambda i: (-dists[i], prob.ids[i]))
        reach = sorted(prob.geo.reachable_offsets(set(slots), offset).items())

        options = []
        for o, rot in reach:
            full = _greedy_set(prob, slots, dists, o, order)
            if not full:
                continue
            alts = [full] + [(m,) for m in full if len(full) > 1]
            for rank, moves in enumerate(alts):
                options.append((-len(moves), abs(rot), o, rank, rot, moves))
        options.sort(key=lambda x: x[:4])
        picked = None
        for neg_red, _, o, _, rot, moves in options:
            new = list(slots)
            for i, d in moves:
                new[i] = d
            # a single move split off a set may rely on a slot the set vacated
            if (o, tuple(new)) not in seen and geo.is_valid(set(new), o):
                picked = (rot, o, moves)
                break
        if picked is not None:
            take(*picked)
            best = min(best, prob.total(slots))
            stall = 0
            continue

        stall += 1
        if stall <= stall_limit:
            for o, rot in sorted(reach, key=lambda x: (abs(x[1]), x[0])):
                if rot and (o, slots) not in seen:
                    picked = (rot, o, ())
                    break
            if picked is not None:
                take(*picked)
                continue

        # random legal escape step; prefer states not seen before
        moves_all = []
        for o, rot in reach:
            plist = geo.partner_lists[o]
            occ = set(slots)
            if rot:
                moves_all.append((rot, o, ()))
            for i, s in enumerate(slots):
                for d in plist[s]:
                    if d in occ or any(t in occ and t != s for t in plist[d]):
                        continue
                    moves_all.append((rot, o, ((i, d),)))
        fresh = []
        for rot, o, moves in moves_all:
            new = list(slots)
            for i, d in moves:
                new[i] = d
            if (o, tuple(new)) not in seen:
                fresh.append((rot, o, moves))
        pool = fresh or moves_all
        if not pool:
            break
        take(*rng.choice(pool))
        stall = 0

    if prob.goal(slots):
        return _build_plan(prob, steps)
    raise PlanningFailed("budget-exhausted", best, _build_plan(prob, steps, solved=False))


def plan(scenario: Scenario, params: PlannerParams = PlannerParams()) -> Plan:
    if params.mode == "exact":
        return plan_exact(scenario, params)
    return plan_greedy(scenario, params)


# -- replay -------------------------------------------------------------------


def validate_plan(scenario: Scenario, plan: Plan) -> PlanReport:
    """Replay ``plan`` from the scenario start; never raises."""
    cfg = scenario.config
    state = scenario.start
    for idx, step in enumerate(plan.steps):
        try:
            state = apply_step(cfg, state, step)
        except GearError as exc:
            return PlanReport(False, False, state, idx, f"{type(exc).__name__}: {exc}")
    met = targets_met(cfg, state, scenario.targets)
    return PlanReport(True, met, state)
