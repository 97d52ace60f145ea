"""Exhaustive ground truth on small gear matrices.

Nothing here reuses the planners' search code.  The state graph is rebuilt
from the kinematic tables in :mod:`gearmatrix.core`, so agreement between a
planner and these functions is a real cross-check.

A *step* is the plan unit: any legal rotation run (single slots, every
intermediate offset checked) followed by one set of concurrent transfers.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import kernels
from .core import (
    GearError,
    GearPos,
    GridConfig,
    PlanStep,
    Slot,
    Transfer,
    WorldState,
    capacity,
    geometry,
)
from .harness import channel_class, generate_scenario
from .planner import Plan, PlannerParams, PlanningFailed, Scenario, Target, cost_from_counts, plan_greedy, validate_plan
from .rng import XorShift64Star, derive_seed

__all__ = [
    "STATE_LIMIT",
    "StateSpaceTooLarge",
    "Unreachable",
    "StateGraphStats",
    "TheoremReport",
    "state_space_estimate",
    "bfs_reach",
    "dijkstra_optimal_cost",
    "rotation_safe",
    "checkerboard_states",
    "checkerboard_safety",
    "class_projection",
    "check_g2",
    "check_swap",
    "check_checkerboard",
    "check_capacity",
    "G2_STATES",
]

STATE_LIMIT = 10_000_000


class StateSpaceTooLarge(GearError):
    pass


class Unreachable(GearError):
    pass


@dataclass(frozen=True)
class StateGraphStats:
    reachable_count: int
    optimal_steps: int | None  # None when the goal is unreachable
    optimal_cost: float | None = None
    witness: tuple[PlanStep, ...] | None = None


@dataclass
class TheoremReport:
    claim: str
    params: dict
    holds: bool
    witness: Any = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "claim": self.claim,
            "params": self.params,
            "holds": self.holds,
            "witness": _jsonable(self.witness),
            "details": _jsonable(self.details),
        }


def _jsonable(x):
    if isinstance(x, Plan):
        from .io import plan_to_json

        return plan_to_json(x)
    if isinstance(x, WorldState):
        return {
            "rotation_offset": x.offset,
            "sensors": [
                {"id": sid, "gear": list(slot.gear), "channel": slot.channel} for sid, slot in x.placements
            ],
        }
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# -- state graph ------------------------------------------------------------------


def state_space_estimate(config: GridConfig, n_sensors: int) -> int:
    """Upper bound on labeled states: offsets times ordered slot choices."""
    return config.slot_count * math.perm(config.n_slots, n_sensors)


def _guard(config: GridConfig, n_sensors: int) -> None:
    est = state_space_estimate(config, n_sensors)
    if est > STATE_LIMIT:
        raise StateSpaceTooLarge(
            f"{config.rows}x{config.cols} C={config.channels} with {n_sensors} sensors: "
            f"estimated {est} states exceeds {STATE_LIMIT}"
        )


def _valid(plist, occupied) -> bool:
    return not any(t in occupied for s in occupied for t in plist[s])


def _rotation_closure(geo, occupied, offset):
    """{offset: signed rotation} reachable by one rotation run, cheapest first."""
    P = geo.config.slot_count
    best = {offset: 0}
    for d in (1, -1):
        o = offset
        for i in range(1, P):
            o = (o + d) % P
            if not _valid(geo.partner_lists[o], occupied):
                break
            if o not in best or i < abs(best[o]) or (i == abs(best[o]) and d > 0 and best[o] < 0):
                best[o] = d * i
    return best


def _transfer_sets(geo, offset, slots):
    """Every non-empty concurrent transfer set legal at ``offset``."""
    plist = geo.partner_lists[offset]
    occ = set(slots)
    options = [[None] + [t for t in plist[s] if t not in occ] for s in slots]
    for choice in itertools.product(*options):
        if all(c is None for c in choice):
            continue
        dests = [c for c in choice if c is not None]
        if len(dests) != len(set(dests)):
            continue
        new = tuple(s if c is None else c for s, c in zip(slots, choice))
        if _valid(plist, set(new)):
            yield choice, new


def _step_edges(geo, offset, slots):
    occ = set(slots)
    for o, rot in sorted(_rotation_closure(geo, occ, offset).items()):
        if rot:
            yield (rot, None), (o, slots)
        for choice, new in _transfer_sets(geo, o, slots):
            yield (rot, choice), (o, new)


def _goal_fn(config: GridConfig, ids, goal) -> Callable:
    geo = geometry(config)
    C = config.channels
    if callable(goal):
        return lambda key: goal(geo.decode(key[0], key[1], ids))
    if isinstance(goal, WorldState):
        want = tuple(geo.slot_index(slot) for _, slot in goal.placements)
        return lambda key: key[1] == want
    targets = {sid: Target(GearPos(*t[0]), t[1] if len(t) > 1 else None) for sid, t in goal.items()}
    tg = [targets[s].gear.row * config.cols + targets[s].gear.col for s in ids]
    tc = [targets[s].channel for s in ids]

    def fn(key):
        for s, g, c in zip(key[1], tg, tc):
            if s // C != g or (c is not None and s % C != c):
                return False
        return True

    return fn


def _to_steps(geo, ids, path) -> tuple[PlanStep, ...]:
    steps = []
    for (rot, choice), _ in path:
        transfers = ()
        if choice is not None:
            transfers = tuple(
                Transfer(sid, *geo.slot_of(c)) for sid, c in zip(ids, choice) if c is not None
            )
        steps.append(PlanStep(rot, transfers))
    return tuple(steps)


def bfs_reach(config: GridConfig, start: WorldState, goal) -> StateGraphStats:
    """Breadth-first search over the whole reachable step graph.

    ``goal`` is a WorldState (placements must match, any offset), a mapping of
    sensor id to target ``(gear[, channel])``, or a predicate on WorldState.
    The whole component is explored so ``reachable_count`` is exact.
    """
    _guard(config, len(start.placements))
    geo = geometry(config)
    ids = start.sensors
    is_goal = _goal_fn(config, ids, goal)
    root = geo.encode(start)
    if not _valid(geo.partner_lists[root[0]], set(root[1])):
        raise GearError("start state violates parity")
    parent = {root: None}
    frontier = deque([root])
    depth = {root: 0}
    hit = root if is_goal(root) else None
    while frontier:
        key = frontier.popleft()
        for edge, nkey in _step_edges(geo, *key):
            if nkey in parent:
                continue
            parent[nkey] = (key, edge)
            depth[nkey] = depth[key] + 1
            if hit is None and is_goal(nkey):
                hit = nkey
            frontier.append(nkey)
    if hit is None:
        return StateGraphStats(len(parent), None)
    path = []
    k = hit
    while parent[k] is not None:
        prev, edge = parent[k]
        path.append((edge, k))
        k = prev
    path.reverse()
    return StateGraphStats(len(parent), depth[hit], witness=_to_steps(geo, ids, path))


def dijkstra_optimal_cost(scenario: Scenario) -> float:
    """Cheapest plan cost, with single-slot rotation edges and transfer-set edges."""
    cfg = scenario.config
    _guard(cfg, len(scenario.start.placements))
    geo = geometry(cfg)
    ids = scenario.start.sensors
    is_goal = _goal_fn(cfg, ids, scenario.targets)
    cm = scenario.cost_model
    r1 = cm.rotation_cost(cfg.slot_angle)
    a = cm.transfer_cost
    P = cfg.slot_count
    root = geo.encode(scenario.start)
    # distances are (rotation slots, transfers) so the reported cost is exact
    counts = {root: (0, 0)}
    dist = {root: 0.0}
    heap = [(0.0, 0, root)]
    tick = itertools.count(1)
    done = set()
    while heap:
        d, _, key = heapq.heappop(heap)
        if key in done:
            continue
        if is_goal(key):
            return cost_from_counts(*counts[key], cfg, cm)
        done.add(key)
        offset, slots = key
        occ = set(slots)
        ns, nt = counts[key]
        nbrs = []
        if P > 1:
            for o in {(offset + 1) % P, (offset - 1) % P}:
                if _valid(geo.partner_lists[o], occ):
                    nbrs.append((r1, (ns + 1, nt), (o, slots)))
        for choice, new in _transfer_sets(geo, offset, slots):
            m = sum(c is not None for c in choice)
            nbrs.append((a * m, (ns, nt + m), (offset, new)))
        for w, cnt, nkey in nbrs:
            nd = d + w
            if nkey not in done and nd < dist.get(nkey, math.inf) - 1e-12:
                dist[nkey] = nd
                counts[nkey] = cnt
                heapq.heappush(heap, (nd, next(tick), nkey))
    raise Unreachable("targets are not reachable from the start state")


# -- structural properties ----------------------------------------------------


def rotation_safe(config: GridConfig, state: WorldState) -> bool:
    """Valid at every offset of one rotation period."""
    geo = geometry(config)
    occ = np.zeros(config.n_slots, dtype=np.uint8)
    for _, slot in state.placements:
        occ[geo.slot_index(slot)] = 1
    return all(kernels.pair_conflicts(occ, geo.pairs[o]) == 0 for o in range(config.slot_count))


def checkerboard_states(config: GridConfig, labeled: bool = True) -> list[WorldState]:
    """Full-capacity checkerboard occupancies at offset 0.

    Every channel of every gear of one colour is filled.  Both colours are
    included when each holds ``capacity(config)`` sensors.  With ``labeled``,
    every assignment of sensor ids to the slots is listed.
    """
    cap = capacity(config)
    out = []
    for parity in (0, 1):
        slots = [
            Slot(GearPos(r, c), k)
            for r in range(config.rows)
            for c in range(config.cols)
            if (r + c) % 2 == parity
            for k in range(config.channels)
        ]
        if len(slots) != cap:
            continue
        perms = itertools.permutations(range(cap)) if labeled else [tuple(range(cap))]
        for perm in perms:
            out.append(WorldState(0, {sid: slots[i] for sid, i in enumerate(perm)}))
    return out


def checkerboard_safety(config: GridConfig) -> dict:
    """Validity and legal rotation of the full-capacity checkerboard at every offset."""
    geo = geometry(config)
    P = config.slot_count
    state = checkerboard_states(config, labeled=False)[0]
    occ = np.zeros((1, config.n_slots), dtype=np.uint8)
    for _, slot in state.placements:
        occ[0, geo.slot_index(slot)] = 1
    valid = [int(kernels.pair_conflicts_batch(occ, geo.pairs[o])[0]) == 0 for o in range(P)]
    occset = {geo.slot_index(s) for _, s in state.placements}
    rotations = [
        geo.rotation_run(occset, o, d) is None for o in range(P) for d in (1, -1)
    ]
    return {"valid_all_offsets": all(valid), "rotations_legal": all(rotations), "offsets": P}


def class_projection(scenario: Scenario) -> dict[int, bool]:
    """Per channel class, whether its sensors can reach their targets alone.

    Transfers keep each sensor in its class, and one class evolves exactly
    like a single-channel matrix whose rotation alternates between the
    horizontal and vertical phase.  A class that cannot solve its part on a
    one-channel grid makes the full scenario unsolvable.
    """
    cfg = scenario.config
    one = GridConfig(cfg.rows, cfg.cols, 1)
    groups: dict[int, dict] = {}
    for sid, slot in scenario.start.placements:
        cls = channel_class(cfg, slot.gear, slot.channel)
        groups.setdefault(cls, {})[sid] = Slot(slot.gear, 0)
    out = {}
    for cls, placed in sorted(groups.items()):
        targets = {sid: Target(scenario.targets[sid].gear) for sid in placed}
        ok = False
        for off in range(2):
            start = WorldState(off, placed)
            if geometry(one).conflicts({geometry(one).slot_index(s) for s in placed.values()}, off):
                continue
            if bfs_reach(one, start, targets).optimal_steps is not None:
                ok = True
                break
        out[cls] = ok
    return out


# -- claims ---------------------------------------------------------------------

_G2 = GridConfig(2, 2, 1)

# The four printed arrangements of two sensors in the 2x2 single-channel matrix.
G2_STATES = (
    WorldState(0, {0: ((0, 0), 0), 1: ((1, 1), 0)}),
    WorldState(0, {0: ((0, 1), 0), 1: ((1, 0), 0)}),
    WorldState(0, {1: ((0, 1), 0), 0: ((1, 0), 0)}),
    WorldState(0, {1: ((0, 0), 0), 0: ((1, 1), 0)}),
)


def check_g2() -> TheoremReport:
    matrix = []
    witnesses = {}
    for i, src in enumerate(G2_STATES):
        row = []
        for j, dst in enumerate(G2_STATES):
            stats = bfs_reach(_G2, src, dst)
            row.append(stats.optimal_steps)
            if i != j and stats.witness is not None:
                witnesses[f"{i}->{j}"] = Plan(stats.witness, solved=True)
        matrix.append(row)
    holds = all(v is not None for row in matrix for v in row)
    return TheoremReport("g2", {"rows": 2, "cols": 2, "channels": 1}, holds, witnesses, {"steps": matrix})


def check_swap(rows: int = 2, cols: int = 3, channels: int = 1) -> TheoremReport:
    """Exchange the two outer top-row sensors with the middle sensor back in place."""
    cfg = GridConfig(rows, cols, channels)
    s1_slot = ((1, 1), 0)
    g1 = WorldState(0, {0: ((0, 0), 0), 1: s1_slot, 2: ((0, 2), 0)})
    g2 = WorldState(0, {2: ((0, 0), 0), 1: s1_slot, 0: ((0, 2), 0)})
    stats = bfs_reach(cfg, g1, g2)
    params = {"rows": rows, "cols": cols, "channels": channels}
    details = {"reachable_count": stats.reachable_count, "steps": stats.optimal_steps}
    if stats.optimal_steps is None:
        return TheoremReport("swap", params, False, {"start": g1, "unreached": g2}, details)
    return TheoremReport("swap", params, True, Plan(stats.witness, solved=True), details)


def check_checkerboard(config: GridConfig, pairs: int = 50, seed: int = 0) -> TheoremReport:
    """Mutual reachability of labeled full-capacity checkerboards.

    Small families are checked exhaustively; otherwise ``pairs`` seeded
    ordered pairs are drawn.
    """
    if config.channels not in (1, 2) or config.n_gears > 9:
        raise StateSpaceTooLarge(f"checkerboard check supports rows*cols <= 9 and C in (1, 2), got {config}")
    _guard(config, capacity(config))
    states = checkerboard_states(config)
    n = len(states)
    if n * (n - 1) <= pairs:
        chosen = [(i, j) for i in range(n) for j in range(n) if i != j]
        mode = "exhaustive"
    else:
        rng = XorShift64Star(seed)
        chosen = []
        while len(chosen) < pairs:
            i, j = rng.below(n), rng.below(n)
            if i != j:
                chosen.append((i, j))
        mode = "sampled"
    reach_cache: dict[int, set] = {}
    geo = geometry(config)
    failures = []
    for i, j in chosen:
        if i not in reach_cache:
            reach_cache[i] = _reachable_placements(config, states[i])
        want = geo.encode(states[j])[1]
        if want not in reach_cache[i]:
            failures.append((i, j))
    holds = not failures
    details = {
        "mode": mode,
        "states": n,
        "pairs_checked": len(chosen),
        "pairs_failed": len(failures),
        "reachable_from_source": {str(i): len(v) for i, v in sorted(reach_cache.items())[:5]},
    }
    witness = None
    if failures:
        i, j = failures[0]
        witness = {"start": states[i], "unreached": states[j]}
    params = {"rows": config.rows, "cols": config.cols, "channels": config.channels, "seed": seed}
    return TheoremReport("checkerboard", params, holds, witness, details)


def _reachable_placements(config: GridConfig, start: WorldState) -> set:
    geo = geometry(config)
    root = geo.encode(start)
    seen = {root}
    frontier = deque([root])
    while frontier:
        key = frontier.popleft()
        for _, nkey in _step_edges(geo, *key):
            if nkey not in seen:
                seen.add(nkey)
                frontier.append(nkey)
    return {slots for _, slots in seen}


def check_capacity(config: GridConfig, trials: int = 16, seed: int = 0) -> TheoremReport:
    """Plan at full capacity; confirm one sensor more can never rotate freely.

    At capacity, ``trials`` generated scenarios go to the greedy planner and
    solved plans are replayed.  Above capacity, ``trials`` uniform random
    placements are tested for rotation safety; any safe one is reported.
    """
    cap = capacity(config)
    solved = 0
    provably_unsolvable = 0
    for t in range(trials):
        s = derive_seed(seed, t)
        sc = generate_scenario(config, cap, s)
        try:
            p = plan_greedy(sc, PlannerParams(seed=s))
            rep = validate_plan(sc, p)
            solved += rep.valid and rep.targets_met
        except PlanningFailed:
            if config.n_gears <= 16 and not all(class_projection(sc).values()):
                provably_unsolvable += 1

    rng = XorShift64Star(derive_seed(seed, 0xCA9))
    over = cap + 1
    counterexamples = []
    feasible_over = over <= config.n_slots
    if feasible_over:
        geo = geometry(config)
        for _ in range(trials):
            picks = rng.sample(range(config.n_slots), over)
            st = WorldState(0, {i: geo.slot_of(s) for i, s in enumerate(picks)})
            if rotation_safe(config, st):
                counterexamples.append(st)
    holds = solved == trials and not counterexamples
    params = {"rows": config.rows, "cols": config.cols, "channels": config.channels, "trials": trials, "seed": seed}
    details = {
        "capacity": cap,
        "solved_at_capacity": solved,
        "provably_unsolvable_at_capacity": provably_unsolvable,
        "over_capacity_placements": trials if feasible_over else 0,
        "over_capacity_rotation_safe": len(counterexamples),
    }
    return TheoremReport("capacity", params, holds, counterexamples[0] if counterexamples else None, details)
