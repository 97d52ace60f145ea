"""Scenario/plan JSON documents and the timed actuator command script."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import CostModel, GearError, GearPos, GridConfig, PlanStep, Slot, Transfer, WorldState
from .planner import Plan, Scenario, Target

__all__ = [
    "FormatError",
    "scenario_to_json",
    "scenario_from_json",
    "plan_to_json",
    "plan_from_json",
    "load_scenario",
    "load_plan",
    "dump_json",
    "command_script",
]


class FormatError(ValueError):
    pass


def _obj(x: Any, where: str, required: set, optional: set = frozenset()) -> dict:
    if not isinstance(x, dict):
        raise FormatError(f"{where}: expected an object")
    unknown = set(x) - required - optional
    if unknown:
        raise FormatError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(x)
    if missing:
        raise FormatError(f"{where}: missing field(s) {sorted(missing)}")
    return x


def _int(x: Any, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(f"{where}: expected an integer")
    return x


def _num(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FormatError(f"{where}: expected a number")
    return float(x)


def _gear(x: Any, where: str) -> GearPos:
    if not (isinstance(x, list) and len(x) == 2):
        raise FormatError(f"{where}: expected [row, col]")
    return GearPos(_int(x[0], where), _int(x[1], where))


def _list(x: Any, where: str) -> list:
    if not isinstance(x, list):
        raise FormatError(f"{where}: expected a list")
    return x


# -- scenario -------------------------------------------------------------------


def scenario_to_json(sc: Scenario) -> dict:
    doc = {
        "grid": {"rows": sc.config.rows, "cols": sc.config.cols, "channels": sc.config.channels},
        "rotation_offset": sc.start.offset,
        "sensors": [
            {"id": sid, "gear": list(slot.gear), "channel": slot.channel} for sid, slot in sc.start.placements
        ],
        "targets": [],
        "cost_model": {
            "rotation_cost_per_degree": sc.cost_model.rotation_cost_per_degree,
            "transfer_cost": sc.cost_model.transfer_cost,
        },
    }
    for sid in sorted(sc.targets):
        t = sc.targets[sid]
        entry = {"id": sid, "gear": list(t.gear)}
        if t.channel is not None:
            entry["channel"] = t.channel
        doc["targets"].append(entry)
    return doc


def scenario_from_json(doc: Any) -> Scenario:
    doc = _obj(doc, "scenario", {"grid", "rotation_offset", "sensors", "targets"}, {"cost_model"})
    g = _obj(doc["grid"], "grid", {"rows", "cols", "channels"})
    try:
        cfg = GridConfig(_int(g["rows"], "grid.rows"), _int(g["cols"], "grid.cols"), _int(g["channels"], "grid.channels"))
    except GearError as exc:
        raise FormatError(f"grid: {exc}") from exc
    placements = {}
    for n, s in enumerate(_list(doc["sensors"], "sensors")):
        s = _obj(s, f"sensors[{n}]", {"id", "gear", "channel"})
        sid = _int(s["id"], f"sensors[{n}].id")
        if sid in placements:
            raise FormatError(f"sensors[{n}]: duplicate id {sid}")
        placements[sid] = Slot(_gear(s["gear"], f"sensors[{n}].gear"), _int(s["channel"], f"sensors[{n}].channel"))
    targets = {}
    for n, t in enumerate(_list(doc["targets"], "targets")):
        t = _obj(t, f"targets[{n}]", {"id", "gear"}, {"channel"})
        sid = _int(t["id"], f"targets[{n}].id")
        if sid in targets:
            raise FormatError(f"targets[{n}]: duplicate id {sid}")
        ch = t.get("channel")
        targets[sid] = Target(_gear(t["gear"], f"targets[{n}].gear"), None if ch is None else _int(ch, f"targets[{n}].channel"))
    cm = CostModel()
    if "cost_model" in doc:
        c = _obj(doc["cost_model"], "cost_model", {"rotation_cost_per_degree", "transfer_cost"})
        try:
            cm = CostModel(_num(c["rotation_cost_per_degree"], "cost_model"), _num(c["transfer_cost"], "cost_model"))
        except GearError as exc:
            raise FormatError(f"cost_model: {exc}") from exc
    try:
        return Scenario(cfg, WorldState(_int(doc["rotation_offset"], "rotation_offset"), placements), targets, cm)
    except GearError as exc:
        raise FormatError(str(exc)) from exc


# -- plan -------------------------------------------------------------------------


def plan_to_json(plan: Plan) -> dict:
    return {
        "steps": [
            {
                "rotate": s.rotate,
                "transfers": [
                    {"sensor": t.sensor, "to_gear": list(t.to_gear), "to_channel": t.to_channel}
                    for t in s.transfers
                ],
            }
            for s in plan.steps
        ],
        "total_cost": plan.total_cost,
        "step_count": plan.step_count,
        "solved": plan.solved,
    }


def plan_from_json(doc: Any) -> Plan:
    doc = _obj(doc, "plan", {"steps", "total_cost", "step_count", "solved"})
    steps = []
    for n, s in enumerate(_list(doc["steps"], "steps")):
        s = _obj(s, f"steps[{n}]", {"rotate", "transfers"})
        ts = []
        for m, t in enumerate(_list(s["transfers"], f"steps[{n}].transfers")):
            w = f"steps[{n}].transfers[{m}]"
            t = _obj(t, w, {"sensor", "to_gear", "to_channel"})
            ts.append(Transfer(_int(t["sensor"], w), _gear(t["to_gear"], w), _int(t["to_channel"], w)))
        steps.append(PlanStep(_int(s["rotate"], f"steps[{n}].rotate"), tuple(ts)))
    count = _int(doc["step_count"], "step_count")
    if count != len(steps):
        raise FormatError(f"step_count {count} does not match {len(steps)} steps")
    if not isinstance(doc["solved"], bool):
        raise FormatError("solved: expected a boolean")
    return Plan(tuple(steps), _num(doc["total_cost"], "total_cost"), doc["solved"])


def _parse(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{what}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_scenario(path) -> Scenario:
    return scenario_from_json(_parse(Path(path).read_text(encoding="utf-8"), str(path)))


def load_plan(path) -> Plan:
    return plan_from_json(_parse(Path(path).read_text(encoding="utf-8"), str(path)))


def dump_json(doc: Any, path=None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- command script ---------------------------------------------------------------


def command_script(
    plan: Plan,
    config: GridConfig,
    cost_model: CostModel = CostModel(),
    start: WorldState | None = None,
) -> str:
    """Open-loop timed actuator commands, one per line.

    ``ROT`` lines carry the signed rotation in degrees.  ``MOV`` lines of one
    step share a timestamp.  A closing ``END`` line is stamped with the
    makespan.  Source slots are printed only when ``start`` is given, since a
    plan alone records destinations only.
    """
    if not plan.steps:
        return ""
    where = start.as_dict() if start is not None else None
    t = 0.0
    lines = []
    for step in plan.steps:
        if step.rotate:
            deg = step.rotate * config.slot_angle
            lines.append(f"t={t:.3f} ROT {deg:+d}")
            t += cost_model.rotation_cost(deg)
        if step.transfers:
            for tr in step.transfers:
                dst = f"({tr.to_gear.row},{tr.to_gear.col},{tr.to_channel})"
                if where is not None:
                    src_slot = where[tr.sensor]
                    src = f"({src_slot.gear.row},{src_slot.gear.col},{src_slot.channel})"
                    where[tr.sensor] = Slot(tr.to_gear, tr.to_channel)
                else:
                    src = ""
                lines.append(f"t={t:.3f} MOV s{tr.sensor} {src}->{dst}")
            t += cost_model.transfer_cost
    lines.append(f"t={t:.3f} END")
    return "\n".join(lines) + "\n"
