"""Kinematic model of a gear matrix carrying rail-mounted sensors.

Every gear holds ``channels`` rails laid out as diameters.  All gears turn
together, neighbours in opposite directions, so the whole matrix has a single
discrete rotation offset.  A rail is *horizontal* when its angle is 0 degrees
and *vertical* at 90 degrees; two neighbouring gears whose facing rails are
both horizontal (east/west neighbours) or both vertical (north/south
neighbours) form a connected pair and a sensor may slide across it.

A connected pair may carry at most one sensor at any moment the rails line up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, NamedTuple

import numpy as np

__all__ = [
    "GridConfig",
    "GearPos",
    "Slot",
    "WorldState",
    "Transfer",
    "PlanStep",
    "CostModel",
    "GearError",
    "RotationBlocked",
    "IllegalTransfer",
    "PostStateInvalid",
    "spin",
    "channel_angle",
    "connections_at",
    "validate_state",
    "legal_rotation",
    "apply_step",
    "capacity",
    "geometry",
]


class GearError(ValueError):
    """Base class for rejected configurations, states and steps."""


class RotationBlocked(GearError):
    def __init__(self, pair, slot_index: int = 0):
        self.pair = pair
        self.slot_index = slot_index
        super().__init__(f"rotation blocked at slot {slot_index} by pair {pair}")


class IllegalTransfer(GearError):
    pass


class PostStateInvalid(GearError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__(f"step leaves an invalid state: {violations}")


@dataclass(frozen=True)
class GridConfig:
    rows: int
    cols: int
    channels: int

    def __post_init__(self):
        for name in ("rows", "cols", "channels"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise GearError(f"{name} must be a positive integer, got {v!r}")
        if 180 % self.slot_count:
            raise GearError(
                f"{self.channels} channels need {self.slot_count} rotation slots, "
                "which do not divide 180 degrees"
            )

    @property
    def slot_count(self) -> int:
        """Number of distinct rotation offsets, lcm(channels, 2)."""
        return math.lcm(self.channels, 2)

    @property
    def slot_angle(self) -> int:
        return 180 // self.slot_count

    @property
    def n_gears(self) -> int:
        return self.rows * self.cols

    @property
    def n_slots(self) -> int:
        return self.rows * self.cols * self.channels


class GearPos(NamedTuple):
    row: int
    col: int


class Slot(NamedTuple):
    gear: GearPos
    channel: int


def spin(gear: GearPos) -> int:
    return 1 if (gear[0] + gear[1]) % 2 == 0 else -1


@dataclass(frozen=True)
class WorldState:
    """Rotation offset plus the (gear, channel) slot of every sensor.

    ``placements`` is stored as a tuple of ``(sensor_id, Slot)`` sorted by id
    so states hash and compare by value.
    """

    offset: int
    placements: tuple[tuple[int, Slot], ...] = ()

    def __post_init__(self):
        items = self.placements.items() if isinstance(self.placements, Mapping) else self.placements
        norm = tuple(
            sorted(
                (int(sid), Slot(GearPos(*slot[0]), int(slot[1])))
                for sid, slot in items
            )
        )
        ids = [sid for sid, _ in norm]
        if len(set(ids)) != len(ids):
            raise GearError("duplicate sensor id in placements")
        object.__setattr__(self, "placements", norm)

    @property
    def sensors(self) -> tuple[int, ...]:
        return tuple(sid for sid, _ in self.placements)

    def as_dict(self) -> dict[int, Slot]:
        return dict(self.placements)

    def slot_of(self, sensor: int) -> Slot:
        for sid, slot in self.placements:
            if sid == sensor:
                return slot
        raise KeyError(sensor)

    def with_offset(self, offset: int) -> "WorldState":
        return WorldState(offset, self.placements)


class Transfer(NamedTuple):
    sensor: int
    to_gear: GearPos
    to_channel: int


@dataclass(frozen=True)
class PlanStep:
    rotate: int = 0
    transfers: tuple[Transfer, ...] = ()

    def __post_init__(self):
        ts = tuple(
            sorted(Transfer(int(t[0]), GearPos(*t[1]), int(t[2])) for t in self.transfers)
        )
        object.__setattr__(self, "rotate", int(self.rotate))
        object.__setattr__(self, "transfers", ts)


@dataclass(frozen=True)
class CostModel:
    rotation_cost_per_degree: float = 0.38 / 90
    transfer_cost: float = 0.56

    def __post_init__(self):
        if not (self.rotation_cost_per_degree > 0 and self.transfer_cost > 0):
            raise GearError("cost constants must be positive")

    def rotation_cost(self, degrees: float) -> float:
        return abs(degrees) * self.rotation_cost_per_degree


@dataclass(frozen=True, eq=False)
class Geometry:
    """Precomputed lookup tables for one configuration.

    Slots are numbered ``(row * cols + col) * channels + channel``.  For every
    offset, ``partners[offset, slot]`` lists the up to two slots connected to
    ``slot`` (a diameter rail can reach both opposite neighbours), padded with
    -1.
    """

    config: GridConfig
    partners: np.ndarray = field(repr=False)
    pairs: tuple[np.ndarray, ...] = field(repr=False)
    slot_row: np.ndarray = field(repr=False)
    slot_col: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, config: GridConfig) -> "Geometry":
        R, Cc, C, P = config.rows, config.cols, config.channels, config.slot_count
        step = P // C
        gears = np.arange(R * Cc)
        g_row, g_col = np.divmod(gears, Cc)
        g_sign = np.where((g_row + g_col) % 2 == 0, 1, -1)
        k = np.arange(C)
        # angle[offset, gear, channel] in slot units
        rho = np.arange(P)[:, None, None]
        angle = (k[None, None, :] * step + g_sign[None, :, None] * rho) % P

        partners = np.full((P, R * Cc * C, 2), -1, dtype=np.int64)
        fill = np.zeros((P, R * Cc * C), dtype=np.int64)
        pair_lists = []
        for o in range(P):
            found = []
            for target, (dr, dc) in ((0, (0, 1)), (P // 2, (1, 0))):
                hit = angle[o] == target
                has = hit.any(axis=1)
                chan = hit.argmax(axis=1)
                for g in range(R * Cc):
                    r, c = divmod(g, Cc)
                    r2, c2 = r + dr, c + dc
                    if r2 >= R or c2 >= Cc:
                        continue
                    g2 = r2 * Cc + c2
                    if has[g] and has[g2]:
                        a = g * C + chan[g]
                        b = g2 * C + chan[g2]
                        found.append((a, b))
                        partners[o, a, fill[o, a]] = b
                        fill[o, a] += 1
                        partners[o, b, fill[o, b]] = a
                        fill[o, b] += 1
            pair_lists.append(np.array(found, dtype=np.int64).reshape(-1, 2))
        slots = np.arange(R * Cc * C)
        return cls(
            config=config,
            partners=partners,
            pairs=tuple(pair_lists),
            slot_row=slots // C // Cc,
            slot_col=slots // C % Cc,
        )

    def slot_index(self, slot: Slot) -> int:
        cfg = self.config
        (r, c), k = slot
        if not (0 <= r < cfg.rows and 0 <= c < cfg.cols):
            raise GearError(f"gear {tuple(slot[0])} outside {cfg.rows}x{cfg.cols} grid")
        if not 0 <= k < cfg.channels:
            raise GearError(f"channel {k} outside [0, {cfg.channels})")
        return (r * cfg.cols + c) * cfg.channels + k

    def slot_of(self, index: int) -> Slot:
        C = self.config.channels
        g, k = divmod(int(index), C)
        return Slot(GearPos(*divmod(g, self.config.cols)), k)

    @cached_property
    def partner_lists(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """``partners`` as nested tuples, faster than numpy for scalar lookups."""
        return tuple(
            tuple(tuple(int(x) for x in row if x >= 0) for row in self.partners[o])
            for o in range(self.config.slot_count)
        )

    @cached_property
    def slot_gear(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.slot_row.tolist(), self.slot_col.tolist()))

    # -- encoded-state helpers -------------------------------------------------
    # Search code encodes a state as (offset, slots) where ``slots`` is a tuple
    # of slot indices, one per sensor in ascending id order.

    def encode(self, state: WorldState) -> tuple[int, tuple[int, ...]]:
        return state.offset % self.config.slot_count, tuple(
            self.slot_index(slot) for _, slot in state.placements
        )

    def decode(self, offset: int, slots: Iterable[int], ids: Iterable[int]) -> WorldState:
        return WorldState(offset, tuple((sid, self.slot_of(s)) for sid, s in zip(ids, slots)))

    def conflicts(self, occupied, offset: int) -> list[tuple[int, int]]:
        plist = self.partner_lists[offset]
        out = []
        for s in occupied:
            for t in plist[s]:
                if s < t and t in occupied:
                    out.append((s, t))
        return sorted(out)

    def is_valid(self, occupied, offset: int) -> bool:
        plist = self.partner_lists[offset]
        for s in occupied:
            for t in plist[s]:
                if t in occupied:
                    return False
        return True

    def rotation_run(self, occupied, offset: int, rotate: int) -> tuple[int, int] | None:
        """Offsets swept by a rotation run; returns the first blocked (index, offset) or None."""
        P = self.config.slot_count
        d = 1 if rotate > 0 else -1
        o = offset
        for i in range(abs(rotate)):
            o = (o + d) % P
            if not self.is_valid(occupied, o):
                return i, o
        return None

    def reachable_offsets(self, occupied, offset: int) -> dict[int, int]:
        """Map each reachable offset to the signed rotation reaching it.

        The shorter direction is preferred (ties toward +1); the longer way
        round is used only when the shorter one is blocked.
        """
        P = self.config.slot_count
        up = [False] * P
        down = [False] * P
        up[offset] = down[offset] = True
        o = offset
        for i in range(1, P):
            o = (o + 1) % P
            if not self.is_valid(occupied, o):
                break
            up[o] = i
        o = offset
        for i in range(1, P):
            o = (o - 1) % P
            if not self.is_valid(occupied, o):
                break
            down[o] = i
        out = {offset: 0}
        for target in range(P):
            if target == offset:
                continue
            fwd = (target - offset) % P
            back = P - fwd
            options = []
            if up[target] is not False:
                options.append((fwd, 0, fwd))
            if down[target] is not False:
                options.append((back, 1, -back))
            if options:
                out[target] = min(options)[2]
        return out


@lru_cache(maxsize=64)
def geometry(config: GridConfig) -> Geometry:
    return Geometry.build(config)


def _check_gear(config: GridConfig, gear) -> GearPos:
    g = GearPos(*gear)
    if not (0 <= g.row < config.rows and 0 <= g.col < config.cols):
        raise GearError(f"gear {tuple(g)} outside {config.rows}x{config.cols} grid")
    return g


def channel_angle(config: GridConfig, gear: GearPos, k: int, offset: int) -> int:
    """Angle in whole degrees, in [0, 180), of channel ``k`` at ``offset``."""
    g = _check_gear(config, gear)
    if not 0 <= k < config.channels:
        raise GearError(f"channel {k} outside [0, {config.channels})")
    if not 0 <= offset < config.slot_count:
        raise GearError(f"offset {offset} outside [0, {config.slot_count})")
    return (k * 180 // config.channels + spin(g) * offset * config.slot_angle) % 180


@dataclass(frozen=True)
class ConnectionSet:
    offset: int
    pairs: frozenset

    def __contains__(self, pair) -> bool:
        a, b = pair
        return frozenset((Slot(GearPos(*a[0]), a[1]), Slot(GearPos(*b[0]), b[1]))) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def connections_at(config: GridConfig, offset: int) -> ConnectionSet:
    geo = geometry(config)
    o = offset % config.slot_count
    pairs = frozenset(
        frozenset((geo.slot_of(a), geo.slot_of(b))) for a, b in geo.pairs[o].tolist()
    )
    return ConnectionSet(o, pairs)


def validate_state(config: GridConfig, state: WorldState) -> list:
    """Return every parity violation of ``state``; an empty list means valid.

    Violations are ``("pair", slot_a, slot_b)`` for a connected pair holding two
    sensors and ``("slot", slot, ids)`` for a slot holding more than one.
    """
    geo = geometry(config)
    occupied: dict[int, list[int]] = {}
    for sid, slot in state.placements:
        occupied.setdefault(geo.slot_index(slot), []).append(sid)
    out: list = [
        ("slot", geo.slot_of(s), tuple(ids)) for s, ids in sorted(occupied.items()) if len(ids) > 1
    ]
    for a, b in geo.conflicts(occupied, state.offset % config.slot_count):
        out.append(("pair", geo.slot_of(a), geo.slot_of(b)))
    return out


def legal_rotation(config: GridConfig, state: WorldState, direction: int) -> WorldState:
    """Rotate one slot in ``direction``; raises RotationBlocked on a collision."""
    if direction not in (1, -1):
        raise GearError("direction must be +1 or -1")
    geo = geometry(config)
    o = (state.offset + direction) % config.slot_count
    occupied = {geo.slot_index(slot) for _, slot in state.placements}
    bad = geo.conflicts(occupied, o)
    if bad:
        a, b = bad[0]
        raise RotationBlocked((geo.slot_of(a), geo.slot_of(b)), 0)
    return state.with_offset(o)


def apply_step(config: GridConfig, state: WorldState, step: PlanStep) -> WorldState:
    """Rotate ``step.rotate`` slots one at a time, then run all transfers at once."""
    geo = geometry(config)
    P = config.slot_count
    slots = {sid: geo.slot_index(slot) for sid, slot in state.placements}
    occupied = set(slots.values())
    offset = state.offset % P

    if step.rotate:
        blocked = geo.rotation_run(occupied, offset, step.rotate)
        if blocked is not None:
            i, o = blocked
            a, b = geo.conflicts(occupied, o)[0]
            raise RotationBlocked((geo.slot_of(a), geo.slot_of(b)), i)
        offset = (offset + step.rotate) % P

    plist = geo.partner_lists[offset]
    moved: dict[int, int] = {}
    dests: set[int] = set()
    for t in step.transfers:
        if t.sensor not in slots:
            raise IllegalTransfer(f"unknown sensor {t.sensor}")
        if t.sensor in moved:
            raise IllegalTransfer(f"sensor {t.sensor} transferred twice in one step")
        dest = geo.slot_index(Slot(t.to_gear, t.to_channel))
        src = slots[t.sensor]
        if dest not in plist[src]:
            raise IllegalTransfer(
                f"sensor {t.sensor}: {geo.slot_of(src)} and {geo.slot_of(dest)} "
                f"are not connected at offset {offset}"
            )
        if dest in occupied:
            raise IllegalTransfer(f"sensor {t.sensor}: destination {geo.slot_of(dest)} is occupied")
        if dest in dests:
            raise IllegalTransfer(f"two sensors transferred to {geo.slot_of(dest)}")
        dests.add(dest)
        moved[t.sensor] = dest

    slots.update(moved)
    new_occ = set(slots.values())
    bad = geo.conflicts(new_occ, offset)
    if bad:
        raise PostStateInvalid([("pair", geo.slot_of(a), geo.slot_of(b)) for a, b in bad])
    return geo.decode(offset, slots.values(), slots.keys())


def capacity(config: GridConfig) -> int:
    return -(-config.rows * config.cols // 2) * config.channels
