import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gearmatrix.core import (
    GearError,
    GearPos,
    GridConfig,
    IllegalTransfer,
    PlanStep,
    PostStateInvalid,
    RotationBlocked,
    Slot,
    WorldState,
    apply_step,
    capacity,
    channel_angle,
    connections_at,
    geometry,
    legal_rotation,
    spin,
    validate_state,
)


def ws(offset, **placed):
    """ws(0, s0=((0, 0), 0)) -> WorldState with sensor 0 at gear (0,0) channel 0."""
    return WorldState(offset, {int(k[1:]): v for k, v in placed.items()})


def brute_connections(cfg, offset):
    """Pair channels by evaluating channel_angle on every neighbouring gear pair."""
    out = set()
    for r in range(cfg.rows):
        for c in range(cfg.cols):
            for (dr, dc), want in (((0, 1), 0), ((1, 0), 90)):
                r2, c2 = r + dr, c + dc
                if r2 >= cfg.rows or c2 >= cfg.cols:
                    continue
                for k1 in range(cfg.channels):
                    if channel_angle(cfg, (r, c), k1, offset) != want:
                        continue
                    for k2 in range(cfg.channels):
                        if channel_angle(cfg, (r2, c2), k2, offset) == want:
                            out.add(frozenset({Slot(GearPos(r, c), k1), Slot(GearPos(r2, c2), k2)}))
    return out


class TestGridConfig:
    @pytest.mark.parametrize("C, P, delta", [(1, 2, 90), (2, 2, 90), (3, 6, 30), (4, 4, 45), (6, 6, 30)])
    def test_derived_slots(self, C, P, delta):
        cfg = GridConfig(3, 3, C)
        assert cfg.slot_count == P
        assert cfg.slot_angle == delta
        assert cfg.slot_angle * cfg.slot_count == 180

    @pytest.mark.parametrize("C", [7, 8, 16])
    def test_rejects_non_integer_slot_angle(self, C):
        with pytest.raises(GearError):
            GridConfig(2, 2, C)

    @pytest.mark.parametrize("dims", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 2, 2)])
    def test_rejects_non_positive(self, dims):
        with pytest.raises(GearError):
            GridConfig(*dims)


def test_spin_alternates():
    for r, c in itertools.product(range(5), range(5)):
        assert spin((r, c)) == (1 if (r + c) % 2 == 0 else -1)
        if c + 1 < 5:
            assert spin((r, c)) == -spin((r, c + 1))
        if r + 1 < 5:
            assert spin((r, c)) == -spin((r + 1, c))


class TestChannelAngle:
    def test_base_alignment(self):
        assert channel_angle(GridConfig(2, 2, 4), (0, 0), 0, 0) == 0

    def test_positive_spin_wraps(self):
        # 1*45 + 3*45 = 180 -> 0
        assert channel_angle(GridConfig(2, 2, 4), (0, 0), 1, 3) == 0

    def test_negative_spin(self):
        # 0 - 1*90 = -90 -> 90
        assert channel_angle(GridConfig(2, 2, 1), (0, 1), 0, 1) == 90

    @pytest.mark.parametrize("args", [((0, 0), 4, 0), ((2, 0), 0, 0), ((0, 0), 0, 4), ((0, -1), 0, 0)])
    def test_out_of_range(self, args):
        with pytest.raises(GearError):
            channel_angle(GridConfig(2, 2, 4), *args)

    @pytest.mark.parametrize("C", [1, 2, 3, 4, 6])
    def test_distinct_per_gear(self, C):
        cfg = GridConfig(3, 3, C)
        for r, c, o in itertools.product(range(3), range(3), range(cfg.slot_count)):
            angles = [channel_angle(cfg, (r, c), k, o) for k in range(C)]
            assert len(set(angles)) == C
            assert all(0 <= a < 180 for a in angles)

    @pytest.mark.parametrize("C", [2, 4, 6])
    def test_even_channel_counts_always_align(self, C):
        cfg = GridConfig(3, 3, C)
        for r, c, o in itertools.product(range(3), range(3), range(cfg.slot_count)):
            angles = [channel_angle(cfg, (r, c), k, o) for k in range(C)]
            assert angles.count(0) == 1
            assert angles.count(90) == 1


class TestConnections:
    def test_2x2_horizontal_at_zero(self):
        got = connections_at(GridConfig(2, 2, 1), 0)
        assert set(got) == {
            frozenset({Slot((0, 0), 0), Slot((0, 1), 0)}),
            frozenset({Slot((1, 0), 0), Slot((1, 1), 0)}),
        }

    def test_2x2_vertical_at_one(self):
        got = connections_at(GridConfig(2, 2, 1), 1)
        assert set(got) == {
            frozenset({Slot((0, 0), 0), Slot((1, 0), 0)}),
            frozenset({Slot((0, 1), 0), Slot((1, 1), 0)}),
        }

    @pytest.mark.parametrize("C", [1, 2, 4])
    def test_single_gear_has_none(self, C):
        cfg = GridConfig(1, 1, C)
        assert all(len(connections_at(cfg, o)) == 0 for o in range(cfg.slot_count))

    @pytest.mark.parametrize("dims", [(2, 2, 1), (3, 3, 4), (2, 5, 3), (4, 3, 2), (3, 4, 6)])
    def test_matches_angle_enumeration(self, dims):
        cfg = GridConfig(*dims)
        for o in range(cfg.slot_count):
            assert set(connections_at(cfg, o)) == brute_connections(cfg, o)

    @pytest.mark.parametrize("dims", [(3, 3, 1), (3, 3, 4), (4, 2, 3)])
    def test_pairs_span_one_edge(self, dims):
        cfg = GridConfig(*dims)
        for o in range(cfg.slot_count):
            for pair in connections_at(cfg, o):
                a, b = sorted(pair)
                assert abs(a.gear.row - b.gear.row) + abs(a.gear.col - b.gear.col) == 1

    @pytest.mark.parametrize("C", [1, 3, 4])
    def test_periodic_over_64_offsets(self, C):
        cfg = GridConfig(3, 4, C)
        P = cfg.slot_count
        for o in range(64):
            assert set(connections_at(cfg, o)) == set(connections_at(cfg, o % P))
            assert set(connections_at(cfg, o)) == set(connections_at(cfg, o + P))


class TestValidateState:
    def test_g2_diagonal_ok(self):
        assert validate_state(GridConfig(2, 2, 1), ws(0, s0=((0, 0), 0), s1=((1, 1), 0))) == []

    def test_right_column_violation(self):
        bad = validate_state(GridConfig(2, 2, 1), ws(1, s0=((0, 1), 0), s1=((1, 1), 0)))
        assert bad == [("pair", Slot((0, 1), 0), Slot((1, 1), 0))]

    def test_empty_ok(self):
        assert validate_state(GridConfig(3, 3, 4), WorldState(0)) == []

    def test_double_occupancy(self):
        bad = validate_state(GridConfig(2, 2, 1), ws(0, s0=((0, 0), 0), s1=((0, 0), 0)))
        assert ("slot", Slot((0, 0), 0), (0, 1)) in bad

    def test_far_side_of_diameter(self):
        # middle gear's horizontal rail touches both row neighbours
        bad = validate_state(GridConfig(1, 3, 1), ws(0, s0=((0, 1), 0), s1=((0, 2), 0)))
        assert len(bad) == 1


class TestLegalRotation:
    def test_diagonal_rotates(self):
        cfg = GridConfig(2, 2, 1)
        out = legal_rotation(cfg, ws(0, s0=((0, 0), 0), s1=((1, 1), 0)), +1)
        assert out.offset == 1

    def test_blocked_by_column(self):
        cfg = GridConfig(2, 2, 1)
        with pytest.raises(RotationBlocked) as exc:
            legal_rotation(cfg, ws(0, s0=((0, 1), 0), s1=((1, 1), 0)), +1)
        assert set(exc.value.pair) == {Slot((0, 1), 0), Slot((1, 1), 0)}

    @pytest.mark.parametrize("d", [1, -1])
    def test_single_gear_never_blocks(self, d):
        cfg = GridConfig(1, 1, 4)
        state = ws(2, s0=((0, 0), 0), s1=((0, 0), 1), s2=((0, 0), 3))
        assert legal_rotation(cfg, state, d).offset == (2 + d) % 4


class TestApplyStep:
    cfg = GridConfig(2, 2, 1)
    start = ws(0, s0=((0, 0), 0), s1=((1, 1), 0))

    def test_concurrent_horizontal_transfers(self):
        out = apply_step(self.cfg, self.start, PlanStep(0, [(0, (0, 1), 0), (1, (1, 0), 0)]))
        assert out == ws(0, s0=((0, 1), 0), s1=((1, 0), 0))

    def test_unconnected_pair_rejected(self):
        with pytest.raises(IllegalTransfer):
            apply_step(self.cfg, self.start, PlanStep(0, [(0, (1, 0), 0)]))

    def test_identity(self):
        assert apply_step(self.cfg, self.start, PlanStep()) == self.start

    # A destination is always connected to its source, so an occupied
    # destination or a chained move only arises from an already-invalid start.
    def test_occupied_destination(self):
        cfg = GridConfig(1, 3, 1)
        st_ = ws(0, s0=((0, 0), 0), s1=((0, 1), 0))
        with pytest.raises(IllegalTransfer, match="occupied"):
            apply_step(cfg, st_, PlanStep(0, [(0, (0, 1), 0)]))

    def test_no_chaining(self):
        cfg = GridConfig(1, 4, 1)
        st_ = ws(0, s0=((0, 0), 0), s1=((0, 1), 0))
        with pytest.raises(IllegalTransfer):
            apply_step(cfg, st_, PlanStep(0, [(0, (0, 1), 0), (1, (0, 2), 0)]))

    def test_shared_destination(self):
        cfg = GridConfig(1, 3, 1)
        st_ = ws(0, s0=((0, 0), 0), s1=((0, 2), 0))
        with pytest.raises(IllegalTransfer, match="two sensors"):
            apply_step(cfg, st_, PlanStep(0, [(0, (0, 1), 0), (1, (0, 1), 0)]))

    def test_post_state_invalid(self):
        cfg = GridConfig(1, 3, 1)
        st_ = ws(0, s0=((0, 0), 0), s1=((0, 2), 0))
        with pytest.raises(PostStateInvalid):
            apply_step(cfg, st_, PlanStep(0, [(0, (0, 1), 0)]))

    def test_rotation_blocked_reports_slot_index(self):
        cfg = GridConfig(1, 2, 4)
        # channel 1 on (0,0) is horizontal at offset 3, channel 3 on (0,1) at offset 3
        st_ = ws(1, s0=((0, 0), 1), s1=((0, 1), 3))
        with pytest.raises(RotationBlocked) as exc:
            apply_step(cfg, st_, PlanStep(2, []))
        assert exc.value.slot_index == 1

    def test_duplicate_sensor(self):
        with pytest.raises(IllegalTransfer):
            apply_step(self.cfg, self.start, PlanStep(0, [(0, (0, 1), 0), (0, (0, 1), 0)]))


class TestCapacity:
    @pytest.mark.parametrize("dims, cap", [((3, 3, 4), 20), ((2, 2, 1), 2), ((4, 4, 2), 16), ((1, 2, 1), 1), ((3, 4, 3), 18)])
    def test_values(self, dims, cap):
        assert capacity(GridConfig(*dims)) == cap


@pytest.mark.parametrize("rows, cols, C", [(r, c, C) for r in range(1, 6) for c in range(1, 6) for C in (1, 2, 4)])
def test_checkerboard_safety(rows, cols, C):
    cfg = GridConfig(rows, cols, C)
    placed = {}
    for r in range(rows):
        for c in range(cols):
            if (r + c) % 2 == 0:
                for k in range(C):
                    placed[len(placed)] = ((r, c), k)
    assert len(placed) == capacity(cfg)
    for o in range(cfg.slot_count):
        state = WorldState(o, placed)
        assert validate_state(cfg, state) == []
        for d in (1, -1):
            legal_rotation(cfg, state, d)


# -- property tests -------------------------------------------------------------


@st.composite
def configs_and_states(draw):
    rows = draw(st.integers(1, 4))
    cols = draw(st.integers(1, 4))
    C = draw(st.sampled_from([1, 2, 3, 4]))
    cfg = GridConfig(rows, cols, C)
    geo = geometry(cfg)
    offset = draw(st.integers(0, cfg.slot_count - 1))
    slots = draw(st.lists(st.integers(0, cfg.n_slots - 1), unique=True, max_size=min(cfg.n_slots, 8)))
    # keep only valid states: drop sensors until the pair check passes
    kept = []
    for s in slots:
        if geo.is_valid(set(kept) | {s}, offset):
            kept.append(s)
    return cfg, WorldState(offset, {i: geo.slot_of(s) for i, s in enumerate(kept)})


@settings(max_examples=300, deadline=None)
@given(configs_and_states(), st.sampled_from([1, -1]))
def test_rotation_reversible(cs, d):
    cfg, state = cs
    try:
        out = legal_rotation(cfg, state, d)
    except RotationBlocked:
        return
    assert legal_rotation(cfg, out, -d) == state
    assert validate_state(cfg, out) == []


@settings(max_examples=300, deadline=None)
@given(configs_and_states(), st.data())
def test_transfer_reversible_and_conserving(cs, data):
    cfg, state = cs
    if not state.placements:
        return
    geo = geometry(cfg)
    occ = {geo.slot_index(s) for _, s in state.placements}
    moves = []
    for sid, slot in state.placements:
        src = geo.slot_index(slot)
        for t in geo.partner_lists[state.offset][src]:
            if t not in occ:
                moves.append((sid, src, t))
    if not moves:
        return
    sid, src, dst = data.draw(st.sampled_from(moves))
    step = PlanStep(0, [(sid, *geo.slot_of(dst))])
    try:
        out = apply_step(cfg, state, step)
    except PostStateInvalid:
        return
    assert len(out.placements) == len(state.placements)
    assert len({s for _, s in out.placements}) == len(out.placements)
    back = apply_step(cfg, out, PlanStep(0, [(sid, *geo.slot_of(src))]))
    assert back == state
