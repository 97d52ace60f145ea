import itertools

import pytest

from gearmatrix.core import GridConfig, WorldState, apply_step, validate_state
from gearmatrix.harness import generate_scenario
from gearmatrix.oracle import (
    G2_STATES,
    StateSpaceTooLarge,
    bfs_reach,
    check_capacity,
    check_checkerboard,
    check_g2,
    check_swap,
    checkerboard_safety,
    checkerboard_states,
    class_projection,
    dijkstra_optimal_cost,
    rotation_safe,
    state_space_estimate,
)
from gearmatrix.planner import Scenario

G2 = GridConfig(2, 2, 1)


def replay(config, start, steps):
    st = start
    for s in steps:
        st = apply_step(config, st, s)
        assert validate_state(config, st) == []
    return st


def independent_subsets(rows, cols, m):
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    out = []
    for sub in itertools.combinations(cells, m):
        s = set(sub)
        if not any((r + 1, c) in s or (r, c + 1) in s for r, c in sub):
            out.append(sub)
    return out


class TestBfs:
    def test_g2_swap_two_steps(self):
        stats = bfs_reach(G2, G2_STATES[0], G2_STATES[3])
        assert stats.optimal_steps == 2
        assert replay(G2, G2_STATES[0], stats.witness).placements == G2_STATES[3].placements

    def test_trivial(self):
        stats = bfs_reach(G2, G2_STATES[0], G2_STATES[0])
        assert stats.optimal_steps == 0 and stats.witness == ()

    def test_single_sensor_reaches_every_gear(self):
        cfg = GridConfig(2, 3, 1)
        start = WorldState(0, {0: ((0, 0), 0)})
        for r in range(2):
            for c in range(3):
                assert bfs_reach(cfg, start, {0: ((r, c),)}).optimal_steps == r + c

    def test_symmetric_reachability(self):
        # steps are reversible, so reachability is symmetric
        cfg = GridConfig(2, 3, 1)
        for sc in (generate_scenario(cfg, 2, s) for s in range(6)):
            goal = WorldState(0, {sid: (t.gear, 0) for sid, t in sc.targets.items()})
            if validate_state(cfg, goal):
                continue
            a = bfs_reach(cfg, sc.start, goal).optimal_steps is not None
            b = bfs_reach(cfg, goal, sc.start).optimal_steps is not None
            assert a == b

    def test_guard(self):
        cfg = GridConfig(8, 8, 4)
        assert state_space_estimate(cfg, 6) > 10_000_000
        start = generate_scenario(cfg, 6, 1).start
        with pytest.raises(StateSpaceTooLarge):
            bfs_reach(cfg, start, start)


class TestDijkstra:
    def test_g2_swap(self):
        sc = Scenario(G2, G2_STATES[0], {0: ((1, 1),), 1: ((0, 0),)})
        assert dijkstra_optimal_cost(sc) == pytest.approx(2.62)

    def test_one_transfer(self):
        sc = Scenario(GridConfig(1, 2, 1), WorldState(0, {0: ((0, 0), 0)}), {0: ((0, 1),)})
        assert dijkstra_optimal_cost(sc) == pytest.approx(0.56)

    def test_one_rotation_then_transfer(self):
        sc = Scenario(GridConfig(2, 1, 1), WorldState(0, {0: ((0, 0), 0)}), {0: ((1, 0),)})
        assert dijkstra_optimal_cost(sc) == pytest.approx(0.94)


class TestClaims:
    def test_g2_holds(self):
        rep = check_g2()
        assert rep.holds
        steps = rep.details["steps"]
        assert all(steps[i][i] == 0 for i in range(4))
        assert all(steps[i][j] >= 1 for i in range(4) for j in range(4) if i != j)
        for key, plan in rep.witness.items():
            i, j = map(int, key.split("->"))
            assert replay(G2, G2_STATES[i], plan.steps).placements == G2_STATES[j].placements

    def test_swap_refuted_on_2x3(self):
        rep = check_swap()
        assert not rep.holds
        assert rep.details["reachable_count"] == 14
        assert rep.witness["start"] != rep.witness["unreached"]

    def test_2x3_has_two_independent_triples(self):
        # rotating with three single-channel sensors requires them to sit on
        # an independent set; 2x3 has exactly the two checkerboards
        subs = independent_subsets(2, 3, 3)
        assert sorted(subs) == [((0, 0), (0, 2), (1, 1)), ((0, 1), (1, 0), (1, 2))]

    def test_swap_holds_on_larger_grid(self):
        rep = check_swap(3, 3, 1)
        assert rep.holds
        start = WorldState(0, {0: ((0, 0), 0), 1: ((1, 1), 0), 2: ((0, 2), 0)})
        final = replay(GridConfig(3, 3, 1), start, rep.witness.steps)
        assert final.as_dict()[1] == ((1, 1), 0)

    def test_checkerboard_2x2_exhaustive(self):
        rep = check_checkerboard(G2)
        assert rep.holds and rep.details["mode"] == "exhaustive"
        # two colours times two labelings
        assert rep.details["states"] == 4 and rep.details["pairs_checked"] == 12

    def test_checkerboard_3x3_frozen(self):
        cfg = GridConfig(3, 3, 1)
        rep = check_checkerboard(cfg, pairs=50, seed=1)
        assert not rep.holds
        assert rep.details["mode"] == "sampled" and rep.details["pairs_checked"] == 50
        start = checkerboard_states(cfg, labeled=False)[0]
        stats = bfs_reach(cfg, start, lambda s: False)
        assert stats.reachable_count == 6

    def test_checkerboard_guard(self):
        with pytest.raises(StateSpaceTooLarge):
            check_checkerboard(GridConfig(9, 9, 1))
        with pytest.raises(StateSpaceTooLarge):
            check_checkerboard(GridConfig(2, 2, 4))

    def test_capacity_2x2(self):
        rep = check_capacity(G2, trials=4)
        assert rep.details["capacity"] == 2
        assert rep.details["over_capacity_rotation_safe"] == 0

    def test_report_json(self):
        doc = check_swap().to_json()
        assert doc["claim"] == "swap" and doc["holds"] is False
        assert doc["witness"]["start"]["rotation_offset"] == 0


class TestSafety:
    @pytest.mark.parametrize("C", [1, 2, 4])
    def test_checkerboards(self, C):
        for r in range(1, 6):
            for c in range(1, 6):
                res = checkerboard_safety(GridConfig(r, c, C))
                assert res["valid_all_offsets"] and res["rotations_legal"]

    def test_over_capacity_never_safe(self):
        cfg = GridConfig(2, 3, 1)
        cells = [(r, c) for r in range(2) for c in range(3)]
        for sub in itertools.combinations(cells, 4):
            assert not rotation_safe(cfg, WorldState(0, {i: (g, 0) for i, g in enumerate(sub)}))

    def test_safe_matches_independence(self):
        cfg = GridConfig(2, 3, 1)
        cells = [(r, c) for r in range(2) for c in range(3)]
        for m in range(4):
            ind = set(independent_subsets(2, 3, m))
            for sub in itertools.combinations(cells, m):
                st = WorldState(0, {i: (g, 0) for i, g in enumerate(sub)})
                assert rotation_safe(cfg, st) == (sub in ind)


class TestProjection:
    def test_solvable_instance(self):
        sc = generate_scenario(GridConfig(3, 3, 4), 4, 2)
        assert all(class_projection(sc).values())

    def test_frozen_class(self):
        cfg = GridConfig(3, 3, 1)
        st = checkerboard_states(cfg, labeled=False)[0]
        ids = [sid for sid, _ in st.placements]
        gears = [s.gear for _, s in st.placements]
        targets = {ids[0]: (gears[1],), ids[1]: (gears[0],)}
        targets.update({i: (g,) for i, g in zip(ids[2:], gears[2:])})
        assert class_projection(Scenario(cfg, st, targets)) == {0: False}
