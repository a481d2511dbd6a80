import random

import pytest

from bomberbots import engine as E
from bomberbots import evaluation as V
from bomberbots.bitboard import from_state
from bomberbots.engine import Action, Bomb, Cell, Item, ItemKind, Move, STAY
from bomberbots.arena.maps import MapSpec, generate_map
from conftest import make_players


# ---------------------------------------------------------------------------
# independent oracles (reference engine, exhaustive search)
# ---------------------------------------------------------------------------

def estimated_oracle(state, player, gamma=0.95, current_depth=0):
    """Frozen-world simulation on the reference engine."""
    total = 0.0
    d = 0
    while state.bombs:
        d += 1
        state, ev = E.step(state, {})
        total += ev.boxes_destroyed_by[player] * gamma ** (current_depth + d)
    return total


def survivable_oracle(state, player):
    """Exhaustive 8-ply search over movement-only actions, frozen opponents."""
    failed = set()

    def rec(s, t):
        p = s.players[player]
        if not p.alive:
            return False
        if t == 8:
            return True
        key = (p.x, p.y, t)
        if key in failed:
            return False
        for a in E.legal_actions(s, player):
            if a.drop:
                continue
            s2, _ = E.step(s, {player: a})
            if rec(s2, t + 1):
                return True
        failed.add(key)
        return False

    return rec(state, 0)


def can_kill_oracle(state, att, vic):
    """Literal 2-ply minimax; a leaf kills if the victim is dead or sealed."""
    def leaf_dead(s1, a2, v2):
        acts = {vic: v2}
        if a2 is not None:
            acts[att] = a2
        s2, _ = E.step(s1, acts)
        if not s2.players[vic].alive:
            return True
        return not survivable_oracle(s2, vic)

    def line_kills(a1, v1):
        s1, _ = E.step(state, {att: a1, vic: v1})
        if not s1.players[vic].alive:
            return True
        for a2 in E.legal_actions(s1, att) or [None]:
            if all(leaf_dead(s1, a2, v2) for v2 in E.legal_actions(s1, vic)):
                return True
        return False

    for a1 in E.legal_actions(state, att):
        if all(line_kills(a1, v1) for v1 in E.legal_actions(state, vic)):
            return True
    return False


def dangerous_states(seed, count, players=2):
    """Random reachable states, biased toward live-bomb situations."""
    rng = random.Random(seed)
    out = []
    g = 0
    while len(out) < count:
        gs = generate_map(MapSpec(seed=seed * 131 + g, players=players))
        g += 1
        for _ in range(120):
            if E.is_terminal(gs) is not None:
                break
            acts = {p.id: rng.choice(E.legal_actions(gs, p.id))
                    for p in gs.players if p.alive}
            gs, _ = E.step(gs, acts)
            if gs.bombs or rng.random() < 0.15:
                out.append(gs.copy())
                if len(out) >= count:
                    break
    return out


class TestEstimatedBombs:
    def test_no_bombs_zero(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        assert V.estimated_bombs(state, 0) == 0.0

    def test_single_bomb_one_box(self):
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(0, 2, 0, 8, 3)])
        state.grid[0][4] = Cell.BOX
        got = V.estimated_bombs(state, 0)
        assert got == pytest.approx(0.95 ** 8, abs=1e-12)
        assert got == pytest.approx(estimated_oracle(state, 0), abs=1e-12)

    def test_chain_triggered_bomb_decays_at_trigger_turn(self):
        # timer-3 bomb chains the player's timer-8 bomb at offset 3
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(1, 2, 0, 3, 3), Bomb(0, 4, 0, 8, 3)])
        state.grid[0][6] = Cell.BOX
        state.grid[1][4] = Cell.BOX
        got = V.estimated_bombs(state, 0)
        assert got == pytest.approx(2 * 0.95 ** 3, abs=1e-12)
        assert got == pytest.approx(estimated_oracle(state, 0), abs=1e-12)

    def test_current_depth_shifts_decay(self):
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(0, 2, 0, 8, 3)])
        state.grid[0][4] = Cell.BOX
        base = V.estimated_bombs(state, 0)
        assert V.estimated_bombs(state, 0, current_depth=2) == pytest.approx(
            base * 0.95 ** 2, abs=1e-12)

    def test_zero_iff_no_boxes_destroyed(self, playout_states):
        for gs in playout_states[:60]:
            got = V.estimated_bombs(gs, 0)
            want = estimated_oracle(gs.copy(), 0)
            assert got == pytest.approx(want, abs=1e-12)
            assert (got == 0.0) == (want == 0.0)


class TestIsSurvivable:
    def test_empty_board(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        assert V.is_survivable(state, 0) is True

    def test_sealed_pocket(self):
        state = E.make_state(
            make_players([(0, 0), (12, 10)]),
            bombs=[Bomb(0, 1, 0, 1, 2), Bomb(0, 0, 1, 1, 2)],
        )
        assert V.is_survivable(state, 0) is False
        assert survivable_oracle(state, 0) is False

    def test_distant_bomb(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]),
                             bombs=[Bomb(1, 8, 8, 1, 3)])
        assert V.is_survivable(state, 0) is True

    def test_walled_trap_with_long_timer(self):
        # boxes seal (0,0); a timer-8 bomb at (1,0) covers the pocket
        state = E.make_state(make_players([(0, 0), (12, 10)]),
                             bombs=[Bomb(1, 1, 0, 8, 3)])
        state.grid[1][0] = Cell.BOX
        assert V.is_survivable(state, 0) is False
        assert survivable_oracle(state, 0) is False

    def test_matches_exhaustive_oracle(self):
        states = dangerous_states(seed=71, count=150)
        for gs in states:
            for p in gs.players:
                if p.alive:
                    assert V.is_survivable(gs, p.id) == survivable_oracle(gs, p.id)


class TestCanKill:
    def test_far_apart_no_bombs(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        assert V.can_kill(state, 0, 1) is False

    def test_dead_end_trap(self):
        # victim sealed at (0,0) by a box below; attacker drops at (1,0)
        state = E.make_state(make_players([(1, 0), (0, 0)]))
        state.grid[1][0] = Cell.BOX
        assert V.can_kill(state, 0, 1) is True
        assert can_kill_oracle(state, 0, 1) is True

    def test_no_inventory_no_threat(self):
        state = E.make_state(make_players([(1, 0), (0, 0)], bombs_available=0))
        state.grid[1][0] = Cell.BOX
        assert V.can_kill(state, 0, 1) is False

    def test_matches_minimax_oracle(self):
        states = dangerous_states(seed=72, count=50)
        for gs in states:
            alive = [p.id for p in gs.players if p.alive]
            if len(alive) < 2:
                continue
            att, vic = alive[0], alive[1]
            assert V.can_kill(gs, att, vic) == can_kill_oracle(gs, att, vic)


class TestEvaluate:
    def test_fresh_player_component_sum(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        state.players[1].alive = False
        state.players[1].elimination_turn = 0
        got = V.evaluate(state, 0)
        assert got == pytest.approx(0.9 * 3 + 0.4 * 3, abs=1e-9)  # 3.9

    def test_grown_player_components(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        state.players[1].alive = False
        state.players[1].elimination_turn = 0
        state.players[0].blast_range = 6
        state.players[0].max_bombs = 4
        got = V.evaluate(state, 0)
        item2 = 0.9 * 5 + 0.4 * 6           # 6.9
        item3 = 3.4 * 2 + 1.7 * 3 + 0.7 * 3  # 14.0
        assert item2 == pytest.approx(6.9, abs=1e-9)
        assert item3 == pytest.approx(14.0, abs=1e-9)
        assert got == pytest.approx(item2 + item3, abs=1e-9)

    def test_dead_player_with_zeroed_stats(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        state.players[0].alive = False
        state.players[0].elimination_turn = 0
        state.players[0].blast_range = 0
        state.players[1].alive = False
        state.players[1].elimination_turn = 0
        assert V.evaluate(state, 0) == pytest.approx(-1000.0, abs=1e-9)

    def test_opponent_spacing_and_center_pull(self):
        state = generate_map(MapSpec(seed=4, players=2))
        boxes = state.boxes_remaining()
        assert boxes > 20
        got = V.evaluate(state, 0)
        expected = (3.9 + V.estimated_bombs(state, 0)
                    + 0.05 * (12 + 10) - 0.04 * (6 + 5))
        assert got == pytest.approx(expected, abs=1e-9)

    def test_few_boxes_mean_distance_branch(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        state.players[1].alive = False
        state.players[1].elimination_turn = 0
        state.grid[0][4] = Cell.BOX
        state.grid[2][0] = Cell.BOX
        got = V.evaluate(state, 0)
        mean_dist = (4 + 2) / 2
        assert got == pytest.approx(3.9 - 0.1 * mean_dist, abs=1e-9)

    def test_monotone_in_boxes_and_range(self):
        state = generate_map(MapSpec(seed=6, players=2))
        base = V.evaluate(state, 0, V.EvalContext(boxes_destroyed=2))
        more_boxes = V.evaluate(state, 0, V.EvalContext(boxes_destroyed=3))
        assert more_boxes > base
        grown = state.copy()
        grown.players[0].blast_range += 1
        assert V.evaluate(grown, 0, V.EvalContext(boxes_destroyed=2)) > base

    def test_pure_function_bit_identical(self):
        state = generate_map(MapSpec(seed=8, players=3))
        ctx = V.EvalContext(boxes_destroyed=1, decayed_boxes=0.9)
        a = V.evaluate(state, 1, ctx)
        b = V.evaluate(state.copy(), 1, ctx)
        assert a == b


class TestEvalContext:
    def test_decayed_never_exceeds_plain_count(self):
        rng = random.Random(3)
        gs = generate_map(MapSpec(seed=10, players=2))
        ctx = V.EvalContext()
        depth = 0
        while E.is_terminal(gs) is None and depth < 80:
            depth += 1
            acts = {p.id: rng.choice(E.legal_actions(gs, p.id))
                    for p in gs.players if p.alive}
            gs, ev = E.step(gs, acts)
            prev = ctx
            ctx = ctx.after(ev, 0, depth)
            assert ctx.decayed_boxes <= ctx.boxes_destroyed + 1e-12
            assert ctx.boxes_destroyed >= prev.boxes_destroyed

    def test_pickup_bookkeeping(self):
        ev = E.TurnEvents((0, 0), pickups=((0, ItemKind.EXTRA_BOMB),
                                           (1, ItemKind.EXTRA_RANGE)))
        ctx = V.EvalContext().after(ev, 0, 1)
        assert ctx.pickups_bomb == 1 and ctx.pickups_range == 0


class TestWeightsFile:
    def test_overrides_from_file(self, tmp_path):
        path = tmp_path / "weights.cfg"
        path.write_text("box_points = 2.5\n# comment\ndeath_penalty=-500\n")
        w = V.EvalWeights.from_file(path)
        assert w.box_points == 2.5
        assert w.death_penalty == -500.0
        assert w.range_capped == 0.9

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "weights.cfg"
        path.write_text("not_a_weight = 1\n")
        with pytest.raises(ValueError):
            V.EvalWeights.from_file(path)
