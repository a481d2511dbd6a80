import random

from bomberbots import engine as E
from bomberbots import bitboard as B
from bomberbots.engine import Bomb, STAY
from bomberbots.arena.maps import MapSpec, generate_map
from conftest import make_players, open_state


def cells_of(plane):
    out = set()
    i = 0
    while plane:
        if plane & 1:
            out.add((i % E.WIDTH, i // E.WIDTH))
        plane >>= 1
        i += 1
    return out


class TestMasks:
    def test_open_cross_has_nine_bits(self):
        assert B.MASKS.mask(B.cell_index(6, 4), 3).bit_count() == 9

    def test_range_one_single_bit(self):
        for cell in (0, B.cell_index(6, 4), B.cell_index(12, 10)):
            assert B.MASKS.mask(cell, 1) == B.BIT[cell]

    def test_corner_mask_matches_reference_enumeration(self):
        state = open_state()
        ref = E.blast_cells(state, Bomb(0, 0, 0, 8, 3))
        assert cells_of(B.MASKS.mask(B.cell_index(0, 0), 3)) == ref

    def test_masks_never_include_walls(self):
        for cell in range(B.N_CELLS):
            if B.WALLS >> cell & 1:
                continue
            for r in (1, 3, 6, 13):
                assert B.MASKS.mask(cell, r) & B.WALLS == 0

    def test_masks_equal_reference_blasts_everywhere(self):
        state = open_state()
        for cell in range(B.N_CELLS):
            x, y = cell % E.WIDTH, cell // E.WIDTH
            if E.is_wall(x, y):
                continue
            for r in (1, 2, 3, 5, 9):
                ref = E.blast_cells(state, Bomb(0, x, y, 8, r))
                assert cells_of(B.MASKS.mask(cell, r)) == ref, (cell, r)


class TestRoundTrip:
    def test_initial_map_identity(self):
        gs = generate_map(MapSpec(seed=12, players=4))
        assert B.to_state(B.from_state(gs)) == gs

    def test_round_trip_after_random_steps(self, playout_states):
        for gs in playout_states:
            b = B.from_state(gs)
            assert B.from_state(B.to_state(b)) == b

    def test_stats_preserved(self):
        gs = generate_map(MapSpec(seed=12, players=2))
        gs.players[0].boxes_destroyed = 7
        gs.players[1].blast_range = 9
        gs.players[1].alive = False
        gs.players[1].elimination_turn = 13
        back = B.to_state(B.from_state(gs))
        assert back.players[0].boxes_destroyed == 7
        assert back.players[1].blast_range == 9
        assert back.players[1].elimination_turn == 13

    def test_padding_bits_zero(self, playout_states):
        for gs in playout_states:
            b = B.from_state(gs)
            for plane in (b.boxes, b.box_r, b.box_b, b.item_r, b.item_b, b.bombs):
                assert plane & ~B.FULL == 0


class TestPropagateBlasts:
    def reference_closure(self, gs):
        _, ev = E.resolve_explosions(gs)
        union = set()
        for owner, x, y, timer, rng in ev.bombs_exploded:
            union |= E.blast_cells(gs, Bomb(owner, x, y, timer, rng))
        return union

    def test_empty_when_no_timer_one(self):
        gs = E.make_state(make_players([(0, 0), (12, 10)]),
                          bombs=[Bomb(0, 2, 0, 5, 3)])
        assert B.propagate_blasts(B.from_state(gs)) == 0

    def test_two_bomb_chain_union(self):
        gs = E.make_state(make_players([(0, 10), (12, 10)]),
                          bombs=[Bomb(0, 2, 0, 1, 3), Bomb(1, 4, 0, 8, 3)])
        plane = B.propagate_blasts(B.from_state(gs))
        assert cells_of(plane) == self.reference_closure(gs)

    def test_matches_reference_closure_on_random_states(self):
        rng = random.Random(999)
        checked = 0
        for g in range(40):
            gs = generate_map(MapSpec(seed=3000 + g, players=2 + g % 3))
            for _ in range(60):
                if E.is_terminal(gs) is not None:
                    break
                acts = {p.id: rng.choice(E.legal_actions(gs, p.id))
                        for p in gs.players if p.alive}
                gs, _ = E.step(gs, acts)
                if gs.bombs:
                    plane = B.propagate_blasts(B.from_state(gs))
                    assert cells_of(plane) == self.reference_closure(gs)
                    checked += 1
        assert checked > 200


class TestStepEquivalence:
    def run_parity(self, players, seeds, max_turns=200):
        rng = random.Random(players * 31337)
        for seed in seeds:
            gs = generate_map(MapSpec(seed=seed, players=players))
            bs = B.from_state(gs)
            for t in range(max_turns):
                if E.is_terminal(gs) is not None:
                    break
                acts = {}
                for p in gs.players:
                    la = E.legal_actions(gs, p.id)
                    assert la == B.bit_legal_actions(bs, p.id)
                    if la:
                        acts[p.id] = rng.choice(la)
                gs, ev_ref = E.step(gs, acts)
                bs, ev_bit = B.bit_step(bs, acts)
                assert ev_ref == ev_bit
                assert B.to_state(bs) == gs

    def test_two_players(self):
        self.run_parity(2, range(100, 110))

    def test_three_players(self):
        self.run_parity(3, range(200, 208))

    def test_four_players(self):
        self.run_parity(4, range(300, 308))

    def test_all_stay_noop_parity(self):
        gs = generate_map(MapSpec(seed=8, players=2))
        bs = B.from_state(gs)
        out_ref, _ = E.step(gs, {0: STAY, 1: STAY})
        out_bit, _ = B.bit_step(bs, {0: STAY, 1: STAY})
        assert B.to_state(out_bit) == out_ref

    def test_sequence_actions_match_mapping(self):
        gs = generate_map(MapSpec(seed=8, players=2))
        bs = B.from_state(gs)
        a = E.ALL_ACTIONS[3]
        via_map, _ = B.bit_step(bs, {0: a, 1: STAY})
        via_seq, _ = B.bit_step(bs, [a, STAY])
        assert via_map == via_seq
        ref_map, _ = E.step(gs, {0: a, 1: STAY})
        ref_seq, _ = E.step(gs, [a, STAY])
        assert ref_map == ref_seq
