import random

import numpy as np
import pytest

from bomberbots import engine as E
from bomberbots import bitboard as B
from bomberbots import fastcore as F
from bomberbots.arena.maps import MapSpec, generate_map


@pytest.fixture(scope="module", autouse=True)
def _warm():
    F.warmup()


class TestArrayBridge:
    def test_round_trip(self, playout_states):
        for gs in playout_states[:40]:
            b = B.from_state(gs)
            assert F.from_array(F.to_array(b)) == b

    def test_bomb_capacity_guard(self):
        gs = generate_map(MapSpec(seed=1, players=2))
        b = B.from_state(gs)
        bucket = tuple((i, 0, 3) for i in range(0, 2 * F.MAX_BOMBS + 2, 2))
        b = b.copy()
        b.buckets = (bucket,) + ((),) * 7
        with pytest.raises(ValueError):
            F.to_array(b)


class TestCompiledStepEquivalence:
    def run_parity(self, players, seeds):
        rng = random.Random(players * 101)
        for seed in seeds:
            gs = generate_map(MapSpec(seed=seed, players=players))
            bs = B.from_state(gs)
            while E.is_terminal(gs) is None:
                acts = {p.id: rng.choice(E.legal_actions(gs, p.id))
                        for p in gs.players if p.alive}
                gs, _ = E.step(gs, acts)
                fast = F.fast_step(bs, acts)
                bs, _ = B.bit_step(bs, acts)
                assert fast == bs
                assert B.to_state(bs) == gs

    def test_two_players(self):
        self.run_parity(2, range(500, 506))

    def test_three_players(self):
        self.run_parity(3, range(600, 605))

    def test_four_players(self):
        self.run_parity(4, range(700, 705))


class TestLegalCodes:
    def test_matches_pure_engine(self, playout_states):
        out = np.empty(10, dtype=np.int64)
        for gs in playout_states[:60]:
            b = B.from_state(gs)
            a = F.to_array(b)
            for p in gs.players:
                if not p.alive:
                    continue
                k = F._legal_codes(a, p.id, out)
                got = [int(c) for c in out[:k]]
                want = [act.code for act in B.bit_legal_actions(b, p.id)]
                assert got == want


class TestProtocol:
    def test_fixed_step_chunk_deterministic(self):
        gs = generate_map(MapSpec(seed=17, players=2))
        fix = F.to_array(B.from_state(gs))
        results = []
        for _ in range(2):
            work = fix.copy()
            scratch = np.zeros(15, dtype=np.uint64)
            F._seed(99)
            done, since = F._protocol_chunk(fix, work, scratch, 0, 4000, 15)
            results.append((done, since, work.tobytes()))
        assert results[0] == results[1]

    def test_counts_scale_with_duration(self):
        gs = generate_map(MapSpec(seed=17, players=2))
        b = B.from_state(gs)
        short = F.run_protocol(b, 0.05, seed=3)
        long = F.run_protocol(b, 0.2, seed=3)
        assert long > short * 2
