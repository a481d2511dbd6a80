"""Zobrist hashing of game states: XOR-composable 64-bit digests.

Used by the beam search to merge duplicate states inside a level, with
incremental rehashing along a step. Keys are fixed-seed so hashes (and any
hash-based tie-breaks) are identical across runs and processes.
"""

from __future__ import annotations

import random

from .bitboard import BitState, from_state
from .engine import GameState

ZOBRIST_SEED = 0x5EEDB0A2D

_N_CELLS = 143
_STAT_CAP = 32  # stat keys cover values 0..31; larger values clamp


class ZobristKeys:
    """Independently seeded 64-bit keys for every hashable state feature.

    A state's hash is the XOR of the keys of all present features: box
    variant per cell, item kind per cell, bomb presence per cell plus a
    per-cell timer key, player-position keys, a dead flag per player, and
    small-integer keys for each player's blast range and bomb capacity.
    Fixed seed, so hashes (and beam tie-breaks) are stable across runs.

    The timer key is indexed by the bomb's explosion turn modulo 16
    rather than the raw countdown. Within one beam level every node
    shares the turn counter, so the two indexings distinguish exactly the
    same states; across a step, a surviving bomb keeps its key, which
    makes the incremental rehash touch only exploded and placed bombs.
    """

    def __init__(self, seed: int = ZOBRIST_SEED):
        rng = random.Random(seed)

        def keys(count):
            return tuple(rng.getrandbits(64) for _ in range(count))

        self.box_empty = keys(_N_CELLS)
        self.box_range = keys(_N_CELLS)
        self.box_bomb = keys(_N_CELLS)
        self.item_range = keys(_N_CELLS)
        self.item_bomb = keys(_N_CELLS)
        self.bomb_cell = keys(_N_CELLS)
        self.bomb_timer = tuple(keys(16) for _ in range(_N_CELLS))
        self.player_cell = tuple(keys(_N_CELLS) for _ in range(4))
        self.player_dead = keys(4)
        self.stat_range = tuple(keys(_STAT_CAP) for _ in range(4))
        self.stat_bombs = tuple(keys(_STAT_CAP) for _ in range(4))


KEYS = ZobristKeys()


def _xor_plane(h: int, plane: int, keys: tuple) -> int:
    while plane:
        bit = plane & -plane
        plane ^= bit
        h ^= keys[bit.bit_length() - 1]
    return h


def zobrist_hash(state: GameState | BitState) -> int:
    """Full 64-bit digest of a state (see :class:`ZobristKeys`)."""
    b = state if isinstance(state, BitState) else from_state(state)
    k = KEYS
    h = 0
    box_plain = b.boxes & ~b.box_r & ~b.box_b
    h = _xor_plane(h, box_plain, k.box_empty)
    h = _xor_plane(h, b.box_r, k.box_range)
    h = _xor_plane(h, b.box_b, k.box_bomb)
    h = _xor_plane(h, b.item_r, k.item_range)
    h = _xor_plane(h, b.item_b, k.item_bomb)
    for t, bucket in enumerate(b.buckets):
        boom_turn = (b.turn + t + 1) & 15
        for cell, _owner, _rng in bucket:
            h ^= k.bomb_cell[cell] ^ k.bomb_timer[cell][boom_turn]
    for p in range(b.n):
        h ^= k.player_cell[p][b.pos[p]]
        if not (b.alive >> p) & 1:
            h ^= k.player_dead[p]
        h ^= k.stat_range[p][min(b.brange[p], _STAT_CAP - 1)]
        h ^= k.stat_bombs[p][min(b.maxb[p], _STAT_CAP - 1)]
    return h


def zobrist_update(parent_hash: int, parent: BitState, child: BitState) -> int:
    """Incremental rehash: XOR out vanished features, XOR in new ones."""
    k = KEYS
    h = parent_hash
    pp = parent.boxes & ~parent.box_r & ~parent.box_b
    cp = child.boxes & ~child.box_r & ~child.box_b
    h = _xor_plane(h, pp ^ cp, k.box_empty)
    h = _xor_plane(h, parent.box_r ^ child.box_r, k.box_range)
    h = _xor_plane(h, parent.box_b ^ child.box_b, k.box_bomb)
    h = _xor_plane(h, parent.item_r ^ child.item_r, k.item_range)
    h = _xor_plane(h, parent.item_b ^ child.item_b, k.item_bomb)
    # surviving bombs keep their explosion-turn key; only the diff matters
    exploded = parent.bombs & ~child.bombs
    if exploded:
        for t, bucket in enumerate(parent.buckets):
            boom_turn = (parent.turn + t + 1) & 15
            for cell, _owner, _rng in bucket:
                if (exploded >> cell) & 1:
                    h ^= k.bomb_cell[cell] ^ k.bomb_timer[cell][boom_turn]
    placed = child.bombs & ~parent.bombs
    if placed:
        boom_turn = (child.turn + 8) & 15  # fresh bomb, timer 8
        while placed:
            bit = placed & -placed
            placed ^= bit
            cell = bit.bit_length() - 1
            h ^= k.bomb_cell[cell] ^ k.bomb_timer[cell][boom_turn]
    for p in range(parent.n):
        if parent.pos[p] != child.pos[p]:
            h ^= k.player_cell[p][parent.pos[p]] ^ k.player_cell[p][child.pos[p]]
        if ((parent.alive ^ child.alive) >> p) & 1:
            h ^= k.player_dead[p]
        if parent.brange[p] != child.brange[p]:
            h ^= k.stat_range[p][min(parent.brange[p], _STAT_CAP - 1)]
            h ^= k.stat_range[p][min(child.brange[p], _STAT_CAP - 1)]
        if parent.maxb[p] != child.maxb[p]:
            h ^= k.stat_bombs[p][min(parent.maxb[p], _STAT_CAP - 1)]
            h ^= k.stat_bombs[p][min(child.maxb[p], _STAT_CAP - 1)]
    return h
