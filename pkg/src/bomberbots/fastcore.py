"""Compiled backend of the bitwise engine (numba).

Same game semantics as :mod:`bomberbots.bitboard`, with the state flattened
into one ``uint64`` vector (three 64-bit words per 143-cell plane, fixed
slots for counters and up to 48 bomb records) so the whole step runs as
native code. The ray masks are baked from the verified pure-Python tables,
which pins both implementations to one blast geometry by construction.

Used where raw simulation throughput is the point, first of all the
engine benchmark; the pure-Python planes remain the agent-facing surface.
The equivalence suite replays random games through the reference engine,
the pure bit engine, and this backend, and requires identical states.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, int64

from . import bitboard as BB
from .bitboard import BitState, CELL_X, CELL_Y, MAX_RANGE, N_CELLS, RAYS
from .engine import BOMB_TIMER, ENDGAME_COUNTDOWN, WIDTH

MASK64 = (1 << 64) - 1
NO_COUNTDOWN = 1 << 32
MAX_BOMBS = 48

# ---- state layout (uint64 slots) -------------------------------------------
BOXES, BOX_R, BOX_B, ITEM_R, ITEM_B, BOMBS = 0, 3, 6, 9, 12, 15
NPLAYERS, TURN, COUNTDOWN, ALIVE = 18, 19, 20, 21
POS, AVAIL, MAXB, BRANGE, SCORE, ELIM = 22, 26, 30, 34, 38, 42
BOMB_COUNT = 46
BOMB_RECS = 47  # (cell, owner, range, timer) x MAX_BOMBS
STATE_SIZE = BOMB_RECS + 4 * MAX_BOMBS


def _plane_words(plane: int) -> tuple[int, int, int]:
    return (plane & MASK64, (plane >> 64) & MASK64, (plane >> 128) & MASK64)


def _build_tables():
    ray = np.zeros((MAX_RANGE + 1, N_CELLS, 4, 3), dtype=np.uint64)
    cross = np.zeros((MAX_RANGE + 1, N_CELLS, 3), dtype=np.uint64)
    for r in range(1, MAX_RANGE + 1):
        for cell in range(N_CELLS):
            full = BB.BIT[cell]
            for d, (cum, _inc) in enumerate(RAYS[cell]):
                m = cum[min(r - 1, len(cum) - 1)]
                full |= m
                ray[r, cell, d] = _plane_words(m)
            cross[r, cell] = _plane_words(full)
    walls = np.array(_plane_words(BB.WALLS), dtype=np.uint64)
    moves = np.full((N_CELLS, 5), -1, dtype=np.int64)
    for cell in range(N_CELLS):
        for m in range(5):
            moves[cell, m] = BB.MOVE_TARGETS[cell][m]
    return ray, cross, walls, moves


RAY_W, CROSS_W, WALL_W, MOVE_T = _build_tables()

def to_array(b: BitState) -> np.ndarray:
    """Flatten a BitState into the compiled-core layout."""
    a = np.zeros(STATE_SIZE, dtype=np.uint64)
    for base, plane in ((BOXES, b.boxes), (BOX_R, b.box_r), (BOX_B, b.box_b),
                        (ITEM_R, b.item_r), (ITEM_B, b.item_b), (BOMBS, b.bombs)):
        a[base:base + 3] = _plane_words(plane)
    a[NPLAYERS] = b.n
    a[TURN] = b.turn
    a[COUNTDOWN] = NO_COUNTDOWN if b.countdown < 0 else b.countdown
    a[ALIVE] = b.alive
    for p in range(b.n):
        a[POS + p] = b.pos[p]
        a[AVAIL + p] = b.avail[p]
        a[MAXB + p] = b.maxb[p]
        a[BRANGE + p] = b.brange[p]
        a[SCORE + p] = b.scores[p]
        a[ELIM + p] = 0 if b.elim[p] < 0 else b.elim[p] + 1
    recs = [rec + (t + 1,) for t, bucket in enumerate(b.buckets) for rec in bucket]
    if len(recs) > MAX_BOMBS:
        raise ValueError(f"too many bombs for the compiled core: {len(recs)}")
    a[BOMB_COUNT] = len(recs)
    for i, (cell, owner, rng, timer) in enumerate(recs):
        a[BOMB_RECS + 4 * i:BOMB_RECS + 4 * i + 4] = (cell, owner, rng, timer)
    return a


def from_array(a: np.ndarray) -> BitState:
    def plane(base):
        return int(a[base]) | (int(a[base + 1]) << 64) | (int(a[base + 2]) << 128)

    n = int(a[NPLAYERS])
    buckets = [[] for _ in range(BOMB_TIMER)]
    for i in range(int(a[BOMB_COUNT])):
        cell, owner, rng, timer = (int(v) for v in a[BOMB_RECS + 4 * i:BOMB_RECS + 4 * i + 4])
        buckets[timer - 1].append((cell, owner, rng))
    for bucket in buckets:
        bucket.sort()
    countdown = int(a[COUNTDOWN])
    return BitState(
        n, plane(BOXES), plane(BOX_R), plane(BOX_B), plane(ITEM_R),
        plane(ITEM_B), plane(BOMBS), tuple(tuple(b) for b in buckets),
        tuple(int(a[POS + p]) for p in range(n)), int(a[ALIVE]),
        tuple(int(a[AVAIL + p]) for p in range(n)),
        tuple(int(a[MAXB + p]) for p in range(n)),
        tuple(int(a[BRANGE + p]) for p in range(n)),
        tuple(int(a[SCORE + p]) for p in range(n)),
        tuple(int(a[ELIM + p]) - 1 for p in range(n)),
        int(a[TURN]), -1 if countdown == NO_COUNTDOWN else countdown,
    )


@njit(uint64(uint64), cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> uint64(1)) & uint64(0x5555555555555555))
    x = (x & uint64(0x3333333333333333)) + ((x >> uint64(2)) & uint64(0x3333333333333333))
    x = (x + (x >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F)
    return (x * uint64(0x0101010101010101)) >> uint64(56)


@njit(uint64(uint64), cache=True, inline="always")
def _highbit(x):
    x |= x >> uint64(1)
    x |= x >> uint64(2)
    x |= x >> uint64(4)
    x |= x >> uint64(8)
    x |= x >> uint64(16)
    x |= x >> uint64(32)
    return x - (x >> uint64(1))


@njit(cache=True, inline="always")
def _getbit(a, base, idx):
    return (a[base + (idx >> 6)] >> uint64(idx & 63)) & uint64(1)


@njit(cache=True)
def _blast(cell, rng, ob0, ob1, ob2, out):
    """Blast words of one bomb against obstacle words, accumulated into out."""
    r = rng
    if r > 13:
        r = 13
    c0 = CROSS_W[r, cell, 0]
    c1 = CROSS_W[r, cell, 1]
    c2 = CROSS_W[r, cell, 2]
    own_w = cell >> 6
    own_b = uint64(1) << uint64(cell & 63)
    t0 = c0 & ob0
    t1 = c1 & ob1
    t2 = c2 & ob2
    if own_w == 0:
        t0 &= ~own_b
    elif own_w == 1:
        t1 &= ~own_b
    else:
        t2 &= ~own_b
    if t0 == 0 and t1 == 0 and t2 == 0:
        out[0] |= c0
        out[1] |= c1
        out[2] |= c2
        return
    b0 = uint64(0)
    b1 = uint64(0)
    b2 = uint64(0)
    if own_w == 0:
        b0 = own_b
    elif own_w == 1:
        b1 = own_b
    else:
        b2 = own_b
    for d in range(4):
        r0 = RAY_W[r, cell, d, 0]
        r1 = RAY_W[r, cell, d, 1]
        r2 = RAY_W[r, cell, d, 2]
        if r0 == 0 and r1 == 0 and r2 == 0:
            continue
        o0 = r0 & ob0
        o1 = r1 & ob1
        o2 = r2 & ob2
        if o0 == 0 and o1 == 0 and o2 == 0:
            b0 |= r0
            b1 |= r1
            b2 |= r2
        elif d == 0 or d == 2:  # increasing bit order: keep up to lowest obstacle
            if o0 != 0:
                low = o0 & (~o0 + uint64(1))
                b0 |= r0 & (low | (low - uint64(1)))
            elif o1 != 0:
                low = o1 & (~o1 + uint64(1))
                b0 |= r0
                b1 |= r1 & (low | (low - uint64(1)))
            else:
                low = o2 & (~o2 + uint64(1))
                b0 |= r0
                b1 |= r1
                b2 |= r2 & (low | (low - uint64(1)))
        else:  # decreasing: keep down to highest obstacle
            if o2 != 0:
                hb = _highbit(o2)
                b2 |= r2 & ~(hb - uint64(1))
            elif o1 != 0:
                hb = _highbit(o1)
                b2 |= r2
                b1 |= r1 & ~(hb - uint64(1))
            else:
                hb = _highbit(o0)
                b2 |= r2
                b1 |= r1
                b0 |= r0 & ~(hb - uint64(1))
    out[0] |= b0
    out[1] |= b1
    out[2] |= b2


@njit(cache=True)
def _step(a, codes, scratch):
    """Advance the flat state one turn in place. Returns the killed mask.

    ``codes[p]`` is the action code (move*2+drop) or -1 for no action.
    ``scratch`` is a reusable (4+4*MAX_BOMBS,)*uint64... workspace laid out
    as: per-player blast words (4x3), union words (3), explosion stack.
    """
    n = int64(a[NPLAYERS])
    alive = a[ALIVE]
    killed = uint64(0)
    # blast-union words stay readable in scratch[12:15] after the call
    scratch[12] = uint64(0)
    scratch[13] = uint64(0)
    scratch[14] = uint64(0)

    # --- phase 1: explosions -------------------------------------------
    nb = int64(a[BOMB_COUNT])
    any_timer1 = False
    for i in range(nb):
        if a[BOMB_RECS + 4 * i + 3] == uint64(1):
            any_timer1 = True
            break
    if nb > 0 and any_timer1:
        ob0 = a[BOXES] | a[ITEM_R] | a[ITEM_B] | a[BOMBS]
        ob1 = a[BOXES + 1] | a[ITEM_R + 1] | a[ITEM_B + 1] | a[BOMBS + 1]
        ob2 = a[BOXES + 2] | a[ITEM_R + 2] | a[ITEM_B + 2] | a[BOMBS + 2]
        # owner blasts in scratch[0:12], union in scratch[12:15]
        for i in range(15):
            scratch[i] = uint64(0)
        exploded = np.zeros(MAX_BOMBS, dtype=np.uint8)
        stack = np.empty(MAX_BOMBS, dtype=np.int64)
        top = 0
        for i in range(nb):
            if a[BOMB_RECS + 4 * i + 3] == uint64(1):
                exploded[i] = 1
                stack[top] = i
                top += 1
        ub = scratch[12:15]
        while top > 0:
            top -= 1
            i = stack[top]
            cell = int64(a[BOMB_RECS + 4 * i])
            owner = int64(a[BOMB_RECS + 4 * i + 1])
            rng = int64(a[BOMB_RECS + 4 * i + 2])
            before0 = ub[0]
            before1 = ub[1]
            before2 = ub[2]
            _blast(cell, rng, ob0, ob1, ob2, scratch[3 * owner:3 * owner + 3])
            ob = scratch[3 * owner:3 * owner + 3]
            ub[0] |= ob[0]
            ub[1] |= ob[1]
            ub[2] |= ob[2]
            if ub[0] != before0 or ub[1] != before1 or ub[2] != before2:
                for j in range(nb):
                    if exploded[j] == 0:
                        cj = int64(a[BOMB_RECS + 4 * j])
                        if (ub[cj >> 6] >> uint64(cj & 63)) & uint64(1):
                            exploded[j] = 1
                            stack[top] = j
                            top += 1
        u0, u1, u2 = ub[0], ub[1], ub[2]
        # box credit per owner
        for p in range(n):
            cnt = (_popcount(scratch[3 * p] & a[BOXES])
                   + _popcount(scratch[3 * p + 1] & a[BOXES + 1])
                   + _popcount(scratch[3 * p + 2] & a[BOXES + 2]))
            a[SCORE + p] += cnt
        # deaths
        for p in range(n):
            if (alive >> uint64(p)) & uint64(1):
                pp = int64(a[POS + p])
                if (ub[pp >> 6] >> uint64(pp & 63)) & uint64(1):
                    alive &= ~(uint64(1) << uint64(p))
                    a[ELIM + p] = a[TURN] + uint64(1)
                    killed |= uint64(1) << uint64(p)
        a[ALIVE] = alive
        # burn items, spawn from boxes, clear boxes
        a[ITEM_R] = (a[ITEM_R] & ~u0) | (a[BOX_R] & u0)
        a[ITEM_R + 1] = (a[ITEM_R + 1] & ~u1) | (a[BOX_R + 1] & u1)
        a[ITEM_R + 2] = (a[ITEM_R + 2] & ~u2) | (a[BOX_R + 2] & u2)
        a[ITEM_B] = (a[ITEM_B] & ~u0) | (a[BOX_B] & u0)
        a[ITEM_B + 1] = (a[ITEM_B + 1] & ~u1) | (a[BOX_B + 1] & u1)
        a[ITEM_B + 2] = (a[ITEM_B + 2] & ~u2) | (a[BOX_B + 2] & u2)
        a[BOXES] &= ~u0
        a[BOXES + 1] &= ~u1
        a[BOXES + 2] &= ~u2
        a[BOX_R] &= ~u0
        a[BOX_R + 1] &= ~u1
        a[BOX_R + 2] &= ~u2
        a[BOX_B] &= ~u0
        a[BOX_B + 1] &= ~u1
        a[BOX_B + 2] &= ~u2
        # drop exploded records, return inventory, tick survivors
        w = 0
        for i in range(nb):
            if exploded[i]:
                owner = int64(a[BOMB_RECS + 4 * i + 1])
                a[AVAIL + owner] += uint64(1)
                cell = int64(a[BOMB_RECS + 4 * i])
                a[BOMBS + (cell >> 6)] &= ~(uint64(1) << uint64(cell & 63))
            else:
                a[BOMB_RECS + 4 * w] = a[BOMB_RECS + 4 * i]
                a[BOMB_RECS + 4 * w + 1] = a[BOMB_RECS + 4 * i + 1]
                a[BOMB_RECS + 4 * w + 2] = a[BOMB_RECS + 4 * i + 2]
                a[BOMB_RECS + 4 * w + 3] = a[BOMB_RECS + 4 * i + 3] - uint64(1)
                w += 1
        a[BOMB_COUNT] = w
    elif nb > 0:
        for i in range(nb):
            a[BOMB_RECS + 4 * i + 3] -= uint64(1)

    # --- phase 2: placement (seat order, one bomb per cell) -------------
    for p in range(n):
        code = codes[p]
        if code < 0 or (code & 1) == 0:
            continue
        if not (alive >> uint64(p)) & uint64(1):
            continue
        if a[AVAIL + p] >= uint64(1):
            cell = int64(a[POS + p])
            w = cell >> 6
            bit = uint64(1) << uint64(cell & 63)
            if not (a[BOMBS + w] >> uint64(cell & 63)) & uint64(1):
                a[BOMBS + w] |= bit
                k = int64(a[BOMB_COUNT])
                if k < MAX_BOMBS:
                    a[BOMB_RECS + 4 * k] = uint64(cell)
                    a[BOMB_RECS + 4 * k + 1] = uint64(p)
                    a[BOMB_RECS + 4 * k + 2] = a[BRANGE + p]
                    a[BOMB_RECS + 4 * k + 3] = uint64(BOMB_TIMER)
                    a[BOMB_COUNT] = uint64(k + 1)
                    a[AVAIL + p] -= uint64(1)

    # --- phase 3: simultaneous movement ---------------------------------
    np0 = int64(a[POS])
    np1 = int64(a[POS + 1])
    np2 = int64(a[POS + 2]) if n > 2 else 0
    np3 = int64(a[POS + 3]) if n > 3 else 0
    for p in range(n):
        code = codes[p]
        if code < 0:
            continue
        move = code >> 1
        if move == 0 or not (alive >> uint64(p)) & uint64(1):
            continue
        t = MOVE_T[int64(a[POS + p]), move]
        if t >= 0:
            w = t >> 6
            sh = uint64(t & 63)
            blocked = (WALL_W[w] | a[BOXES + w] | a[BOMBS + w]) >> sh & uint64(1)
            if not blocked:
                if p == 0:
                    np0 = t
                elif p == 1:
                    np1 = t
                elif p == 2:
                    np2 = t
                else:
                    np3 = t
    a[POS] = uint64(np0)
    a[POS + 1] = uint64(np1)
    if n > 2:
        a[POS + 2] = uint64(np2)
    if n > 3:
        a[POS + 3] = uint64(np3)

    # --- phase 4: pickups (simultaneous) ---------------------------------
    if (a[ITEM_R] | a[ITEM_R + 1] | a[ITEM_R + 2]
            | a[ITEM_B] | a[ITEM_B + 1] | a[ITEM_B + 2]) != uint64(0):
        c0 = uint64(0)
        c1 = uint64(0)
        c2 = uint64(0)
        for p in range(n):
            if not (alive >> uint64(p)) & uint64(1):
                continue
            cell = int64(a[POS + p])
            w = cell >> 6
            sh = uint64(cell & 63)
            if (a[ITEM_R + w] >> sh) & uint64(1):
                a[BRANGE + p] += uint64(1)
            elif (a[ITEM_B + w] >> sh) & uint64(1):
                a[MAXB + p] += uint64(1)
                a[AVAIL + p] += uint64(1)
            else:
                continue
            if w == 0:
                c0 |= uint64(1) << sh
            elif w == 1:
                c1 |= uint64(1) << sh
            else:
                c2 |= uint64(1) << sh
        a[ITEM_R] &= ~c0
        a[ITEM_R + 1] &= ~c1
        a[ITEM_R + 2] &= ~c2
        a[ITEM_B] &= ~c0
        a[ITEM_B + 1] &= ~c1
        a[ITEM_B + 2] &= ~c2

    # --- phase 5: counters ------------------------------------------------
    a[TURN] += uint64(1)
    if a[COUNTDOWN] != uint64(NO_COUNTDOWN):
        a[COUNTDOWN] -= uint64(1)
    elif (a[BOXES] | a[BOXES + 1] | a[BOXES + 2]) == uint64(0):
        a[COUNTDOWN] = uint64(ENDGAME_COUNTDOWN)
    return killed


@njit(cache=True)
def _legal_codes(a, p, out):
    """Legal action codes for an alive player, canonical order. Returns count."""
    cell = int64(a[POS + p])
    can_drop = (a[AVAIL + p] >= uint64(1)
                and not (a[BOMBS + (cell >> 6)] >> uint64(cell & 63)) & uint64(1))
    k = 0
    out[k] = 0
    k += 1
    if can_drop:
        out[k] = 1
        k += 1
    for move in range(1, 5):
        t = MOVE_T[cell, move]
        if t < 0:
            continue
        w = t >> 6
        sh = uint64(t & 63)
        if (WALL_W[w] | a[BOXES + w] | a[BOMBS + w]) >> sh & uint64(1):
            continue
        out[k] = move * 2
        k += 1
        if can_drop:
            out[k] = move * 2 + 1
            k += 1
    return k


@njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@njit(cache=True)
def _protocol_chunk(fixture, work, scratch, since0, max_steps, reset_every):
    """Run the random-agent throughput protocol for a fixed step count."""
    since = since0
    done = 0
    codes = np.empty(4, dtype=np.int64)
    legal = np.empty(10, dtype=np.int64)
    for _ in range(max_steps):
        n = int64(work[NPLAYERS])
        alive = work[ALIVE]
        acted = 0
        for p in range(n):
            if (alive >> uint64(p)) & uint64(1):
                k = _legal_codes(work, p, legal)
                codes[p] = legal[np.random.randint(0, k)]
                acted += 1
            else:
                codes[p] = -1
        killed = _step(work, codes, scratch)
        done += acted
        since += acted
        if killed != uint64(0) or since >= reset_every:
            work[:] = fixture
            since = 0
    return done, since


def fast_step(b: BitState, actions) -> BitState:
    """Python-facing bridge: one compiled step on a BitState (for tests)."""
    a = to_array(b)
    codes = np.full(4, -1, dtype=np.int64)
    if isinstance(actions, dict):
        items = actions.items()
    else:
        items = enumerate(actions)
    for p, act in items:
        if act is not None:
            codes[p] = act.code
    scratch = np.zeros(15, dtype=np.uint64)
    _step(a, codes, scratch)
    return from_array(a)


def run_protocol(fixture: BitState, duration_s: float, seed: int,
                 reset_every: int = 15, chunk_steps: int = 2000) -> int:
    """Total random-agent actions performed within the wall-clock budget."""
    import time

    fix = to_array(fixture)
    work = fix.copy()
    scratch = np.zeros(15, dtype=np.uint64)
    _seed(seed)
    # warm the JIT outside the measured window
    _protocol_chunk(fix.copy(), fix.copy(), scratch, 0, 1, reset_every)
    _seed(seed)
    total = 0
    since = 0
    deadline = time.perf_counter() + duration_s
    while time.perf_counter() < deadline:
        done, since = _protocol_chunk(fix, work, scratch, since, chunk_steps, reset_every)
        total += done
    return total


def warmup() -> None:
    """Force JIT compilation (cached on disk after the first run)."""
    from .arena.maps import MapSpec, generate_map

    b = BB.from_state(generate_map(MapSpec(seed=0, players=2)))
    fast_step(b, {0: BB.ALL_ACTIONS[1], 1: BB.ALL_ACTIONS[0]})
    run_protocol(b, 0.001, seed=1)


# ---- search kernels ---------------------------------------------------------
# Compiled hot paths for the agents: frozen-world survivability, pending box
# estimates, the full evaluation, Zobrist digests, rollouts, and the RHEA
# genome simulation. Each mirrors a pure-Python twin in evaluation.py /
# zobrist.py and is pinned to it by parity tests.

from .zobrist import KEYS as _ZKEYS  # noqa: E402


def _np64(seq):
    return np.array(seq, dtype=np.uint64)


FULL_W = _np64(_plane_words(BB.FULL))
_col_e = sum(BB.BIT[y * WIDTH + WIDTH - 1] for y in range(11))
_col_w = sum(BB.BIT[y * WIDTH] for y in range(11))
NOT_E_W = _np64(_plane_words(BB.FULL ^ _col_e))
NOT_W_W = _np64(_plane_words(BB.FULL ^ _col_w))

ZK_BOX_EMPTY = _np64(_ZKEYS.box_empty)
ZK_BOX_RANGE = _np64(_ZKEYS.box_range)
ZK_BOX_BOMB = _np64(_ZKEYS.box_bomb)
ZK_ITEM_RANGE = _np64(_ZKEYS.item_range)
ZK_ITEM_BOMB = _np64(_ZKEYS.item_bomb)
ZK_BOMB_CELL = _np64(_ZKEYS.bomb_cell)
ZK_BOMB_TIMER = np.array(_ZKEYS.bomb_timer, dtype=np.uint64)
ZK_PLAYER_CELL = np.array(_ZKEYS.player_cell, dtype=np.uint64)
ZK_PLAYER_DEAD = _np64(_ZKEYS.player_dead)
ZK_STAT_RANGE = np.array(_ZKEYS.stat_range, dtype=np.uint64)
ZK_STAT_BOMBS = np.array(_ZKEYS.stat_bombs, dtype=np.uint64)

NONE_CODES = np.full(4, -1, dtype=np.int64)

# evaluation weight vector layout for _evaluate_k
W_BOX, W_RCAP, W_RLIN, W_B1, W_B2, W_BLIN = 0, 1, 2, 3, 4, 5
W_GAMMA, W_SPACING, W_CENTER, W_BOXPULL, W_THRESHOLD, W_DEATH = 6, 7, 8, 9, 10, 11
N_WEIGHTS = 12


def weights_vector(w) -> np.ndarray:
    """Flatten an EvalWeights into the kernel layout."""
    return np.array([w.box_points, w.range_capped, w.range_linear,
                     w.bombs_tier1, w.bombs_tier2, w.bombs_linear, w.gamma,
                     w.opponent_spacing, w.center_pull, w.box_pull,
                     float(w.crowded_box_threshold), w.death_penalty],
                    dtype=np.float64)


@njit(cache=True)
def _grow(l0, l1, l2):
    """Orthogonal one-step spread of a plane, edges respected."""
    e0 = l0 & NOT_E_W[0]
    e1 = l1 & NOT_E_W[1]
    e2 = l2 & NOT_E_W[2]
    g0 = e0 << uint64(1)
    g1 = (e1 << uint64(1)) | (e0 >> uint64(63))
    g2 = (e2 << uint64(1)) | (e1 >> uint64(63))
    w0 = l0 & NOT_W_W[0]
    w1 = l1 & NOT_W_W[1]
    w2 = l2 & NOT_W_W[2]
    g0 |= (w0 >> uint64(1)) | ((w1 & uint64(1)) << uint64(63))
    g1 |= (w1 >> uint64(1)) | ((w2 & uint64(1)) << uint64(63))
    g2 |= w2 >> uint64(1)
    g0 |= l0 << uint64(13)
    g1 |= (l1 << uint64(13)) | (l0 >> uint64(51))
    g2 |= (l2 << uint64(13)) | (l1 >> uint64(51))
    g0 |= (l0 >> uint64(13)) | ((l1 & uint64(0x1FFF)) << uint64(51))
    g1 |= (l1 >> uint64(13)) | ((l2 & uint64(0x1FFF)) << uint64(51))
    g2 |= l2 >> uint64(13)
    return g0 & FULL_W[0], g1 & FULL_W[1], g2 & FULL_W[2]


@njit(cache=True)
def _survivable_k(a, player, scratch, work):
    """Eight-turn escape check; mirrors evaluation.is_survivable_bit."""
    if not (a[ALIVE] >> uint64(player)) & uint64(1):
        return False
    if a[BOMB_COUNT] == uint64(0):
        return True
    work[:] = a
    pos = int64(a[POS + player])
    l0 = uint64(0)
    l1 = uint64(0)
    l2 = uint64(0)
    wd = pos >> 6
    bit = uint64(1) << uint64(pos & 63)
    if wd == 0:
        l0 = bit
    elif wd == 1:
        l1 = bit
    else:
        l2 = bit
    for _ in range(8):
        if work[BOMB_COUNT] == uint64(0):
            return True
        blk0 = WALL_W[0] | work[BOXES] | work[BOMBS]
        blk1 = WALL_W[1] | work[BOXES + 1] | work[BOMBS + 1]
        blk2 = WALL_W[2] | work[BOXES + 2] | work[BOMBS + 2]
        _step(work, NONE_CODES, scratch)
        l0 &= ~scratch[12]
        l1 &= ~scratch[13]
        l2 &= ~scratch[14]
        if l0 == uint64(0) and l1 == uint64(0) and l2 == uint64(0):
            return False
        g0, g1, g2 = _grow(l0, l1, l2)
        l0 |= g0 & ~blk0
        l1 |= g1 & ~blk1
        l2 |= g2 & ~blk2
    return True


@njit(cache=True)
def _survival_horizon_k(a, player, scratch, work):
    """Provably survivable turns (0..8); mirrors evaluation.survival_horizon."""
    if not (a[ALIVE] >> uint64(player)) & uint64(1):
        return 0
    if a[BOMB_COUNT] == uint64(0):
        return 8
    work[:] = a
    pos = int64(a[POS + player])
    l0 = uint64(0)
    l1 = uint64(0)
    l2 = uint64(0)
    wd = pos >> 6
    bit = uint64(1) << uint64(pos & 63)
    if wd == 0:
        l0 = bit
    elif wd == 1:
        l1 = bit
    else:
        l2 = bit
    horizon = 0
    for _ in range(8):
        if work[BOMB_COUNT] == uint64(0):
            return 8
        blk0 = WALL_W[0] | work[BOXES] | work[BOMBS]
        blk1 = WALL_W[1] | work[BOXES + 1] | work[BOMBS + 1]
        blk2 = WALL_W[2] | work[BOXES + 2] | work[BOMBS + 2]
        _step(work, NONE_CODES, scratch)
        l0 &= ~scratch[12]
        l1 &= ~scratch[13]
        l2 &= ~scratch[14]
        if l0 == uint64(0) and l1 == uint64(0) and l2 == uint64(0):
            return horizon
        horizon += 1
        g0, g1, g2 = _grow(l0, l1, l2)
        l0 |= g0 & ~blk0
        l1 |= g1 & ~blk1
        l2 |= g2 & ~blk2
    return 8


@njit(cache=True)
def _pending_k(a, player, gamma, scratch, work):
    """Decayed future box credit; mirrors evaluation.estimated_bombs_bit."""
    if a[BOMB_COUNT] == uint64(0):
        return 0.0
    work[:] = a
    total = 0.0
    g = 1.0
    guard = 0
    while work[BOMB_COUNT] != uint64(0) and guard < 16:
        guard += 1
        g *= gamma
        before = int64(work[SCORE + player])
        _step(work, NONE_CODES, scratch)
        gained = int64(work[SCORE + player]) - before
        if gained > 0:
            total += gained * g
    return total


@njit(cache=True)
def _next_blast_hits(a, player, scratch, work):
    """True if the player's cell burns at the very next resolution."""
    if a[BOMB_COUNT] == uint64(0):
        return False
    work[:] = a
    _step(work, NONE_CODES, scratch)
    pos = int64(a[POS + player])
    return bool((scratch[12 + (pos >> 6)] >> uint64(pos & 63)) & uint64(1))


@njit(cache=True)
def _box_dist_k(a, player):
    pos = int64(a[POS + player])
    x = pos % 13
    y = pos // 13
    total = 0
    for wd in range(3):
        plane = a[BOXES + wd]
        while plane != uint64(0):
            low = plane & (~plane + uint64(1))
            plane ^= low
            cell = (wd << 6) + int64(_popcount(low - uint64(1)))
            total += abs(x - cell % 13) + abs(y - cell // 13)
    return total


@njit(cache=True)
def _evaluate_k(a, player, boxes_destroyed, w, scratch, work):
    """Seven-component score; mirrors evaluation.evaluate_bit."""
    score = w[W_BOX] * boxes_destroyed
    rng = int64(a[BRANGE + player])
    score += w[W_RCAP] * min(5, rng) + w[W_RLIN] * rng
    extra = int64(a[MAXB + player]) - 1
    score += (w[W_B1] * min(2, extra) + w[W_B2] * min(4, extra)
              + w[W_BLIN] * extra)
    score += _pending_k(a, player, w[W_GAMMA], scratch, work)
    pos = int64(a[POS + player])
    x = pos % 13
    y = pos // 13
    spacing = 0
    n = int64(a[NPLAYERS])
    for o in range(n):
        if o != player and (a[ALIVE] >> uint64(o)) & uint64(1):
            opos = int64(a[POS + o])
            spacing += abs(x - opos % 13) + abs(y - opos // 13)
    score += w[W_SPACING] * spacing
    cnt = int64(_popcount(a[BOXES]) + _popcount(a[BOXES + 1])
                + _popcount(a[BOXES + 2]))
    if cnt > w[W_THRESHOLD]:
        score += w[W_CENTER] * (abs(x - 6) + abs(y - 5))
    elif cnt > 0:
        score += w[W_BOXPULL] * (_box_dist_k(a, player) / cnt)
    if not (a[ALIVE] >> uint64(player)) & uint64(1):
        score += w[W_DEATH]
    return score


@njit(cache=True)
def _zobrist_k(a):
    """Full-state digest; mirrors zobrist.zobrist_hash."""
    h = uint64(0)
    for wd in range(3):
        base = wd << 6
        plain = a[BOXES + wd] & ~a[BOX_R + wd] & ~a[BOX_B + wd]
        while plain != uint64(0):
            low = plain & (~plain + uint64(1))
            plain ^= low
            h ^= ZK_BOX_EMPTY[base + int64(_popcount(low - uint64(1)))]
        plane = a[BOX_R + wd]
        while plane != uint64(0):
            low = plane & (~plane + uint64(1))
            plane ^= low
            h ^= ZK_BOX_RANGE[base + int64(_popcount(low - uint64(1)))]
        plane = a[BOX_B + wd]
        while plane != uint64(0):
            low = plane & (~plane + uint64(1))
            plane ^= low
            h ^= ZK_BOX_BOMB[base + int64(_popcount(low - uint64(1)))]
        plane = a[ITEM_R + wd]
        while plane != uint64(0):
            low = plane & (~plane + uint64(1))
            plane ^= low
            h ^= ZK_ITEM_RANGE[base + int64(_popcount(low - uint64(1)))]
        plane = a[ITEM_B + wd]
        while plane != uint64(0):
            low = plane & (~plane + uint64(1))
            plane ^= low
            h ^= ZK_ITEM_BOMB[base + int64(_popcount(low - uint64(1)))]
    nb = int64(a[BOMB_COUNT])
    turn = int64(a[TURN])
    for i in range(nb):
        cell = int64(a[BOMB_RECS + 4 * i])
        timer = int64(a[BOMB_RECS + 4 * i + 3])
        h ^= ZK_BOMB_CELL[cell] ^ ZK_BOMB_TIMER[cell, (turn + timer) & 15]
    n = int64(a[NPLAYERS])
    for p in range(n):
        h ^= ZK_PLAYER_CELL[p, int64(a[POS + p])]
        if not (a[ALIVE] >> uint64(p)) & uint64(1):
            h ^= ZK_PLAYER_DEAD[p]
        h ^= ZK_STAT_RANGE[p, min(int64(a[BRANGE + p]), 31)]
        h ^= ZK_STAT_BOMBS[p, min(int64(a[MAXB + p]), 31)]
    return h


@njit(cache=True)
def _rollout_k(a, me, plans, plan_len, depth0, max_depth, gamma,
               reward_points, survive_base, value_scale, bomb_cap,
               scratch, work, work2):
    """Random playout value; mirrors MctsAgent._rollout."""
    if not (a[ALIVE] >> uint64(me)) & uint64(1):
        return 0.0
    work[:] = a
    codes = np.empty(4, dtype=np.int64)
    legal = np.empty(10, dtype=np.int64)
    reward_sum = 0.0
    g = 1.0
    for r in range(1, max_depth + 1):
        alive = work[ALIVE]
        count = 0
        for p in range(4):
            if (alive >> uint64(p)) & uint64(1):
                count += 1
        if count <= 1:
            break
        n = int64(work[NPLAYERS])
        for p in range(n):
            if p == me:
                continue
            d = depth0 + r - 1
            if d < plan_len[p]:
                codes[p] = plans[p, d]
            else:
                codes[p] = -1
        k = _legal_codes(work, me, legal)
        codes[me] = legal[np.random.randint(0, k)]
        before_score = int64(work[SCORE + me])
        before_maxb = int64(work[MAXB + me])
        _step(work, codes, scratch)
        if not (work[ALIVE] >> uint64(me)) & uint64(1):
            return 0.0
        g *= gamma
        reward = int64(work[SCORE + me]) - before_score
        maxb = int64(work[MAXB + me])
        if maxb > before_maxb and maxb <= bomb_cap:
            reward += maxb - before_maxb
        if reward > 0:
            reward_sum += reward * reward_points * g
    return (reward_sum + survive_base - _box_dist_k(work, me)) / value_scale


@njit(cache=True)
def _rhea_eval_k(a, me, genes, plans, plan_len, w, punish_base, punish_decay,
                 effective_out, scratch, work, tmp1, tmp2):
    """Repaired-genome simulation and fitness; mirrors
    RheaAgent.evaluate_individual."""
    work[:] = a
    codes = np.empty(4, dtype=np.int64)
    legal = np.empty(10, dtype=np.int64)
    boxes = 0
    tstar = -1
    length = genes.shape[0]
    for t in range(length):
        n = int64(work[NPLAYERS])
        for p in range(n):
            if p != me:
                if t < plan_len[p]:
                    codes[p] = plans[p, t]
                else:
                    codes[p] = -1
        before_score = int64(work[SCORE + me])
        if (work[ALIVE] >> uint64(me)) & uint64(1):
            gene = int64(genes[t])
            k = _legal_codes(work, me, legal)
            code = 0
            for i in range(k):
                if legal[i] == gene:
                    code = gene
                    break
            codes[me] = code
            tmp1[:] = work
            _step(tmp1, codes, scratch)
            doomed = (not (tmp1[ALIVE] >> uint64(me)) & uint64(1)) or \
                _next_blast_hits(tmp1, me, scratch, tmp2)
            if doomed and code != 0:
                codes[me] = 0
                tmp2[:] = work
                _step(tmp2, codes, scratch)
                stay_ok = ((tmp2[ALIVE] >> uint64(me)) & uint64(1)) and \
                    not _next_blast_hits(tmp2, me, scratch, tmp1)
                if stay_ok:
                    code = 0
                    work[:] = tmp2
                else:
                    work[:] = tmp1
            else:
                work[:] = tmp1
            effective_out[t] = code
        else:
            codes[me] = -1
            effective_out[t] = -1
            _step(work, codes, scratch)
        boxes += int64(work[SCORE + me]) - before_score
        if tstar < 0 and not _survivable_k(work, me, scratch, tmp1):
            tstar = t
    fitness = _evaluate_k(work, me, boxes, w, scratch, tmp1)
    if tstar >= 0:
        fitness -= punish_base * punish_decay ** tstar
    return fitness, tstar


class Workspace:
    """Reusable buffers for the kernels; one per agent instance."""

    __slots__ = ("scratch", "work", "tmp1", "tmp2", "effective", "legal")

    def __init__(self):
        self.scratch = np.zeros(15, dtype=np.uint64)
        self.work = np.empty(STATE_SIZE, dtype=np.uint64)
        self.tmp1 = np.empty(STATE_SIZE, dtype=np.uint64)
        self.tmp2 = np.empty(STATE_SIZE, dtype=np.uint64)
        self.effective = np.empty(64, dtype=np.int64)
        self.legal = np.empty(10, dtype=np.int64)


def plan_arrays(plans, n: int):
    """PredictedPlan -> (codes[n, H], lengths[n]) for the kernels."""
    horizon = 0
    for p in range(n):
        horizon = max(horizon, plans.horizon(p))
    codes = np.full((4, max(horizon, 1)), -1, dtype=np.int64)
    lengths = np.zeros(4, dtype=np.int64)
    for p in range(n):
        seq = plans.plans.get(p)
        if seq:
            lengths[p] = len(seq)
            for i, action in enumerate(seq):
                codes[p, i] = action.code
    return codes, lengths


def search_warmup() -> None:
    """Compile the search kernels (cached on disk after the first run)."""
    from .arena.maps import MapSpec, generate_map
    from .evaluation import DEFAULT_WEIGHTS

    b = BB.from_state(generate_map(MapSpec(seed=0, players=2)))
    a = to_array(b)
    ws = Workspace()
    wv = weights_vector(DEFAULT_WEIGHTS)
    _survivable_k(a, 0, ws.scratch, ws.work)
    _survival_horizon_k(a, 0, ws.scratch, ws.work)
    _evaluate_k(a, 0, 1, wv, ws.scratch, ws.work)
    _zobrist_k(a)
    _next_blast_hits(a, 0, ws.scratch, ws.work)
    plans = np.full((4, 1), -1, dtype=np.int64)
    plens = np.zeros(4, dtype=np.int64)
    _seed(1)
    _rollout_k(a, 0, plans, plens, 0, 3, 0.98, 50.0, 200.0, 400.0, 4,
               ws.scratch, ws.work, ws.tmp1)
    genes = np.zeros(5, dtype=np.int64)
    _rhea_eval_k(a, 0, genes, plans, plens, wv, 1000.0, 0.9,
                 ws.effective, ws.scratch, ws.work, ws.tmp1, ws.tmp2)
