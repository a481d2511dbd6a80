"""State evaluation: survivability, kill detection, and the score function.

The composite score for a player is the sum of seven components: destroyed
boxes along the searched line of play, capped-plus-linear returns on blast
range and bomb capacity, a decayed estimate for boxes the live bombs are
still going to destroy, spacing from opponents, a mild pull toward the
board's action (center early, remaining boxes late), and a flat death
penalty. Weights live in :class:`EvalWeights` and can be overridden from a
``key=value`` file for tuning runs.

The helpers answer the two questions every agent here keeps asking:

- :func:`is_survivable` -- can the player still escape the current bomb
  timeline within eight turns, assuming opponents freeze and place nothing
  new? (Eight turns settle every existing bomb.) Computed as a bit-plane
  BFS over (cell, turn) layers against the frozen explosion timeline.
- :func:`can_kill` -- can the attacker force the victim's elimination
  within two turns, counting 2-turn leaves where the victim is still alive
  but has no escape (a sealed trap) as kills? Exhaustive minimax over the
  joint actions of the pair, everyone else frozen.

All functions are pure; the ``memos`` argument lets a search share the
frozen-timeline and distance caches across thousands of sibling states.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import bitboard as BB
from .bitboard import (
    BIT, BitState, CELL_X, CELL_Y, FULL, N_CELLS, WALLS,
    bit_legal_actions, bit_step, from_state, propagate_blasts,
)
from .engine import BOMB_TIMER, CENTER, GameState, TurnEvents, WIDTH

GAMMA = 0.95

_NOT_COL_E = FULL ^ sum(BIT[y * WIDTH + WIDTH - 1] for y in range(11))
_NOT_COL_W = FULL ^ sum(BIT[y * WIDTH] for y in range(11))


@dataclass(frozen=True)
class EvalWeights:
    """The seven score components, defaulting to the tuned values."""

    box_points: float = 1.0
    range_capped: float = 0.9
    range_linear: float = 0.4
    bombs_tier1: float = 3.4   # applies to min(2, extra bombs)
    bombs_tier2: float = 1.7   # applies to min(4, extra bombs)
    bombs_linear: float = 0.7
    gamma: float = GAMMA
    opponent_spacing: float = 0.05
    center_pull: float = -0.04
    box_pull: float = -0.1
    crowded_box_threshold: int = 20
    death_penalty: float = -1000.0

    @classmethod
    def from_file(cls, path) -> "EvalWeights":
        """Weight overrides from a plain key=value file ('#' comments)."""
        overrides = {}
        fields = cls.__dataclass_fields__
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in fields:
                    raise ValueError(f"{path}:{lineno}: unknown weight {key!r}")
                kind = fields[key].type
                overrides[key] = int(value) if kind == "int" else float(value)
        return replace(cls(), **overrides)


DEFAULT_WEIGHTS = EvalWeights()


@dataclass(frozen=True)
class EvalContext:
    """Accumulated per-line data the score needs beyond the raw state."""

    boxes_destroyed: int = 0
    decayed_boxes: float = 0.0
    pickups_range: int = 0
    pickups_bomb: int = 0

    def after(self, events: TurnEvents, player: int, depth: int,
              gamma: float = GAMMA) -> "EvalContext":
        """The context one simulated turn later (depth is 1-based from root)."""
        boxes = events.boxes_destroyed_by[player]
        pr = pb = 0
        for pid, kind in events.pickups:
            if pid == player:
                if kind == 1:
                    pr += 1
                else:
                    pb += 1
        if not boxes and not pr and not pb:
            return self
        return EvalContext(self.boxes_destroyed + boxes,
                           self.decayed_boxes + boxes * gamma ** depth,
                           self.pickups_range + pr, self.pickups_bomb + pb)


class EvalMemos:
    """Caches shared across one search turn (profiles, escapes, distances).

    One instance assumes one decay factor for the pending-box estimates;
    agents build a fresh instance per decision with their own weights.
    """

    __slots__ = ("profile", "boxdist", "escape", "gamma")

    def __init__(self, gamma: float = GAMMA):
        self.profile = {}
        self.boxdist = {}
        self.escape = {}
        self.gamma = gamma


def _frozen_profile(b: BitState, gamma: float):
    """One pass over the frozen world until every bomb has exploded.

    Returns ``(timeline, decayed)``: per future turn d the pre-step move
    blockers and the blast plane, plus per owner the sum of box credits
    decayed by gamma**d. Existing timers cap d at eight (chains only pull
    explosions earlier).
    """
    timeline = []
    decayed = [0.0] * b.n
    cur = b
    d = 0
    while any(cur.buckets):
        d += 1
        blockers = WALLS | cur.boxes | cur.bombs
        cur, blast, credits = BB.explode_only(cur)
        timeline.append((blockers, blast))
        g = gamma ** d
        for p in range(b.n):
            if credits[p]:
                decayed[p] += credits[p] * g
    return tuple(timeline), tuple(decayed)


def _profile_for(b: BitState, memos: Optional[EvalMemos], sig, gamma: float):
    if memos is None:
        return _frozen_profile(b, gamma)
    key = b.signature() if sig is None else sig
    profile = memos.profile.get(key)
    if profile is None:
        profile = _frozen_profile(b, memos.gamma)
        memos.profile[key] = profile
    return profile


def estimated_bombs_bit(b: BitState, player: int, gamma: float = GAMMA,
                        current_depth: int = 0,
                        memos: Optional[EvalMemos] = None, sig=None) -> float:
    """Decayed score the live bombs will still earn for one player."""
    if not b.bombs:
        return 0.0
    total = _profile_for(b, memos, sig, gamma)[1][player]
    if current_depth and total:
        total *= gamma ** current_depth
    return total


def estimated_bombs(state: GameState, player: int, gamma: float = GAMMA,
                    current_depth: int = 0) -> float:
    return estimated_bombs_bit(from_state(state), player, gamma, current_depth)


def is_survivable_bit(b: BitState, player: int,
                      memos: Optional[EvalMemos] = None, sig=None) -> bool:
    """Eight-turn escape check against the frozen bomb timeline."""
    if not (b.alive >> player) & 1:
        return False
    if not b.bombs:
        return True
    pos = b.pos[player]
    if memos is not None:
        key = b.signature() if sig is None else sig
        cached = memos.escape.get((key, pos))
        if cached is not None:
            return cached
        out = _escape_exists(memos.profile.get(key) or
                             _profile_for(b, memos, key, GAMMA), pos)
        memos.escape[(key, pos)] = out
        return out
    return _escape_exists(_frozen_profile(b, GAMMA), pos)


def _escape_exists(profile, pos: int) -> bool:
    layer = BIT[pos]
    for blockers, blast in profile[0]:
        layer &= ~blast
        if not layer:
            return False
        # stay is always allowed; moves obey the pre-step board
        spread = (((layer & _NOT_COL_E) << 1) | ((layer & _NOT_COL_W) >> 1)
                  | (layer << WIDTH) & FULL | (layer >> WIDTH))
        layer |= spread & ~blockers
    return True


def is_survivable(state: GameState, player: int) -> bool:
    return is_survivable_bit(from_state(state), player)


def survival_horizon(b: BitState, player: int,
                     memos: Optional[EvalMemos] = None) -> int:
    """How many of the next 8 turns the player can provably stay alive.

    8 means a full escape exists (equivalent to :func:`is_survivable`);
    smaller values let a cornered agent pick the slowest death.
    """
    if not (b.alive >> player) & 1:
        return 0
    if not b.bombs:
        return BOMB_TIMER
    timeline = _profile_for(b, memos, None, GAMMA)[0]
    layer = BIT[b.pos[player]]
    horizon = 0
    for blockers, blast in timeline:
        layer &= ~blast
        if not layer:
            return horizon
        horizon += 1
        spread = (((layer & _NOT_COL_E) << 1) | ((layer & _NOT_COL_W) >> 1)
                  | (layer << WIDTH) & FULL | (layer >> WIDTH))
        layer |= spread & ~blockers
    return BOMB_TIMER


def _joint_step(b: BitState, attacker: int, a, victim: int, v) -> BitState:
    acts = [None] * b.n
    if a is not None:
        acts[attacker] = a
    if v is not None:
        acts[victim] = v
    return bit_step(b, acts)[0]


def _escape_first(actions):
    """Movement actions first: the cheapest refutation of a claimed trap."""
    return sorted(actions, key=lambda a: (a.move == 0, a.drop))


def _seal_first(actions):
    """Drops first: the attacker's sealing moves are tried before walks."""
    return sorted(actions, key=lambda a: not a.drop)


def _second_ply_forced(s1: BitState, attacker: int, victim: int,
                       memos: EvalMemos) -> bool:
    acts_a = _seal_first(bit_legal_actions(s1, attacker)) or (None,)
    acts_v = _escape_first(bit_legal_actions(s1, victim))
    for a2 in acts_a:
        forced = True
        for v2 in acts_v:
            s2 = _joint_step(s1, attacker, a2, victim, v2)
            if (s2.alive >> victim) & 1 and is_survivable_bit(s2, victim, memos):
                forced = False
                break
        if forced:
            return True
    return False


def can_kill_bit(b: BitState, attacker: int, victim: int,
                 memos: Optional[EvalMemos] = None) -> bool:
    """Two-turn forced elimination (sealed traps at the horizon count)."""
    if attacker == victim:
        return False
    if not (b.alive >> attacker) & 1 or not (b.alive >> victim) & 1:
        return False
    if not b.bombs and b.avail[attacker] < 1:
        return False  # nothing can ever explode inside the horizon
    if memos is None:
        memos = EvalMemos()
    acts_a = _seal_first(bit_legal_actions(b, attacker))
    acts_v = _escape_first(bit_legal_actions(b, victim))
    for a1 in acts_a:
        forced = True
        for v1 in acts_v:
            s1 = _joint_step(b, attacker, a1, victim, v1)
            if (s1.alive >> victim) & 1:
                if not _second_ply_forced(s1, attacker, victim, memos):
                    forced = False
                    break
        if forced:
            return True
    return False


def can_kill(state: GameState, attacker: int, victim: int) -> bool:
    return can_kill_bit(from_state(state), attacker, victim)


def _box_distance_stats(boxes: int):
    """Per-column and per-row box counts for O(board-width) distance sums."""
    cols = [0] * 13
    rows = [0] * 11
    plane = boxes
    while plane:
        bit = plane & -plane
        plane ^= bit
        i = bit.bit_length() - 1
        cols[CELL_X[i]] += 1
        rows[CELL_Y[i]] += 1
    return cols, rows


def _sum_box_distance(boxes: int, x: int, y: int,
                      memos: Optional[EvalMemos]) -> int:
    stats = None
    if memos is not None:
        stats = memos.boxdist.get(boxes)
    if stats is None:
        stats = _box_distance_stats(boxes)
        if memos is not None:
            memos.boxdist[boxes] = stats
    cols, rows = stats
    total = 0
    for cx in range(13):
        c = cols[cx]
        if c:
            total += c * abs(x - cx)
    for cy in range(11):
        c = rows[cy]
        if c:
            total += c * abs(y - cy)
    return total


def evaluate_bit(b: BitState, player: int, ctx=None,
                 weights: EvalWeights = DEFAULT_WEIGHTS,
                 memos: Optional[EvalMemos] = None,
                 current_depth: int = 0, sig=None) -> float:
    """The seven-component score of a state from one player's seat.

    ``ctx`` is an :class:`EvalContext` or, on the hot search path, the
    plain destroyed-box count.
    """
    w = weights
    if ctx is None:
        boxes_destroyed = 0
    elif type(ctx) is int:
        boxes_destroyed = ctx
    else:
        boxes_destroyed = ctx.boxes_destroyed
    score = w.box_points * boxes_destroyed

    rng = b.brange[player]
    score += w.range_capped * min(5, rng) + w.range_linear * rng
    extra = b.maxb[player] - 1
    score += (w.bombs_tier1 * min(2, extra) + w.bombs_tier2 * min(4, extra)
              + w.bombs_linear * extra)

    score += estimated_bombs_bit(b, player, w.gamma, current_depth, memos, sig)

    pos = b.pos[player]
    x, y = CELL_X[pos], CELL_Y[pos]
    spacing = 0
    for o in range(b.n):
        if o != player and (b.alive >> o) & 1:
            opos = b.pos[o]
            spacing += abs(x - CELL_X[opos]) + abs(y - CELL_Y[opos])
    score += w.opponent_spacing * spacing

    box_count = b.boxes.bit_count()
    if box_count > w.crowded_box_threshold:
        score += w.center_pull * (abs(x - CENTER[0]) + abs(y - CENTER[1]))
    elif box_count:
        score += w.box_pull * (_sum_box_distance(b.boxes, x, y, memos) / box_count)

    if not (b.alive >> player) & 1:
        score += w.death_penalty
    return score


def evaluate(state: GameState, player: int, ctx: Optional[EvalContext] = None,
             weights: EvalWeights = DEFAULT_WEIGHTS) -> float:
    return evaluate_bit(from_state(state), player, ctx, weights)
