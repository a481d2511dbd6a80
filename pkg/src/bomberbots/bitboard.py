"""Bit-plane engine, behaviorally identical to :mod:`bomberbots.engine`.

Every 13x11 board aspect lives in one 143-bit integer (bit = y*13 + x).
Blast rays are precomputed per (cell, direction) up to the nearest wall, so
propagating an explosion is a handful of word operations per bomb: intersect
the ray with the obstacle plane, isolate the first obstacle bit, mask the
tail. Bombs sit in eight timer buckets rotated once per turn, making
"which bombs explode now" a plain lookup.

The public surface mirrors the reference engine: :func:`from_state` /
:func:`to_state` convert losslessly, :func:`bit_step` and
:func:`bit_legal_actions` match ``step`` / ``legal_actions`` bit for bit
(the equivalence suite replays thousands of random turns through both).
"""

from __future__ import annotations

from typing import Mapping, Optional

from .engine import (
    Action, ALL_ACTIONS, BOMB_TIMER, BOX_CELLS, Bomb, Cell, ENDGAME_COUNTDOWN,
    GameState, HEIGHT, Item, ItemKind, Move, Player, TurnEvents, WIDTH,
    empty_grid, is_wall,
)

N_CELLS = WIDTH * HEIGHT
FULL = (1 << N_CELLS) - 1

WALLS = 0
for _y in range(HEIGHT):
    for _x in range(WIDTH):
        if is_wall(_x, _y):
            WALLS |= 1 << (_y * WIDTH + _x)

BIT = tuple(1 << i for i in range(N_CELLS))
CELL_X = tuple(i % WIDTH for i in range(N_CELLS))
CELL_Y = tuple(i // WIDTH for i in range(N_CELLS))


def cell_index(x: int, y: int) -> int:
    return y * WIDTH + x


def _build_move_targets():
    targets = []
    for i in range(N_CELLS):
        x, y = i % WIDTH, i // WIDTH
        per_move = [i, -1, -1, -1, -1]
        if y > 0:
            per_move[Move.UP] = i - WIDTH
        if y < HEIGHT - 1:
            per_move[Move.DOWN] = i + WIDTH
        if x > 0:
            per_move[Move.LEFT] = i - 1
        if x < WIDTH - 1:
            per_move[Move.RIGHT] = i + 1
        targets.append(tuple(per_move))
    return tuple(targets)


# MOVE_TARGETS[cell][move] -> destination cell index, -1 if off-grid.
MOVE_TARGETS = _build_move_targets()

_DIRS = ((1, 0, True), (-1, 0, False), (0, 1, True), (0, -1, False))


def _build_rays():
    """Per cell: 4 x (cumulative ray masks, bit-order-increasing flag).

    ``cum[k]`` covers the first k ray cells walking away from the cell;
    rays stop in front of walls and the grid edge at build time.
    """
    rays = []
    for i in range(N_CELLS):
        x, y = i % WIDTH, i // WIDTH
        per_dir = []
        for dx, dy, increasing in _DIRS:
            cum = [0]
            mask = 0
            cx, cy = x + dx, y + dy
            while 0 <= cx < WIDTH and 0 <= cy < HEIGHT and not is_wall(cx, cy):
                mask |= 1 << (cy * WIDTH + cx)
                cum.append(mask)
                cx += dx
                cy += dy
            per_dir.append((tuple(cum), increasing))
        rays.append(tuple(per_dir))
    return tuple(rays)


RAYS = _build_rays()

MAX_RANGE = 13  # an arm can never exceed the board width anyway


class BlastMaskTable:
    """Precomputed blast rays and full-cross masks for the fixed wall grid.

    Immutable after construction; masks never include wall cells and depend
    only on the static wall pattern.
    """

    def __init__(self):
        self.rays = RAYS
        cross = []
        for i in range(N_CELLS):
            per_range = [0]
            for r in range(1, MAX_RANGE + 1):
                mask = BIT[i]
                for cum, _inc in RAYS[i]:
                    mask |= cum[min(r - 1, len(cum) - 1)]
                per_range.append(mask)
            cross.append(tuple(per_range))
        self.cross = tuple(cross)

    def mask(self, cell: int, blast_range: int) -> int:
        """Full-cross blast mask on an obstacle-free board."""
        return self.cross[cell][min(blast_range, MAX_RANGE)]

    def ray(self, cell: int, direction: int, blast_range: int) -> int:
        cum, _inc = self.rays[cell][direction]
        return cum[min(blast_range - 1, len(cum) - 1)]


def precompute_masks() -> BlastMaskTable:
    return BlastMaskTable()


MASKS = precompute_masks()


def _build_raysets():
    """RAYSETS[r][cell]: the four (ray_mask, increasing) pairs at range r."""
    by_range = [None]
    for r in range(1, MAX_RANGE + 1):
        per_cell = []
        for i in range(N_CELLS):
            pairs = []
            for cum, inc in RAYS[i]:
                ray = cum[min(r - 1, len(cum) - 1)]
                if ray:
                    pairs.append((ray, inc))
            per_cell.append(tuple(pairs))
        by_range.append(tuple(per_cell))
    return tuple(by_range)


RAYSETS = _build_raysets()
CROSS = MASKS.cross

# Legal-action lookup: index = U|D<<1|L<<2|R<<3 plus 16 when a drop is
# possible; value = canonical tuple of actions.
def _build_legal_table():
    table = []
    for key in range(32):
        moves = [Move.STAY]
        for bit, move in ((1, Move.UP), (2, Move.DOWN), (4, Move.LEFT), (8, Move.RIGHT)):
            if key & bit:
                moves.append(move)
        moves.sort()
        drops = (False, True) if key & 16 else (False,)
        table.append(tuple(Action(m, d) for m in moves for d in drops))
    return tuple(table)


LEGAL_TABLE = _build_legal_table()


class BitState:
    """Bit-plane mirror of :class:`bomberbots.engine.GameState`.

    All fields are immutable values; stepping builds a new instance, so a
    BitState can be shared freely between searches. ``buckets[i]`` holds the
    bombs exploding in ``i + 1`` turns as ``(cell, owner, range)`` records.
    """

    __slots__ = ("n", "boxes", "box_r", "box_b", "item_r", "item_b", "bombs",
                 "buckets", "pos", "alive", "avail", "maxb", "brange",
                 "scores", "elim", "turn", "countdown")

    def __init__(self, n, boxes, box_r, box_b, item_r, item_b, bombs, buckets,
                 pos, alive, avail, maxb, brange, scores, elim, turn, countdown):
        self.n = n
        self.boxes = boxes
        self.box_r = box_r
        self.box_b = box_b
        self.item_r = item_r
        self.item_b = item_b
        self.bombs = bombs
        self.buckets = buckets
        self.pos = pos
        self.alive = alive
        self.avail = avail
        self.maxb = maxb
        self.brange = brange
        self.scores = scores
        self.elim = elim
        self.turn = turn
        self.countdown = countdown

    def copy(self) -> "BitState":
        return BitState(self.n, self.boxes, self.box_r, self.box_b, self.item_r,
                        self.item_b, self.bombs, self.buckets, self.pos,
                        self.alive, self.avail, self.maxb, self.brange,
                        self.scores, self.elim, self.turn, self.countdown)

    def __eq__(self, other):
        if not isinstance(other, BitState):
            return NotImplemented
        return all(getattr(self, f) == getattr(other, f) for f in self.__slots__)

    def __hash__(self):
        return hash((self.boxes, self.box_r, self.box_b, self.item_r,
                     self.item_b, self.bombs, self.buckets, self.pos,
                     self.alive, self.avail, self.maxb, self.brange,
                     self.scores, self.turn, self.countdown))

    def alive_count(self) -> int:
        return self.alive.bit_count()

    def signature(self):
        """Hashable identity of the bomb/box/item situation (memo keys)."""
        return (self.buckets, self.boxes, self.box_r, self.box_b,
                self.item_r, self.item_b)


def from_state(state: GameState) -> BitState:
    boxes = box_r = box_b = 0
    for y in range(HEIGHT):
        row = state.grid[y]
        for x in range(WIDTH):
            cell = row[x]
            if cell in BOX_CELLS:
                bit = BIT[y * WIDTH + x]
                boxes |= bit
                if cell == Cell.BOX_RANGE:
                    box_r |= bit
                elif cell == Cell.BOX_BOMB:
                    box_b |= bit
    item_r = item_b = 0
    for it in state.items:
        bit = BIT[it.y * WIDTH + it.x]
        if it.kind == ItemKind.EXTRA_RANGE:
            item_r |= bit
        else:
            item_b |= bit
    bombs = 0
    buckets = [[] for _ in range(BOMB_TIMER)]
    for b in state.bombs:
        bombs |= BIT[b.y * WIDTH + b.x]
        buckets[b.timer - 1].append((b.y * WIDTH + b.x, b.owner, b.blast_range))
    for bucket in buckets:
        bucket.sort()
    pos = tuple(p.y * WIDTH + p.x for p in state.players)
    alive = 0
    for p in state.players:
        if p.alive:
            alive |= 1 << p.id
    return BitState(
        len(state.players), boxes, box_r, box_b, item_r, item_b, bombs,
        tuple(tuple(b) for b in buckets), pos, alive,
        tuple(p.bombs_available for p in state.players),
        tuple(p.max_bombs for p in state.players),
        tuple(p.blast_range for p in state.players),
        tuple(p.boxes_destroyed for p in state.players),
        tuple(-1 if p.elimination_turn is None else p.elimination_turn
              for p in state.players),
        state.turn,
        -1 if state.post_box_countdown is None else state.post_box_countdown,
    )


def to_state(b: BitState) -> GameState:
    grid = empty_grid()
    for i in range(N_CELLS):
        bit = BIT[i]
        if b.boxes & bit:
            if b.box_r & bit:
                grid[CELL_Y[i]][CELL_X[i]] = Cell.BOX_RANGE
            elif b.box_b & bit:
                grid[CELL_Y[i]][CELL_X[i]] = Cell.BOX_BOMB
            else:
                grid[CELL_Y[i]][CELL_X[i]] = Cell.BOX
    players = [
        Player(p, CELL_X[b.pos[p]], CELL_Y[b.pos[p]], bool((b.alive >> p) & 1),
               b.avail[p], b.maxb[p], b.brange[p], b.scores[p],
               None if b.elim[p] < 0 else b.elim[p])
        for p in range(b.n)
    ]
    bombs = []
    for t, bucket in enumerate(b.buckets):
        for cell, owner, rng in bucket:
            bombs.append(Bomb(owner, CELL_X[cell], CELL_Y[cell], t + 1, rng))
    bombs.sort(key=lambda bomb: bomb.y * WIDTH + bomb.x)
    items = []
    for plane, kind in ((b.item_r, ItemKind.EXTRA_RANGE), (b.item_b, ItemKind.EXTRA_BOMB)):
        while plane:
            bit = plane & -plane
            plane ^= bit
            i = bit.bit_length() - 1
            items.append(Item(kind, CELL_X[i], CELL_Y[i]))
    items.sort(key=lambda it: it.y * WIDTH + it.x)
    return GameState(grid, players, bombs, items, b.turn,
                     None if b.countdown < 0 else b.countdown)


def bit_legal_actions(b: BitState, player: int) -> tuple[Action, ...]:
    """Mirror of :func:`bomberbots.engine.legal_actions`."""
    if not 0 <= player < b.n or not (b.alive >> player) & 1:
        return ()
    pos = b.pos[player]
    blocked = WALLS | b.boxes | b.bombs
    targets = MOVE_TARGETS[pos]
    key = 0
    t = targets[1]
    if t >= 0 and not (blocked >> t) & 1:
        key = 1
    t = targets[2]
    if t >= 0 and not (blocked >> t) & 1:
        key |= 2
    t = targets[3]
    if t >= 0 and not (blocked >> t) & 1:
        key |= 4
    t = targets[4]
    if t >= 0 and not (blocked >> t) & 1:
        key |= 8
    if b.avail[player] > 0 and not (b.bombs >> pos) & 1:
        key |= 16
    return LEGAL_TABLE[key]


def _bomb_blast(cell: int, blast_range: int, obstacles: int) -> int:
    """One bomb's blast mask against an obstacle plane (boxes|items|bombs)."""
    if blast_range > MAX_RANGE:
        blast_range = MAX_RANGE
    blast = CROSS[cell][blast_range]
    obs_any = blast & obstacles & ~BIT[cell]
    if not obs_any:
        return blast
    blast = BIT[cell]
    for ray, increasing in RAYSETS[blast_range][cell]:
        obs = ray & obstacles
        if obs:
            if increasing:
                low = obs & -obs
                blast |= ray & ((low << 1) - 1)
            else:
                blast |= ray & -(1 << (obs.bit_length() - 1))
        else:
            blast |= ray
    return blast


def _explosion_closure(b: BitState):
    """This turn's simultaneous explosion set.

    Returns ``(blast_union, per_owner_blast, exploded_plane, exploded_records,
    chained_mask)`` where records are ``(cell, owner, range, timer)`` and
    ``chained_mask`` flags the timer buckets that lost bombs to chaining.
    All blasts are cut by the pre-explosion obstacle plane (simultaneity).
    """
    obstacles = b.boxes | b.item_r | b.item_b | b.bombs
    exploded_plane = 0
    frontier = []
    for cell, owner, rng in b.buckets[0]:
        exploded_plane |= BIT[cell]
        frontier.append((cell, owner, rng, 1))
    records = list(frontier)
    cell2rec = None
    union = 0
    chained_mask = 0
    owner_blast = [0] * b.n
    while frontier:
        cell, owner, rng, _timer = frontier.pop()
        blast = _bomb_blast(cell, rng, obstacles)
        union |= blast
        owner_blast[owner] |= blast
        chained = b.bombs & blast & ~exploded_plane
        if chained:
            if cell2rec is None:
                cell2rec = {}
                for t, bucket in enumerate(b.buckets):
                    for c, o, r in bucket:
                        cell2rec[c] = (c, o, r, t + 1)
            while chained:
                bit = chained & -chained
                chained ^= bit
                exploded_plane |= bit
                rec = cell2rec[bit.bit_length() - 1]
                chained_mask |= 1 << (rec[3] - 1)
                records.append(rec)
                frontier.append(rec)
    return union, owner_blast, exploded_plane, records, chained_mask


def propagate_blasts(b: BitState) -> int:
    """The plane of cells hit by this turn's explosions (chains included)."""
    if not b.buckets[0]:
        return 0
    return _explosion_closure(b)[0]


def explode_only(b: BitState) -> tuple[BitState, int, tuple[int, ...]]:
    """Advance one turn of the frozen world: bombs tick and explode, nobody
    acts. Returns (state, blast plane, per-owner box credits).

    Players are left untouched (no deaths, no stat changes) -- the frozen
    timeline helpers only consume the board planes and bomb buckets, and
    players never block blasts or movement anyway. Not a substitute for
    :func:`bit_step`.
    """
    if not b.buckets[0]:
        new = b.copy()
        new.buckets = b.buckets[1:] + (_EMPTY,)
        return new, 0, (0,) * b.n
    union, owner_blast, exploded_plane, records, chained_mask = _explosion_closure(b)
    boxes = b.boxes
    credits = tuple((owner_blast[p] & boxes).bit_count() for p in range(b.n))
    spawn_r = b.box_r & union
    spawn_b = b.box_b & union
    if chained_mask:
        buckets = tuple(
            bucket if not (chained_mask >> (t + 1)) & 1 else
            tuple(rec for rec in bucket if not (exploded_plane >> rec[0]) & 1)
            for t, bucket in enumerate(b.buckets[1:])
        ) + (_EMPTY,)
    else:
        buckets = b.buckets[1:] + (_EMPTY,)
    new = b.copy()
    new.boxes = boxes & ~union
    new.box_r = b.box_r & ~union
    new.box_b = b.box_b & ~union
    new.item_r = (b.item_r & ~union) | spawn_r
    new.item_b = (b.item_b & ~union) | spawn_b
    new.bombs = b.bombs & ~exploded_plane
    new.buckets = buckets
    return new, union, credits


_EMPTY_EVENTS: dict[int, TurnEvents] = {}


def _no_events(n: int) -> TurnEvents:
    ev = _EMPTY_EVENTS.get(n)
    if ev is None:
        ev = TurnEvents(boxes_destroyed_by=(0,) * n)
        _EMPTY_EVENTS[n] = ev
    return ev


_EMPTY: tuple = ()


def _plane_item_records(plane_r: int, plane_b: int) -> tuple:
    """(kind, x, y) records in cell order for the set bits of two planes."""
    out = []
    plane = plane_r | plane_b
    while plane:
        bit = plane & -plane
        plane ^= bit
        i = bit.bit_length() - 1
        kind = ItemKind.EXTRA_RANGE if plane_r & bit else ItemKind.EXTRA_BOMB
        out.append((kind, CELL_X[i], CELL_Y[i]))
    return tuple(out)


def bit_step(b: BitState, actions: Mapping[int, Action]) -> tuple[BitState, TurnEvents]:
    """Mirror of :func:`bomberbots.engine.step` on bit planes."""
    n = b.n
    boxes, box_r, box_b = b.boxes, b.box_r, b.box_b
    item_r, item_b = b.item_r, b.item_b
    bombs = b.bombs
    alive = b.alive
    pos = b.pos
    avail = b.avail
    if type(actions) is dict:
        acts = [actions.get(p) for p in range(n)]
    else:
        acts = actions  # sequence indexed by player id, None for no action

    killed: tuple = _EMPTY
    burned_items: tuple = _EMPTY
    spawned_items: tuple = _EMPTY
    exploded_bombs: tuple = _EMPTY
    boxes_by_owner = None
    elim_out = b.elim
    scores = b.scores

    if b.buckets[0]:
        union, owner_blast, exploded_plane, records, chained_mask = _explosion_closure(b)
        avail = list(avail)
        if union & boxes:
            counts = [0] * n
            for owner in range(n):
                blast = owner_blast[owner]
                if blast:
                    counts[owner] = (blast & boxes).bit_count()
            boxes_by_owner = tuple(counts)
            scores = tuple(s + c for s, c in zip(scores, counts))
        dead = None
        for p in range(n):
            if (alive >> p) & 1 and (union >> pos[p]) & 1:
                if dead is None:
                    dead = []
                dead.append(p)
        if dead is not None:
            elim = list(elim_out)
            for p in dead:
                alive &= ~(1 << p)
                elim[p] = b.turn
            elim_out = tuple(elim)
            killed = tuple(dead)
        if (item_r | item_b) & union:
            burned_items = _plane_item_records(item_r & union, item_b & union)
            item_r &= ~union
            item_b &= ~union
        spawn_r = box_r & union
        spawn_b = box_b & union
        if spawn_r | spawn_b:
            spawned_items = _plane_item_records(spawn_r, spawn_b)
            item_r |= spawn_r
            item_b |= spawn_b
            box_r &= ~union
            box_b &= ~union
        boxes &= ~union
        bombs &= ~exploded_plane
        for rec in records:
            avail[rec[1]] += 1
        avail = tuple(avail)
        if chained_mask:
            buckets7 = tuple(
                bucket if not (chained_mask >> (t + 1)) & 1 else
                tuple(rec for rec in bucket if not (exploded_plane >> rec[0]) & 1)
                for t, bucket in enumerate(b.buckets[1:])
            )
        else:
            buckets7 = b.buckets[1:]
        records.sort()
        exploded_bombs = tuple((o, CELL_X[c], CELL_Y[c], t, r)
                               for c, o, r, t in records)
    else:
        buckets7 = b.buckets[1:]

    # Bomb placement (seat order; a cell never receives two bombs).
    placements = None
    for p in range(n):
        action = acts[p]
        if action is None or not action[1] or not (alive >> p) & 1:
            continue
        cell = pos[p]
        if avail[p] >= 1 and not (bombs >> cell) & 1:
            if placements is None:
                placements = []
                avail = list(avail)
            bombs |= BIT[cell]
            placements.append((cell, p, b.brange[p]))
            avail[p] -= 1
    if placements is None:
        buckets = buckets7 + (_EMPTY,)
    else:
        placements.sort()
        buckets = buckets7 + (tuple(placements),)
        avail = tuple(avail)

    # Simultaneous movement against the move-time board.
    moved = None
    blocked = WALLS | boxes | bombs
    for p in range(n):
        action = acts[p]
        if action is None:
            continue
        move = action[0]
        if move == 0 or not (alive >> p) & 1:
            continue
        t = MOVE_TARGETS[pos[p]][move]
        if t >= 0 and not (blocked >> t) & 1:
            if moved is None:
                moved = list(pos)
            moved[p] = t
    if moved is not None:
        pos = tuple(moved)

    # Item pickup (simultaneous, then the item disappears).
    pickups: tuple = _EMPTY
    maxb = b.maxb
    brange = b.brange
    if item_r | item_b:
        collected = 0
        picks = None
        for p in range(n):
            if not (alive >> p) & 1:
                continue
            bit = BIT[pos[p]]
            if item_r & bit:
                if picks is None:
                    picks = []
                    brange = list(brange)
                brange[p] += 1
                collected |= bit
                picks.append((p, ItemKind.EXTRA_RANGE))
            elif item_b & bit:
                if picks is None:
                    picks = []
                    brange = list(brange)
                if not isinstance(maxb, list):
                    maxb = list(maxb)
                    avail = list(avail)
                maxb[p] += 1
                avail[p] += 1
                collected |= bit
                picks.append((p, ItemKind.EXTRA_BOMB))
        if picks is not None:
            item_r &= ~collected
            item_b &= ~collected
            picks.sort()
            pickups = tuple(picks)
            brange = tuple(brange)
            if isinstance(maxb, list):
                maxb = tuple(maxb)
                avail = tuple(avail)

    turn = b.turn + 1
    countdown = b.countdown
    if countdown >= 0:
        countdown -= 1
    elif not boxes:
        countdown = ENDGAME_COUNTDOWN

    new = BitState(n, boxes, box_r, box_b, item_r, item_b, bombs, buckets,
                   pos, alive, avail, maxb, brange, scores, elim_out,
                   turn, countdown)

    if killed or exploded_bombs or pickups or boxes_by_owner:
        events = TurnEvents(boxes_by_owner or (0,) * n, killed, spawned_items,
                            burned_items, exploded_bombs, pickups)
    else:
        events = _no_events(n)
    return new, events


def search_terminal(b: BitState) -> bool:
    """Terminal as the searches see it: at most one player left.

    Turn limit and the end-of-boxes countdown are referee concerns; the
    searches deliberately treat the game as open-ended.
    """
    return b.alive.bit_count() <= 1
