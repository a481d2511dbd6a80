"""Reference rules engine for the 13x11 grid-bomber game.

This is the readable, rule-complete implementation. It favours clarity over
speed and serves as the behavioral oracle for the bitwise engine in
``bomberbots.bitboard``: both must produce identical states for identical
inputs.

Board layout: 13 columns x 11 rows, indestructible walls on every cell with
both coordinates odd. Boxes (optionally containing an item) fill the rest of
the map at generation time. Bombs explode 8 turns after placement, in
cross-shaped blasts that stop at the first box, item, or bomb (destroying /
triggering it) and stop in front of walls.

Turn order inside :func:`step`:

1. bomb timers tick and explosions resolve (chains included),
2. surviving players that asked to drop place a bomb on their cell,
3. all players move simultaneously,
4. items are collected (simultaneous arrivals all collect),
5. turn counter and end-of-boxes countdown bookkeeping.

Within one turn, an action's legality is decided on the state the players
observed (see :func:`legal_actions`); the referee substitutes Stay for
anything else. :func:`step` itself re-checks placements and moves at
execution time so that direct callers (searches feeding predicted opponent
actions) degrade gracefully instead of corrupting state: a blocked move
becomes a stand-still, an impossible drop is skipped. Both engines implement
exactly these execution-time rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping, NamedTuple, Optional

WIDTH = 13
HEIGHT = 11
MAX_TURNS = 200
BOMB_TIMER = 8
START_RANGE = 3
START_BOMBS = 1
ENDGAME_COUNTDOWN = 20
CENTER = (6, 5)

START_CORNERS = ((0, 0), (12, 10), (12, 0), (0, 10))


class Cell(IntEnum):
    FLOOR = 0
    WALL = 1
    BOX = 2          # empty box
    BOX_RANGE = 3    # box containing an extra-range item
    BOX_BOMB = 4     # box containing an extra-bomb item


BOX_CELLS = (Cell.BOX, Cell.BOX_RANGE, Cell.BOX_BOMB)


class ItemKind(IntEnum):
    EXTRA_RANGE = 1
    EXTRA_BOMB = 2


# Contents of a destroyed box cell, by cell value. None = nothing inside.
BOX_CONTENTS = {
    Cell.BOX: None,
    Cell.BOX_RANGE: ItemKind.EXTRA_RANGE,
    Cell.BOX_BOMB: ItemKind.EXTRA_BOMB,
}


class Move(IntEnum):
    STAY = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4


MOVE_DELTAS = {
    Move.STAY: (0, 0),
    Move.UP: (0, -1),
    Move.DOWN: (0, 1),
    Move.LEFT: (-1, 0),
    Move.RIGHT: (1, 0),
}


class Action(NamedTuple):
    """One player's turn decision: a movement direction plus a drop flag."""

    move: Move
    drop: bool

    @property
    def code(self) -> int:
        return int(self.move) * 2 + int(self.drop)

    @classmethod
    def from_code(cls, code: int) -> "Action":
        if not 0 <= code <= 9:
            raise ValueError(f"action code out of range: {code}")
        return ALL_ACTIONS[code]


# Canonical action order; index equals Action.code.
ALL_ACTIONS = tuple(Action(m, d) for m in Move for d in (False, True))
STAY = ALL_ACTIONS[0]


def in_grid(x: int, y: int) -> bool:
    return 0 <= x < WIDTH and 0 <= y < HEIGHT


def is_wall(x: int, y: int) -> bool:
    return x % 2 == 1 and y % 2 == 1


@dataclass
class Player:
    id: int
    x: int
    y: int
    alive: bool = True
    bombs_available: int = START_BOMBS
    max_bombs: int = START_BOMBS
    blast_range: int = START_RANGE
    boxes_destroyed: int = 0
    elimination_turn: Optional[int] = None

    def copy(self) -> "Player":
        return Player(self.id, self.x, self.y, self.alive, self.bombs_available,
                      self.max_bombs, self.blast_range, self.boxes_destroyed,
                      self.elimination_turn)


@dataclass
class Bomb:
    owner: int
    x: int
    y: int
    timer: int
    blast_range: int

    def copy(self) -> "Bomb":
        return Bomb(self.owner, self.x, self.y, self.timer, self.blast_range)


@dataclass
class Item:
    kind: ItemKind
    x: int
    y: int

    def copy(self) -> "Item":
        return Item(self.kind, self.x, self.y)


@dataclass
class TurnEvents:
    """What happened during one :func:`step`, for evaluation bookkeeping.

    Item records are ``(kind, x, y)``; exploded-bomb records are
    ``(owner, x, y, timer, blast_range)`` with the timer the bomb had when
    it went off (chained bombs keep their remaining timer). All record
    tuples are ordered by cell (row-major), players ascending.
    """

    boxes_destroyed_by: tuple[int, ...]
    players_killed: tuple[int, ...] = ()
    items_spawned: tuple[tuple[ItemKind, int, int], ...] = ()
    items_burned: tuple[tuple[ItemKind, int, int], ...] = ()
    bombs_exploded: tuple[tuple[int, int, int, int, int], ...] = ()
    pickups: tuple[tuple[int, ItemKind], ...] = ()


@dataclass
class GameState:
    grid: list[list[Cell]]
    players: list[Player]
    bombs: list[Bomb]
    items: list[Item]
    turn: int = 0
    post_box_countdown: Optional[int] = None

    def copy(self) -> "GameState":
        return GameState(
            [row[:] for row in self.grid],
            [p.copy() for p in self.players],
            [b.copy() for b in self.bombs],
            [i.copy() for i in self.items],
            self.turn,
            self.post_box_countdown,
        )

    def cell(self, x: int, y: int) -> Cell:
        return self.grid[y][x]

    def bomb_at(self, x: int, y: int) -> Optional[Bomb]:
        for b in self.bombs:
            if b.x == x and b.y == y:
                return b
        return None

    def item_at(self, x: int, y: int) -> Optional[Item]:
        for i in self.items:
            if i.x == x and i.y == y:
                return i
        return None

    def boxes_remaining(self) -> int:
        return sum(1 for row in self.grid for c in row if c in BOX_CELLS)

    def alive_players(self) -> list[Player]:
        return [p for p in self.players if p.alive]


@dataclass(frozen=True)
class Ranking:
    """Players ordered best to worst, with tie groups.

    Survivors rank above eliminated players; later eliminations rank above
    earlier ones; within survivors and within same-turn eliminations, more
    destroyed boxes is better, equal counts tie.
    """

    groups: tuple[tuple[int, ...], ...]

    def position_of(self, player_id: int) -> int:
        for pos, group in enumerate(self.groups):
            if player_id in group:
                return pos
        raise KeyError(player_id)

    def beats(self, a: int, b: int) -> bool:
        return self.position_of(a) < self.position_of(b)

    def winners(self) -> tuple[int, ...]:
        return self.groups[0]


def empty_grid() -> list[list[Cell]]:
    """The fixed 13x11 floor/wall pattern with no boxes."""
    return [
        [Cell.WALL if is_wall(x, y) else Cell.FLOOR for x in range(WIDTH)]
        for y in range(HEIGHT)
    ]


def make_state(players: Iterable[Player], grid: Optional[list[list[Cell]]] = None,
               bombs: Iterable[Bomb] = (), items: Iterable[Item] = (),
               turn: int = 0) -> GameState:
    """Assemble a state and normalize the end-of-boxes countdown."""
    state = GameState(grid if grid is not None else empty_grid(),
                      list(players), list(bombs), list(items), turn)
    _sort_entities(state)
    if state.post_box_countdown is None and state.boxes_remaining() == 0:
        state.post_box_countdown = ENDGAME_COUNTDOWN
    return state


def _sort_entities(state: GameState) -> None:
    # Canonical entity order (row-major cell index) so that states coming
    # from either engine compare equal field by field.
    state.bombs.sort(key=lambda b: b.y * WIDTH + b.x)
    state.items.sort(key=lambda i: i.y * WIDTH + i.x)


def legal_actions(state: GameState, player_id: int) -> tuple[Action, ...]:
    """All actions available to a player on the observed state.

    Stay is always available. A direction is available iff the destination
    is on the grid and holds no wall, box, or bomb. Drop variants are
    available iff the player has a bomb in stock and stands on a bomb-free
    cell. Dead or unknown players get an empty tuple (caller bug guard).
    """
    if not 0 <= player_id < len(state.players):
        return ()
    player = state.players[player_id]
    if not player.alive:
        return ()
    moves = [Move.STAY]
    for move in (Move.UP, Move.DOWN, Move.LEFT, Move.RIGHT):
        dx, dy = MOVE_DELTAS[move]
        nx, ny = player.x + dx, player.y + dy
        if not in_grid(nx, ny):
            continue
        if state.grid[ny][nx] != Cell.FLOOR:
            continue
        if state.bomb_at(nx, ny) is not None:
            continue
        moves.append(move)
    can_drop = player.bombs_available >= 1 and state.bomb_at(player.x, player.y) is None
    return tuple(Action(m, d) for m in sorted(moves) for d in ((False, True) if can_drop else (False,)))


def blast_cells(state: GameState, bomb: Bomb) -> set[tuple[int, int]]:
    """Cells covered by one bomb's blast on the current board.

    The bomb's own cell always burns. Each arm extends up to range-1 cells,
    stops in front of walls and the grid edge, and stops *at* the first box,
    item, or other bomb (that cell is affected).
    """
    cells = {(bomb.x, bomb.y)}
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        for dist in range(1, bomb.blast_range):
            x, y = bomb.x + dx * dist, bomb.y + dy * dist
            if not in_grid(x, y) or state.grid[y][x] == Cell.WALL:
                break
            cells.add((x, y))
            if state.grid[y][x] in BOX_CELLS:
                break
            if state.item_at(x, y) is not None:
                break
            if state.bomb_at(x, y) is not None:
                break
    return cells


def resolve_explosions(state: GameState) -> tuple[GameState, TurnEvents]:
    """Tick bomb timers and resolve this turn's explosion closure.

    Bombs at timer 1 explode; any bomb touched by a blast joins the same
    simultaneous explosion set. Every blast is computed against the
    pre-explosion board, so a box or bomb destroyed this turn still stops
    the rays of its neighbours. Surviving bombs have their timer reduced
    by one.
    """
    state = state.copy()
    n = len(state.players)

    exploding: list[Bomb] = [b for b in state.bombs if b.timer == 1]
    if not exploding:
        for b in state.bombs:
            b.timer -= 1
        return state, TurnEvents(boxes_destroyed_by=(0,) * n)

    # Chain closure: blasts are all computed on the pre-explosion board.
    blast_of: dict[int, set[tuple[int, int]]] = {}
    queue = list(exploding)
    in_set = {id(b) for b in exploding}
    while queue:
        bomb = queue.pop()
        cells = blast_cells(state, bomb)
        blast_of[id(bomb)] = cells
        for other in state.bombs:
            if id(other) not in in_set and (other.x, other.y) in cells:
                in_set.add(id(other))
                exploding.append(other)
                queue.append(other)

    blast_union: set[tuple[int, int]] = set()
    for cells in blast_of.values():
        blast_union |= cells

    # Box credit: each owner whose blast reaches a box is credited once.
    boxes_by_owner = [0] * n
    per_owner_boxes: dict[int, set[tuple[int, int]]] = {}
    for bomb in exploding:
        hit = {c for c in blast_of[id(bomb)] if state.grid[c[1]][c[0]] in BOX_CELLS}
        per_owner_boxes.setdefault(bomb.owner, set()).update(hit)
    for owner, boxes in per_owner_boxes.items():
        boxes_by_owner[owner] += len(boxes)
        state.players[owner].boxes_destroyed += len(boxes)

    killed = []
    for p in state.players:
        if p.alive and (p.x, p.y) in blast_union:
            p.alive = False
            p.elimination_turn = state.turn
            killed.append(p.id)

    burned = [i for i in state.items if (i.x, i.y) in blast_union]
    state.items = [i for i in state.items if (i.x, i.y) not in blast_union]

    spawned = []
    for x, y in blast_union:
        cell = state.grid[y][x]
        if cell in BOX_CELLS:
            state.grid[y][x] = Cell.FLOOR
            contents = BOX_CONTENTS[cell]
            if contents is not None:
                spawned.append(Item(contents, x, y))
    state.items.extend(spawned)

    exploded_ids = {id(b) for b in exploding}
    state.bombs = [b for b in state.bombs if id(b) not in exploded_ids]
    for b in state.bombs:
        b.timer -= 1
    for bomb in exploding:
        state.players[bomb.owner].bombs_available += 1

    _sort_entities(state)
    events = TurnEvents(
        boxes_destroyed_by=tuple(boxes_by_owner),
        players_killed=tuple(sorted(killed)),
        items_spawned=tuple(sorted(((i.kind, i.x, i.y) for i in spawned),
                                   key=lambda r: r[2] * WIDTH + r[1])),
        items_burned=tuple(sorted(((i.kind, i.x, i.y) for i in burned),
                                  key=lambda r: r[2] * WIDTH + r[1])),
        bombs_exploded=tuple(sorted(((b.owner, b.x, b.y, b.timer, b.blast_range)
                                     for b in exploding),
                                    key=lambda r: r[2] * WIDTH + r[1])),
    )
    return state, events


def step(state: GameState, actions: Mapping[int, Action]) -> tuple[GameState, TurnEvents]:
    """Advance the game one turn with the given per-player actions.

    Actions for dead players are ignored. Placements and moves are checked
    at execution time (see module docstring); callers that only submit
    actions from :func:`legal_actions` never trigger those checks except
    through simultaneity (e.g. a move onto a cell where a bomb was placed
    this very turn is blocked and the player stands still).

    ``actions`` may be a mapping from player id or a sequence indexed by
    player id (None entries meaning no action).
    """
    if not isinstance(actions, dict):
        actions = {p: a for p, a in enumerate(actions) if a is not None}
    state, events = resolve_explosions(state)

    # Bomb placement, in seat order. Two players on one cell both dropping
    # produce a single bomb (the lower id places, the other keeps theirs).
    for p in state.players:
        if not p.alive:
            continue
        action = actions.get(p.id)
        if action is None or not action.drop:
            continue
        if p.bombs_available >= 1 and state.bomb_at(p.x, p.y) is None:
            state.bombs.append(Bomb(p.id, p.x, p.y, BOMB_TIMER, p.blast_range))
            p.bombs_available -= 1

    # Simultaneous movement; players never block each other.
    for p in state.players:
        if not p.alive:
            continue
        action = actions.get(p.id)
        if action is None or action.move == Move.STAY:
            continue
        dx, dy = MOVE_DELTAS[action.move]
        nx, ny = p.x + dx, p.y + dy
        if in_grid(nx, ny) and state.grid[ny][nx] == Cell.FLOOR and state.bomb_at(nx, ny) is None:
            p.x, p.y = nx, ny

    # Item pickup: simultaneous arrivals all collect, then the item is gone.
    pickups = []
    taken = []
    for item in state.items:
        collectors = [p for p in state.players if p.alive and (p.x, p.y) == (item.x, item.y)]
        if not collectors:
            continue
        for p in collectors:
            if item.kind == ItemKind.EXTRA_RANGE:
                p.blast_range += 1
            else:
                p.max_bombs += 1
                p.bombs_available += 1
            pickups.append((p.id, item.kind))
        taken.append(item)
    if taken:
        taken_ids = {id(i) for i in taken}
        state.items = [i for i in state.items if id(i) not in taken_ids]
        events = TurnEvents(events.boxes_destroyed_by, events.players_killed,
                            events.items_spawned, events.items_burned,
                            events.bombs_exploded, tuple(sorted(pickups)))

    state.turn += 1
    if state.post_box_countdown is not None:
        state.post_box_countdown -= 1
    elif state.boxes_remaining() == 0:
        state.post_box_countdown = ENDGAME_COUNTDOWN

    _sort_entities(state)
    return state, events


def is_terminal(state: GameState) -> Optional[Ranking]:
    """The final ranking if the game is over, else None.

    Terminal when at most one player is alive, the turn limit is reached,
    or the end-of-boxes countdown has expired.
    """
    alive = state.alive_players()
    if len(alive) > 1 and state.turn < MAX_TURNS and state.post_box_countdown != 0:
        return None
    return rank_players(state)


def rank_players(state: GameState) -> Ranking:
    def sort_key(p: Player):
        # survivors first, then later eliminations, then box score
        elim = 0 if p.alive else -(p.elimination_turn or 0)
        return (not p.alive, elim, -p.boxes_destroyed)

    ordered = sorted(state.players, key=sort_key)
    groups: list[tuple[int, ...]] = []
    current: list[int] = []
    prev_key = None
    for p in ordered:
        key = sort_key(p)
        if prev_key is not None and key != prev_key:
            groups.append(tuple(sorted(current)))
            current = []
        current.append(p.id)
        prev_key = key
    if current:
        groups.append(tuple(sorted(current)))
    return Ranking(tuple(groups))


def render_grid(state: GameState) -> str:
    """The 11-row text picture of the grid ('.' floor, 'X' wall, boxes 0/1/2)."""
    chars = {Cell.FLOOR: ".", Cell.WALL: "X", Cell.BOX: "0",
             Cell.BOX_RANGE: "1", Cell.BOX_BOMB: "2"}
    return "\n".join("".join(chars[c] for c in row) for row in state.grid)
