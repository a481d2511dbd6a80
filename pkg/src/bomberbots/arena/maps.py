"""Symmetric random map generation.

Boxes are sampled onto the fixed wall pattern so that the result is
point-symmetric (180 degrees); four-player maps are additionally symmetric
about both axes. Start corners and their two orthogonal neighbours stay
clear. Cells related by symmetry share their box contents.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..engine import (
    Cell, GameState, ItemKind, Player, START_CORNERS, WIDTH, HEIGHT,
    empty_grid, is_wall, make_state,
)

DEFAULT_BOX_DENSITY = 0.35
# (no item, extra range, extra bomb)
DEFAULT_ITEM_WEIGHTS = (1.0, 1.0, 1.0)

_CONTENT_CELLS = (Cell.BOX, Cell.BOX_RANGE, Cell.BOX_BOMB)


@dataclass(frozen=True)
class MapSpec:
    seed: int
    players: int = 2
    box_density: float = DEFAULT_BOX_DENSITY
    item_weights: tuple[float, float, float] = DEFAULT_ITEM_WEIGHTS

    def __post_init__(self):
        if not 2 <= self.players <= 4:
            raise ValueError(f"player count must be 2..4, got {self.players}")
        if not 0.0 <= self.box_density <= 1.0:
            raise ValueError(f"box density must be in [0, 1], got {self.box_density}")


def reserved_cells() -> set[tuple[int, int]]:
    """Corner cells and their orthogonal neighbours, always box-free."""
    cells = set()
    for cx, cy in START_CORNERS:
        cells.add((cx, cy))
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < WIDTH and 0 <= ny < HEIGHT:
                cells.add((nx, ny))
    return cells


def _orbit(x: int, y: int, players: int) -> set[tuple[int, int]]:
    if players == 4:
        return {(x, y), (WIDTH - 1 - x, y), (x, HEIGHT - 1 - y),
                (WIDTH - 1 - x, HEIGHT - 1 - y)}
    return {(x, y), (WIDTH - 1 - x, HEIGHT - 1 - y)}


def generate_map(spec: MapSpec) -> GameState:
    """A fresh starting state for the given spec. Same spec, same map."""
    rng = random.Random(spec.seed)
    grid = empty_grid()
    reserved = reserved_cells()

    seen: set[tuple[int, int]] = set()
    for y in range(HEIGHT):
        for x in range(WIDTH):
            if (x, y) in seen or is_wall(x, y):
                continue
            orbit = _orbit(x, y, spec.players)
            seen |= orbit
            if orbit & reserved:
                continue
            if rng.random() >= spec.box_density:
                continue
            cell = rng.choices(_CONTENT_CELLS, weights=spec.item_weights)[0]
            for ox, oy in orbit:
                grid[oy][ox] = cell

    players = [Player(i, *START_CORNERS[i]) for i in range(spec.players)]
    return make_state(players, grid=grid)
