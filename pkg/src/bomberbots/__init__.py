"""Grid-bomber game engines, search bots, and a local match arena."""

__version__ = "0.1.0"

from .engine import (  # noqa: F401
    Action, Bomb, Cell, GameState, Item, ItemKind, Move, Player, Ranking,
    TurnEvents, blast_cells, is_terminal, legal_actions, resolve_explosions,
    step,
)
