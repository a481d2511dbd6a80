"""Opponent prediction: run one's own search on each enemy's behalf.

Before the main search, the agent plans a short action sequence for every
living opponent by running the same algorithm from that opponent's seat
with everyone else frozen in place. The main search then replays those
sequences instead of assuming motionless enemies; opponents whose sequence
runs out (or who got no budget) stand still and drop nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .agents import Budget
from .bitboard import BitState, from_state
from .engine import Action, GameState

# planner(bitstate, player, budget, plans) -> ordered action sequence
Planner = Callable[[BitState, int, Budget, "PredictedPlan"], tuple]


@dataclass(frozen=True)
class PredictedPlan:
    """Per-opponent approximated action sequences."""

    plans: dict = field(default_factory=dict)

    def action_for(self, player: int, depth: int) -> Optional[Action]:
        """The planned action at a search depth; None (= idle) past horizon."""
        seq = self.plans.get(player)
        if seq is None or depth >= len(seq):
            return None
        return seq[depth]

    def horizon(self, player: int) -> int:
        seq = self.plans.get(player)
        return 0 if seq is None else len(seq)


EMPTY_PLAN = PredictedPlan()


def predict(state: GameState | BitState, me: int, planner: Planner,
            per_opponent_budget: Budget) -> PredictedPlan:
    """Approximate every living opponent's next moves.

    Each opponent is planned for independently, from a state where all
    other players (including us) are frozen; a zero budget yields empty
    plans, which every consumer must tolerate.
    """
    b = state if isinstance(state, BitState) else from_state(state)
    plans = {}
    if per_opponent_budget.is_zero():
        return EMPTY_PLAN
    for opp in range(b.n):
        if opp == me or not (b.alive >> opp) & 1:
            continue
        seq = tuple(planner(b, opp, per_opponent_budget, EMPTY_PLAN))
        if seq:
            plans[opp] = seq
    return PredictedPlan(plans)


def split_budget(total: Budget, parts: int) -> Budget:
    """Divide a prediction budget evenly across opponents."""
    if parts <= 0:
        return Budget(ms=0.0, iterations=0)
    return Budget(
        ms=None if total.ms is None else total.ms / parts,
        iterations=None if total.iterations is None else total.iterations // parts,
    )
