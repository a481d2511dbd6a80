"""Single-player MCTS with predicted opponents and root trap pruning.

Opponents are part of the environment: at every tree and rollout step they
replay their predicted sequences, then idle. The tree stores per node the
mean and the maximum of the backpropagated rollout values; UCT selection
uses the mean (c = 1), the move actually played is the root child with the
highest maximum. Root actions after which some opponent has a forced
two-turn kill are left out of the tree entirely.

Rollouts are uniformly random over the agent's legal actions, at most 15
turns, and are scored 0 if the agent died, else::

    (sum of round rewards * 50 * 0.98^round + 200 - box_dist) / 400

where a round's reward counts boxes the agent destroyed plus extra-bomb
pickups while it holds fewer than four bombs, and box_dist is the total
Manhattan distance to the remaining boxes. The 200-turn limit and the
end-of-boxes countdown are deliberately ignored inside the search.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, replace as dc_replace
from typing import Optional

import numpy as np

from .. import fastcore as F
from ..bitboard import BitState, bit_legal_actions, bit_step, from_state
from ..engine import Action, ALL_ACTIONS, GameState, STAY
from ..evaluation import EvalMemos, can_kill_bit
from ..fastcore import to_array
from ..prediction import EMPTY_PLAN, PredictedPlan, predict
from . import Budget


@dataclass(frozen=True)
class MctsParams:
    uct_c: float = 1.0
    rollout_depth: int = 15
    rollout_gamma: float = 0.98
    reward_points: float = 50.0
    survive_base: float = 200.0
    value_scale: float = 400.0
    bomb_reward_cap: int = 4       # extra-bomb pickups reward below this
    root_prune: bool = True
    predict_ms: float = 10.0       # per opponent (wall-clock mode)
    predict_iterations: int = 60   # per opponent (iteration mode)
    default_iterations: int = 400  # when no budget is given

    def replace(self, **kw) -> "MctsParams":
        return dc_replace(self, **kw)


class MctsNode:
    __slots__ = ("state", "depth", "untried", "children", "visits", "total",
                 "max_value")

    def __init__(self, state, depth: int, me: int, legal_buf):
        self.state = state
        self.depth = depth
        k = F._legal_codes(state, me, legal_buf)
        self.untried = [ALL_ACTIONS[legal_buf[i]] for i in range(k)]
        self.children: dict[Action, MctsNode] = {}
        self.visits = 0
        self.total = 0.0
        self.max_value = 0.0


@dataclass
class MctsDiagnostics:
    iterations: int = 0
    root_children: int = 0
    best_max: float = 0.0
    pruned_roots: int = 0
    elapsed_ms: float = 0.0

    def line(self) -> str:
        return (f"iters={self.iterations} children={self.root_children} "
                f"best_max={self.best_max:.3f} pruned={self.pruned_roots} "
                f"ms={self.elapsed_ms:.1f}")


class MctsAgent:
    """One instance per seat. Deterministic under a fixed seed and
    iteration budget; one iteration = select, expand, rollout, backprop."""

    def __init__(self, player_id: int, params: MctsParams = MctsParams(),
                 seed: int = 0, debug=None):
        self.player_id = player_id
        self.params = params
        self.rng = random.Random(seed)
        self.name = "mcts"
        self.debug = debug
        self.last_diagnostics: Optional[MctsDiagnostics] = None
        self.ws = F.Workspace()

    def choose_action(self, state: GameState, budget: Budget) -> Action:
        t0 = time.perf_counter()
        me = self.player_id
        b0 = state if isinstance(state, BitState) else from_state(state)
        diag = MctsDiagnostics()
        memos = EvalMemos()

        legal = bit_legal_actions(b0, me)
        if not legal:
            self._finish(diag, t0)
            return STAY
        if len(legal) == 1:
            self._finish(diag, t0)
            return legal[0]

        plans = EMPTY_PLAN
        if any(p != me and (b0.alive >> p) & 1 for p in range(b0.n)):
            per_opp = Budget(
                ms=None if budget.ms is None else min(self.params.predict_ms,
                                                      budget.ms * 0.25),
                iterations=None if budget.iterations is None
                else self.params.predict_iterations)
            plans = predict(b0, me, self._plan_for_opponent, per_opp)

        allowed = legal
        if self.params.root_prune:
            allowed = self.root_prune(b0, me, legal, memos)
            diag.pruned_roots = len(legal) - len(allowed)

        F._seed(self.rng.getrandbits(31))
        self._plan_codes, self._plan_len = F.plan_arrays(plans, b0.n)
        root = MctsNode(to_array(b0), 0, me, self.ws.legal)
        root.untried = [a for a in root.untried if a in allowed]

        deadline = budget.deadline()
        max_iters = budget.iterations if budget.iterations is not None else (
            self.params.default_iterations if deadline is None else None)

        iters = 0
        while True:
            if max_iters is not None and iters >= max_iters:
                break
            if deadline is not None and (iters % 16 == 0
                                         and time.perf_counter() > deadline):
                break
            if max_iters is None and deadline is None:
                break
            self._iterate(root, me)
            iters += 1

        diag.iterations = iters
        diag.root_children = len(root.children)
        best = self._best_root_action(root, allowed)
        if root.children:
            diag.best_max = max(c.max_value for c in root.children.values())
        self._finish(diag, t0)
        return best

    # -- search internals ---------------------------------------------------

    def _iterate(self, root: MctsNode, me: int) -> None:
        c = self.params.uct_c
        node = root
        path = [root]
        while True:
            alive_mask = int(node.state[F.ALIVE])
            if alive_mask.bit_count() <= 1 or not (alive_mask >> me) & 1:
                value = self._terminal_value(node.state, me)
                break
            if node.untried:
                idx = self.rng.randrange(len(node.untried))
                action = node.untried.pop(idx)
                child_state = self._advance(node.state, me, action, node.depth)
                child = MctsNode(child_state, node.depth + 1, me, self.ws.legal)
                node.children[action] = child
                path.append(child)
                value = self._rollout(child_state, me, child.depth)
                break
            if not node.children:
                value = self._terminal_value(node.state, me)
                break
            log_n = math.log(node.visits)
            best_child = None
            best_uct = -math.inf
            for child in node.children.values():
                uct = child.total / child.visits + c * math.sqrt(log_n / child.visits)
                if uct > best_uct:
                    best_uct = uct
                    best_child = child
            node = best_child
            path.append(node)
        for n in path:
            n.visits += 1
            n.total += value
            if value > n.max_value:
                n.max_value = value

    def _advance(self, arr, me: int, action: Action, depth: int):
        n = int(arr[F.NPLAYERS])
        child = arr.copy()
        acts = np.full(4, -1, dtype=np.int64)
        for p in range(n):
            if p != me and depth < self._plan_len[p]:
                acts[p] = self._plan_codes[p, depth]
        acts[me] = action.code
        F._step(child, acts, self.ws.scratch)
        return child

    def _rollout(self, arr, me: int, depth: int) -> float:
        p = self.params
        return float(F._rollout_k(
            arr, me, self._plan_codes, self._plan_len, depth,
            p.rollout_depth, p.rollout_gamma, p.reward_points,
            p.survive_base, p.value_scale, p.bomb_reward_cap,
            self.ws.scratch, self.ws.work, self.ws.tmp1))

    def _terminal_value(self, arr, me: int) -> float:
        if not (int(arr[F.ALIVE]) >> me) & 1:
            return 0.0
        p = self.params
        return (p.survive_base - F._box_dist_k(arr, me)) / p.value_scale

    def root_prune(self, b0: BitState, me: int, legal, memos: EvalMemos):
        """Drop root actions after which an opponent has a forced kill."""
        enemies = [p for p in range(b0.n) if p != me and (b0.alive >> p) & 1]
        allowed = []
        for a in legal:
            acts: list[Optional[Action]] = [None] * b0.n
            acts[me] = a
            s, _ = bit_step(b0, acts)
            if not (s.alive >> me) & 1:
                continue
            if any(can_kill_bit(s, e, me, memos) for e in enemies):
                continue
            allowed.append(a)
        if not allowed:
            return legal  # everything is a trap: search the full set
        return tuple(allowed)

    def _best_root_action(self, root: MctsNode, allowed) -> Action:
        best = None
        best_key = None
        for action, child in root.children.items():
            key = (child.max_value, child.visits, -action.code)
            if best_key is None or key > best_key:
                best_key = key
                best = action
        if best is None:
            return allowed[0]
        return best

    # -- prediction plumbing --------------------------------------------------

    def _plan_for_opponent(self, b: BitState, opp: int, budget: Budget,
                           plans: PredictedPlan) -> tuple[Action, ...]:
        predictor = MctsAgent(opp, self.params,
                              seed=self.rng.getrandbits(32))
        return predictor.plan_sequence(b, opp, budget, plans)

    def plan_sequence(self, b: BitState, player: int, budget: Budget,
                      plans: PredictedPlan = EMPTY_PLAN) -> tuple[Action, ...]:
        """Principal sequence: follow max-value children while visited."""
        me = player
        legal = bit_legal_actions(b, me)
        if not legal or budget.is_zero():
            return ()
        F._seed(self.rng.getrandbits(31))
        self._plan_codes, self._plan_len = F.plan_arrays(plans, b.n)
        root = MctsNode(to_array(b), 0, me, self.ws.legal)
        deadline = budget.deadline()
        max_iters = budget.iterations
        iters = 0
        while True:
            if max_iters is not None and iters >= max_iters:
                break
            if deadline is not None and time.perf_counter() > deadline:
                break
            if max_iters is None and deadline is None:
                break
            self._iterate(root, me)
            iters += 1
        out = []
        node = root
        while node.children:
            best = None
            best_key = None
            for action, child in node.children.items():
                if child.visits == 0:
                    continue
                key = (child.max_value, child.visits, -action.code)
                if best_key is None or key > best_key:
                    best_key = key
                    best = action
            if best is None:
                break
            out.append(best)
            node = node.children[best]
        return tuple(out)

    def _finish(self, diag: MctsDiagnostics, t0: float) -> None:
        diag.elapsed_ms = (time.perf_counter() - t0) * 1000.0
        self.last_diagnostics = diag
        if self.debug is not None:
            print(f"[mcts p{self.player_id}] {diag.line()}", file=self.debug)
