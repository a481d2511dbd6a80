"""Beam search agent with duplicate hashing, opponent prediction, local
beams, first-move pruning, and survivability scoring.

The search is breadth-first and layered: every level keeps at most
``beam_width`` states, expanded over the agent's legal actions while
opponents replay their predicted sequences (then idle). Children are scored
with the evaluation function; the enhancements trim the frontier:

- ZH: duplicate states inside a level are merged via 64-bit Zobrist keys.
- OP: opponents follow predicted plans instead of standing still.
- LB: per-agent-position cap keeps the frontier spatially diverse.
- FMP: root actions that are not survivable are dropped; if some action
  enables a forced kill, only such actions stay; a certain suicide-win
  against the last enemy is forced outright.
- SC: states with no eight-turn escape lose ``sc_penalty`` points, which
  starves doomed lines without hard-pruning them.

The answer is the root action of the best node on the deepest fully
expanded level (deeper nodes win ties, then lower hash; fully
deterministic, no randomness anywhere in this agent).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace as dc_replace
from typing import Optional

import numpy as np

from .. import fastcore as F
from ..bitboard import BitState, bit_legal_actions, bit_step, from_state
from ..engine import Action, ALL_ACTIONS, GameState, STAY
from ..evaluation import (
    DEFAULT_WEIGHTS, EvalMemos, EvalWeights, can_kill_bit, is_survivable_bit,
)
from ..fastcore import to_array
from ..prediction import EMPTY_PLAN, PredictedPlan, predict, split_budget
from ..zobrist import KEYS, ZobristKeys, zobrist_hash, zobrist_update
from . import Budget


@dataclass(frozen=True)
class BeamParams:
    beam_width: int = 500
    local_beam_width: int = 12
    sc_penalty: float = 900.0
    zh: bool = True
    op: bool = True
    lb: bool = True
    fmp: bool = True
    sc: bool = True
    predict_ms: float = 15.0        # total across opponents (wall-clock mode)
    predict_iterations: int = 240   # total across opponents (iteration mode)
    default_sims: int = 2500        # iteration budget when none is given

    def replace(self, **kw) -> "BeamParams":
        return dc_replace(self, **kw)

    def with_features(self, flags) -> "BeamParams":
        return self.replace(zh="zh" in flags, op="op" in flags,
                            lb="lb" in flags, fmp="fmp" in flags,
                            sc="sc" in flags)

    def feature_string(self) -> str:
        return ",".join(name for name, on in
                        (("zh", self.zh), ("op", self.op), ("lb", self.lb),
                         ("fmp", self.fmp), ("sc", self.sc)) if on)


class BeamNode:
    __slots__ = ("state", "root_action", "action", "parent", "depth",
                 "score", "key", "boxes", "decayed")

    def __init__(self, state, root_action, action, parent, depth, score, key,
                 boxes, decayed):
        self.state = state
        self.root_action = root_action
        self.action = action
        self.parent = parent
        self.depth = depth
        self.score = score
        self.key = key
        self.boxes = boxes
        self.decayed = decayed

    def path(self) -> tuple[Action, ...]:
        out = []
        node = self
        while node is not None and node.action is not None:
            out.append(node.action)
            node = node.parent
        out.reverse()
        return tuple(out)


@dataclass
class BeamDiagnostics:
    depth: int = 0
    simulations: int = 0
    nodes_kept: int = 0
    best_score: float = 0.0
    root_allowed: int = 0
    forced: bool = False
    fallback: bool = False
    elapsed_ms: float = 0.0

    def line(self) -> str:
        return (f"depth={self.depth} sims={self.simulations} "
                f"kept={self.nodes_kept} best={self.best_score:.3f} "
                f"roots={self.root_allowed} forced={int(self.forced)} "
                f"fallback={int(self.fallback)} ms={self.elapsed_ms:.1f}")


class BeamAgent:
    """The layered-search agent. One instance per seat; no shared state."""

    def __init__(self, player_id: int, params: BeamParams = BeamParams(),
                 weights: EvalWeights = DEFAULT_WEIGHTS, debug=None,
                 machine_debug: bool = False):
        self.player_id = player_id
        self.params = params
        self.weights = weights
        self.name = f"beam[{params.feature_string() or 'plain'}]"
        self.debug = debug
        self.machine_debug = machine_debug
        self.last_diagnostics: Optional[BeamDiagnostics] = None
        self.ws = F.Workspace()
        self.wv = F.weights_vector(weights)

    # -- main entry ---------------------------------------------------------

    def choose_action(self, state: GameState, budget: Budget) -> Action:
        t0 = time.perf_counter()
        me = self.player_id
        b0 = state if isinstance(state, BitState) else from_state(state)
        diag = BeamDiagnostics()
        memos = EvalMemos()

        legal = bit_legal_actions(b0, me)
        if not legal:
            self._finish(diag, t0)
            return STAY

        plans = EMPTY_PLAN
        if self.params.op:
            opponents = sum(1 for p in range(b0.n)
                            if p != me and (b0.alive >> p) & 1)
            if opponents:
                per_opp = split_budget(
                    Budget(ms=None if budget.ms is None else min(self.params.predict_ms, budget.ms * 0.4),
                           iterations=None if budget.iterations is None else self.params.predict_iterations),
                    opponents)
                plans = predict(b0, me, self._plan_for_opponent, per_opp)

        allowed: tuple[Action, ...] = legal
        if self.params.fmp:
            allowed, forced = self.first_move_prune(b0, me, legal, memos)
            if forced is not None:
                diag.forced = True
                diag.root_allowed = 1
                self._finish(diag, t0)
                return forced
            if not allowed:
                diag.fallback = True
                self._finish(diag, t0)
                return self._max_horizon_action(b0, me, legal, memos)
        diag.root_allowed = len(allowed)

        best = self._search(b0, me, allowed, plans, budget, diag, t0)
        self._finish(diag, t0)
        if best is None:
            return allowed[0]
        return best.root_action

    # -- the layered search -------------------------------------------------

    def _search(self, b0: BitState, me: int, allowed, plans: PredictedPlan,
                budget: Budget, diag: BeamDiagnostics,
                t0: float) -> Optional[BeamNode]:
        params = self.params
        gamma = self.weights.gamma
        wv = self.wv
        ws = self.ws
        scratch, work = ws.scratch, ws.work
        step, survivable = F._step, F._survivable_k
        evaluate, zob = F._evaluate_k, F._zobrist_k
        alive_slot, score_me, pos_me = F.ALIVE, F.SCORE + me, F.POS + me
        deadline = None
        if budget.ms is not None:
            deadline = t0 + budget.ms / 1000.0
        max_sims = budget.iterations if budget.iterations is not None else (
            params.default_sims if deadline is None else None)

        a0 = to_array(b0)
        root_key = int(zob(a0)) if params.zh else 0
        root = BeamNode(a0, None, None, None, 0, 0.0, root_key, 0, 0.0)
        n = b0.n
        codes = np.empty(4, dtype=np.int64)
        zh, sc, lb = params.zh, params.sc, params.lb

        sims = 0
        best_completed: Optional[BeamNode] = None
        level = [root]
        depth = 0
        out_of_budget = False
        while level and not out_of_budget:
            depth += 1
            for p in range(n):
                if p != me:
                    act = plans.action_for(p, depth - 1)
                    codes[p] = -1 if act is None else act.code
            children: dict[int, BeamNode] = {}
            plain: list[BeamNode] = []
            for node in level:
                if out_of_budget:
                    break
                parent = node.state
                if int(parent[alive_slot]).bit_count() <= 1:
                    continue
                actions = allowed if depth == 1 else self._legal_from(parent, me)
                parent_score = int(parent[score_me])
                node_boxes = node.boxes
                node_root = node.root_action
                for action in actions:
                    child_arr = parent.copy()
                    codes[me] = action.code
                    step(child_arr, codes, scratch)
                    sims += 1
                    gained = int(child_arr[score_me]) - parent_score
                    boxes = node_boxes + gained
                    decayed = node.decayed
                    if gained:
                        decayed += gained * gamma ** depth
                    score = evaluate(child_arr, me, boxes, wv, scratch, work)
                    if sc and (int(child_arr[alive_slot]) >> me) & 1 and \
                            not survivable(child_arr, me, scratch, work):
                        score -= params.sc_penalty
                    key = int(zob(child_arr)) if zh else 0
                    child = BeamNode(child_arr,
                                     node_root if depth > 1 else action,
                                     action, node, depth, score, key,
                                     boxes, decayed)
                    if zh:
                        held = children.get(key)
                        if held is None or score > held.score:
                            children[key] = child
                    else:
                        plain.append(child)
                    if max_sims is not None and sims >= max_sims:
                        out_of_budget = True
                        break
                    if deadline is not None and sims % 64 == 0 and \
                            time.perf_counter() > deadline:
                        out_of_budget = True
                        break
            if out_of_budget:
                break  # partially expanded level: discard it
            pool = list(children.values()) if zh else plain
            if not pool:
                break
            pool.sort(key=lambda nd: (-nd.score, nd.key))
            if lb:
                kept = []
                per_pos: dict[int, int] = {}
                for nd in pool:
                    pos = int(nd.state[pos_me])
                    seen = per_pos.get(pos, 0)
                    if seen < params.local_beam_width:
                        per_pos[pos] = seen + 1
                        kept.append(nd)
                pool = kept
            level = pool[:params.beam_width]
            best_completed = level[0]
            diag.depth = depth
            diag.nodes_kept = len(level)
            diag.best_score = best_completed.score
            if deadline is not None and time.perf_counter() > deadline:
                break
        diag.simulations = sims
        return best_completed

    def _legal_from(self, arr, me: int) -> tuple[Action, ...]:
        k = F._legal_codes(arr, me, self.ws.legal)
        legal = self.ws.legal
        return tuple(ALL_ACTIONS[legal[i]] for i in range(k))

    # -- first move pruning --------------------------------------------------

    def first_move_prune(self, b0: BitState, me: int, legal, memos: EvalMemos):
        """(allowed root actions, forced action or None) per the FMP rules."""
        post = {}
        for a in legal:
            acts = [None] * b0.n
            acts[me] = a
            post[a], _ = bit_step(b0, acts)
        survivors = tuple(a for a in legal
                          if (post[a].alive >> me) & 1
                          and is_survivable_bit(post[a], me, memos))
        enemies = [p for p in range(b0.n) if p != me and (b0.alive >> p) & 1]
        kills = tuple(a for a in survivors
                      if any(can_kill_bit(post[a], me, e, memos) for e in enemies))
        if kills:
            return kills, None
        if len(enemies) == 1 and (b0.buckets[0] or b0.buckets[1]):
            for a in legal:
                if self._forced_suicide_win(b0, me, enemies[0], a):
                    return (a,), a
        return survivors, None

    def _forced_suicide_win(self, b0: BitState, me: int, enemy: int,
                            first: Action) -> bool:
        """Does committing to ``first`` guarantee a win within two turns,
        whatever the last enemy answers (mutual death decided by boxes)?"""
        def certain_win(state: BitState) -> bool:
            if (state.alive >> enemy) & 1:
                return False
            if (state.alive >> me) & 1:
                return True
            if state.elim[me] != state.elim[enemy]:
                return state.elim[me] > state.elim[enemy]
            return state.scores[me] > state.scores[enemy]

        for e0 in bit_legal_actions(b0, enemy) or (None,):
            acts = [None] * b0.n
            acts[me] = first
            if e0 is not None:
                acts[enemy] = e0
            s1, _ = bit_step(b0, acts)
            if certain_win(s1):
                continue
            if not (s1.alive >> enemy) & 1:
                return False  # enemy dead but we lose the tiebreak
            if not self._mutual_second(s1, me, enemy, certain_win):
                return False
        return True

    @staticmethod
    def _mutual_second(s1: BitState, me: int, enemy: int, certain_win) -> bool:
        my_acts = bit_legal_actions(s1, me) or (None,)
        their_acts = bit_legal_actions(s1, enemy) or (None,)
        for a2 in my_acts:
            ok = True
            for e2 in their_acts:
                acts = [None] * s1.n
                if a2 is not None:
                    acts[me] = a2
                if e2 is not None:
                    acts[enemy] = e2
                s2, _ = bit_step(s1, acts)
                if not certain_win(s2):
                    ok = False
                    break
            if ok:
                return True
        return False

    def _max_horizon_action(self, b0: BitState, me: int, legal,
                            memos: EvalMemos) -> Action:
        """No survivable root action: stall death as long as possible."""
        ws = self.ws
        a0 = to_array(b0)
        codes = np.full(4, -1, dtype=np.int64)
        best, best_h = legal[0], -1
        for a in legal:
            ws.tmp1[:] = a0
            codes[me] = a.code
            F._step(ws.tmp1, codes, ws.scratch)
            h = F._survival_horizon_k(ws.tmp1, me, ws.scratch, ws.work)
            if h > best_h:
                best, best_h = a, h
        return best

    # -- prediction plumbing ---------------------------------------------------

    def _plan_for_opponent(self, b: BitState, opp: int, budget: Budget,
                           plans: PredictedPlan) -> tuple[Action, ...]:
        predictor = BeamAgent(opp, self.params.replace(op=False),
                              self.weights)
        return predictor.plan_sequence(b, opp, budget, plans)

    def plan_sequence(self, b: BitState, player: int, budget: Budget,
                      plans: PredictedPlan = EMPTY_PLAN) -> tuple[Action, ...]:
        """Principal action sequence: the best leaf's path."""
        me = player
        memos = EvalMemos()
        diag = BeamDiagnostics()
        legal = bit_legal_actions(b, me)
        if not legal or budget.is_zero():
            return ()
        allowed = legal
        if self.params.fmp:
            allowed, forced = self.first_move_prune(b, me, legal, memos)
            if forced is not None:
                return (forced,)
            if not allowed:
                return (self._max_horizon_action(b, me, legal, memos),)
        best = self._search(b, me, allowed, plans, budget, diag,
                            time.perf_counter())
        if best is None:
            return ()
        return best.path()

    # -- diagnostics -----------------------------------------------------------

    def _finish(self, diag: BeamDiagnostics, t0: float) -> None:
        diag.elapsed_ms = (time.perf_counter() - t0) * 1000.0
        self.last_diagnostics = diag
        if self.debug is not None:
            if self.machine_debug:
                print(f"beam {diag.depth} {diag.simulations} {diag.nodes_kept} "
                      f"{diag.best_score:.6f} {diag.root_allowed} "
                      f"{int(diag.forced)} {int(diag.fallback)} "
                      f"{diag.elapsed_ms:.3f}", file=self.debug)
            else:
                print(f"[beam p{self.player_id}] {diag.line()}", file=self.debug)

