"""Agent plumbing shared by the three search bots and the arena."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

from ..engine import Action, GameState, legal_actions


@dataclass(frozen=True)
class Budget:
    """Per-turn decision budget: wall-clock milliseconds or iteration count.

    Iteration mode exists for reproducible experiments; each agent
    documents what one iteration means for it (beam: one engine step,
    MCTS: one select/expand/rollout pass, RHEA: one generation).
    """

    ms: Optional[float] = None
    iterations: Optional[int] = None

    def deadline(self) -> Optional[float]:
        return None if self.ms is None else time.perf_counter() + self.ms / 1000.0

    def is_zero(self) -> bool:
        return (self.ms is not None and self.ms <= 0) or \
            (self.iterations is not None and self.iterations <= 0)


@runtime_checkable
class Agent(Protocol):
    name: str
    player_id: int

    def choose_action(self, state: GameState, budget: Budget) -> Action: ...


class RandomAgent:
    """Uniformly random legal actions; the baseline and benchmark driver."""

    def __init__(self, player_id: int, seed: int = 0):
        self.player_id = player_id
        self.name = "random"
        self.rng = random.Random(seed)
        self.last_diagnostics = None

    def choose_action(self, state: GameState, budget: Budget) -> Action:
        acts = legal_actions(state, self.player_id)
        if not acts:
            return Action.from_code(0)
        return self.rng.choice(acts)


def parse_agent_spec(spec: str):
    """Split an agent spec string into (kind, options dict).

    Grammar: ``kind[?key=value&key=value...]``; the ``external`` kind takes
    everything after the colon as the command line instead.
    """
    if spec.startswith("external:"):
        return "external", {"command": spec[len("external:"):]}
    kind, _, query = spec.partition("?")
    opts = {}
    if query:
        for pair in query.split("&"):
            if not pair:
                continue
            key, _, value = pair.partition("=")
            opts[key] = value
    return kind, opts


def make_agent(spec: str, player_id: int, seed: int = 0):
    """Build an agent from a spec string like ``beam?width=1000&sims=2500``."""
    kind, opts = parse_agent_spec(spec)
    if kind == "random":
        return RandomAgent(player_id, seed)
    if kind == "beam":
        from .beam import BeamAgent, BeamParams
        params = BeamParams()
        if "features" in opts:
            flags = set(opts["features"].split(",")) - {""}
            unknown = flags - {"zh", "op", "lb", "fmp", "sc"}
            if unknown:
                raise ValueError(f"unknown beam features: {sorted(unknown)}")
            params = params.with_features(flags)
        if "width" in opts:
            params = params.replace(beam_width=int(opts["width"]))
        if "local" in opts:
            params = params.replace(local_beam_width=int(opts["local"]))
        if "sims" in opts:
            params = params.replace(default_sims=int(opts["sims"]))
        if "pred" in opts:
            params = params.replace(predict_iterations=int(opts["pred"]))
        return BeamAgent(player_id, params)
    if kind == "mcts":
        from .mcts import MctsAgent, MctsParams
        params = MctsParams()
        if "iters" in opts:
            params = params.replace(default_iterations=int(opts["iters"]))
        if "pred" in opts:
            params = params.replace(predict_iterations=int(opts["pred"]))
        return MctsAgent(player_id, params, seed=seed)
    if kind == "rhea":
        from .rhea import RheaAgent, RheaParams
        params = RheaParams()
        if "gens" in opts:
            params = params.replace(default_generations=int(opts["gens"]))
        if "pred" in opts:
            params = params.replace(predict_generations=int(opts["pred"]))
        return RheaAgent(player_id, params, seed=seed)
    if kind == "external":
        from ..arena.match import ExternalAgent
        return ExternalAgent(player_id, opts["command"])
    raise ValueError(f"unknown agent kind: {kind!r}")
