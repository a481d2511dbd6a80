"""Rolling horizon evolution over fixed-length action sequences.

A genome is 17 action codes. Fitness simulates the sequence against the
predicted opponents with two repairs applied gene by gene: illegal actions
become Stay, and actions that walk into the next explosion are replaced by
Stay when standing still survives that turn. The fitness is the evaluation
of the final state minus a punishment that shrinks the later the line
first becomes non-survivable (and is zero if it never does).

Generations use roulette parent selection on positively shifted fitness,
one-point crossover, per-gene mutation, and (mu + lambda) replacement with
full elitism, so the best fitness never decreases between generations.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, replace as dc_replace
from typing import Optional

import numpy as np

from .. import fastcore as F
from ..bitboard import BitState, bit_legal_actions, from_state
from ..engine import Action, ALL_ACTIONS, GameState, STAY
from ..evaluation import DEFAULT_WEIGHTS, EvalWeights
from ..fastcore import to_array
from ..prediction import EMPTY_PLAN, PredictedPlan, predict
from . import Budget

GENOME_LENGTH = 17
N_ACTIONS = 10


def crossover_one_point(a: tuple, b: tuple, cut: int) -> tuple:
    """Child genome: a's genes before the cut, b's from the cut on."""
    if not 1 <= cut < len(a):
        raise ValueError(f"cut must be in 1..{len(a) - 1}, got {cut}")
    return a[:cut] + b[cut:]


def mutate(genome: tuple, p: float, rng: random.Random) -> tuple:
    """Resample each gene uniformly over the 10 action codes with prob. p."""
    return tuple(rng.randrange(N_ACTIONS) if rng.random() < p else g
                 for g in genome)


@dataclass(frozen=True)
class RheaParams:
    population_size: int = 50
    offspring_size: int = 50
    mutation_probability: float = 0.5
    genome_length: int = GENOME_LENGTH
    punish_base: float = 1000.0
    punish_decay: float = 0.9
    predict_ms: float = 10.0        # per opponent (wall-clock mode)
    predict_generations: int = 2    # per opponent (iteration mode)
    default_generations: int = 8    # when no budget is given

    def replace(self, **kw) -> "RheaParams":
        return dc_replace(self, **kw)


class Individual:
    __slots__ = ("genome", "fitness", "effective", "tstar")

    def __init__(self, genome, fitness, effective, tstar):
        self.genome = genome
        self.fitness = fitness
        self.effective = effective
        self.tstar = tstar


@dataclass
class RheaDiagnostics:
    generations: int = 0
    best_fitness: float = 0.0
    best_tstar: Optional[int] = None
    evaluations: int = 0
    elapsed_ms: float = 0.0

    def line(self) -> str:
        tstar = "-" if self.best_tstar is None else str(self.best_tstar)
        return (f"gens={self.generations} best={self.best_fitness:.3f} "
                f"tstar={tstar} evals={self.evaluations} "
                f"ms={self.elapsed_ms:.1f}")


class RheaAgent:
    """One instance per seat; deterministic under a fixed seed and a
    generation budget (one iteration = one generation)."""

    def __init__(self, player_id: int, params: RheaParams = RheaParams(),
                 weights: EvalWeights = DEFAULT_WEIGHTS, seed: int = 0,
                 debug=None):
        self.player_id = player_id
        self.params = params
        self.weights = weights
        self.rng = random.Random(seed)
        self.name = "rhea"
        self.debug = debug
        self.last_diagnostics: Optional[RheaDiagnostics] = None
        self.ws = F.Workspace()
        self.wv = F.weights_vector(weights)

    def choose_action(self, state: GameState, budget: Budget) -> Action:
        t0 = time.perf_counter()
        me = self.player_id
        b0 = state if isinstance(state, BitState) else from_state(state)
        diag = RheaDiagnostics()

        if not bit_legal_actions(b0, me):
            self._finish(diag, t0)
            return STAY

        plans = EMPTY_PLAN
        if any(p != me and (b0.alive >> p) & 1 for p in range(b0.n)):
            per_opp = Budget(
                ms=None if budget.ms is None else min(self.params.predict_ms,
                                                      budget.ms * 0.25),
                iterations=None if budget.iterations is None
                else self.params.predict_generations)
            plans = predict(b0, me, self._plan_for_opponent, per_opp)

        best = self._evolve(b0, me, plans, budget, diag, t0)
        self._finish(diag, t0)
        return best.effective[0] if best.effective else STAY

    # -- evolution loop -------------------------------------------------------

    def _evolve(self, b0: BitState, me: int, plans: PredictedPlan,
                budget: Budget, diag: RheaDiagnostics, t0: float) -> Individual:
        params = self.params
        rng = self.rng
        a0 = to_array(b0)
        plan_codes, plan_len = F.plan_arrays(plans, b0.n)
        known: dict[tuple, Individual] = {}

        def assess(genome: tuple) -> Individual:
            ind = known.get(genome)
            if ind is None:
                ind = self._assess_kernel(a0, me, genome, plan_codes, plan_len)
                known[genome] = ind
                diag.evaluations += 1
            return ind

        length = params.genome_length
        population = [assess(tuple(rng.randrange(N_ACTIONS) for _ in range(length)))
                      for _ in range(params.population_size)]
        population.sort(key=lambda ind: -ind.fitness)

        deadline = None
        if budget.ms is not None:
            deadline = t0 + budget.ms / 1000.0
        max_gens = budget.iterations if budget.iterations is not None else (
            params.default_generations if deadline is None else None)

        gens = 0
        while True:
            if max_gens is not None and gens >= max_gens:
                break
            if deadline is not None and time.perf_counter() > deadline:
                break
            if max_gens is None and deadline is None:
                break
            floor = min(ind.fitness for ind in population)
            weights = [ind.fitness - floor + 1.0 for ind in population]
            children = []
            for _ in range(params.offspring_size):
                pa, pb = rng.choices(population, weights=weights, k=2)
                cut = rng.randrange(1, length)
                genome = mutate(crossover_one_point(pa.genome, pb.genome, cut),
                                params.mutation_probability, rng)
                children.append(assess(genome))
            merged = population + children
            merged.sort(key=lambda ind: -ind.fitness)
            population = merged[:params.population_size]
            gens += 1

        diag.generations = gens
        best = population[0]
        diag.best_fitness = best.fitness
        diag.best_tstar = best.tstar
        return best

    # -- fitness ---------------------------------------------------------------

    def _assess_kernel(self, a0, me: int, genome: tuple, plan_codes,
                       plan_len) -> Individual:
        ws = self.ws
        genes = np.array(genome, dtype=np.int64)
        fitness, tstar = F._rhea_eval_k(
            a0, me, genes, plan_codes, plan_len, self.wv,
            self.params.punish_base, self.params.punish_decay,
            ws.effective, ws.scratch, ws.work, ws.tmp1, ws.tmp2)
        effective = []
        for t in range(len(genome)):
            code = int(ws.effective[t])
            if code < 0:
                break
            effective.append(ALL_ACTIONS[code])
        return Individual(genome, float(fitness), tuple(effective),
                          None if tstar < 0 else int(tstar))

    def evaluate_individual(self, b0: BitState, me: int, genome: tuple,
                            plans: PredictedPlan = EMPTY_PLAN) -> Individual:
        """Simulate the repaired genome and score the final state."""
        plan_codes, plan_len = F.plan_arrays(plans, b0.n)
        return self._assess_kernel(to_array(b0), me, genome, plan_codes,
                                   plan_len)

    # -- prediction plumbing -----------------------------------------------------

    def _plan_for_opponent(self, b: BitState, opp: int, budget: Budget,
                           plans: PredictedPlan) -> tuple[Action, ...]:
        predictor = RheaAgent(opp, self.params, self.weights,
                              seed=self.rng.getrandbits(32))
        return predictor.plan_sequence(b, opp, budget, plans)

    def plan_sequence(self, b: BitState, player: int, budget: Budget,
                      plans: PredictedPlan = EMPTY_PLAN) -> tuple[Action, ...]:
        """Principal sequence: the best individual's repaired actions."""
        if not bit_legal_actions(b, player) or budget.is_zero():
            return ()
        diag = RheaDiagnostics()
        best = self._evolve(b, player, plans, budget, diag,
                            time.perf_counter())
        return best.effective

    def _finish(self, diag: RheaDiagnostics, t0: float) -> None:
        diag.elapsed_ms = (time.perf_counter() - t0) * 1000.0
        self.last_diagnostics = diag
        if self.debug is not None:
            print(f"[rhea p{self.player_id}] {diag.line()}", file=self.debug)
