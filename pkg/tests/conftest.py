import random

import pytest

from bomberbots import engine as E
from bomberbots.arena.maps import MapSpec, generate_map


def make_players(positions, **overrides):
    """Players at the given cells; keyword overrides apply to all of them."""
    players = []
    for i, (x, y) in enumerate(positions):
        p = E.Player(i, x, y)
        for k, v in overrides.items():
            setattr(p, k, v)
        players.append(p)
    return players


def open_state(positions=((0, 0), (12, 10)), **overrides):
    """A boxless state with players at the given cells."""
    return E.make_state(make_players(positions, **overrides))


def random_playout_states(seed, players=2, games=5, max_turns=120,
                          keep_every=3):
    """Seeded sample of reachable states, via random self-play."""
    rng = random.Random(seed)
    out = []
    for g in range(games):
        gs = generate_map(MapSpec(seed=seed * 97 + g, players=players))
        for t in range(max_turns):
            if E.is_terminal(gs) is not None:
                break
            acts = {p.id: rng.choice(E.legal_actions(gs, p.id))
                    for p in gs.players if p.alive}
            gs, _ = E.step(gs, acts)
            if t % keep_every == 0:
                out.append(gs.copy())
    return out


@pytest.fixture(scope="session")
def playout_states():
    return random_playout_states(seed=20240801, players=2, games=6)
