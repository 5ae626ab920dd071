import numpy as np
import pytest

from stagegames import RandomGameSpec, random_game


def draw_game(rng, S=None, m=None, n=None, q_max=1.0):
    """Random game with dimensions drawn from ``rng`` when not given."""
    S = S or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, 4))
    n = n or int(rng.integers(1, 4))
    seed = int(rng.integers(2**63))
    return random_game(RandomGameSpec(seed=seed, S=S, m=m, n=n, q_max=q_max))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def rps():
    return np.array([[0.0, -1, 1], [1, 0, -1], [-1, 1, 0]])
