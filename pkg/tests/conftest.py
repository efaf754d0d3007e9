import numpy as np
import pytest

from ppmhd import physics


@pytest.fixture
def eos():
    return physics.EosIdeal(5.0 / 3.0)


@pytest.fixture
def eos14():
    return physics.EosIdeal(1.4)


def random_admissible(rng, n, gamma=5.0 / 3.0, vscale=2.0, bscale=2.0):
    """Batch of admissible conserved states, shape (n, 8)."""
    rho = np.exp(rng.uniform(-1.5, 1.5, n))
    v = rng.normal(0.0, vscale, (n, 3))
    B = rng.normal(0.0, bscale, (n, 3))
    e = np.exp(rng.uniform(-2.0, 2.0, n))
    p = (gamma - 1.0) * rho * e
    w = np.concatenate([rho[:, None], v, B, p[:, None]], axis=1)
    return physics.cons_from_prim_arr(w, gamma)
