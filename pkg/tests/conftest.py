"""Shared random-state generators for the test suite.

All sampling is driven by explicit numpy Generators so every test is
reproducible from its literal seed.
"""

from __future__ import annotations

import numpy as np

from mhdpp import state


def random_admissible(rng: np.random.Generator, n: int = 1, spread: float = 2.0) -> np.ndarray:
    """Random admissible conserved states with log-uniform density/energy.

    Densities and internal energies span 10^[-spread, spread]; velocities
    and magnetic fields are normal mixtures so strongly magnetized and
    fast-moving states appear regularly.
    """
    rho = 10.0 ** rng.uniform(-spread, spread, n)
    v = rng.normal(0.0, 1.0, (n, 3)) * 10.0 ** rng.uniform(-1, 1, (n, 1))
    B = rng.normal(0.0, 1.0, (n, 3)) * 10.0 ** rng.uniform(-1, 1, (n, 1))
    e = 10.0 ** rng.uniform(-spread, spread, n)
    U = np.empty((n, 8))
    U[:, state.RHO] = rho
    U[:, state.MOM] = rho[:, None] * v
    U[:, state.MAG] = B
    U[:, state.ENE] = rho * e + 0.5 * (rho * np.sum(v * v, axis=1) + np.sum(B * B, axis=1))
    return U


def random_star(rng: np.random.Generator, n: int = 1) -> state.StarArgs:
    """Heavy-tailed (v*, B*) samples probing the quantified inequality."""
    wide = rng.random((n, 1)) < 0.3
    v = rng.normal(0.0, 1.0, (n, 3)) * np.where(wide, 10.0, 1.0)
    wide = rng.random((n, 1)) < 0.3
    B = rng.normal(0.0, 1.0, (n, 3)) * np.where(wide, 10.0, 1.0)
    return state.StarArgs(v_star=v, B_star=B)


def random_unit_vector(rng: np.random.Generator, n: int = 1, d: int = 2) -> np.ndarray:
    xi = rng.normal(0.0, 1.0, (n, d))
    return xi / np.linalg.norm(xi, axis=1, keepdims=True)
