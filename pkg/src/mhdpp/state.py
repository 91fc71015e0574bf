"""Conserved/primitive state algebra for ideal MHD.

Conserved states are length-8 arrays (component axis last when stacked)

    U = (rho, m1, m2, m3, B1, B2, B3, E),

with mass density rho, momentum m = rho*v, magnetic field B and total
energy E.  The internal energy density is

    calE(U) = E - (|m|^2/rho + |B|^2) / 2 = rho*e,

and a state is physically admissible when rho > 0 and calE(U) > 0.
An equivalent linear characterization of admissibility uses auxiliary
free vectors (v*, B*): for admissible U,

    U . n* + |B*|^2/2 > 0   for all v*, B*,
    n* = (|v*|^2/2, -v*, -B*, 1),

and the left-hand side equals |theta(U, v*, B*)|^2 with the 7-vector

    theta = (B - B*, sqrt(rho)(v - v*), sqrt(2 rho e)) / sqrt(2).

The global minimum of the functional over (v*, B*) is attained at
(v, B) with value calE(U), which is why admissibility is tested through
calE directly while the quantified form is retained for property tests.

Primitive states are length-8 arrays W = (rho, v1, v2, v3, p, B1, B2, B3).

All functions are pure and broadcast over leading axes.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "RHO", "MOM", "MAG", "ENE", "PRHO", "PVEL", "PPRE", "PMAG",
    "StarArgs", "IdealEos", "GeneralEos",
    "internal_energy_density", "is_admissible", "theta_vector",
    "gstar_functional", "cons_to_prim", "prim_to_cons", "plasma_beta",
]

# Component layout of conserved 8-vectors.
RHO = 0
MOM = slice(1, 4)
MAG = slice(4, 7)
ENE = 7

# Component layout of primitive 8-vectors.
PRHO = 0
PVEL = slice(1, 4)
PPRE = 4
PMAG = slice(5, 8)


class StarArgs(NamedTuple):
    """Free auxiliary vectors (v*, B*) of the linear admissibility form."""

    v_star: np.ndarray
    B_star: np.ndarray


def _sq(x: np.ndarray) -> np.ndarray:
    """Sum of squared components along the last axis (holomorphic, no abs)."""
    return np.einsum("...i,...i->...", x, x)


class IdealEos:
    """Ideal-gas equation of state p = (gamma - 1) rho e, gamma > 1."""

    is_ideal = True

    def __init__(self, gamma: float):
        if not gamma > 1.0:
            raise ValueError(f"adiabatic index must exceed 1, got {gamma}")
        self.gamma = float(gamma)

    def pressure(self, rho, e):
        return (self.gamma - 1.0) * rho * e

    def specific_internal_energy(self, rho, p):
        return p / ((self.gamma - 1.0) * rho)

    def __repr__(self):
        return f"IdealEos(gamma={self.gamma})"


class GeneralEos:
    """General EOS given by a callable p(rho, e) (and optionally its inverse).

    The callable must satisfy: for rho > 0, e > 0 iff p(rho, e) > 0.
    The forward direction is spot-checked on random positive samples at
    construction; supplying ``specific_energy_fn`` (e as a function of
    (rho, p)) enables primitive -> conserved conversion.
    """

    is_ideal = False

    def __init__(
        self,
        pressure_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
        specific_energy_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
        check_samples: int = 256,
        seed: int = 0,
    ):
        self._pressure_fn = pressure_fn
        self._specific_energy_fn = specific_energy_fn
        if check_samples:
            rng = np.random.default_rng(seed)
            rho = 10.0 ** rng.uniform(-6, 6, check_samples)
            e = 10.0 ** rng.uniform(-6, 6, check_samples)
            p = np.asarray(pressure_fn(rho, e), dtype=float)
            if not np.all(p > 0.0):
                raise ValueError(
                    "EOS violates the positivity assumption: p(rho, e) <= 0 "
                    "for some rho > 0, e > 0"
                )

    def pressure(self, rho, e):
        return self._pressure_fn(rho, e)

    def specific_internal_energy(self, rho, p):
        if self._specific_energy_fn is None:
            raise ValueError("general EOS has no inverse e(rho, p) registered")
        return self._specific_energy_fn(rho, p)


def internal_energy_density(U: np.ndarray) -> np.ndarray:
    """calE(U) = E - (|m|^2/rho + |B|^2)/2.  Requires rho > 0."""
    U = np.asarray(U)
    rho = U[..., RHO]
    if np.any(np.real(rho) <= 0.0):
        raise ValueError("internal_energy_density requires rho > 0")
    return U[..., ENE] - 0.5 * (_sq(U[..., MOM]) / rho + _sq(U[..., MAG]))


def is_admissible(U: np.ndarray, eps_rho: float = 0.0, eps_e: float = 0.0) -> np.ndarray:
    """Admissibility predicate: rho and calE(U) at or above their floors.

    With a zero floor the comparison is strict (the admissible set is
    open); with a positive floor it is inclusive.  Total: never raises,
    states with rho <= 0 simply test False.
    """
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    ok_rho = rho >= eps_rho if eps_rho > 0.0 else rho > 0.0
    safe_rho = np.where(rho > 0.0, rho, 1.0)
    calE = U[..., ENE] - 0.5 * (_sq(U[..., MOM]) / safe_rho + _sq(U[..., MAG]))
    ok_e = calE >= eps_e if eps_e > 0.0 else calE > 0.0
    return ok_rho & ok_e


def theta_vector(U: np.ndarray, s: StarArgs) -> np.ndarray:
    """The 7-vector theta = (B - B*, sqrt(rho)(v - v*), sqrt(2 rho e))/sqrt(2).

    Defined for admissible U only; satisfies
    |theta|^2 == gstar_functional(U, s).
    """
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    calE = internal_energy_density(U)
    if np.any(calE <= 0.0):
        raise ValueError("theta_vector requires an admissible state (calE > 0)")
    v = U[..., MOM] / rho[..., None]
    out = np.empty(np.broadcast_shapes(U.shape[:-1], s.v_star.shape[:-1]) + (7,))
    out[..., 0:3] = (U[..., MAG] - s.B_star) / np.sqrt(2.0)
    out[..., 3:6] = np.sqrt(rho)[..., None] * (v - s.v_star) / np.sqrt(2.0)
    out[..., 6] = np.sqrt(calE)
    return out


def gstar_functional(U: np.ndarray, s: StarArgs) -> np.ndarray:
    """U . n* + |B*|^2/2 with n* = (|v*|^2/2, -v*, -B*, 1).

    For admissible U this is positive for every (v*, B*); its minimum
    over the star arguments is calE(U), attained at v* = v, B* = B.
    """
    U = np.asarray(U, dtype=float)
    v_star = np.asarray(s.v_star, dtype=float)
    B_star = np.asarray(s.B_star, dtype=float)
    return (
        0.5 * U[..., RHO] * _sq(v_star)
        - np.sum(U[..., MOM] * v_star, axis=-1)
        - np.sum(U[..., MAG] * B_star, axis=-1)
        + U[..., ENE]
        + 0.5 * _sq(B_star)
    )


def cons_to_prim(U: np.ndarray, eos) -> np.ndarray:
    """Convert conserved (rho, m, B, E) to primitive (rho, v, p, B)."""
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    if np.any(rho <= 0.0):
        raise ValueError("cons_to_prim requires rho > 0")
    W = np.empty_like(U)
    W[..., PRHO] = rho
    W[..., PVEL] = U[..., MOM] / rho[..., None]
    calE = U[..., ENE] - 0.5 * (_sq(U[..., MOM]) / rho + _sq(U[..., MAG]))
    W[..., PPRE] = eos.pressure(rho, calE / rho)
    W[..., PMAG] = U[..., MAG]
    return W


def prim_to_cons(W: np.ndarray, eos) -> np.ndarray:
    """Convert primitive (rho, v, p, B) to conserved (rho, m, B, E)."""
    W = np.asarray(W, dtype=float)
    rho = W[..., PRHO]
    if np.any(rho <= 0.0):
        raise ValueError("prim_to_cons requires rho > 0")
    U = np.empty_like(W)
    U[..., RHO] = rho
    U[..., MOM] = rho[..., None] * W[..., PVEL]
    U[..., MAG] = W[..., PMAG]
    e = eos.specific_internal_energy(rho, W[..., PPRE])
    U[..., ENE] = rho * e + 0.5 * (rho * _sq(W[..., PVEL]) + _sq(W[..., PMAG]))
    return U


def plasma_beta(W: np.ndarray) -> np.ndarray:
    """beta = 2 p / |B|^2 from a primitive state; +inf where B vanishes."""
    W = np.asarray(W, dtype=float)
    b2 = _sq(W[..., PMAG])
    with np.errstate(divide="ignore"):
        return np.where(b2 > 0.0, 2.0 * W[..., PPRE] / np.where(b2 > 0.0, b2, 1.0), np.inf)
