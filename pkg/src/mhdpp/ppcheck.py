"""Randomized executable checks for the admissibility estimates behind the
positivity-preserving flux theory.

The central object is the multi-state bound: given weights s_j > 0 and unit
vectors xi^(j) with sum_j s_j xi^(j) = 0 (edge measures and outward normals
of any polytope), admissible states U^(j) and per-state speeds
alpha_j >= alpha_hat_j, the wave-averaged state

    Ubar = sum_j s_j (alpha_j U^(j) - <xi^(j), F(U^(j))>) / sum_j s_j alpha_j

has positive density and satisfies, for every (v*, B*),

    Ubar . n* + |B*|^2/2
        >= -(v* . B*) sum_j s_j <xi^(j), B^(j)> / sum_j s_j alpha_j,

so Ubar is admissible (in closure) whenever the discrete-divergence sum on
the right vanishes.  The N = 2 antipodal reduction recovers the two-state
interface estimates used by the HLL flux.

Every check here evaluates both sides of its inequality directly and
records the worst normalized residual over a seeded random sample; the
quantified (v*, B*) are probed with a heavy-tailed mixture since they
cannot be enumerated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import flux
from .state import (
    ENE, MAG, MOM, RHO, StarArgs, internal_energy_density, is_admissible,
    gstar_functional,
)

__all__ = [
    "MultiStateConfig", "TwoStateReport", "CheckResult",
    "multi_state_alpha_hat", "multi_state_average", "multi_state_residual",
    "two_state_checks", "matrix_A_check", "source_lemma_checks",
    "pairing_lemma_check", "random_polygon_geometry", "mirrored_geometry",
    "verify_suite", "format_report", "write_report_csv",
]


@dataclass
class MultiStateConfig:
    """Geometry (s_j, xi^(j)), states U^(j) and optional speeds alpha_j."""

    s: np.ndarray
    xis: np.ndarray
    states: np.ndarray
    alphas: np.ndarray | None = None

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.xis = np.asarray(self.xis, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        n = self.s.shape[0]
        if self.xis.shape[0] != n or self.states.shape[0] != n:
            raise ValueError("inconsistent multi-state config sizes")
        if np.any(self.s <= 0.0):
            raise ValueError("weights s_j must be positive")
        norms = np.linalg.norm(self.xis, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("normals must be unit vectors")
        closure = np.linalg.norm(np.sum(self.s[:, None] * self.xis, axis=0))
        if closure > 1e-13 * np.sum(self.s):
            raise ValueError("geometry violates sum_j s_j xi^(j) = 0")

    @property
    def n(self) -> int:
        return self.s.shape[0]


def multi_state_alpha_hat(cfg: MultiStateConfig, eos) -> np.ndarray:
    """Per-state speed lower bounds alpha_hat_j of the multi-state theorem."""
    if not np.all(is_admissible(cfg.states)):
        raise ValueError("multi_state_alpha_hat requires admissible states")
    n = cfg.n
    d = cfg.xis.shape[1]
    rho = cfg.states[:, RHO]
    v = cfg.states[:, MOM] / rho[:, None]
    B = cfg.states[:, MAG]
    sr = np.sqrt(rho)
    s_total = np.sum(cfg.s)
    alpha = np.empty(n)
    for j in range(n):
        roe_v = (sr[j] * v[j] + sr[:, None] * v) / (sr[j] + sr)[:, None]
        dxi = cfg.xis[j] - cfg.xis  # (n, d)
        vel_avg = np.sum(cfg.s * np.sum(dxi * roe_v[:, :d], axis=1)) / s_total
        vn = float(np.dot(cfg.xis[j], v[j, :d]))
        bterm = 2.0 * np.sum(cfg.s * np.linalg.norm(B[j] - B, axis=1) / (sr[j] + sr)) / s_total
        alpha[j] = max(vn, vel_avg) + float(flux.pp_speed(cfg.states[j], cfg.xis[j], eos)) + bterm
    return alpha


def _resolved_alphas(cfg: MultiStateConfig, eos) -> np.ndarray:
    if cfg.alphas is None:
        return multi_state_alpha_hat(cfg, eos)
    alphas = np.asarray(cfg.alphas, dtype=float)
    hat = multi_state_alpha_hat(cfg, eos)
    if np.any(alphas < hat - 1e-13 * (1.0 + np.abs(hat))):
        raise ValueError("alphas must dominate alpha_hat")
    return alphas


def multi_state_average(cfg: MultiStateConfig, eos) -> np.ndarray:
    """The wave-averaged state Ubar; guaranteed to have positive density."""
    alphas = _resolved_alphas(cfg, eos)
    terms = alphas[:, None] * cfg.states - np.stack(
        [flux.directional_flux(cfg.states[j], cfg.xis[j], eos) for j in range(cfg.n)]
    )
    return np.sum(cfg.s[:, None] * terms, axis=0) / np.sum(cfg.s * alphas)


def multi_state_ddf(cfg: MultiStateConfig) -> float:
    """Discrete divergence sum_j s_j <xi^(j), B^(j)> of the configuration."""
    d = cfg.xis.shape[1]
    return float(np.sum(cfg.s * np.sum(cfg.xis * cfg.states[:, MAG][:, :d], axis=1)))


def multi_state_residual(cfg: MultiStateConfig, star: StarArgs, eos) -> np.ndarray:
    """LHS minus RHS of the multi-state inequality; >= 0 up to roundoff."""
    alphas = _resolved_alphas(cfg, eos)
    Ubar = multi_state_average(cfg, eos)
    lhs = gstar_functional(Ubar, star)
    rhs = (
        -np.sum(star.v_star * star.B_star, axis=-1)
        * multi_state_ddf(cfg)
        / np.sum(cfg.s * alphas)
    )
    return lhs - rhs


@dataclass
class TwoStateReport:
    U_bar: np.ndarray
    rho_positive: bool
    min_residual: float          # worst normalized inequality residual
    closure_member: bool | None  # None when the normal-B jump is nonzero
    normal_jump: float


def two_state_checks(
    Um: np.ndarray,
    Up: np.ndarray,
    xi: np.ndarray,
    alpha: float,
    alpha_t: float,
    mode: str,
    eos,
    stars: StarArgs | None = None,
    rng: np.random.Generator | None = None,
    n_stars: int = 1000,
) -> TwoStateReport:
    """Two-state interface estimates (HLL-type and LF-type averages).

    mode "corollary3": needs alpha >= alpha_r(Um, Up; xi) and
    alpha_t <= alpha_l(Up, Um; xi); the averaged state divides by
    (alpha - alpha_t).  mode "corollary4": needs alpha >= alpha_*(Um, Up; xi),
    alpha_t >= alpha_*(Up, Um; xi); divides by (alpha + alpha_t).
    """
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    xi = np.asarray(xi, dtype=float)
    Fm = flux.directional_flux(Um, xi, eos)
    Fp = flux.directional_flux(Up, xi, eos)
    def _slack(x):
        return 1e-13 * (1.0 + abs(float(x)))

    if mode == "corollary3":
        ar = flux.alpha_r(Um, Up, xi, eos)
        al = flux.alpha_l(Up, Um, xi, eos)
        if alpha < ar - _slack(ar):
            raise ValueError("alpha below alpha_r bound")
        if alpha_t > al + _slack(al):
            raise ValueError("alpha_t above alpha_l bound")
        denom = alpha - alpha_t
        U_bar = (alpha * Um - Fm - alpha_t * Up + Fp) / denom
    elif mode == "corollary4":
        a_mp = flux.alpha_star(Um, Up, xi, eos)
        a_pm = flux.alpha_star(Up, Um, xi, eos)
        if alpha < a_mp - _slack(a_mp):
            raise ValueError("alpha below alpha_star bound")
        if alpha_t < a_pm - _slack(a_pm):
            raise ValueError("alpha_t below alpha_star bound")
        denom = alpha + alpha_t
        U_bar = (alpha * Um - Fm + alpha_t * Up + Fp) / denom
    else:
        raise ValueError(f"unknown mode {mode!r}")

    d = xi.shape[-1]
    jump = float(np.dot(xi, Um[MAG][:d]) - np.dot(xi, Up[MAG][:d]))
    if stars is None:
        rng = rng or np.random.default_rng(0)
        wide_v = rng.random((n_stars, 1)) < 0.3
        wide_b = rng.random((n_stars, 1)) < 0.3
        stars = StarArgs(
            v_star=rng.normal(0, 1, (n_stars, 3)) * np.where(wide_v, 10.0, 1.0),
            B_star=rng.normal(0, 1, (n_stars, 3)) * np.where(wide_b, 10.0, 1.0),
        )
    lhs = gstar_functional(U_bar, stars)
    corr = np.sum(stars.v_star * stars.B_star, axis=-1) * jump / denom
    resid = lhs + corr
    scale = np.maximum(1.0, np.abs(lhs) + np.abs(corr))
    min_resid = float(np.min(resid / scale))
    closure = None
    if jump == 0.0:
        calE = float(internal_energy_density(U_bar)) if U_bar[RHO] > 0 else -np.inf
        closure = bool(
            U_bar[RHO] > 0.0 and calE >= -1e-12 * max(1.0, abs(float(U_bar[ENE])))
        )
    return TwoStateReport(
        U_bar=U_bar,
        rho_positive=bool(U_bar[RHO] > 0.0),
        min_residual=min_resid,
        closure_member=closure,
        normal_jump=jump,
    )


def matrix_A_check(U: np.ndarray, i: int, eos) -> tuple[np.ndarray, np.ndarray]:
    """Spectral radius of the 6x6 coupling matrix vs the speed bound C_i.

    The matrix collects the quadratic-form coefficients that bound the
    pressure/magnetic work terms of the axis-i flux; its spectral radius
    should equal C(U; e_i) exactly.
    """
    if i not in (1, 2, 3):
        raise ValueError("axis index i must be 1, 2 or 3")
    U = np.asarray(U, dtype=float)
    squeeze = U.ndim == 1
    U = np.atleast_2d(U)
    n = U.shape[0]
    rho = U[:, RHO]
    B = U[:, MAG]
    cs = flux.cs_speed(U, eos)
    i1 = i % 3 + 1
    i2 = (i + 1) % 3 + 1
    bi = B[:, i - 1] / np.sqrt(rho)
    bi1 = B[:, i1 - 1] / np.sqrt(rho)
    bi2 = B[:, i2 - 1] / np.sqrt(rho)
    A = np.zeros((n, 6, 6))
    A[:, 0, 3] = bi1
    A[:, 0, 4] = bi2
    A[:, 0, 5] = cs
    A[:, 1, 3] = -bi
    A[:, 2, 4] = -bi
    A = A + np.swapaxes(A, 1, 2)
    radius = np.max(np.abs(np.linalg.eigvalsh(A)), axis=1)
    e_i = np.eye(3)[i - 1]
    c_i = flux.pp_speed(U, e_i, eos)
    if squeeze:
        return float(radius[0]), float(c_i[0])
    return radius, c_i


@dataclass
class SourceLemmaResiduals:
    identity_abs: np.ndarray      # |S.n* - ((v-v*).(B-B*) - v*.B*)|
    strict_margin: np.ndarray     # (U.n* + |B*|^2/2) - |sqrt(rho)(v-v*).(B-B*)|
    bound_margin: np.ndarray      # -b(S.n*) - (b v*.B* - |b|/sqrt(rho) (U.n* + |B*|^2/2))


def source_lemma_checks(U: np.ndarray, s: StarArgs, b) -> SourceLemmaResiduals:
    """Residuals of the three Godunov-Powell source estimates."""
    U = np.asarray(U, dtype=float)
    S = flux.source_vector(U)
    v = U[..., MOM] / U[..., RHO][..., None]
    s_dot_n = gstar_functional(S, s) - 0.5 * np.sum(s.B_star**2, axis=-1)
    pair = np.sum((v - s.v_star) * (U[..., MAG] - s.B_star), axis=-1)
    vb = np.sum(s.v_star * s.B_star, axis=-1)
    identity_abs = np.abs(s_dot_n - (pair - vb))
    g = gstar_functional(U, s)
    strict_margin = g - np.abs(np.sqrt(U[..., RHO]) * pair)
    b = np.asarray(b, dtype=float)
    bound_margin = -b * s_dot_n - (b * vb - np.abs(b) / np.sqrt(U[..., RHO]) * g)
    return SourceLemmaResiduals(identity_abs, strict_margin, bound_margin)


def pairing_lemma_check(U, Ut, s: StarArgs, xi, delta) -> np.ndarray:
    """RHS minus LHS of the two-state pairing inequality (>= 0 up to roundoff).

    LHS couples the star velocity with the difference of magnetic work terms;
    the RHS bounds it by the theta norms with the weight
    f = |Bt - B| sqrt(delta^2/rho + (1-delta)^2/rhot) / sqrt 2.
    """
    from .state import theta_vector

    U = np.asarray(U, dtype=float)
    Ut = np.asarray(Ut, dtype=float)
    xi = np.asarray(xi, dtype=float)
    delta = np.asarray(delta, dtype=float)
    d = xi.shape[-1]
    B, Bt = U[..., MAG], Ut[..., MAG]
    v = U[..., MOM] / U[..., RHO][..., None]
    vt = Ut[..., MOM] / Ut[..., RHO][..., None]
    work = 0.5 * np.sum(B * B, axis=-1) - np.sum(B * s.B_star, axis=-1)
    work_t = 0.5 * np.sum(Bt * Bt, axis=-1) - np.sum(Bt * s.B_star, axis=-1)
    lhs = np.sum(xi * s.v_star[..., :d], axis=-1) * (work - work_t)
    th = theta_vector(U, s)
    tht = theta_vector(Ut, s)
    vmix = delta[..., None] * v + (1.0 - delta[..., None]) * vt
    f = (
        np.linalg.norm(Bt - B, axis=-1)
        / np.sqrt(2.0)
        * np.sqrt(delta**2 / U[..., RHO] + (1.0 - delta) ** 2 / Ut[..., RHO])
    )
    rhs = np.sum(xi * vmix[..., :d], axis=-1) * (
        np.sum(th[..., 0:3] ** 2, axis=-1) - np.sum(tht[..., 0:3] ** 2, axis=-1)
    ) + np.linalg.norm(xi, axis=-1) * f * (
        np.sum(th * th, axis=-1) + np.sum(tht * tht, axis=-1)
    )
    return rhs - lhs


def random_polygon_geometry(rng: np.random.Generator, n_edges: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge measures and outward unit normals of a random convex polygon.

    Random edge vectors are recentred to close the loop and angle-sorted;
    any zero-sum angle-ordered edge sequence traces a convex polygon.
    """
    while True:
        e = rng.normal(0.0, 1.0, (n_edges, 2))
        e -= e.mean(axis=0)
        lengths = np.linalg.norm(e, axis=1)
        if np.min(lengths) > 1e-3:
            break
    order = np.argsort(np.arctan2(e[:, 1], e[:, 0]))
    e = e[order]
    s = np.linalg.norm(e, axis=1)
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1) / s[:, None]
    return s, normals


def mirrored_geometry(rng: np.random.Generator, n_pairs: int) -> tuple[np.ndarray, np.ndarray]:
    """Reflection-symmetric geometry: adjacent (xi, -xi) pairs with equal
    weights, so closure and <xi, B> sums cancel pairwise when the mirrored
    states share B."""
    xi = rng.normal(0.0, 1.0, (n_pairs, 2))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    s_half = 10.0 ** rng.uniform(-1, 1, n_pairs)
    s = np.repeat(s_half, 2)
    xis = np.empty((2 * n_pairs, 2))
    xis[0::2] = xi
    xis[1::2] = -xi
    return s, xis


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    trials: int
    min_residual: float
    tolerance: float
    seed: int
    passed: bool


def _random_states(rng, n, spread=2.0):
    rho = 10.0 ** rng.uniform(-spread, spread, n)
    v = rng.normal(0.0, 1.0, (n, 3)) * 10.0 ** rng.uniform(-1, 1, (n, 1))
    B = rng.normal(0.0, 1.0, (n, 3)) * 10.0 ** rng.uniform(-1, 1, (n, 1))
    e = 10.0 ** rng.uniform(-spread, spread, n)
    U = np.empty((n, 8))
    U[:, RHO] = rho
    U[:, MOM] = rho[:, None] * v
    U[:, MAG] = B
    U[:, ENE] = rho * e + 0.5 * (rho * np.sum(v * v, axis=1) + np.sum(B * B, axis=1))
    return U


def _random_stars(rng, n):
    wide_v = rng.random((n, 1)) < 0.3
    wide_b = rng.random((n, 1)) < 0.3
    return StarArgs(
        v_star=rng.normal(0, 1, (n, 3)) * np.where(wide_v, 10.0, 1.0),
        B_star=rng.normal(0, 1, (n, 3)) * np.where(wide_b, 10.0, 1.0),
    )


def _check_multi_state(rng, eos, trials):
    stars_per_cfg = 20
    n_cfg = max(1, trials // stars_per_cfg)
    worst = np.inf
    for _ in range(n_cfg):
        n_edges = int(rng.integers(3, 7))
        s, xis = random_polygon_geometry(rng, n_edges)
        cfg = MultiStateConfig(s=s, xis=xis, states=_random_states(rng, n_edges))
        stars = _random_stars(rng, stars_per_cfg)
        resid = multi_state_residual(cfg, stars, eos)
        Ubar = multi_state_average(cfg, eos)
        scale = np.maximum(1.0, np.abs(gstar_functional(Ubar, stars)))
        worst = min(worst, float(np.min(resid / scale)))
    return n_cfg * stars_per_cfg, worst


def _check_multi_state_ddf(rng, eos, trials):
    worst = np.inf
    n_cfg = max(1, trials)
    for _ in range(n_cfg):
        n_pairs = int(rng.integers(1, 4))
        s, xis = mirrored_geometry(rng, n_pairs)
        states = _random_states(rng, 2 * n_pairs)
        # Mirrored edges share B; keep the internal energy unchanged.
        calE = internal_energy_density(states)
        states[1::2, MAG] = states[0::2, MAG]
        states[:, ENE] = calE + 0.5 * (
            np.sum(states[:, MOM] ** 2, axis=1) / states[:, RHO]
            + np.sum(states[:, MAG] ** 2, axis=1)
        )
        cfg = MultiStateConfig(s=s, xis=xis, states=states)
        bscale = float(np.sum(cfg.s * np.linalg.norm(states[:, MAG], axis=1)))
        assert abs(multi_state_ddf(cfg)) <= 1e-15 * max(1.0, bscale)
        Ubar = multi_state_average(cfg, eos)
        calE = float(internal_energy_density(Ubar)) if Ubar[RHO] > 0 else -np.inf
        scale = max(1.0, abs(float(Ubar[ENE])))
        worst = min(worst, float(Ubar[RHO]) / scale, calE / scale)
    return n_cfg, worst


def _check_speed_sum(rng, eos, trials):
    worst = np.inf
    for _ in range(max(1, trials)):
        n_edges = int(rng.integers(3, 7))
        s, xis = random_polygon_geometry(rng, n_edges)
        cfg = MultiStateConfig(s=s, xis=xis, states=_random_states(rng, n_edges))
        hat = multi_state_alpha_hat(cfg, eos)
        total = float(np.sum(cfg.s * hat))
        worst = min(worst, total / max(1.0, abs(total)))
    return max(1, trials), worst


def _check_corollary(rng, eos, trials, mode):
    stars_per_pair = 20
    n_pairs = max(1, trials // stars_per_pair)
    worst = np.inf
    for _ in range(n_pairs):
        Um = _random_states(rng, 1)[0]
        Up = _random_states(rng, 1)[0]
        xi = rng.normal(0, 1, 2)
        xi /= np.linalg.norm(xi)
        if mode == "corollary3":
            a = float(flux.alpha_r(Um, Up, xi, eos))
            at = float(flux.alpha_l(Up, Um, xi, eos))
        else:
            a = float(flux.alpha_star(Um, Up, xi, eos))
            at = float(flux.alpha_star(Up, Um, xi, eos))
        rep = two_state_checks(
            Um, Up, xi, a, at, mode, eos, stars=_random_stars(rng, stars_per_pair)
        )
        if not rep.rho_positive:
            worst = min(worst, -np.inf)
        worst = min(worst, rep.min_residual)
    return n_pairs * stars_per_pair, worst


def _check_intermediate_matched(rng, eos, trials):
    n = max(1, trials)
    Um = _random_states(rng, n)
    Up = _random_states(rng, n)
    xi = rng.normal(0, 1, (n, 2))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    # Match the normal component of B on both sides, fixing E to keep the
    # internal energy unchanged.
    for U in (Um, Up):
        calE = internal_energy_density(U)
        bn = np.sum(xi * U[:, 4:6], axis=1)
        U[:, 4:6] += (0.0 - bn)[:, None] * xi
        U[:, ENE] = calE + 0.5 * (
            np.sum(U[:, MOM] ** 2, axis=1) / U[:, RHO] + np.sum(U[:, MAG] ** 2, axis=1)
        )
    ws = flux.pp_wave_speeds(Um, Up, xi, eos)
    H = flux.hll_intermediate(Um, Up, xi, ws, eos)
    calE = np.where(
        H[:, RHO] > 0,
        H[:, ENE] - 0.5 * (np.sum(H[:, MOM] ** 2, 1) / np.where(H[:, RHO] > 0, H[:, RHO], 1)
                           + np.sum(H[:, MAG] ** 2, 1)),
        -np.inf,
    )
    scale = np.maximum(1.0, np.abs(H[:, ENE]))
    worst = float(min(np.min(H[:, RHO] / scale), np.min(calE / scale)))
    return n, worst


def _check_intermediate_jump(rng, eos, trials):
    stars_per_pair = 20
    n = max(1, trials // stars_per_pair)
    Um = _random_states(rng, n)
    Up = _random_states(rng, n)
    xi = rng.normal(0, 1, (n, 2))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    ws = flux.pp_wave_speeds(Um, Up, xi, eos)
    H = flux.hll_intermediate(Um, Up, xi, ws, eos)
    jump = np.sum(xi * (Up[:, 4:6] - Um[:, 4:6]), axis=1)
    worst = np.inf
    for _ in range(stars_per_pair):
        s = _random_stars(rng, n)
        lhs = gstar_functional(H, s)
        corr = np.sum(s.v_star * s.B_star, axis=1) * jump / (ws.sigma_plus - ws.sigma_minus)
        scale = np.maximum(1.0, np.abs(lhs) + np.abs(corr))
        worst = min(worst, float(np.min((lhs + corr) / scale)))
    return n * stars_per_pair, worst


def _check_source(rng, eos, trials, which):
    n = max(1, trials)
    U = _random_states(rng, n)
    s = _random_stars(rng, n)
    b = rng.normal(0, 3, n)
    res = source_lemma_checks(U, s, b)
    g = gstar_functional(U, s)
    scale = np.maximum(1.0, np.abs(g))
    if which == "identity":
        worst = float(np.min(-res.identity_abs / scale))
    elif which == "strict":
        worst = float(np.min(res.strict_margin / scale))
    else:
        worst = float(np.min(res.bound_margin / np.maximum(1.0, np.abs(b) * scale)))
    return n, worst


def _check_pairing(rng, eos, trials):
    n = max(1, trials)
    U = _random_states(rng, n)
    Ut = _random_states(rng, n)
    s = _random_stars(rng, n)
    xi = rng.normal(0, 1, (n, 2)) * 10.0 ** rng.uniform(-1, 1, (n, 1))
    roe = rng.random(n) < 0.5
    delta = np.where(
        roe,
        np.sqrt(U[:, RHO]) / (np.sqrt(U[:, RHO]) + np.sqrt(Ut[:, RHO])),
        rng.normal(0, 1, n),
    )
    resid = pairing_lemma_check(U, Ut, s, xi, delta)
    th = gstar_functional(U, s)
    tht = gstar_functional(Ut, s)
    scale = np.maximum(1.0, (np.abs(th) + np.abs(tht)) * (1 + np.linalg.norm(xi, axis=1)))
    return n, float(np.min(resid / scale))


def _check_matrix_A(rng, eos, trials):
    n = max(1, trials)
    U = _random_states(rng, n)
    worst = np.inf
    for i in (1, 2, 3):
        radius, c_i = matrix_A_check(U, i, eos)
        err = np.abs(radius - c_i) / (1.0 + c_i)
        worst = min(worst, float(np.min(-err)))
    return 3 * n, worst


def _check_n2_reduction(rng, eos, trials):
    n = max(1, trials)
    worst = np.inf
    for _ in range(n):
        U = _random_states(rng, 1)[0]
        Ut = _random_states(rng, 1)[0]
        xi = rng.normal(0, 1, 2)
        xi /= np.linalg.norm(xi)
        cfg = MultiStateConfig(
            s=np.array([1.0, 1.0]),
            xis=np.stack([xi, -xi]),
            states=np.stack([U, Ut]),
        )
        hat = multi_state_alpha_hat(cfg, eos)
        ar = float(flux.alpha_r(U, Ut, xi, eos))
        al = float(flux.alpha_l(Ut, U, xi, eos))
        err = max(
            abs(hat[0] - ar) / max(1.0, abs(ar)),
            abs(hat[1] + al) / max(1.0, abs(al)),
        )
        # Average vs HLL intermediate with sigma+ = alpha_1, sigma- = -alpha_2
        # (unclipped: the corollary average uses the raw speeds).
        cfg.alphas = hat
        Ubar = multi_state_average(cfg, eos)
        ws = flux.WaveSpeeds(
            sigma_l=np.float64(-hat[1]), sigma_r=np.float64(hat[0]),
            sigma_minus=np.float64(-hat[1]), sigma_plus=np.float64(hat[0]),
        )
        H = flux.hll_intermediate(Ut, U, xi, ws, eos)
        err = max(err, float(np.max(np.abs(Ubar - H) / np.maximum(1.0, np.abs(H)))))
        worst = min(worst, -err)
    return n, worst


_CHECKS = [
    ("multi_state_inequality", _check_multi_state, 1e-12),
    ("multi_state_ddf_closure", _check_multi_state_ddf, 1e-12),
    ("positive_speed_sum", _check_speed_sum, 0.0),
    ("two_state_hll_bound", lambda r, e, t: _check_corollary(r, e, t, "corollary3"), 1e-12),
    ("two_state_lf_bound", lambda r, e, t: _check_corollary(r, e, t, "corollary4"), 1e-12),
    ("intermediate_matched_closure", _check_intermediate_matched, 1e-12),
    ("intermediate_jump_inequality", _check_intermediate_jump, 1e-12),
    ("source_identity", lambda r, e, t: _check_source(r, e, t, "identity"), 1e-12),
    ("source_strict_inequality", lambda r, e, t: _check_source(r, e, t, "strict"), 1e-12),
    ("source_signed_bound", lambda r, e, t: _check_source(r, e, t, "bound"), 1e-12),
    ("pairing_bound", _check_pairing, 1e-12),
    ("matrix_A_radius", _check_matrix_A, 1e-10),
    ("two_state_reduction", _check_n2_reduction, 1e-13),
]


def verify_suite(seed: int = 0, trials: int = 10_000, eos=None) -> list[CheckResult]:
    """Run every randomized theory check; deterministic for a fixed seed."""
    from .state import IdealEos

    eos = eos or IdealEos(1.4)
    results = []
    for idx, (name, fn, tol) in enumerate(_CHECKS):
        rng = np.random.default_rng([seed, idx])
        if trials == 0:
            continue
        count, worst = fn(rng, eos, trials)
        results.append(
            CheckResult(
                name=name,
                trials=count,
                min_residual=worst,
                tolerance=tol,
                seed=seed,
                passed=bool(worst >= -tol),
            )
        )
    return results


def format_report(results: Iterable[CheckResult]) -> str:
    lines = ["check                          trials   min_residual   status"]
    for r in results:
        lines.append(
            f"{r.name:<30} {r.trials:>7}   {r.min_residual: .3e}   "
            f"{'pass' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)


def write_report_csv(results: Iterable[CheckResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "trials", "min_residual", "tolerance", "seed", "passed"])
        for r in results:
            writer.writerow(
                [r.name, r.trials, repr(r.min_residual), repr(r.tolerance), r.seed, int(r.passed)]
            )
