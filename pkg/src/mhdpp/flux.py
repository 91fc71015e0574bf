"""Physical and numerical fluxes for ideal MHD with positivity-preserving
wave-speed estimates.

The physical flux along axis i is

    F_i(U) = (rho v_i,
              rho v_i v - B_i B + p_tot e_i,
              v_i B - B_i v,
              v_i (E + p_tot) - B_i (v . B)),      p_tot = p + |B|^2/2.

For a unit direction xi in R^d the directional flux <xi, F> = sum_k xi_k F_k
equals the rotated-frame evaluation T_xi^{-1} F_1(T_xi U), which is used as a
cross-check property.

The admissibility-preserving wave-speed estimates for a pair of admissible
states (U, Ut) and unit xi are built from the sound-like speed

    Cs = p / (rho sqrt(2 e))            (= sqrt((gamma-1) p / (2 rho)) ideal)

and the direction-dependent bound

    C(U; xi) = sqrt( (Cs^2 + |B|^2/rho
                      + sqrt((Cs^2 + |B|^2/rho)^2 - 4 Cs^2 <xi,B>^2/rho)) / 2 ):

    alpha_r = max{<xi,v>, roe(<xi,v>)} + C(U;xi) + |B - Bt|/(sqrt(rho)+sqrt(rhot))
    alpha_l = min{<xi,v>, roe(<xi,v>)} - C(U;xi) - |B - Bt|/(sqrt(rho)+sqrt(rhot))
    alpha_* = max{|<xi,v>|, |roe(<xi,v>)|} + C(U;xi) + |B - Bt|/(...)

with roe the sqrt(rho)-weighted velocity average.  An HLL flux whose outer
speeds dominate these estimates has an intermediate state with positive
density, and the state is admissible whenever the normal magnetic component
is continuous across the interface.

The suggested production speeds combine the estimates with the Davis bounds
lambda_1/lambda_8 (extreme eigenvalues, ideal EOS) and satisfy the
conservativity relation sigma_r(Um, Up; xi) = -sigma_l(Up, Um; -xi) exactly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .state import ENE, MAG, MOM, RHO, internal_energy_density, is_admissible

__all__ = [
    "WaveSpeeds", "SpeedBundle", "physical_flux", "directional_flux",
    "rotation_matrix", "rotate_state", "cs_speed", "pp_speed", "alpha_r",
    "alpha_l", "alpha_star", "davis_speeds", "pp_wave_speeds", "speed_bundle",
    "hll_flux", "hll_flux_cases", "hll_intermediate", "source_vector",
    "flux_jacobian",
]


class WaveSpeeds(NamedTuple):
    """Outer HLL speeds and their signed clips sigma_- <= 0 <= sigma_+."""

    sigma_l: np.ndarray
    sigma_r: np.ndarray
    sigma_minus: np.ndarray
    sigma_plus: np.ndarray

    @classmethod
    def from_lr(cls, sigma_l, sigma_r) -> "WaveSpeeds":
        sigma_l = np.asarray(sigma_l, dtype=float)
        sigma_r = np.asarray(sigma_r, dtype=float)
        return cls(sigma_l, sigma_r, np.minimum(sigma_l, 0.0), np.maximum(sigma_r, 0.0))


def _sq(x):
    # Non-conjugating square sum (einsum keeps the holomorphic extension).
    return np.einsum("...i,...i->...", x, x)


def _dot_d(xi, vec3):
    """<xi, w> over the first d components of a 3-vector field."""
    xi = np.asarray(xi)
    d = xi.shape[-1]
    return np.sum(xi * vec3[..., :d], axis=-1)


def physical_flux(U: np.ndarray, i: int, eos) -> np.ndarray:
    """F_i(U) for axis i in {0, 1, 2}.

    Written without absolute values so the holomorphic extension is valid;
    flux_jacobian exploits this via complex-step differentiation.
    """
    U = np.asarray(U)
    rho = U[..., RHO]
    if np.any(np.real(rho) <= 0.0):
        raise ValueError("physical_flux requires rho > 0")
    m = U[..., MOM]
    B = U[..., MAG]
    E = U[..., ENE]
    v = m / rho[..., None]
    calE = E - 0.5 * (_sq(m) / rho + _sq(B))
    p = eos.pressure(rho, calE / rho)
    ptot = p + 0.5 * _sq(B)
    vi = v[..., i]
    Bi = B[..., i]
    F = np.empty_like(U)
    F[..., RHO] = rho * vi
    F[..., MOM] = m * vi[..., None] - Bi[..., None] * B
    F[..., 1 + i] += ptot
    F[..., MAG] = vi[..., None] * B - Bi[..., None] * v
    F[..., ENE] = vi * (E + ptot) - Bi * np.sum(v * B, axis=-1)
    return F


def directional_flux(U: np.ndarray, xi: np.ndarray, eos) -> np.ndarray:
    """<xi, F(U)> = sum_k xi_k F_k(U) over the first d axes."""
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    out = None
    for k in range(d):
        xik = xi[..., k]
        if xik.ndim == 0 and xik == 0.0:
            continue  # axis-aligned directions skip the dead component
        term = xik[..., None] * physical_flux(U, k, eos)
        out = term if out is None else out + term
    if out is None:
        out = np.zeros_like(np.asarray(U, dtype=float))
    return out


def _hat_rotation(xi: np.ndarray) -> np.ndarray:
    """3x3 rotation taking the first d axes so that e_1 maps onto xi."""
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    if d == 1:
        s = xi[..., 0]
        T = np.zeros(xi.shape[:-1] + (3, 3))
        T[..., 0, 0] = s
        T[..., 1, 1] = 1.0
        T[..., 2, 2] = 1.0
        return T
    if d == 2:
        c, s = xi[..., 0], xi[..., 1]
        T = np.zeros(xi.shape[:-1] + (3, 3))
        T[..., 0, 0] = c
        T[..., 0, 1] = s
        T[..., 1, 0] = -s
        T[..., 1, 1] = c
        T[..., 2, 2] = 1.0
        return T
    if d == 3:
        sp_cv, sp_sv, cp = xi[..., 0], xi[..., 1], xi[..., 2]
        sp = np.sqrt(np.maximum(sp_cv**2 + sp_sv**2, 0.0))
        # Polar direction: pick an arbitrary azimuth.
        safe = np.where(sp > 0.0, sp, 1.0)
        cv = np.where(sp > 0.0, sp_cv / safe, 1.0)
        sv = np.where(sp > 0.0, sp_sv / safe, 0.0)
        T = np.zeros(xi.shape[:-1] + (3, 3))
        T[..., 0, 0] = sp * cv
        T[..., 0, 1] = sp * sv
        T[..., 0, 2] = cp
        T[..., 1, 0] = -sv
        T[..., 1, 1] = cv
        T[..., 2, 0] = -cp * cv
        T[..., 2, 1] = -cp * sv
        T[..., 2, 2] = sp
        return T
    raise ValueError(f"unsupported direction dimension {d}")


def rotation_matrix(xi: np.ndarray) -> np.ndarray:
    """Orthogonal 8x8 block matrix diag{1, That_xi, That_xi, 1}."""
    That = _hat_rotation(xi)
    T = np.zeros(np.asarray(xi).shape[:-1] + (8, 8))
    T[..., 0, 0] = 1.0
    T[..., 1:4, 1:4] = That
    T[..., 4:7, 4:7] = That
    T[..., 7, 7] = 1.0
    return T


def rotate_state(U: np.ndarray, xi: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", rotation_matrix(xi), np.asarray(U, dtype=float))


def cs_speed(U: np.ndarray, eos) -> np.ndarray:
    """Cs = p / (rho sqrt(2 e)); requires an admissible state."""
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    calE = internal_energy_density(U)
    if np.any(calE <= 0.0):
        raise ValueError("cs_speed requires calE > 0")
    e = calE / rho
    p = eos.pressure(rho, e)
    return p / (rho * np.sqrt(2.0 * e))


def _check_unit(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    nrm = _sq(xi)
    if np.any(np.abs(nrm - 1.0) > 1e-12):
        raise ValueError("direction vector must be unit length")
    return xi


def pp_speed(U: np.ndarray, xi: np.ndarray, eos) -> np.ndarray:
    """Direction-dependent speed bound C(U; xi).

    Collapses to Cs for B = 0 and to max(Cs, |B|/sqrt(rho)) when B is
    aligned with xi.  The inner radicand is nonnegative up to roundoff;
    tiny negatives are clamped, anything worse aborts.
    """
    xi = _check_unit(xi)
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    cs2 = cs_speed(U, eos) ** 2
    b2 = _sq(U[..., MAG]) / rho
    bn2 = _dot_d(xi, U[..., MAG]) ** 2 / rho
    base = cs2 + b2
    rad = base * base - 4.0 * cs2 * bn2
    bad = rad < -1e-14 * np.maximum(base * base, 1.0)
    if np.any(bad):
        raise FloatingPointError("pp_speed radicand significantly negative")
    rad = np.maximum(rad, 0.0)
    return np.sqrt(0.5 * (base + np.sqrt(rad)))


def _require_admissible(*states):
    for U in states:
        if not np.all(is_admissible(U)):
            raise ValueError("wave-speed estimates require admissible states")


def _pair_terms(U, Ut, xi):
    """(<xi,v>, roe-averaged <xi,v>, |B - Bt|/(sqrt(rho)+sqrt(rhot)))."""
    rho = U[..., RHO]
    rhot = Ut[..., RHO]
    v = U[..., MOM] / rho[..., None]
    vt = Ut[..., MOM] / rhot[..., None]
    sr = np.sqrt(rho)
    srt = np.sqrt(rhot)
    vn = _dot_d(xi, v)
    roe = (sr * vn + srt * _dot_d(xi, vt)) / (sr + srt)
    db = np.linalg.norm(U[..., MAG] - Ut[..., MAG], axis=-1) / (sr + srt)
    return vn, roe, db


def alpha_r(U: np.ndarray, Ut: np.ndarray, xi: np.ndarray, eos, check: bool = True) -> np.ndarray:
    """Rightmost signal-speed estimate alpha_r(U, Ut; xi)."""
    if check:
        _require_admissible(U, Ut)
    vn, roe, db = _pair_terms(np.asarray(U, float), np.asarray(Ut, float), np.asarray(xi, float))
    return np.maximum(vn, roe) + pp_speed(U, xi, eos) + db


def alpha_l(U: np.ndarray, Ut: np.ndarray, xi: np.ndarray, eos, check: bool = True) -> np.ndarray:
    """Leftmost signal-speed estimate alpha_l(U, Ut; xi)."""
    if check:
        _require_admissible(U, Ut)
    vn, roe, db = _pair_terms(np.asarray(U, float), np.asarray(Ut, float), np.asarray(xi, float))
    return np.minimum(vn, roe) - pp_speed(U, xi, eos) - db


def alpha_star(U: np.ndarray, Ut: np.ndarray, xi: np.ndarray, eos, check: bool = True) -> np.ndarray:
    """Symmetric speed estimate alpha_*(U, Ut; xi) >= max(alpha_r, -alpha_l)."""
    if check:
        _require_admissible(U, Ut)
    vn, roe, db = _pair_terms(np.asarray(U, float), np.asarray(Ut, float), np.asarray(xi, float))
    return np.maximum(np.abs(vn), np.abs(roe)) + pp_speed(U, xi, eos) + db


def _fast_speed(U: np.ndarray, xi: np.ndarray, eos) -> np.ndarray:
    """Fast magnetosonic speed c_f along xi for the ideal EOS."""
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    calE = internal_energy_density(U)
    p = eos.pressure(rho, calE / rho)
    a2 = eos.gamma * p / rho
    b2 = _sq(U[..., MAG]) / rho
    bn2 = _dot_d(xi, U[..., MAG]) ** 2 / rho
    base = a2 + b2
    rad = np.maximum(base * base - 4.0 * a2 * bn2, 0.0)
    return np.sqrt(0.5 * (base + np.sqrt(rad)))


def davis_speeds(Um: np.ndarray, Up: np.ndarray, xi: np.ndarray, eos, check: bool = True):
    """Standard Davis estimates (min lambda_1, max lambda_8) over the pair.

    lambda_1/lambda_8 = <xi, v> -/+ c_f are the extreme eigenvalues of the
    directional flux Jacobian; only available for the ideal EOS.
    """
    if not getattr(eos, "is_ideal", False):
        raise ValueError("davis_speeds requires the ideal EOS")
    if check:
        _require_admissible(Um, Up)
    xi = _check_unit(xi)
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    vm = _dot_d(xi, Um[..., MOM] / Um[..., RHO, None])
    vp = _dot_d(xi, Up[..., MOM] / Up[..., RHO, None])
    cfm = _fast_speed(Um, xi, eos)
    cfp = _fast_speed(Up, xi, eos)
    return np.minimum(vm - cfm, vp - cfp), np.maximum(vm + cfm, vp + cfp)


class SpeedBundle(NamedTuple):
    """All interface speed estimates from one fused evaluation.

    sigma_l/sigma_r are the suggested HLL speeds (estimate vs Davis bound),
    sigma_lf the local Lax-Friedrichs viscosity speed (also the practical
    CFL speed).
    """

    sigma_l: np.ndarray
    sigma_r: np.ndarray
    sigma_lf: np.ndarray


def speed_bundle(Um, Up, xi, eos) -> SpeedBundle:
    """Fused computation of every per-interface speed the schemes need.

    Shares the primitive extraction, Roe average, B-difference and
    direction-dependent bounds between the HLL estimates, the Davis
    eigenvalue bounds and the LF viscosity speed.
    """
    if not getattr(eos, "is_ideal", False):
        raise ValueError("speed_bundle requires the ideal EOS (Davis bounds)")
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    rho_m = Um[..., RHO]
    rho_p = Up[..., RHO]
    vm = Um[..., MOM] / rho_m[..., None]
    vp = Up[..., MOM] / rho_p[..., None]
    vn_m = np.sum(xi * vm[..., :d], axis=-1)
    vn_p = np.sum(xi * vp[..., :d], axis=-1)
    sr_m = np.sqrt(rho_m)
    sr_p = np.sqrt(rho_p)
    roe = (sr_m * vn_m + sr_p * vn_p) / (sr_m + sr_p)
    db = np.linalg.norm(Up[..., MAG] - Um[..., MAG], axis=-1) / (sr_m + sr_p)

    def side(U, rho, vn):
        calE = U[..., ENE] - 0.5 * (_sq(U[..., MOM]) / rho + _sq(U[..., MAG]))
        e = calE / rho
        p = eos.pressure(rho, e)
        cs2 = (p / (rho * np.sqrt(2.0 * e))) ** 2
        b2 = _sq(U[..., MAG]) / rho
        bn2 = np.sum(xi * U[..., MAG][..., :d], axis=-1) ** 2 / rho
        base = cs2 + b2
        C = np.sqrt(0.5 * (base + np.sqrt(np.maximum(base * base - 4.0 * cs2 * bn2, 0.0))))
        a2 = eos.gamma * p / rho
        base_f = a2 + b2
        cf = np.sqrt(0.5 * (base_f + np.sqrt(np.maximum(base_f * base_f - 4.0 * a2 * bn2, 0.0))))
        return C, cf

    C_m, cf_m = side(Um, rho_m, vn_m)
    C_p, cf_p = side(Up, rho_p, vn_p)

    sl_std = np.minimum(vn_m - cf_m, vn_p - cf_p)
    sr_std = np.maximum(vn_m + cf_m, vn_p + cf_p)
    sigma_l = np.minimum(np.minimum(vn_m, roe) - C_m - db, sl_std)
    sigma_r = np.maximum(np.maximum(vn_p, roe) + C_p + db, sr_std)
    astar = np.maximum(
        np.maximum(np.abs(vn_m), np.abs(roe)) + C_m + db,
        np.maximum(np.abs(vn_p), np.abs(roe)) + C_p + db,
    )
    sigma_lf = np.maximum(astar, np.maximum(np.abs(sl_std), np.abs(sr_std)))
    return SpeedBundle(sigma_l=sigma_l, sigma_r=sigma_r, sigma_lf=sigma_lf)


def pp_wave_speeds(Um, Up, xi, eos, mode: str = "hll", sigma_override=None,
                   check: bool = True) -> WaveSpeeds:
    """Interface wave speeds guaranteeing an admissibility-preserving flux.

    mode "hll":       sigma_l = min{alpha_l(Um,Up;xi), Davis lambda_1},
                      sigma_r = max{alpha_r(Up,Um;xi), Davis lambda_8};
    mode "local_lf":  sigma_r = -sigma_l = max{alpha_*(both orders), |lambda|};
    mode "global_lf": like local_lf but clipped from below by
                      ``sigma_override`` (the mesh-global speed).
    """
    if check:
        _require_admissible(Um, Up)
    if mode == "hll":
        sl_std, sr_std = davis_speeds(Um, Up, xi, eos, check=False)
        sl = np.minimum(alpha_l(Um, Up, xi, eos, check=False), sl_std)
        sr = np.maximum(alpha_r(Up, Um, xi, eos, check=False), sr_std)
        return WaveSpeeds.from_lr(sl, sr)
    if mode in ("local_lf", "global_lf"):
        sl_std, sr_std = davis_speeds(Um, Up, xi, eos, check=False)
        sigma = np.maximum(
            np.maximum(alpha_star(Um, Up, xi, eos, check=False),
                       alpha_star(Up, Um, xi, eos, check=False)),
            np.maximum(np.abs(sl_std), np.abs(sr_std)),
        )
        if mode == "global_lf":
            if sigma_override is None:
                raise ValueError("global_lf mode needs the mesh-global speed")
            sigma = np.maximum(sigma, sigma_override)
        return WaveSpeeds.from_lr(-sigma, sigma)
    raise ValueError(f"unknown flux mode {mode!r}")


def hll_flux(Um, Up, xi, ws: WaveSpeeds, eos) -> np.ndarray:
    """HLL numerical flux in the clipped-speed form

    (sigma+ <xi,F(Um)> - sigma- <xi,F(Up)> + sigma- sigma+ (Up - Um))
        / (sigma+ - sigma-).
    """
    if np.any(ws.sigma_r <= ws.sigma_l):
        raise ValueError("hll_flux requires sigma_r > sigma_l")
    Fm = directional_flux(Um, xi, eos)
    Fp = directional_flux(Up, xi, eos)
    sm = np.asarray(ws.sigma_minus)[..., None]
    sp = np.asarray(ws.sigma_plus)[..., None]
    return (sp * Fm - sm * Fp + sm * sp * (np.asarray(Up) - np.asarray(Um))) / (sp - sm)


def hll_flux_cases(Um, Up, xi, ws: WaveSpeeds, eos) -> np.ndarray:
    """Three-branch textbook form of the HLL flux (cross-check variant)."""
    if np.any(ws.sigma_r <= ws.sigma_l):
        raise ValueError("hll_flux requires sigma_r > sigma_l")
    Fm = directional_flux(Um, xi, eos)
    Fp = directional_flux(Up, xi, eos)
    sl = np.asarray(ws.sigma_l)[..., None]
    sr = np.asarray(ws.sigma_r)[..., None]
    mid = (sr * Fm - sl * Fp + sl * sr * (np.asarray(Up) - np.asarray(Um))) / (sr - sl)
    out = np.where(sl >= 0.0, Fm, np.where(sr <= 0.0, Fp, mid))
    return out


def hll_intermediate(Um, Up, xi, ws: WaveSpeeds, eos) -> np.ndarray:
    """Wave-fan average H = (sigma+ Up - <xi,F(Up)> - sigma- Um + <xi,F(Um)>)
    / (sigma+ - sigma-).

    With speeds dominating the alpha estimates, H has positive density and
    is admissible whenever the normal magnetic component matches.
    """
    sm = np.asarray(ws.sigma_minus, dtype=float)
    sp = np.asarray(ws.sigma_plus, dtype=float)
    if np.any(sp - sm <= 0.0):
        raise ValueError("hll_intermediate requires sigma_plus > sigma_minus")
    Fm = directional_flux(Um, xi, eos)
    Fp = directional_flux(Up, xi, eos)
    return (
        sp[..., None] * np.asarray(Up) - Fp - sm[..., None] * np.asarray(Um) + Fm
    ) / (sp - sm)[..., None]


def source_vector(U: np.ndarray) -> np.ndarray:
    """Godunov-Powell source direction S(U) = (0, B, v, v . B)."""
    U = np.asarray(U, dtype=float)
    rho = U[..., RHO]
    if np.any(rho <= 0.0):
        raise ValueError("source_vector requires rho > 0")
    v = U[..., MOM] / rho[..., None]
    S = np.empty_like(U)
    S[..., RHO] = 0.0
    S[..., MOM] = U[..., MAG]
    S[..., MAG] = v
    S[..., ENE] = np.sum(v * U[..., MAG], axis=-1)
    return S


def flux_jacobian(U: np.ndarray, i: int, eos) -> np.ndarray:
    """dF_i/dU assembled by complex-step differentiation (exact to roundoff).

    Returns shape (..., 8, 8).  Relies on physical_flux being free of
    absolute values, so its holomorphic extension agrees with the real
    flux on the real axis.  All eight component perturbations are stacked
    into one flux evaluation.
    """
    U = np.asarray(U, dtype=float)
    h = 1e-100 * np.maximum(np.max(np.abs(U), axis=-1), 1e-300)
    Uc = np.broadcast_to(U, (8,) + U.shape).astype(complex)
    idx = np.arange(8)
    Uc[idx, ..., idx] += 1j * h
    F = physical_flux(Uc, i, eos)             # (8, ..., 8)
    J = np.moveaxis(F.imag, 0, -1) / h[..., None, None]
    return J
