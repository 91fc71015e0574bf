"""Time-stepping schemes.

1D: the finite-volume/DG update of the conservative system,

    Ubar_j' = -(Fhat_{j+1/2} - Fhat_{j-1/2}) / dx_j,

with HLL interface fluxes whose speeds dominate the admissibility
estimates.  Because the axis flux of the normal magnetic component is
identically zero, the cell averages of B1 stay exactly constant.

2D: the locally divergence-free DG discretization of the eight-wave
(source-carrying) system.  Every interface quadrature point contributes
the HLL flux and, with the penalty enabled, the upwind source term

    - eta_K <xi, B_ext - B_int> S(U_int),     eta_K = sigma^- / (sigma^+ - sigma^-),

whose weighting mirrors the intermediate-state bound; together with the
in-cell divergence-free property this is what makes the cell-average update
provably admissibility-preserving.  Without the penalty the scheme is the
plain conservative DG method, whose evolved internal energy is only bounded
below through the upwind discrete divergence

    div_K = (1/|K|) sum_jq |E_j| w_q <xi_j, (s+ B_int - s- B_ext)/(s+ - s-)>.

Interface speeds are computed once per shared interface point and reused by
both adjacent cells (with the exact sign flips), which keeps the flux
conservative to roundoff and the divergence weights consistent.

Time integration is the three-stage SSP Runge-Kutta scheme; each stage is a
forward-Euler update of the limited field of the previous stage, and a
positivity guard checks all cell averages after every stage.  CFL modes:

    proven    - the largest step satisfying the per-scheme sufficient
                inequalities, times a 0.95 safety factor;
    practical - dt = CFL / max_K sum_axes (max interface alpha_* / h_axis),
                paired with a halve-and-retry guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield, replace

import numpy as np

from . import basis
from .basis import Dg1dField, Dg2dField, HYDRO_COMPS
from .flux import (
    WaveSpeeds, alpha_star, hll_flux, physical_flux, pp_speed, source_vector,
    speed_bundle,
)
from .limiter import PositivityError, PPLimiterParams, pp_limit_field, tvb_minmod_limit
from .mesh import Mesh1D, RectMesh2D, apply_bc
from .state import ENE, MAG, MOM, RHO, IdealEos, is_admissible

__all__ = [
    "SolverConfig", "StepDiagnostics", "PositivityError",
    "fo_step_1d", "ho_step_residual_1d", "residual_1d",
    "fo_step_2d", "dg_residual_2d", "discrete_div_fo", "discrete_div_ho",
    "compute_dt", "ssp_rk3_step", "ssp_rk3_advance",
]

_XI_1D = np.array([1.0])
_XI_X = np.array([1.0, 0.0])
_XI_Y = np.array([0.0, 1.0])


@dataclass
class SolverConfig:
    k: int = 2
    flux_mode: str = "hll"            # hll | local_lf | global_lf
    penalty: bool = True
    cfl_mode: str = "practical"       # proven | practical
    cfl: float = 0.15
    pp_limiter: bool = True
    oscillation_limiter: str = "tvb"  # tvb | off
    tvb_M: float = 0.0
    tvb_mode: str = "char"            # char | component
    limiter_order: str = "osc_then_pp"
    eos: IdealEos = dfield(default_factory=lambda: IdealEos(1.4))
    pp_params: PPLimiterParams = dfield(default_factory=PPLimiterParams)
    on_guard_failure: str | None = None  # retry | halt | raise (default by cfl_mode)
    max_retries: int = 10

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ValueError("polynomial degree k must be 0, 1 or 2")
        if self.flux_mode not in ("hll", "local_lf", "global_lf"):
            raise ValueError(f"unknown flux mode {self.flux_mode!r}")
        if self.cfl_mode not in ("proven", "practical"):
            raise ValueError(f"unknown cfl mode {self.cfl_mode!r}")
        if self.cfl <= 0:
            raise ValueError("CFL number must be positive")
        if self.oscillation_limiter not in ("tvb", "off"):
            raise ValueError(f"unknown oscillation limiter {self.oscillation_limiter!r}")
        if self.limiter_order not in ("osc_then_pp", "pp_then_osc"):
            raise ValueError(f"unknown limiter order {self.limiter_order!r}")
        if self.on_guard_failure not in (None, "retry", "halt", "raise"):
            raise ValueError(f"unknown guard policy {self.on_guard_failure!r}")

    @property
    def guard_policy(self) -> str:
        if self.on_guard_failure is not None:
            return self.on_guard_failure
        return "raise" if self.cfl_mode == "proven" else "retry"


@dataclass
class StepDiagnostics:
    step: int
    t: float
    dt: float
    min_rho: float
    min_p: float
    max_divB_fo: float
    max_divB_ho: float
    total_mass: float
    limited_cells: int


def _check_traces(*states):
    for U in states:
        if not np.all(is_admissible(U)):
            raise PositivityError("inadmissible interface trace")


def _guard_averages(avg: np.ndarray) -> tuple[float, float]:
    """Check all cell averages are admissible; returns (min rho, min calE)."""
    rho = avg[..., RHO]
    calE = avg[..., ENE] - 0.5 * (
        np.sum(avg[..., MOM] ** 2, axis=-1) / np.where(rho > 0, rho, 1.0)
        + np.sum(avg[..., MAG] ** 2, axis=-1)
    )
    if np.any(rho <= 0.0) or np.any((calE <= 0.0) | ~(rho > 0.0)):
        raise PositivityError(
            f"positivity guard: min rho = {np.min(rho):.3e}, "
            f"min calE = {np.min(calE):.3e}"
        )
    return float(np.min(rho)), float(np.min(calE))


def _ws_from_bundle(bundle, cfg: SolverConfig, sigma_glob=None) -> WaveSpeeds:
    """Interface speed choice per flux mode from a fused speed bundle.

    The practical-CFL speed is the LF viscosity speed: the alpha_* estimates
    alone can sit below the fast magnetosonic speed, which would push dt
    past the linear stability limit of the RKDG scheme."""
    if cfg.flux_mode == "hll":
        return WaveSpeeds.from_lr(bundle.sigma_l, bundle.sigma_r)
    sigma = bundle.sigma_lf
    if cfg.flux_mode == "global_lf":
        if sigma_glob is None:
            raise ValueError("global_lf mode needs the mesh-global speed")
        sigma = np.maximum(sigma, sigma_glob)
    return WaveSpeeds.from_lr(-sigma, sigma)


# ---------------------------------------------------------------------------
# 1D scheme
# ---------------------------------------------------------------------------


def _interface_states_1d(field: Dg1dField, mesh_obj: Mesh1D):
    """(Um, Up) at the M+1 interfaces, including boundary ghosts."""
    vR, vL = basis.edge_values_1d(field.k)
    uR = np.tensordot(field.coeffs, vR, axes=([1], [0]))
    uL = np.tensordot(field.coeffs, vL, axes=([1], [0]))
    M = field.coeffs.shape[0]
    Um = np.empty((M + 1, 8))
    Up = np.empty((M + 1, 8))
    Um[1:] = uR
    Up[:-1] = uL
    if mesh_obj.periodic:
        Um[0] = uR[-1]
        Up[M] = uL[0]
    else:
        Um[0] = apply_bc(mesh_obj.bcs[0], uL[:1], 0, -1,
                         points=mesh_obj.edges[:1, None])[0]
        Up[M] = apply_bc(mesh_obj.bcs[1], uR[-1:], 0, 1,
                         points=mesh_obj.edges[-1:, None])[0]
    return Um, Up


def residual_1d(field: Dg1dField, mesh_obj: Mesh1D, cfg: SolverConfig):
    """DG residual dU/dt for all modes; returns (residual coeffs, info)."""
    Um, Up = _interface_states_1d(field, mesh_obj)
    _check_traces(Um, Up)
    bundle = speed_bundle(Um, Up, _XI_1D, cfg.eos)
    sigma_glob = None
    if cfg.flux_mode == "global_lf":
        sigma_glob = float(np.max(bundle.sigma_lf))
    ws = _ws_from_bundle(bundle, cfg, sigma_glob)
    fhat = hll_flux(Um, Up, _XI_1D, ws, cfg.eos)

    k = field.k
    res = np.empty_like(field.coeffs)
    dx = mesh_obj.dx[:, None, None]
    vR, vL = basis.edge_values_1d(k)
    bnd = vR[None, :, None] * fhat[1:, None, :] - vL[None, :, None] * fhat[:-1, None, :]
    if k == 0:
        res[:] = -bnd / dx
    else:
        wq, Vq, Dq = basis.volume_tables_1d(k)
        Uq = np.moveaxis(np.tensordot(field.coeffs, Vq, axes=([1], [1])), 1, 2)
        Fq = physical_flux(Uq, 0, cfg.eos)
        vol = np.moveaxis(np.tensordot(Fq, wq[:, None] * Dq, axes=([1], [0])), 1, 2)
        res[:] = (vol - bnd) / dx
    info = {"ws": ws, "Um": Um, "Up": Up, "bundle": bundle,
            "sigma_glob": sigma_glob}
    return res, info


def ho_step_residual_1d(field: Dg1dField, mesh_obj: Mesh1D, cfg: SolverConfig):
    """(cell-average residuals, higher-moment residuals)."""
    res, _ = residual_1d(field, mesh_obj, cfg)
    return res[:, 0, :], res[:, 1:, :]


def fo_step_1d(averages: np.ndarray, mesh_obj: Mesh1D, cfg: SolverConfig,
               dt: float | None = None) -> np.ndarray:
    """First-order forward-Euler update of cell averages (k = 0 path)."""
    field = Dg1dField(np.array(averages, dtype=float)[:, None, :])
    cfg0 = replace(cfg, k=0)
    if dt is None:
        dt = compute_dt(field, mesh_obj, cfg0)
    elif cfg0.cfl_mode == "proven":
        allowed = compute_dt(field, mesh_obj, cfg0)
        if dt > allowed / 0.95:
            raise PositivityError(f"dt={dt:.3e} violates the proven CFL bound {allowed/0.95:.3e}")
    res, _ = residual_1d(field, mesh_obj, cfg0)
    new = field.coeffs + dt * res
    return new[:, 0, :]


def _dt_1d(field: Dg1dField, mesh_obj: Mesh1D, cfg: SolverConfig) -> float:
    Um, Up = _interface_states_1d(field, mesh_obj)
    _check_traces(Um, Up)
    bundle = speed_bundle(Um, Up, _XI_1D, cfg.eos)
    sigma_glob = None
    if cfg.flux_mode == "global_lf":
        sigma_glob = float(np.max(bundle.sigma_lf))
    ws = _ws_from_bundle(bundle, cfg, sigma_glob)
    return _dt_1d_core(field, mesh_obj, cfg, Um, Up, ws, bundle, sigma_glob)


def _dt_1d_core(field, mesh_obj, cfg, Um, Up, ws, bundle, sigma_glob) -> float:
    dx = mesh_obj.dx
    if cfg.cfl_mode == "practical":
        amax = bundle.sigma_lf
        if sigma_glob is not None:
            amax = np.maximum(amax, sigma_glob)
        speed = np.maximum(amax[:-1], amax[1:])
        return cfg.cfl * float(np.min(dx / speed))
    if field.k == 0:
        denom = ws.sigma_plus[:-1] - ws.sigma_minus[1:]
        denom = np.maximum(denom, 1e-300)
        return 0.95 * float(np.min(dx / denom))
    # High-order bound: alpha_j* from the two inner traces of each cell.
    inner_m = Up[:-1]   # left-edge trace of cell j
    inner_p = Um[1:]    # right-edge trace of cell j
    a_star = np.maximum(alpha_star(inner_m, inner_p, _XI_1D, cfg.eos),
                        alpha_star(inner_p, inner_m, _XI_1D, cfg.eos))
    w1 = basis.gauss_lobatto_rule(max(2, -(-(field.k + 3) // 2))).weights[0]
    denom = np.maximum(a_star + ws.sigma_plus[:-1], a_star - ws.sigma_minus[1:])
    denom = np.maximum(denom, 1e-300)
    return 0.95 * w1 * float(np.min(dx / denom))


# ---------------------------------------------------------------------------
# 2D scheme
# ---------------------------------------------------------------------------

# Edge order (bottom, right, top, left): measure factor and outward normal.
_EDGE_AXIS = (1, 0, 1, 0)
_EDGE_SIGN = (-1, 1, 1, -1)


class _Tables2D:
    def __init__(self, k: int, dx: float, dy: float):
        self.k = k
        sb = basis.scalar_basis_2d(k)
        lb = basis.ldf_basis(k, dx, dy)
        self.sb, self.lb = sb, lb
        q = basis.gauss_rule(k + 1)
        xg, yg = np.meshgrid(q.nodes, q.nodes, indexing="ij")
        pts = np.stack([xg.ravel(), yg.ravel()], axis=1)
        self.w_vol = np.outer(q.weights, q.weights).ravel()
        self.V_vol = sb.values(pts)
        self.G_vol = sb.grads(pts)                      # (p, ns, 2) reference
        self.VB_vol = lb.values(pts)                    # (p, nldf, 2)
        # Reference gradients of each LDF component via the scalar expansion.
        self.GB_vol = np.einsum("psd,rcs->prcd", self.G_vol, lb.component_coeffs)
        self.edge_nodes = []
        self.V_edge = []
        self.VB_edge = []
        g = q.nodes
        half = np.full(k + 1, 0.5)
        for pts_e in (np.stack([g, -half], 1), np.stack([half, g], 1),
                      np.stack([g, half], 1), np.stack([-half, g], 1)):
            self.edge_nodes.append(pts_e)
            self.V_edge.append(sb.values(pts_e))
            self.VB_edge.append(lb.values(pts_e))
        self.w_edge = q.weights
        # Pre-weighted assembly tables (physical scale factors baked in).
        measures = np.array([dx, dy, dx, dy]) / (dx * dy)
        self.W_edge_scalar = (measures[:, None, None] * q.weights[None, :, None]
                              * np.stack(self.V_edge))          # (4, Q, ns)
        self.W_edge_ldf = (measures[:, None, None, None] * q.weights[None, :, None, None]
                           * np.stack(self.VB_edge))            # (4, Q, nldf, 2)
        self.A_vol = (self.w_vol[:, None, None]
                      * self.G_vol / np.array([dx, dy]))        # (p, ns, 2)
        self.AB_vol = (self.w_vol[:, None, None, None]
                       * self.GB_vol / np.array([dx, dy]))      # (p, nldf, 2, 2)


_TABLES_2D: dict = {}


def _tables_2d(k: int, dx: float, dy: float) -> _Tables2D:
    key = (k, float(dx), float(dy))
    if key not in _TABLES_2D:
        _TABLES_2D[key] = _Tables2D(k, dx, dy)
    return _TABLES_2D[key]


def _edge_traces(field: Dg2dField, tab: _Tables2D):
    """Interior trace states on all four edges, (nx, ny, 4, Q, 8)."""
    nx, ny = field.shape
    Q = tab.w_edge.shape[0]
    out = np.empty((nx, ny, 4, Q, 8))
    for e in range(4):
        out[:, :, e] = basis._eval_2d_tables(field, tab.V_edge[e], tab.VB_edge[e])
    return out


def _boundary_points_x(mesh_obj: RectMesh2D, side: str, gnodes):
    x = mesh_obj.xedges[0] if side == "left" else mesh_obj.xedges[-1]
    y = (mesh_obj.ycenters[:, None] + mesh_obj.dy * gnodes[None, :]).ravel()
    return np.stack([np.full_like(y, x), y], axis=1)


def _boundary_points_y(mesh_obj: RectMesh2D, side: str, gnodes):
    y = mesh_obj.yedges[0] if side == "bottom" else mesh_obj.yedges[-1]
    x = (mesh_obj.xcenters[:, None] + mesh_obj.dx * gnodes[None, :]).ravel()
    return np.stack([x, np.full_like(x, y)], axis=1)


def _interface_states_2d(field: Dg2dField, mesh_obj: RectMesh2D, tab: _Tables2D):
    """Minus/plus trace arrays at x interfaces (nx+1, ny, Q, 8) and
    y interfaces (nx, ny+1, Q, 8)."""
    nx, ny = field.shape
    Q = tab.w_edge.shape[0]
    traces = _edge_traces(field, tab)
    tB, tR, tT, tL = (traces[:, :, e] for e in range(4))

    Um_x = np.empty((nx + 1, ny, Q, 8))
    Up_x = np.empty((nx + 1, ny, Q, 8))
    Um_x[1:] = tR
    Up_x[:-1] = tL
    if mesh_obj.periodic_x():
        Um_x[0] = tR[-1]
        Up_x[nx] = tL[0]
    else:
        gq = basis.gauss_rule(field.k + 1)
        ptsL = _boundary_points_x(mesh_obj, "left", gq.nodes)
        ptsR = _boundary_points_x(mesh_obj, "right", gq.nodes)
        Um_x[0] = apply_bc(mesh_obj.bcs["left"], tL[0].reshape(-1, 8), 0, -1,
                           points=ptsL).reshape(ny, Q, 8)
        Up_x[nx] = apply_bc(mesh_obj.bcs["right"], tR[-1].reshape(-1, 8), 0, 1,
                            points=ptsR).reshape(ny, Q, 8)

    Um_y = np.empty((nx, ny + 1, Q, 8))
    Up_y = np.empty((nx, ny + 1, Q, 8))
    Um_y[:, 1:] = tT
    Up_y[:, :-1] = tB
    if mesh_obj.periodic_y():
        Um_y[:, 0] = tT[:, -1]
        Up_y[:, ny] = tB[:, 0]
    else:
        gq = basis.gauss_rule(field.k + 1)
        ptsB = _boundary_points_y(mesh_obj, "bottom", gq.nodes)
        ptsT = _boundary_points_y(mesh_obj, "top", gq.nodes)
        Um_y[:, 0] = apply_bc(mesh_obj.bcs["bottom"], tB[:, 0].reshape(-1, 8), 1, -1,
                              points=ptsB).reshape(nx, Q, 8)
        Up_y[:, ny] = apply_bc(mesh_obj.bcs["top"], tT[:, -1].reshape(-1, 8), 1, 1,
                               points=ptsT).reshape(nx, Q, 8)
    return traces, (Um_x, Up_x), (Um_y, Up_y)


def _speeds_xy(Um_x, Up_x, Um_y, Up_y, cfg):
    """Interface speeds for both axis families in one stacked bundle
    evaluation; returns (ws_x, ws_y, bundle_x, bundle_y, sigma_glob)."""
    from .flux import SpeedBundle

    shp_x = Um_x.shape[:-1]
    shp_y = Um_y.shape[:-1]
    n_x = int(np.prod(shp_x))
    Um = np.concatenate([Um_x.reshape(-1, 8), Um_y.reshape(-1, 8)])
    Up = np.concatenate([Up_x.reshape(-1, 8), Up_y.reshape(-1, 8)])
    xi = np.zeros((Um.shape[0], 2))
    xi[:n_x, 0] = 1.0
    xi[n_x:, 1] = 1.0
    bundle = speed_bundle(Um, Up, xi, cfg.eos)
    sigma_glob = None
    if cfg.flux_mode == "global_lf":
        sigma_glob = float(np.max(bundle.sigma_lf))
    bundle_x = SpeedBundle(*(a[:n_x].reshape(shp_x) for a in bundle))
    bundle_y = SpeedBundle(*(a[n_x:].reshape(shp_y) for a in bundle))
    ws_x = _ws_from_bundle(bundle_x, cfg, sigma_glob)
    ws_y = _ws_from_bundle(bundle_y, cfg, sigma_glob)
    return ws_x, ws_y, bundle_x, bundle_y, sigma_glob


def _interface_fluxes(Um, Up, xi, cfg, ws):
    fhat = hll_flux(Um, Up, xi, ws, cfg.eos)
    denom = ws.sigma_plus - ws.sigma_minus
    eta_minus = ws.sigma_minus / denom
    eta_plus = -ws.sigma_plus / denom
    bcomp = 4 if xi[0] == 1.0 else 5
    jump = Up[..., bcomp] - Um[..., bcomp]
    # Upwind-weighted normal B feeding the discrete divergence.
    phi = (ws.sigma_plus * Um[..., bcomp] - ws.sigma_minus * Up[..., bcomp]) / denom
    return ws, fhat, eta_minus, eta_plus, jump, phi


def dg_residual_2d(field: Dg2dField, mesh_obj: RectMesh2D, cfg: SolverConfig):
    """Residual dU/dt of the 2D LDF-DG scheme for all modes.

    Returns (residual container, info) where info carries the interface
    speeds, interior traces and both discrete divergences.
    """
    tab = _tables_2d(field.k, field.dx, field.dy)
    traces, (Um_x, Up_x), (Um_y, Up_y) = _interface_states_2d(field, mesh_obj, tab)
    _check_traces(Um_x, Up_x, Um_y, Up_y)
    pre_x, pre_y, bundle_x, bundle_y, sigma_glob = _speeds_xy(
        Um_x, Up_x, Um_y, Up_y, cfg)
    ws_x, fx, etam_x, etap_x, jump_x, phi_x = _interface_fluxes(
        Um_x, Up_x, _XI_X, cfg, pre_x)
    ws_y, fy, etam_y, etap_y, jump_y, phi_y = _interface_fluxes(
        Um_y, Up_y, _XI_Y, cfg, pre_y)

    dx, dy = field.dx, field.dy
    nx, ny = field.shape
    wq = tab.w_edge

    # Outward flux minus penalty per cell edge, (nx, ny, Q, 8).
    G = np.empty((nx, ny, 4, wq.shape[0], 8))
    G[:, :, 0] = -fy[:, :-1]
    G[:, :, 1] = fx[1:]
    G[:, :, 2] = fy[:, 1:]
    G[:, :, 3] = -fx[:-1]
    if cfg.penalty:
        G[:, :, 0] -= (etap_y[:, :-1] * jump_y[:, :-1])[..., None] * source_vector(Up_y[:, :-1])
        G[:, :, 1] -= (etam_x[1:] * jump_x[1:])[..., None] * source_vector(Um_x[1:])
        G[:, :, 2] -= (etam_y[:, 1:] * jump_y[:, 1:])[..., None] * source_vector(Um_y[:, 1:])
        G[:, :, 3] -= (etap_x[:-1] * jump_x[:-1])[..., None] * source_vector(Up_x[:-1])

    # Boundary terms: tensordot over the (edge, point) axes.
    bnd_scalar = np.tensordot(G, tab.W_edge_scalar, axes=([2, 3], [0, 1]))
    bnd_scalar = np.moveaxis(bnd_scalar, 2, 3)          # (nx, ny, ns, 8)
    bnd_bxy = np.tensordot(G[..., 4:6], tab.W_edge_ldf, axes=([2, 3, 4], [0, 1, 3]))

    U_vol = basis._eval_2d_tables(field, tab.V_vol, tab.VB_vol)
    F1 = physical_flux(U_vol, 0, cfg.eos)
    F2 = physical_flux(U_vol, 1, cfg.eos)
    vol_scalar = (
        np.tensordot(F1, tab.A_vol[..., 0], axes=([2], [0]))
        + np.tensordot(F2, tab.A_vol[..., 1], axes=([2], [0]))
    )
    vol_scalar = np.moveaxis(vol_scalar, 2, 3)          # (nx, ny, ns, 8)
    vol_bxy = (
        np.tensordot(F1[..., 4:6], tab.AB_vol[..., 0], axes=([2, 3], [0, 2]))
        + np.tensordot(F2[..., 4:6], tab.AB_vol[..., 1], axes=([2, 3], [0, 2]))
    )

    res = Dg2dField(
        hydro=(vol_scalar - bnd_scalar)[..., [0, 1, 2, 3, 7]],
        bxy=vol_bxy - bnd_bxy,
        b3=(vol_scalar - bnd_scalar)[..., 6],
        k=field.k, dx=dx, dy=dy,
    )
    div_ho = (
        np.einsum("q,xyq->xy", wq, phi_x[1:] - phi_x[:-1]) * dy
        + np.einsum("q,xyq->xy", wq, phi_y[:, 1:] - phi_y[:, :-1]) * dx
    ) / (dx * dy)
    info = {
        "ws_x": ws_x, "ws_y": ws_y, "traces": traces,
        "jump_x": jump_x, "jump_y": jump_y,
        "etam_x": etam_x, "etam_y": etam_y,
        "div_ho": div_ho, "sigma_glob": sigma_glob,
        "bundle_x": bundle_x, "bundle_y": bundle_y,
        "Um_x": Um_x, "Up_x": Up_x, "Um_y": Um_y, "Up_y": Up_y,
    }
    return res, info


def fo_step_2d(averages: np.ndarray, mesh_obj: RectMesh2D, cfg: SolverConfig,
               dt: float | None = None) -> np.ndarray:
    """First-order forward-Euler update of 2D cell averages (k = 0 path)."""
    avg = np.asarray(averages, dtype=float)
    field = Dg2dField(
        hydro=avg[..., HYDRO_COMPS][:, :, None, :],
        bxy=avg[..., 4:6].copy(),
        b3=avg[..., 6][:, :, None],
        k=0, dx=mesh_obj.dx, dy=mesh_obj.dy,
    )
    cfg0 = replace(cfg, k=0)
    if dt is None:
        dt = compute_dt(field, mesh_obj, cfg0)
    elif cfg0.cfl_mode == "proven":
        allowed = compute_dt(field, mesh_obj, cfg0)
        if dt > allowed / 0.95:
            raise PositivityError(f"dt={dt:.3e} violates the proven CFL bound {allowed/0.95:.3e}")
    res, _ = dg_residual_2d(field, mesh_obj, cfg0)
    out = field + dt * res
    return out.averages


def discrete_div_fo(averages: np.ndarray, mesh_obj: RectMesh2D, cfg: SolverConfig) -> np.ndarray:
    """First-order discrete divergence of the cell-average magnetic field."""
    avg = np.asarray(averages, dtype=float)
    field = Dg2dField(
        hydro=avg[..., HYDRO_COMPS][:, :, None, :],
        bxy=avg[..., 4:6].copy(),
        b3=avg[..., 6][:, :, None],
        k=0, dx=mesh_obj.dx, dy=mesh_obj.dy,
    )
    cfg0 = replace(cfg, k=0)
    tab = _tables_2d(0, field.dx, field.dy)
    _, (Um_x, Up_x), (Um_y, Up_y) = _interface_states_2d(field, mesh_obj, tab)
    _check_traces(Um_x, Up_x, Um_y, Up_y)
    ws_x, ws_y, _, _, _ = _speeds_xy(Um_x, Up_x, Um_y, Up_y, cfg0)
    phi_x = (ws_x.sigma_plus * Um_x[..., 4] - ws_x.sigma_minus * Up_x[..., 4]) / (
        ws_x.sigma_plus - ws_x.sigma_minus
    )
    phi_y = (ws_y.sigma_plus * Um_y[..., 5] - ws_y.sigma_minus * Up_y[..., 5]) / (
        ws_y.sigma_plus - ws_y.sigma_minus
    )
    return (
        (phi_x[1:, :, 0] - phi_x[:-1, :, 0]) * mesh_obj.dy
        + (phi_y[:, 1:, 0] - phi_y[:, :-1, 0]) * mesh_obj.dx
    ) / (mesh_obj.dx * mesh_obj.dy)


def discrete_div_ho(field: Dg2dField, mesh_obj: RectMesh2D, cfg: SolverConfig,
                    cell: tuple[int, int] | None = None):
    """Upwind-weighted discrete divergence of the DG magnetic field."""
    _, info = dg_residual_2d(field, mesh_obj, cfg)
    div = info["div_ho"]
    return div if cell is None else float(div[cell])


def _alpha_hat_2d(traces: np.ndarray, eos, dx: float, dy: float) -> np.ndarray:
    """Multi-state speed bounds alpha_hat at every (cell, edge, q) from the
    cell's own interior traces (same-q pairing across edges)."""
    measures = np.array([dx, dy, dx, dy])
    perim = measures.sum()
    normals = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    rho = traces[..., RHO]
    v = traces[..., MOM] / rho[..., None]
    B = traces[..., MAG]
    sr = np.sqrt(rho)
    nx, ny, _, Q, _ = traces.shape
    alpha = np.empty((nx, ny, 4, Q))
    for j in range(4):
        vn = np.einsum("d,xyqd->xyq", normals[j], v[:, :, j, :, :2])
        C = pp_speed(traces[:, :, j].reshape(-1, 8), normals[j], eos).reshape(nx, ny, Q)
        vel_avg = np.zeros((nx, ny, Q))
        bterm = np.zeros((nx, ny, Q))
        for i in range(4):
            roe = (sr[:, :, j, :, None] * v[:, :, j] + sr[:, :, i, :, None] * v[:, :, i]) / (
                sr[:, :, j] + sr[:, :, i]
            )[..., None]
            dxi = normals[j] - normals[i]
            vel_avg += measures[i] * np.einsum("d,xyqd->xyq", dxi, roe[..., :2])
            bterm += measures[i] * np.linalg.norm(B[:, :, j] - B[:, :, i], axis=-1) / (
                sr[:, :, j] + sr[:, :, i]
            )
        alpha[:, :, j] = np.maximum(vn, vel_avg / perim) + C + 2.0 * bterm / perim
    return alpha


def _dt_2d(field: Dg2dField, mesh_obj: RectMesh2D, cfg: SolverConfig) -> float:
    tab = _tables_2d(field.k, field.dx, field.dy)
    traces, (Um_x, Up_x), (Um_y, Up_y) = _interface_states_2d(field, mesh_obj, tab)
    _check_traces(Um_x, Up_x, Um_y, Up_y)
    ws_x, ws_y, bundle_x, bundle_y, sigma_glob = _speeds_xy(
        Um_x, Up_x, Um_y, Up_y, cfg)
    return _dt_2d_core(field, mesh_obj, cfg, traces,
                       (Um_x, Up_x, ws_x, bundle_x),
                       (Um_y, Up_y, ws_y, bundle_y), sigma_glob)


def _dt_2d_core(field, mesh_obj, cfg, traces, xdata, ydata, sigma_glob) -> float:
    Um_x, Up_x, ws_x, bundle_x = xdata
    Um_y, Up_y, ws_y, bundle_y = ydata
    dx, dy = field.dx, field.dy

    if cfg.cfl_mode == "practical":
        def cellmax(bundle):
            a = bundle.sigma_lf
            if sigma_glob is not None:
                a = np.maximum(a, sigma_glob)
            return np.max(a, axis=-1)

        ax = cellmax(bundle_x)                # (nx+1, ny)
        ay = cellmax(bundle_y)                # (nx, ny+1)
        sx = np.maximum(ax[:-1], ax[1:])
        sy = np.maximum(ay[:, :-1], ay[:, 1:])
        return cfg.cfl / float(np.max(sx / dx + sy / dy))

    if field.k == 0:
        # First-order bound: edge sum of -sigma^- seen from each cell's own
        # side (left/bottom edges flip orientation, so -sigma^- there is the
        # interface sigma^+), plus the divergence penalty term when enabled.
        s_edges = (
            dy * (-ws_x.sigma_minus[1:, :, 0]) + dy * (ws_x.sigma_plus[:-1, :, 0])
            + dx * (-ws_y.sigma_minus[:, 1:, 0]) + dx * (ws_y.sigma_plus[:, :-1, 0])
        )
        rate = s_edges / (dx * dy)
        if cfg.penalty:
            _, info = dg_residual_2d(field, mesh_obj, cfg)
            rate = rate + np.abs(info["div_ho"]) / np.sqrt(field.averages[..., RHO])
        return 0.95 / float(np.max(rate))

    alpha_hat = _alpha_hat_2d(traces, cfg.eos, dx, dy)
    # -sigma^- from each cell's own side: bottom/left edges see the flipped
    # orientation of the shared interface.
    neg_sm = np.empty_like(alpha_hat)
    neg_sm[:, :, 0] = ws_y.sigma_plus[:, :-1]
    neg_sm[:, :, 1] = -ws_x.sigma_minus[1:]
    neg_sm[:, :, 2] = -ws_y.sigma_minus[:, 1:]
    neg_sm[:, :, 3] = ws_x.sigma_plus[:-1]
    alpha_jq = alpha_hat + neg_sm
    if cfg.penalty:
        denom_x = ws_x.sigma_plus - ws_x.sigma_minus
        denom_y = ws_y.sigma_plus - ws_y.sigma_minus
        rho_int = traces[..., RHO]
        pen = np.empty_like(alpha_hat)
        pen[:, :, 0] = (ws_y.sigma_plus / denom_y)[:, :-1] * np.abs(
            Up_y[:, :-1, :, 5] - Um_y[:, :-1, :, 5]
        )
        pen[:, :, 1] = (-ws_x.sigma_minus / denom_x)[1:] * np.abs(
            Up_x[1:, :, :, 4] - Um_x[1:, :, :, 4]
        )
        pen[:, :, 2] = (-ws_y.sigma_minus / denom_y)[:, 1:] * np.abs(
            Up_y[:, 1:, :, 5] - Um_y[:, 1:, :, 5]
        )
        pen[:, :, 3] = (ws_x.sigma_plus / denom_x)[:-1] * np.abs(
            Up_x[:-1, :, :, 4] - Um_x[:-1, :, :, 4]
        )
        alpha_jq = alpha_jq + pen / np.sqrt(rho_int)
    w1 = basis.gauss_lobatto_rule(max(2, -(-(field.k + 3) // 2))).weights[0]
    # varpi_jq/omega_q = measure_j w1/(dx+dy) and |E_j|/|K| = measure_j/area,
    # so the edge measure cancels from the admissible step bound.
    bound = (w1 / (dx + dy)) * (dx * dy) / alpha_jq
    return 0.95 * float(np.min(bound))


def compute_dt(field_or_avg, mesh_obj, cfg: SolverConfig) -> float:
    """Largest stable time step for the configured scheme and CFL mode."""
    if isinstance(mesh_obj, Mesh1D):
        if not isinstance(field_or_avg, Dg1dField):
            field_or_avg = Dg1dField(np.asarray(field_or_avg, dtype=float)[:, None, :])
        return _dt_1d(field_or_avg, mesh_obj, cfg)
    if not isinstance(field_or_avg, Dg2dField):
        avg = np.asarray(field_or_avg, dtype=float)
        field_or_avg = Dg2dField(
            hydro=avg[..., HYDRO_COMPS][:, :, None, :],
            bxy=avg[..., 4:6].copy(),
            b3=avg[..., 6][:, :, None],
            k=0, dx=mesh_obj.dx, dy=mesh_obj.dy,
        )
    return _dt_2d(field_or_avg, mesh_obj, cfg)


# ---------------------------------------------------------------------------
# SSP-RK3 driver
# ---------------------------------------------------------------------------


def ssp_rk3_step(y, rhs, dt: float, prepare=None):
    """One SSP-RK3 step: three forward-Euler stages combined with weights
    (1), (3/4, 1/4), (1/3, 2/3).  ``prepare`` is applied to the input of
    every stage (limiting + positivity guard); omitted for plain ODEs."""
    if prepare is None:
        prepare = lambda v: v
    y0 = prepare(y)
    k1 = y0 + dt * rhs(y0)
    y1 = prepare(k1)
    k2 = 0.75 * y0 + 0.25 * (y1 + dt * rhs(y1))
    y2 = prepare(k2)
    return (1.0 / 3.0) * y0 + (2.0 / 3.0) * (y2 + dt * rhs(y2))


def _limit(field, mesh_obj, cfg: SolverConfig):
    count = 0
    def osc(f):
        if cfg.oscillation_limiter == "tvb" and cfg.k >= 1:
            f, _ = tvb_minmod_limit(f, mesh_obj, cfg.tvb_M, cfg.eos,
                                    mode=cfg.tvb_mode)
        return f

    def pp(f):
        nonlocal count
        if cfg.pp_limiter:
            f, n = pp_limit_field(f, cfg.pp_params)
            count += n
        return f

    if cfg.limiter_order == "osc_then_pp":
        field = pp(osc(field))
    else:
        field = osc(pp(field))
    return field, count


@dataclass
class RunResult:
    field: object
    t: float
    steps: int
    diagnostics: list
    failed: bool = False
    failure_message: str = ""
    retries: int = 0
    min_stage_rho: float = np.inf    # min cell-average rho over every stage
    min_stage_calE: float = np.inf   # min cell-average calE over every stage


def ssp_rk3_advance(field, mesh_obj, cfg: SolverConfig, t_end: float,
                    t0: float = 0.0, on_step=None, max_steps: int = 10_000_000):
    """Advance the field to t_end with SSP-RK3, limiting before every stage
    and guarding cell-average admissibility after every stage.

    Guard failures follow cfg.guard_policy: "retry" halves dt (up to
    cfg.max_retries), "halt" stops and records the failure, "raise"
    propagates (a proven-CFL violation indicates an implementation bug).
    """
    t = float(t0)
    step = 0
    diags: list[StepDiagnostics] = []
    total_retries = 0
    min_srho = np.inf
    min_scalE = np.inf
    is_1d = isinstance(mesh_obj, Mesh1D)
    residual = residual_1d if is_1d else dg_residual_2d

    def rhs(f):
        res, info = residual(f, mesh_obj, cfg)
        if is_1d:
            return Dg1dField(res), info
        return res, info

    while t < t_end * (1.0 - 1e-14) and step < max_steps:
        lim0, n0 = _limit(field, mesh_obj, cfg)
        # The first-stage residual is dt independent; its interface data
        # also provides the CFL speeds.
        r1, info1 = rhs(lim0)
        if is_1d:
            dt_allowed = _dt_1d_core(lim0, mesh_obj, cfg, info1["Um"], info1["Up"],
                                     info1["ws"], info1["bundle"],
                                     info1["sigma_glob"])
        else:
            dt_allowed = _dt_2d_core(
                lim0, mesh_obj, cfg, info1["traces"],
                (info1["Um_x"], info1["Up_x"], info1["ws_x"], info1["bundle_x"]),
                (info1["Um_y"], info1["Up_y"], info1["ws_y"], info1["bundle_y"]),
                info1["sigma_glob"],
            )
        dt = min(dt_allowed, t_end - t)
        retries = 0
        while True:
            limited_count = n0
            try:
                k1 = lim0 + dt * r1
                g1 = _guard_averages(k1.averages)
                lim1, n1 = _limit(k1, mesh_obj, cfg)
                limited_count += n1
                r2, _ = rhs(lim1)
                k2 = 0.75 * lim0 + 0.25 * (lim1 + dt * r2)
                g2 = _guard_averages(k2.averages)
                lim2, n2 = _limit(k2, mesh_obj, cfg)
                limited_count += n2
                r3, info3 = rhs(lim2)
                new = (1.0 / 3.0) * lim0 + (2.0 / 3.0) * (lim2 + dt * r3)
                g3 = _guard_averages(new.averages)
                break
            except PositivityError as exc:
                if cfg.guard_policy == "raise":
                    raise
                if cfg.guard_policy == "halt":
                    return RunResult(field=field, t=t, steps=step, diagnostics=diags,
                                     failed=True, failure_message=str(exc),
                                     retries=total_retries,
                                     min_stage_rho=min_srho, min_stage_calE=min_scalE)
                retries += 1
                total_retries += 1
                if retries > cfg.max_retries:
                    return RunResult(field=field, t=t, steps=step, diagnostics=diags,
                                     failed=True,
                                     failure_message=f"retries exhausted: {exc}",
                                     retries=total_retries,
                                     min_stage_rho=min_srho, min_stage_calE=min_scalE)
                dt *= 0.5

        min_srho = min(min_srho, g1[0], g2[0], g3[0])
        min_scalE = min(min_scalE, g1[1], g2[1], g3[1])
        field = new
        t += dt
        step += 1
        div_ho = 0.0 if is_1d else float(np.max(np.abs(info3["div_ho"])))
        diags.append(_diagnostics(step, t, dt, field, mesh_obj, cfg,
                                  limited_count, div_ho))
        if on_step is not None:
            on_step(step, t, field, diags[-1])
    return RunResult(field=field, t=t, steps=step, diagnostics=diags,
                     retries=total_retries,
                     min_stage_rho=min_srho, min_stage_calE=min_scalE)


def _diagnostics(step, t, dt, field, mesh_obj, cfg, limited, div_ho) -> StepDiagnostics:
    avg = field.averages
    rho = avg[..., RHO]
    calE = avg[..., ENE] - 0.5 * (
        np.sum(avg[..., MOM] ** 2, axis=-1) / rho + np.sum(avg[..., MAG] ** 2, axis=-1)
    )
    p = cfg.eos.pressure(rho, calE / rho)
    if isinstance(mesh_obj, Mesh1D):
        mass = float(np.sum(mesh_obj.dx * rho))
        div_fo = 0.0
    else:
        mass = float(np.sum(rho) * mesh_obj.dx * mesh_obj.dy)
        div_fo = float(np.max(np.abs(discrete_div_fo(avg, mesh_obj, cfg))))
    return StepDiagnostics(
        step=step, t=float(t), dt=float(dt),
        min_rho=float(np.min(rho)), min_p=float(np.min(p)),
        max_divB_fo=div_fo, max_divB_ho=div_ho,
        total_mass=mass, limited_cells=int(limited),
    )
