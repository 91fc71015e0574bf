"""Benchmark problems and measurement harness.

Six test problems exercise the solver across the regimes that break
non-positivity-preserving schemes: a smooth low-density advection wave for
accuracy, two 1D Riemann problems (near-vacuum states and a magnetized
Leblanc variant at plasma-beta 4e-8), a strongly magnetized 2D blast, a
shock-cloud interaction and magnetized astrophysical jets up to Mach 10000.
All initial data are transcribed into the checked-in constants fixture so a
test can detect silent drift of any number.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from importlib import resources
from typing import Callable

import numpy as np

from . import basis, scheme
from .mesh import (
    CallableBC, InflowBC, Mesh1D, OutflowBC, PeriodicBC, ReflectingBC,
    build_rect_2d, build_uniform_1d,
)
from .state import IdealEos, prim_to_cons

__all__ = [
    "ProblemSpec", "ErrorReport", "RunSummary",
    "problem_catalog", "jet_problem", "vortex_template",
    "setup_run", "error_norms", "convergence_orders", "extreme_run",
]


@dataclass
class ProblemSpec:
    name: str
    dim: int
    domain: tuple
    gamma: float
    t_end: float
    initial_primitive: Callable            # W(x[, y]) -> (..., 8)
    bcs_factory: Callable                  # () -> bc tuple/dict
    exact_primitive: Callable | None = None  # W(x, t) for error studies
    notes: str = ""

    @property
    def eos(self) -> IdealEos:
        return IdealEos(self.gamma)

    def initial_conserved(self, *coords) -> np.ndarray:
        return prim_to_cons(self.initial_primitive(*coords), self.eos)

    def exact_conserved(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.exact_primitive is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        return prim_to_cons(self.exact_primitive(x, t), self.eos)

    def make_mesh(self, cells):
        if self.dim == 1:
            a, b = self.domain
            return build_uniform_1d(a, b, int(cells), self.bcs_factory())
        nx, ny = cells
        return build_rect_2d(self.domain, int(nx), int(ny), self.bcs_factory())


def _primitive(shape, rho, v, p, B):
    W = np.empty(shape + (8,))
    W[..., 0] = rho
    for i in range(3):
        W[..., 1 + i] = v[i]
    W[..., 4] = p
    for i in range(3):
        W[..., 5 + i] = B[i]
    return W


def _smooth1d() -> ProblemSpec:
    def prim(x, t=0.0):
        W = _primitive(np.shape(x), 1.0 + 0.99 * np.sin(x - t), (1.0, 0.0, 0.0), 1.0,
                       (0.1, 0.0, 0.0))
        return W

    return ProblemSpec(
        name="smooth1d",
        dim=1,
        domain=(0.0, 2.0 * np.pi),
        gamma=1.4,
        t_end=0.1,
        initial_primitive=lambda x: prim(x, 0.0),
        exact_primitive=prim,
        bcs_factory=lambda: (PeriodicBC(), PeriodicBC()),
        notes="low-density sine advection; only the density varies",
    )


def _vacuum_tube() -> ProblemSpec:
    def prim(x):
        left = x < 0.0
        W = np.empty(np.shape(x) + (8,))
        W[..., 0] = np.where(left, 1e-12, 1.0)
        W[..., 1:4] = 0.0
        W[..., 4] = np.where(left, 1e-12, 0.5)
        W[..., 5] = 0.0
        W[..., 6] = np.where(left, 0.0, 1.0)
        W[..., 7] = 0.0
        return W

    return ProblemSpec(
        name="vacuum_tube",
        dim=1,
        domain=(-0.5, 0.5),
        gamma=5.0 / 3.0,
        t_end=0.1,
        initial_primitive=prim,
        bcs_factory=lambda: (OutflowBC(), OutflowBC()),
        notes="near-vacuum left state at density and pressure 1e-12",
    )


def _leblanc() -> ProblemSpec:
    def prim(x):
        left = x < 0.0
        W = np.empty(np.shape(x) + (8,))
        W[..., 0] = np.where(left, 2.0, 0.001)
        W[..., 1:4] = 0.0
        W[..., 4] = np.where(left, 1e9, 1.0)
        W[..., 5] = 0.0
        W[..., 6] = 5000.0
        W[..., 7] = 5000.0
        return W

    return ProblemSpec(
        name="leblanc",
        dim=1,
        domain=(-10.0, 10.0),
        gamma=1.4,
        t_end=3e-5,
        initial_primitive=prim,
        bcs_factory=lambda: (OutflowBC(), OutflowBC()),
        notes="magnetized Leblanc variant; right-state plasma beta 4e-8",
    )


def _blast() -> ProblemSpec:
    b0 = 100.0 / np.sqrt(4.0 * np.pi)

    def prim(x, y):
        r = np.sqrt(x**2 + y**2)
        W = np.empty(np.shape(x) + (8,))
        W[..., 0] = 1.0
        W[..., 1:4] = 0.0
        W[..., 4] = np.where(r < 0.1, 1000.0, 0.1)
        W[..., 5] = b0
        W[..., 6:8] = 0.0
        return W

    return ProblemSpec(
        name="blast",
        dim=2,
        domain=((-0.5, 0.5), (-0.5, 0.5)),
        gamma=1.4,
        t_end=0.01,
        initial_primitive=prim,
        bcs_factory=lambda: {k: OutflowBC() for k in ("left", "right", "bottom", "top")},
        notes="pressure 1000 inside r<0.1, ambient 0.1, Bx = 100/sqrt(4 pi)",
    )


def _shock_cloud() -> ProblemSpec:
    left = (3.86859, (0.0, 0.0, 0.0), 167.345, (0.0, 2.1826182, -2.1826182))
    right = (1.0, (-11.2536, 0.0, 0.0), 1.0, (0.0, 0.56418958, 0.56418958))

    def prim(x, y):
        W = np.empty(np.shape(x) + (8,))
        is_left = x < 0.6
        W[..., 0] = np.where(is_left, left[0], right[0])
        for i in range(3):
            W[..., 1 + i] = np.where(is_left, left[1][i], right[1][i])
        W[..., 4] = np.where(is_left, left[2], right[2])
        for i in range(3):
            W[..., 5 + i] = np.where(is_left, left[3][i], right[3][i])
        cloud = (x - 0.8) ** 2 + (y - 0.5) ** 2 < 0.15**2
        W[..., 0] = np.where(cloud, 10.0, W[..., 0])
        return W

    inflow_state = prim_to_cons(
        np.array([right[0], *right[1], right[2], *right[3]]), IdealEos(5.0 / 3.0)
    )
    return ProblemSpec(
        name="shock_cloud",
        dim=2,
        domain=((0.0, 1.0), (0.0, 1.0)),
        gamma=5.0 / 3.0,
        t_end=0.06,
        initial_primitive=prim,
        bcs_factory=lambda: {
            "left": OutflowBC(),
            "right": InflowBC(inflow_state),
            "bottom": OutflowBC(),
            "top": OutflowBC(),
        },
        notes="strong shock hits a dense circular cloud (radius 0.15 at 0.8, 0.5)",
    )


def jet_problem(mach: float = 800.0, B_a: float = float(np.sqrt(2000.0))) -> ProblemSpec:
    """Magnetized jet on the reflecting half domain [0, 0.5] x [0, 1.5].

    The ambient gas is (rho, p) = (0.1 gamma, 1) with B = (0, B_a, 0); the
    nozzle |x| < 0.05 on the bottom boundary injects (rho, p, v2) =
    (gamma, 1, mach) (the jet sound speed is 1, so v2 is the Mach number).
    """
    gamma = 1.4

    def prim(x, y):
        W = _primitive(np.shape(x), 0.1 * gamma, (0.0, 0.0, 0.0), 1.0, (0.0, B_a, 0.0))
        return W

    jet_state = prim_to_cons(
        np.array([gamma, 0.0, mach, 0.0, 1.0, 0.0, B_a, 0.0]), IdealEos(gamma)
    )

    def bottom_bc(points, interior, axis, sign):
        ghost = interior.copy()
        nozzle = np.abs(points[:, 0]) < 0.05
        ghost[nozzle] = jet_state
        return ghost

    return ProblemSpec(
        name="jet",
        dim=2,
        domain=((0.0, 0.5), (0.0, 1.5)),
        gamma=gamma,
        t_end=0.002,
        initial_primitive=prim,
        bcs_factory=lambda: {
            "left": ReflectingBC(),
            "right": OutflowBC(),
            "bottom": CallableBC(bottom_bc),
            "top": OutflowBC(),
        },
        notes=f"Mach {mach:g} dense jet, B_a = {B_a:.6f}",
    )


JET_PRESETS = {
    "jet": (800.0, float(np.sqrt(2000.0))),
    "jet_m800_b20000": (800.0, float(np.sqrt(20000.0))),
    "jet_m2000_b20000": (2000.0, float(np.sqrt(20000.0))),
    "jet_m10000_b20000": (10000.0, float(np.sqrt(20000.0))),
}


def vortex_template(velocity_perturbation: Callable, magnetic_perturbation: Callable,
                    pressure_fn: Callable, density_fn: Callable) -> ProblemSpec:
    """User-parameterized smooth 2D vortex.

    Only gamma = 5/3, the periodic domain [-10, 10]^2 and a minimum
    pressure around 5.3e-12 are pinned down; the perturbation profiles are
    template parameters (each callable takes (x, y) arrays).
    """

    def prim(x, y):
        W = np.empty(np.shape(x) + (8,))
        W[..., 0] = density_fn(x, y)
        dv = velocity_perturbation(x, y)
        W[..., 1] = dv[0]
        W[..., 2] = dv[1]
        W[..., 3] = 0.0
        W[..., 4] = pressure_fn(x, y)
        dB = magnetic_perturbation(x, y)
        W[..., 5] = dB[0]
        W[..., 6] = dB[1]
        W[..., 7] = 0.0
        return W

    return ProblemSpec(
        name="vortex2d",
        dim=2,
        domain=((-10.0, 10.0), (-10.0, 10.0)),
        gamma=5.0 / 3.0,
        t_end=0.05,
        initial_primitive=prim,
        bcs_factory=lambda: {k: PeriodicBC() for k in ("left", "right", "bottom", "top")},
        notes="template: perturbation profiles are user-supplied",
    )


def problem_catalog() -> dict[str, ProblemSpec]:
    """The six benchmark problems keyed by name."""
    return {
        "smooth1d": _smooth1d(),
        "vacuum_tube": _vacuum_tube(),
        "leblanc": _leblanc(),
        "blast": _blast(),
        "shock_cloud": _shock_cloud(),
        "jet": jet_problem(),
    }


def load_constants_fixture() -> dict[str, float]:
    """Parse the checked-in initial-condition constants file."""
    text = resources.files("mhdpp").joinpath("data/problem_constants.txt").read_text()
    out: dict[str, float] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = line.split("=")
        out[key.strip()] = float(value.strip())
    return out


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


@dataclass
class ErrorReport:
    n_cells: int
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray


def setup_run(spec: ProblemSpec, cells, cfg: scheme.SolverConfig):
    """Mesh + projected initial DG field for a catalog problem."""
    mesh_obj = spec.make_mesh(cells)
    field = basis.project_initial(spec.initial_conserved, mesh_obj, cfg.k)
    return mesh_obj, field


def error_norms(field, spec: ProblemSpec, mesh_obj, t: float) -> ErrorReport:
    """Quadrature-based L1/L2/Linf errors against the exact solution."""
    k = field.k
    gq = basis.gauss_rule(k + 2)
    if isinstance(mesh_obj, Mesh1D):
        V = basis.scalar_basis_1d(k).values(gq.nodes)
        Uh = np.einsum("mnc,qn->mqc", field.coeffs, V)
        x = mesh_obj.centers[:, None] + mesh_obj.dx[:, None] * gq.nodes[None, :]
        Ue = spec.exact_conserved(x, t)
        diff = np.abs(Uh - Ue)
        vol = mesh_obj.dx[:, None] * gq.weights[None, :]
        total = float(np.sum(mesh_obj.dx))
        l1 = np.einsum("mq,mqc->c", vol, diff) / total
        l2 = np.sqrt(np.einsum("mq,mqc->c", vol, diff**2) / total)
        linf = np.max(diff, axis=(0, 1))
        return ErrorReport(n_cells=mesh_obj.n_cells, l1=l1, l2=l2, linf=linf)
    raise NotImplementedError("error norms are wired for 1D exact solutions")


def convergence_orders(reports: list[ErrorReport]) -> np.ndarray:
    """Observed L1 orders between successive refinements, (n-1, 8)."""
    if len(reports) < 2:
        return np.empty((0, 8))
    orders = []
    for coarse, fine in zip(reports[:-1], reports[1:]):
        ratio = fine.n_cells / coarse.n_cells
        # Components that are exactly constant have zero error; report NaN.
        with np.errstate(divide="ignore", invalid="ignore"):
            orders.append(np.log(coarse.l1 / fine.l1) / np.log(ratio))
    return np.array(orders)


@dataclass
class RunSummary:
    completed: bool
    t_final: float
    steps: int
    failure_time: float | None
    failure_message: str
    min_rho: float
    min_p: float
    max_divB_fo: float
    max_divB_ho: float
    retries: int = 0
    min_stage_rho: float = np.inf
    min_stage_calE: float = np.inf
    diagnostics: list = dfield(default_factory=list)
    field: object = None
    mesh: object = None


def extreme_run(spec: ProblemSpec, cfg: scheme.SolverConfig, cells,
                t_end: float | None = None) -> RunSummary:
    """Run a benchmark to t_end (or first positivity failure) and summarize."""
    t_end = spec.t_end if t_end is None else t_end
    mesh_obj, field = setup_run(spec, cells, cfg)
    result = scheme.ssp_rk3_advance(field, mesh_obj, cfg, t_end)
    diags = result.diagnostics
    return RunSummary(
        completed=not result.failed,
        t_final=result.t,
        steps=result.steps,
        failure_time=result.t if result.failed else None,
        failure_message=result.failure_message,
        min_rho=min((d.min_rho for d in diags), default=np.nan),
        min_p=min((d.min_p for d in diags), default=np.nan),
        max_divB_fo=max((d.max_divB_fo for d in diags), default=0.0),
        max_divB_ho=max((d.max_divB_ho for d in diags), default=0.0),
        retries=result.retries,
        min_stage_rho=result.min_stage_rho,
        min_stage_calE=result.min_stage_calE,
        diagnostics=diags,
        field=result.field,
        mesh=mesh_obj,
    )
