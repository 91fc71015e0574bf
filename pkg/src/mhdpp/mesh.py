"""Mesh geometry: 1D interval partitions, uniform rectangular 2D meshes and
the generic polytope-cell description (edge measures, outward unit normals,
neighbor/boundary wiring).

Every cell satisfies the closure identity sum_j |E_j| xi_j = 0, which is
what ties the multi-state admissibility estimates to mesh geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "OutflowBC", "InflowBC", "ReflectingBC", "PeriodicBC", "CallableBC",
    "CellGeom", "Mesh1D", "RectMesh2D",
    "build_uniform_1d", "build_rect_2d", "polygon_cell_geom", "apply_bc",
]


class PeriodicBC:
    kind = "periodic"

    def __repr__(self):
        return "periodic"


class OutflowBC:
    """Zero-order extrapolation: the ghost trace copies the interior trace."""

    kind = "outflow"

    def __repr__(self):
        return "outflow"


@dataclass
class InflowBC:
    """Fixed exterior state; ``state`` is a conserved 8-vector or a callable
    mapping boundary points (n, dim) to states (n, 8)."""

    state: np.ndarray | Callable
    kind = "inflow"

    def __repr__(self):
        return "inflow"


@dataclass
class ReflectingBC:
    """Mirror wall: normal velocity and normal magnetic component are negated,
    tangential components kept (optionally negate the out-of-plane pair)."""

    negate_tangential_b3: bool = False
    kind = "reflecting"

    def __repr__(self):
        return "reflecting"


@dataclass
class CallableBC:
    """Escape hatch for piecewise boundaries: fn(points, interior, axis, sign)
    returns the ghost states."""

    fn: Callable
    kind = "callable"


def apply_bc(bc, interior: np.ndarray, axis: int, sign: int, points=None) -> np.ndarray:
    """Exterior trace states for one boundary edge batch.

    interior: (n, 8) trace states of the boundary cells at the wall;
    axis/sign identify the outward normal (sign * e_axis).
    """
    if isinstance(bc, OutflowBC):
        return interior.copy()
    if isinstance(bc, InflowBC):
        if callable(bc.state):
            return np.asarray(bc.state(points), dtype=float)
        return np.broadcast_to(np.asarray(bc.state, dtype=float), interior.shape).copy()
    if isinstance(bc, ReflectingBC):
        ghost = interior.copy()
        ghost[:, 1 + axis] *= -1.0  # normal momentum
        ghost[:, 4 + axis] *= -1.0  # normal magnetic component
        if bc.negate_tangential_b3:
            ghost[:, 3] *= -1.0
            ghost[:, 6] *= -1.0
        return ghost
    if isinstance(bc, CallableBC):
        return np.asarray(bc.fn(points, interior, axis, sign), dtype=float)
    raise ValueError(f"cannot build ghost states for boundary {bc!r}")


@dataclass
class CellGeom:
    """Polytope cell: area, and per edge (measure, outward unit normal,
    neighbor index or boundary object)."""

    area: float
    measures: np.ndarray
    normals: np.ndarray
    neighbors: list = field(default_factory=list)

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.measures))

    def closure_defect(self) -> float:
        return float(np.linalg.norm(np.sum(self.measures[:, None] * self.normals, axis=0)))

    def validate(self) -> None:
        if self.area <= 0.0 or np.any(self.measures <= 0.0):
            raise ValueError("degenerate cell")
        if np.any(np.abs(np.linalg.norm(self.normals, axis=1) - 1.0) > 1e-13):
            raise ValueError("normals must be unit vectors")
        if self.closure_defect() > 1e-13 * self.perimeter:
            raise ValueError("edge closure identity violated")


def polygon_cell_geom(vertices: np.ndarray) -> CellGeom:
    """CellGeom of a simple CCW polygon given by its vertices (n, 2)."""
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    measures = np.linalg.norm(e, axis=1)
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1) / measures[:, None]
    area = 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    geom = CellGeom(area=area, measures=measures, normals=normals,
                    neighbors=[None] * len(measures))
    geom.validate()
    return geom


@dataclass
class Mesh1D:
    """Partition of [a, b] into cells I_j with boundary conditions at both ends."""

    edges: np.ndarray
    bcs: tuple

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if np.any(np.diff(self.edges) <= 0.0):
            raise ValueError("interfaces must be strictly increasing")
        kinds = [getattr(bc, "kind", None) for bc in self.bcs]
        if ("periodic" in kinds) and kinds != ["periodic", "periodic"]:
            raise ValueError("periodic BC must be used on both ends")

    @property
    def n_cells(self) -> int:
        return self.edges.shape[0] - 1

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def periodic(self) -> bool:
        return self.bcs[0].kind == "periodic"

    def neighbor(self, j: int, side: str):
        """Neighbor cell index across an edge, or the boundary object."""
        if side == "left":
            if j > 0:
                return j - 1
            return self.n_cells - 1 if self.periodic else self.bcs[0]
        if side == "right":
            if j < self.n_cells - 1:
                return j + 1
            return 0 if self.periodic else self.bcs[1]
        raise ValueError(side)

    def cell_geom(self, j: int) -> CellGeom:
        dx = float(self.dx[j])
        return CellGeom(
            area=dx,
            measures=np.array([1.0, 1.0]),
            normals=np.array([[-1.0], [1.0]]),
            neighbors=[self.neighbor(j, "left"), self.neighbor(j, "right")],
        )


def build_uniform_1d(a: float, b: float, m: int, bcs=None) -> Mesh1D:
    if not b > a:
        raise ValueError("domain must have positive length")
    if m < 1:
        raise ValueError("need at least one cell")
    bcs = bcs or (OutflowBC(), OutflowBC())
    return Mesh1D(edges=np.linspace(a, b, m + 1), bcs=bcs)


# Edge ordering of rectangular cells: bottom, right, top, left.
RECT_EDGE_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])


@dataclass
class RectMesh2D:
    """Uniform rectangular mesh with per-side boundary conditions
    (keys: left, right, bottom, top)."""

    xedges: np.ndarray
    yedges: np.ndarray
    bcs: dict

    def __post_init__(self):
        self.xedges = np.asarray(self.xedges, dtype=float)
        self.yedges = np.asarray(self.yedges, dtype=float)
        dxs = np.diff(self.xedges)
        dys = np.diff(self.yedges)
        if np.any(dxs <= 0) or np.any(dys <= 0):
            raise ValueError("interfaces must be strictly increasing")
        if np.ptp(dxs) > 1e-12 * dxs[0] or np.ptp(dys) > 1e-12 * dys[0]:
            raise ValueError("only uniform spacing is supported")
        for lo, hi in (("left", "right"), ("bottom", "top")):
            pl = self.bcs[lo].kind == "periodic"
            ph = self.bcs[hi].kind == "periodic"
            if pl != ph:
                raise ValueError(f"periodic BC must pair {lo}/{hi}")

    @property
    def nx(self) -> int:
        return self.xedges.shape[0] - 1

    @property
    def ny(self) -> int:
        return self.yedges.shape[0] - 1

    @property
    def dx(self) -> float:
        return float(self.xedges[1] - self.xedges[0])

    @property
    def dy(self) -> float:
        return float(self.yedges[1] - self.yedges[0])

    @property
    def xcenters(self) -> np.ndarray:
        return 0.5 * (self.xedges[:-1] + self.xedges[1:])

    @property
    def ycenters(self) -> np.ndarray:
        return 0.5 * (self.yedges[:-1] + self.yedges[1:])

    def periodic_x(self) -> bool:
        return self.bcs["left"].kind == "periodic"

    def periodic_y(self) -> bool:
        return self.bcs["bottom"].kind == "periodic"

    def neighbor(self, ix: int, iy: int, edge: int):
        """Neighbor (ix, iy) across edge 0..3 (bottom/right/top/left) or BC."""
        if edge == 0:
            if iy > 0:
                return (ix, iy - 1)
            return (ix, self.ny - 1) if self.periodic_y() else self.bcs["bottom"]
        if edge == 1:
            if ix < self.nx - 1:
                return (ix + 1, iy)
            return (0, iy) if self.periodic_x() else self.bcs["right"]
        if edge == 2:
            if iy < self.ny - 1:
                return (ix, iy + 1)
            return (ix, 0) if self.periodic_y() else self.bcs["top"]
        if edge == 3:
            if ix > 0:
                return (ix - 1, iy)
            return (self.nx - 1, iy) if self.periodic_x() else self.bcs["left"]
        raise ValueError(edge)

    def cell_geom(self, ix: int, iy: int) -> CellGeom:
        dx, dy = self.dx, self.dy
        return CellGeom(
            area=dx * dy,
            measures=np.array([dx, dy, dx, dy]),
            normals=RECT_EDGE_NORMALS.copy(),
            neighbors=[self.neighbor(ix, iy, e) for e in range(4)],
        )


def build_rect_2d(domain, mx: int, my: int, bcs=None) -> RectMesh2D:
    """domain = ((x0, x1), (y0, y1)); mx*my uniform cells."""
    (x0, x1), (y0, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError("domain must have positive extents")
    if mx < 1 or my < 1:
        raise ValueError("need at least one cell per direction")
    bcs = bcs or {k: OutflowBC() for k in ("left", "right", "bottom", "top")}
    return RectMesh2D(
        xedges=np.linspace(x0, x1, mx + 1),
        yedges=np.linspace(y0, y1, my + 1),
        bcs=bcs,
    )
