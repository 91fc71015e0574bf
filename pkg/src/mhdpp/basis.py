"""Modal bases, quadrature rules and DG field containers.

Reference cells are the unit interval [-1/2, 1/2] and the unit square
[-1/2, 1/2]^2 with the normalized measure (1/|K|) dx, so quadrature weights
sum to one and the mode-0 coefficient of every expansion is the cell
average.  Scalar bases are scaled Legendre polynomials phi_n = sqrt(2n+1)
P_n(2x) (orthonormal in the normalized inner product); the 2D scalar basis
is the total-degree subset of their tensor products.

The in-plane magnetic field (B1, B2) of 2D fields lives in the locally
divergence-free space {(B1, B2) in (P^k)^2 : dB1/dx + dB2/dy = 0}.  A basis
is built from rotated gradients (stream-function curls)

    (B1, B2) = (d psi / dy, -d psi / dx),   psi in P^{k+1} \\ constants,

which span the whole constrained space (dimension (k+2)(k+3)/2 - 1), then
orthonormalized per cell-shape via a Cholesky factor of the Gram matrix.
The two constant fields are kept first and snapped exact, so the first two
coefficients are the cell averages of B1 and B2.

Cell averages decompose over a special positive quadrature whose node set
contains all interface Gauss points; on rectangles it mixes Gauss points in
one direction with Gauss-Lobatto in the other, each family weighted by
dx/(dx+dy) or dy/(dx+dy).  On triangles the edge weights are
(2/3) what_1 w_q and the interior weights are recovered by moment matching
(with positivity checked at build time).  These decompositions feed the
pointwise limiter and the provable CFL conditions; they are never used to
integrate anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import legendre as npleg

__all__ = [
    "QuadRule", "CompositeQuad", "ScalarBasis1D", "ScalarBasis2D",
    "LdfVectorBasis", "Dg1dField", "Dg2dField",
    "gauss_rule", "gauss_lobatto_rule", "rect_composite_quad",
    "tri_composite_quad", "scalar_basis_1d", "scalar_basis_2d", "ldf_basis",
    "project_initial", "evaluate", "divergence_B_at",
    "HYDRO_COMPS", "B3_COMP", "BXY_COMPS",
]

# Conserved components carried by each coefficient block of 2D fields.
HYDRO_COMPS = np.array([0, 1, 2, 3, 7])  # rho, m, E
BXY_COMPS = np.array([4, 5])
B3_COMP = 6


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_rule(q: int) -> QuadRule:
    """q-point Gauss rule on [-1/2, 1/2], weights summing to 1."""
    if q < 1:
        raise ValueError("need at least one Gauss point")
    x, w = npleg.leggauss(q)
    return QuadRule(nodes=x / 2.0, weights=w / 2.0)


@lru_cache(maxsize=None)
def gauss_lobatto_rule(L: int) -> QuadRule:
    """L-point Gauss-Lobatto rule on [-1/2, 1/2]; endpoint weight 1/(L(L-1))."""
    if L < 2:
        raise ValueError("Gauss-Lobatto needs at least two points")
    if L == 2:
        nodes = np.array([-1.0, 1.0])
    else:
        inner = npleg.Legendre.basis(L - 1).deriv().roots()
        nodes = np.concatenate([[-1.0], np.sort(inner.real), [1.0]])
    pl = npleg.Legendre.basis(L - 1)(nodes)
    weights = 2.0 / (L * (L - 1) * pl**2)
    return QuadRule(nodes=nodes / 2.0, weights=weights / 2.0)


class ScalarBasis1D:
    """Orthonormal modal basis phi_n(x) = sqrt(2n+1) P_n(2x), n <= k."""

    def __init__(self, k: int):
        self.k = k
        self.n_modes = k + 1

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.empty(points.shape + (self.n_modes,))
        for n in range(self.n_modes):
            coef = np.zeros(n + 1)
            coef[n] = np.sqrt(2.0 * n + 1.0)
            out[..., n] = npleg.legval(2.0 * points, coef)
        return out

    def derivs(self, points: np.ndarray) -> np.ndarray:
        """d phi_n / dx on the reference cell (chain factor 2 included)."""
        points = np.asarray(points, dtype=float)
        out = np.empty(points.shape + (self.n_modes,))
        for n in range(self.n_modes):
            coef = np.zeros(n + 1)
            coef[n] = np.sqrt(2.0 * n + 1.0)
            out[..., n] = 2.0 * npleg.legval(2.0 * points, npleg.legder(coef))
        return out


@lru_cache(maxsize=None)
def scalar_basis_1d(k: int) -> ScalarBasis1D:
    return ScalarBasis1D(k)


@lru_cache(maxsize=None)
def edge_values_1d(k: int) -> tuple[np.ndarray, np.ndarray]:
    """(values at +1/2, values at -1/2) of the 1D basis, each (k+1,)."""
    sb = scalar_basis_1d(k)
    return sb.values(np.array([0.5]))[0], sb.values(np.array([-0.5]))[0]


@lru_cache(maxsize=None)
def volume_tables_1d(k: int):
    """(weights, values, derivatives) of the (k+1)-point Gauss rule."""
    sb = scalar_basis_1d(k)
    gq = gauss_rule(k + 1)
    return gq.weights, sb.values(gq.nodes), sb.derivs(gq.nodes)


@lru_cache(maxsize=None)
def lobatto_values_1d(k: int) -> tuple[np.ndarray, np.ndarray]:
    """(nodes, basis values) at the L Gauss-Lobatto limiter points."""
    L = max(2, -(-(k + 3) // 2))
    rule = gauss_lobatto_rule(L)
    return rule.nodes, scalar_basis_1d(k).values(rule.nodes)


@lru_cache(maxsize=None)
def limit_tables_2d(k: int, dx: float, dy: float):
    """(scalar values, LDF values) at the composite-quadrature point set."""
    cq = rect_composite_quad(k, dx, dy)
    pts = cq.all_nodes
    return scalar_basis_2d(k).values(pts), ldf_basis(k, dx, dy).values(pts)


@lru_cache(maxsize=None)
def edge_mid_tables_2d(k: int, dx: float, dy: float):
    """(scalar values, LDF values) at the four edge midpoints
    (right, left, top, bottom)."""
    mid = np.array([[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]])
    return scalar_basis_2d(k).values(mid), ldf_basis(k, dx, dy).values(mid)


class ScalarBasis2D:
    """Total-degree P^k basis phi_a(x) phi_b(y), a + b <= k, mean mode first."""

    def __init__(self, k: int):
        self.k = k
        self.pairs = [(deg - b, b) for deg in range(k + 1) for b in range(deg + 1)]
        self.n_modes = len(self.pairs)
        self._line = ScalarBasis1D(k)

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        vx = self._line.values(points[..., 0])
        vy = self._line.values(points[..., 1])
        return np.stack([vx[..., a] * vy[..., b] for a, b in self.pairs], axis=-1)

    def grads(self, points: np.ndarray) -> np.ndarray:
        """Reference-coordinate gradients, shape (..., n_modes, 2)."""
        points = np.asarray(points, dtype=float)
        vx = self._line.values(points[..., 0])
        vy = self._line.values(points[..., 1])
        dx = self._line.derivs(points[..., 0])
        dy = self._line.derivs(points[..., 1])
        gx = np.stack([dx[..., a] * vy[..., b] for a, b in self.pairs], axis=-1)
        gy = np.stack([vx[..., a] * dy[..., b] for a, b in self.pairs], axis=-1)
        return np.stack([gx, gy], axis=-1)


@lru_cache(maxsize=None)
def scalar_basis_2d(k: int) -> ScalarBasis2D:
    return ScalarBasis2D(k)


class LdfVectorBasis:
    """Orthonormal basis of the locally divergence-free (B1, B2) space.

    Each member is stored by its exact expansion in the 2D scalar basis:
    component_coeffs[a, c, :] are the scalar-mode coefficients of component
    c of basis member a.  Values are physical field values as functions of
    reference coordinates; the physical divergence of every member vanishes
    identically.
    """

    def __init__(self, k: int, dx: float, dy: float):
        self.k = k
        self.dx = float(dx)
        self.dy = float(dy)
        sb = scalar_basis_2d(k)
        self.n_modes = (k + 2) * (k + 3) // 2 - 1
        ns = sb.n_modes

        # 1D derivative-projection matrix D[b, e] = int phi_b' phi_e.
        line_hi = ScalarBasis1D(k + 1)
        line_lo = ScalarBasis1D(k)
        gq = gauss_rule(k + 2)
        vals_lo = line_lo.values(gq.nodes)            # (q, k+1)
        ders_hi = line_hi.derivs(gq.nodes)            # (q, k+2)
        D = np.einsum("qb,qe,q->be", ders_hi, vals_lo, gq.weights)

        # Stream functions phi_a(x) phi_b(y), 1 <= a+b <= k+1, constants first
        # via (0,1) then -(1,0); remainder by total degree.
        streams = [(0, 1, 1.0), (1, 0, -1.0)]
        for deg in range(2, k + 2):
            for b in range(deg + 1):
                streams.append((deg - b, b, 1.0))
        if len(streams) != self.n_modes:
            raise AssertionError("stream-function count mismatch")

        mode_index = {pair: i for i, pair in enumerate(sb.pairs)}
        raw = np.zeros((self.n_modes, 2, ns))
        for r, (a, b, sgn) in enumerate(streams):
            # curl: ((1/dy) phi_a(x) phi_b'(y), -(1/dx) phi_a'(x) phi_b(y))
            if b >= 1 and a <= k:
                for e in range(k + 1):
                    if a + e <= k and D[b, e] != 0.0:
                        raw[r, 0, mode_index[(a, e)]] += sgn * D[b, e] / self.dy
            if a >= 1 and b <= k:
                for e in range(k + 1):
                    if e + b <= k and D[a, e] != 0.0:
                        raw[r, 1, mode_index[(e, b)]] -= sgn * D[a, e] / self.dx

        gram = np.einsum("rcs,qcs->rq", raw, raw)
        L = np.linalg.cholesky(gram)
        coeffs = np.linalg.solve(L, raw.reshape(self.n_modes, -1)).reshape(raw.shape)
        # Snap the constant members and de-noise mean modes of the rest.
        coeffs[0] = 0.0
        coeffs[0, 0, 0] = 1.0
        coeffs[1] = 0.0
        coeffs[1, 1, 0] = 1.0
        coeffs[2:, :, 0] = 0.0
        self.component_coeffs = coeffs
        self._sb = sb

    def values(self, points: np.ndarray) -> np.ndarray:
        """Field values, shape (..., n_modes, 2)."""
        V = self._sb.values(points)
        return np.einsum("...s,rcs->...rc", V, self.component_coeffs)

    def divergence(self, points: np.ndarray) -> np.ndarray:
        """Physical divergence of each member at the points (~0 by design)."""
        G = self._sb.grads(points)  # (..., ns, 2)
        return np.einsum(
            "...s,rs->...r", G[..., 0] / self.dx, self.component_coeffs[:, 0, :]
        ) + np.einsum(
            "...s,rs->...r", G[..., 1] / self.dy, self.component_coeffs[:, 1, :]
        )


@lru_cache(maxsize=None)
def ldf_basis(k: int, dx: float, dy: float) -> LdfVectorBasis:
    return LdfVectorBasis(k, dx, dy)


@dataclass(frozen=True)
class CompositeQuad:
    """Positive decomposition of the cell average: boundary nodes grouped by
    edge plus optional interior nodes.  ``geometry`` is "rect" (nodes in
    reference-square coordinates) or "tri" (barycentric)."""

    geometry: str
    boundary_nodes: np.ndarray    # (n_edges, Q, dim)
    boundary_weights: np.ndarray  # (n_edges, Q)
    interior_nodes: np.ndarray    # (n_int, dim)
    interior_weights: np.ndarray  # (n_int,)

    @property
    def all_nodes(self) -> np.ndarray:
        flat = self.boundary_nodes.reshape(-1, self.boundary_nodes.shape[-1])
        if self.interior_nodes.size:
            return np.concatenate([flat, self.interior_nodes], axis=0)
        return flat

    @property
    def all_weights(self) -> np.ndarray:
        return np.concatenate(
            [self.boundary_weights.ravel(), self.interior_weights]
        )


@lru_cache(maxsize=None)
def rect_composite_quad(k: int, dx: float, dy: float) -> CompositeQuad:
    """Rectangular-cell decomposition: Gauss x Gauss-Lobatto tensor mix."""
    if k < 0:
        raise ValueError("polynomial degree must be nonnegative")
    L = max(2, -(-(k + 3) // 2))
    Q = k + 1
    gq = gauss_rule(Q)
    gl = gauss_lobatto_rule(L)
    wx = dx / (dx + dy)
    wy = dy / (dx + dy)
    w1 = gl.weights[0]

    # Edge order: bottom, right, top, left.  Gauss nodes run along each edge.
    bnodes = np.empty((4, Q, 2))
    bweights = np.empty((4, Q))
    bnodes[0] = np.stack([gq.nodes, np.full(Q, -0.5)], axis=1)
    bnodes[2] = np.stack([gq.nodes, np.full(Q, 0.5)], axis=1)
    bnodes[1] = np.stack([np.full(Q, 0.5), gq.nodes], axis=1)
    bnodes[3] = np.stack([np.full(Q, -0.5), gq.nodes], axis=1)
    bweights[0] = bweights[2] = wx * w1 * gq.weights
    bweights[1] = bweights[3] = wy * w1 * gq.weights

    inter_nodes = []
    inter_weights = []
    for mu in range(1, L - 1):
        for q in range(Q):
            inter_nodes.append([gq.nodes[q], gl.nodes[mu]])
            inter_weights.append(wx * gl.weights[mu] * gq.weights[q])
            inter_nodes.append([gl.nodes[mu], gq.nodes[q]])
            inter_weights.append(wy * gl.weights[mu] * gq.weights[q])
    interior_nodes = np.array(inter_nodes).reshape(-1, 2)
    interior_weights = np.array(inter_weights)
    return CompositeQuad(
        geometry="rect",
        boundary_nodes=bnodes,
        boundary_weights=bweights,
        interior_nodes=interior_nodes,
        interior_weights=interior_weights,
    )


def _tri_monomial_integral(alpha: int, beta: int) -> float:
    """(1/|T|) int over the unit triangle of lam1^alpha lam2^beta."""
    return 2.0 * factorial(alpha) * factorial(beta) / factorial(alpha + beta + 2)


@lru_cache(maxsize=None)
def tri_composite_quad(k: int) -> CompositeQuad:
    """Triangle decomposition with edge weights (2/3) what_1 w_q; interior
    weights are recovered per symmetric orbit by moment matching."""
    if k < 0:
        raise ValueError("polynomial degree must be nonnegative")
    L = max(2, -(-(k + 3) // 2))
    Q = k + 1
    gq = gauss_rule(Q)
    gl = gauss_lobatto_rule(L)
    w1 = gl.weights[0]

    # Edge j carries the Gauss points of the side lam_j = 0.
    bnodes = np.zeros((3, Q, 3))
    for j in range(3):
        bnodes[j, :, (j + 1) % 3] = 0.5 + gq.nodes
        bnodes[j, :, (j + 2) % 3] = 0.5 - gq.nodes
    bweights = np.tile(2.0 / 3.0 * w1 * gq.weights, (3, 1))

    # Interior points: cyclic orbits of the family construction.
    orbit_points = []  # (n_orbits, 3 points, 3 barycentric)
    for mu in range(1, L - 1):
        for q in range(Q):
            A = 0.5 + gq.nodes[q]
            B = (0.5 + gl.nodes[mu] ) * (0.5 - gq.nodes[q])
            C = (0.5 - gl.nodes[mu]) * (0.5 - gq.nodes[q])
            orbit_points.append([[A, B, C], [C, A, B], [B, C, A]])
    monos = [(a, b) for deg in range(k + 1) for a in range(deg + 1) for b in [deg - a]]
    if orbit_points:
        pts = np.array(orbit_points)  # (no, 3, 3)
        A_mat = np.empty((len(monos), len(orbit_points)))
        rhs = np.empty(len(monos))
        for r, (alpha, beta) in enumerate(monos):
            vals = pts[:, :, 0] ** alpha * pts[:, :, 1] ** beta
            A_mat[r] = np.sum(vals, axis=1)
            bvals = bnodes[:, :, 0] ** alpha * bnodes[:, :, 1] ** beta
            rhs[r] = _tri_monomial_integral(alpha, beta) - np.sum(bweights * bvals)
        w_orb, *_ = np.linalg.lstsq(A_mat, rhs, rcond=None)
        resid = np.max(np.abs(A_mat @ w_orb - rhs))
        if resid > 1e-12:
            raise ValueError(f"triangle quadrature moment matching failed ({resid:.2e})")
        if np.any(w_orb <= 0.0):
            raise ValueError(f"nonpositive interior triangle weights: {w_orb}")
        interior_nodes = pts.reshape(-1, 3)
        interior_weights = np.repeat(w_orb, 3)
    else:
        # No interior points (k <= 1): boundary weights must already be exact.
        for alpha, beta in monos:
            bvals = bnodes[:, :, 0] ** alpha * bnodes[:, :, 1] ** beta
            err = abs(_tri_monomial_integral(alpha, beta) - np.sum(bweights * bvals))
            if err > 1e-13:
                raise ValueError("boundary-only triangle rule is not exact")
        interior_nodes = np.empty((0, 3))
        interior_weights = np.empty(0)
    return CompositeQuad(
        geometry="tri",
        boundary_nodes=bnodes,
        boundary_weights=bweights,
        interior_nodes=interior_nodes,
        interior_weights=interior_weights,
    )


# ---------------------------------------------------------------------------
# DG fields
# ---------------------------------------------------------------------------


@dataclass
class Dg1dField:
    """Per-cell modal coefficients of all eight components, (M, k+1, 8)."""

    coeffs: np.ndarray

    @property
    def k(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def averages(self) -> np.ndarray:
        return self.coeffs[:, 0, :]

    def copy(self) -> "Dg1dField":
        return Dg1dField(self.coeffs.copy())

    def __add__(self, other: "Dg1dField") -> "Dg1dField":
        return Dg1dField(self.coeffs + other.coeffs)

    def __rmul__(self, a: float) -> "Dg1dField":
        return Dg1dField(a * self.coeffs)


@dataclass
class Dg2dField:
    """2D DG coefficients: hydro (rho, m, E) and B3 in the scalar basis,
    (B1, B2) in the locally divergence-free basis."""

    hydro: np.ndarray  # (nx, ny, ns, 5)
    bxy: np.ndarray    # (nx, ny, n_ldf)
    b3: np.ndarray     # (nx, ny, ns)
    k: int
    dx: float
    dy: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.hydro.shape[0], self.hydro.shape[1]

    @property
    def averages(self) -> np.ndarray:
        nx, ny = self.shape
        U = np.empty((nx, ny, 8))
        U[..., HYDRO_COMPS] = self.hydro[..., 0, :]
        U[..., 4] = self.bxy[..., 0]
        U[..., 5] = self.bxy[..., 1]
        U[..., 6] = self.b3[..., 0]
        return U

    def copy(self) -> "Dg2dField":
        return Dg2dField(self.hydro.copy(), self.bxy.copy(), self.b3.copy(),
                         self.k, self.dx, self.dy)

    def __add__(self, other: "Dg2dField") -> "Dg2dField":
        return Dg2dField(self.hydro + other.hydro, self.bxy + other.bxy,
                         self.b3 + other.b3, self.k, self.dx, self.dy)

    def __rmul__(self, a: float) -> "Dg2dField":
        return Dg2dField(a * self.hydro, a * self.bxy, a * self.b3,
                         self.k, self.dx, self.dy)


def _eval_2d_tables(field: Dg2dField, V: np.ndarray, VB: np.ndarray) -> np.ndarray:
    """Evaluate a 2D field given scalar values V (p, ns) and LDF values
    VB (p, n_ldf, 2); returns (nx, ny, p, 8)."""
    nx, ny = field.shape
    npts = V.shape[0]
    U = np.empty((nx, ny, npts, 8))
    U[..., HYDRO_COMPS] = np.moveaxis(np.tensordot(field.hydro, V, axes=([2], [1])), 2, 3)
    U[..., 4:6] = np.tensordot(field.bxy, VB, axes=([2], [1]))
    U[..., 6] = np.tensordot(field.b3, V, axes=([2], [1]))
    return U


def evaluate(field, cell, point):
    """Pointwise solution value inside one cell (reference coordinates)."""
    if isinstance(field, Dg1dField):
        single = np.ndim(point) == 0
        V = scalar_basis_1d(field.k).values(np.atleast_1d(point))
        out = np.einsum("nc,pn->pc", field.coeffs[cell], V)
        return out[0] if single else out
    ix, iy = cell
    single = np.ndim(point) == 1
    pt = np.atleast_2d(point)
    V = scalar_basis_2d(field.k).values(pt)
    VB = ldf_basis(field.k, field.dx, field.dy).values(pt)
    U = np.empty((pt.shape[0], 8))
    U[:, HYDRO_COMPS] = V @ field.hydro[ix, iy]
    U[:, 4] = VB[..., 0] @ field.bxy[ix, iy]
    U[:, 5] = VB[..., 1] @ field.bxy[ix, iy]
    U[:, 6] = V @ field.b3[ix, iy]
    return U[0] if single else U


def divergence_B_at(field: Dg2dField, cell, point) -> float:
    """Pointwise in-plane divergence of B inside a cell; ~0 for LDF fields."""
    ix, iy = cell
    pt = np.atleast_2d(point)
    div = ldf_basis(field.k, field.dx, field.dy).divergence(pt)
    return float((div @ field.bxy[ix, iy]).squeeze())


def project_initial(fn, mesh_obj, k: int):
    """Local L2-projection of conserved initial data onto the DG space.

    1D meshes take fn(x) -> (..., 8); 2D meshes take fn(x, y) -> (..., 8).
    Reproduces polynomials of degree <= k (and LDF vector polynomials)
    exactly; cell averages are the quadrature means of the data.
    """
    from .mesh import Mesh1D, RectMesh2D

    if isinstance(mesh_obj, Mesh1D):
        sb = scalar_basis_1d(k)
        gq = gauss_rule(k + 3)
        x = mesh_obj.centers[:, None] + mesh_obj.dx[:, None] * gq.nodes[None, :]
        U = np.asarray(fn(x), dtype=float)
        V = sb.values(gq.nodes)
        coeffs = np.einsum("mqc,qn,q->mnc", U, V, gq.weights)
        return Dg1dField(coeffs=coeffs)
    if isinstance(mesh_obj, RectMesh2D):
        sb = scalar_basis_2d(k)
        lb = ldf_basis(k, mesh_obj.dx, mesh_obj.dy)
        gq = gauss_rule(k + 3)
        xg, yg = np.meshgrid(gq.nodes, gq.nodes, indexing="ij")
        pts = np.stack([xg.ravel(), yg.ravel()], axis=1)
        w = np.outer(gq.weights, gq.weights).ravel()
        X = mesh_obj.xcenters[:, None, None] + mesh_obj.dx * pts[None, None, :, 0]
        Y = mesh_obj.ycenters[None, :, None] + mesh_obj.dy * pts[None, None, :, 1]
        X, Y = np.broadcast_arrays(X, Y)
        U = np.asarray(fn(X, Y), dtype=float)
        V = sb.values(pts)
        VB = lb.values(pts)
        hydro = np.einsum("xypc,pn,p->xync", U[..., HYDRO_COMPS], V, w)
        b3 = np.einsum("xyp,pn,p->xyn", U[..., B3_COMP], V, w)
        bxy = np.einsum("xypc,pnc,p->xyn", U[..., BXY_COMPS], VB, w)
        return Dg2dField(hydro=hydro, bxy=bxy, b3=b3, k=k,
                         dx=mesh_obj.dx, dy=mesh_obj.dy)
    raise TypeError(f"unsupported mesh type {type(mesh_obj)!r}")
