import numpy as np
import pytest

from mhdpp import mesh
from mhdpp.mesh import (
    InflowBC, OutflowBC, PeriodicBC, ReflectingBC,
    build_rect_2d, build_uniform_1d, polygon_cell_geom,
)


class TestMesh1D:
    def test_uniform_spacing(self):
        m = build_uniform_1d(0.0, 2.0 * np.pi, 4)
        np.testing.assert_allclose(m.dx, np.pi / 2.0, rtol=1e-15)

    def test_vacuum_tube_resolution(self):
        m = build_uniform_1d(-0.5, 0.5, 200)
        assert m.n_cells == 200
        assert m.centers[0] == pytest.approx(-0.5 + 0.0025)

    def test_single_cell(self):
        m = build_uniform_1d(0.0, 1.0, 1)
        geom = m.cell_geom(0)
        assert geom.neighbors[0].kind == "outflow"
        assert geom.neighbors[1].kind == "outflow"
        geom.validate()

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            build_uniform_1d(1.0, 0.0, 10)

    def test_periodic_neighbors_involution(self):
        m = build_uniform_1d(0.0, 1.0, 7, (PeriodicBC(), PeriodicBC()))
        assert m.neighbor(6, "right") == 0
        assert m.neighbor(0, "left") == 6
        for j in range(m.n_cells):
            r = m.neighbor(j, "right")
            assert m.neighbor(r, "left") == j

    def test_mixed_periodic_rejected(self):
        with pytest.raises(ValueError):
            build_uniform_1d(0.0, 1.0, 4, (PeriodicBC(), OutflowBC()))


class TestRectMesh2D:
    def test_blast_resolution(self):
        m = build_rect_2d(((-0.5, 0.5), (-0.5, 0.5)), 320, 320)
        assert (m.nx, m.ny) == (320, 320)
        assert m.dx == pytest.approx(1.0 / 320.0)

    def test_unit_square_geom(self):
        m = build_rect_2d(((0.0, 1.0), (0.0, 1.0)), 1, 1)
        geom = m.cell_geom(0, 0)
        assert geom.area == pytest.approx(1.0)
        np.testing.assert_allclose(geom.measures, 1.0)
        np.testing.assert_array_equal(
            geom.normals, [[0, -1], [1, 0], [0, 1], [-1, 0]]
        )
        geom.validate()

    def test_jet_mesh(self):
        m = build_rect_2d(((0.0, 0.5), (0.0, 1.5)), 200, 600)
        assert (m.nx, m.ny) == (200, 600)
        assert m.dx == pytest.approx(m.dy)

    def test_closure_and_perimeter(self):
        m = build_rect_2d(((0.0, 3.0), (0.0, 1.0)), 6, 4)
        for ix in (0, 3, 5):
            for iy in (0, 2):
                geom = m.cell_geom(ix, iy)
                assert geom.closure_defect() <= 1e-13 * geom.perimeter
                assert geom.area == pytest.approx(m.dx * m.dy, rel=1e-14)
                assert geom.perimeter == pytest.approx(2 * (m.dx + m.dy), rel=1e-14)

    def test_periodic_wraparound(self):
        bcs = {k: PeriodicBC() for k in ("left", "right", "bottom", "top")}
        m = build_rect_2d(((0.0, 1.0), (0.0, 1.0)), 4, 3, bcs)
        assert m.neighbor(3, 1, 1) == (0, 1)
        assert m.neighbor(0, 1, 3) == (3, 1)
        assert m.neighbor(2, 2, 2) == (2, 0)
        assert m.neighbor(2, 0, 0) == (2, 2)

    def test_bad_periodic_pairing(self):
        bcs = {"left": PeriodicBC(), "right": OutflowBC(),
               "bottom": OutflowBC(), "top": OutflowBC()}
        with pytest.raises(ValueError):
            build_rect_2d(((0.0, 1.0), (0.0, 1.0)), 2, 2, bcs)


class TestPolygonGeom:
    def test_triangle(self):
        geom = polygon_cell_geom(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        assert geom.area == pytest.approx(0.5)
        assert geom.closure_defect() <= 1e-14 * geom.perimeter

    def test_random_convex_polygons(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            n = int(rng.integers(3, 8))
            ang = np.sort(rng.uniform(0, 2 * np.pi, n))
            if np.min(np.diff(ang)) < 1e-2:
                continue
            r = rng.uniform(0.5, 2.0)
            verts = r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            geom = polygon_cell_geom(verts)
            assert geom.area > 0
            assert geom.closure_defect() <= 1e-13 * geom.perimeter


class TestBoundaryGhosts:
    def test_outflow_copies_interior(self):
        interior = np.arange(16, dtype=float).reshape(2, 8)
        ghost = mesh.apply_bc(OutflowBC(), interior, axis=0, sign=1)
        np.testing.assert_array_equal(ghost, interior)
        ghost[0, 0] = -1.0
        assert interior[0, 0] == 0.0  # independent copy

    def test_inflow_fixed_state(self):
        stateU = np.linspace(1, 8, 8)
        interior = np.zeros((3, 8))
        ghost = mesh.apply_bc(InflowBC(stateU), interior, axis=1, sign=-1)
        np.testing.assert_array_equal(ghost, np.tile(stateU, (3, 1)))

    def test_inflow_callable(self):
        def profile(points):
            out = np.zeros((len(points), 8))
            out[:, 0] = points[:, 0]
            return out

        pts = np.array([[0.25, 0.0], [0.75, 0.0]])
        ghost = mesh.apply_bc(InflowBC(profile), np.zeros((2, 8)), 1, -1, points=pts)
        np.testing.assert_array_equal(ghost[:, 0], [0.25, 0.75])

    def test_reflecting_negates_normal_components(self):
        interior = np.arange(1, 17, dtype=float).reshape(2, 8)
        ghost = mesh.apply_bc(ReflectingBC(), interior, axis=0, sign=-1)
        np.testing.assert_array_equal(ghost[:, 1], -interior[:, 1])  # m1
        np.testing.assert_array_equal(ghost[:, 4], -interior[:, 4])  # B1
        for c in (0, 2, 3, 5, 6, 7):
            np.testing.assert_array_equal(ghost[:, c], interior[:, c])

    def test_reflecting_optional_b3_flip(self):
        interior = np.ones((1, 8))
        ghost = mesh.apply_bc(ReflectingBC(negate_tangential_b3=True), interior, 0, 1)
        assert ghost[0, 3] == -1.0 and ghost[0, 6] == -1.0
