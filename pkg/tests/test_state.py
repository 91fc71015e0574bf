import numpy as np
import pytest

from conftest import random_admissible, random_star
from mhdpp import state
from mhdpp.state import IdealEos, StarArgs


def make_U(rho, m, B, E):
    return np.array([rho, *m, *B, E], dtype=float)


class TestInternalEnergy:
    def test_static_state(self):
        U = make_U(1.0, (0, 0, 0), (0, 0, 0), 2.5)
        assert state.internal_energy_density(U) == 2.5

    def test_kinetic_and_magnetic_subtracted(self):
        # E - (|m|^2/rho + |B|^2)/2 = 3 - (4/2 + 1)/2 = 1.5, cross-checked
        # below against the primitive round trip.
        U = make_U(2.0, (2, 0, 0), (1, 0, 0), 3.0)
        assert state.internal_energy_density(U) == pytest.approx(1.5, rel=1e-15)
        eos = IdealEos(1.4)
        W = state.cons_to_prim(U, eos)
        assert W[state.PPRE] == pytest.approx(0.4 * 1.5, rel=1e-14)

    def test_boundary_state_is_zero(self):
        U = make_U(1.0, (1, 0, 0), (0, 0, 0), 0.5)
        assert state.internal_energy_density(U) == 0.0

    def test_nonpositive_rho_raises(self):
        with pytest.raises(ValueError):
            state.internal_energy_density(make_U(0.0, (0, 0, 0), (0, 0, 0), 1.0))


class TestAdmissibility:
    def test_vacuum_tube_left_state(self):
        eos = IdealEos(5.0 / 3.0)
        W = np.array([1e-12, 0, 0, 0, 1e-12, 0, 0, 0])
        U = state.prim_to_cons(W, eos)
        assert state.is_admissible(U)

    def test_negative_internal_energy(self):
        assert not state.is_admissible(make_U(1.0, (2, 0, 0), (0, 0, 0), 1.0))

    def test_energy_threshold(self):
        U = make_U(1.0, (0, 0, 0), (0, 0, 0), 1.0)
        assert state.is_admissible(U)
        assert not state.is_admissible(U, eps_e=2.0)

    def test_boundary_strict_vs_floored(self):
        U = make_U(1.0, (1, 0, 0), (0, 0, 0), 0.5)  # calE = 0 exactly
        assert not state.is_admissible(U)
        assert state.is_admissible(U, eps_rho=1.0, eps_e=0.0) == False  # noqa: E712

    def test_total_on_garbage(self):
        assert not state.is_admissible(make_U(-1.0, (0, 0, 0), (0, 0, 0), 1.0))


class TestThetaAndGstar:
    def test_minimizer_collapses_theta(self):
        U = make_U(2.0, (2, 4, 0), (1, 0, 3), 40.0)
        rho = U[0]
        v = U[1:4] / rho
        th = state.theta_vector(U, StarArgs(v_star=v, B_star=U[4:7]))
        assert np.all(th[:6] == 0.0)
        assert th[6] ** 2 == pytest.approx(state.internal_energy_density(U), rel=1e-14)

    def test_hand_value(self):
        # rho=2, v=0, B=0, e=1 and B*=(2,0,0):
        # theta = ((-2,0,0)/sqrt2, 0, sqrt(2*2)/sqrt2) so |theta|^2 = 2 + 2 = 4,
        # matching gstar = E + |B*|^2/2 = 2 + 2 evaluated independently.
        U = make_U(2.0, (0, 0, 0), (0, 0, 0), 2.0)
        s = StarArgs(v_star=np.zeros(3), B_star=np.array([2.0, 0, 0]))
        th = state.theta_vector(U, s)
        assert np.sum(th * th) == pytest.approx(4.0, rel=1e-14)
        assert state.gstar_functional(U, s) == pytest.approx(4.0, rel=1e-14)

    def test_identity_theta_norm_equals_gstar(self):
        rng = np.random.default_rng(11)
        U = random_admissible(rng, 1000)
        s = random_star(rng, 1000)
        th = state.theta_vector(U, s)
        lhs = np.sum(th * th, axis=-1)
        rhs = state.gstar_functional(U, s)
        scale = np.maximum(1.0, np.abs(rhs))
        assert np.max(np.abs(lhs - rhs) / scale) < 1e-12

    def test_gstar_minimum_is_internal_energy(self):
        rng = np.random.default_rng(12)
        U = random_admissible(rng, 100)
        calE = state.internal_energy_density(U)
        for _ in range(100):
            s = random_star(rng, 100)
            g = state.gstar_functional(U, s)
            assert np.all(g >= calE * (1.0 - 1e-12) - 1e-13)
        v = U[:, state.MOM] / U[:, [state.RHO]]
        g_min = state.gstar_functional(U, StarArgs(v_star=v, B_star=U[:, state.MAG]))
        # Both sides cancel terms of size |E|; compare at that scale.
        scale = np.maximum(1.0, np.abs(U[:, state.ENE]))
        assert np.max(np.abs(g_min - calE) / scale) < 1e-13

    def test_gstar_negative_for_inadmissible(self):
        U = make_U(1.0, (2, 0, 0), (0, 0, 0), 1.0)  # calE = -1
        v = U[1:4]
        assert state.gstar_functional(U, StarArgs(v_star=v, B_star=U[4:7])) < 0.0


class TestConvexity:
    def test_lemma_convex_combination(self):
        # lambda*U1 + (1-lambda)*U0 stays admissible for U1 admissible and
        # U0 in the closure (here: boundary states with calE == 0).
        rng = np.random.default_rng(13)
        n = 10_000
        U1 = random_admissible(rng, n)
        U0 = random_admissible(rng, n)
        # Push a third of the U0 samples onto the calE = 0 boundary.
        onb = rng.random(n) < 0.33
        calE0 = state.internal_energy_density(U0)
        U0[onb, state.ENE] -= calE0[onb]
        lam = rng.uniform(0.0, 1.0, n)
        lam = np.where(lam == 0.0, 0.5, lam)  # lambda in (0, 1]
        U = lam[:, None] * U1 + (1.0 - lam[:, None]) * U0
        rho = U[:, state.RHO]
        calE = state.internal_energy_density(U)
        assert np.all(rho > 0.0)
        scale = np.maximum(1.0, np.abs(U[:, state.ENE]))
        assert np.all(calE > -1e-12 * scale)


class TestConversions:
    def test_static_gas(self):
        eos = IdealEos(1.4)
        W = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0])
        U = state.prim_to_cons(W, eos)
        assert U[state.ENE] == pytest.approx(2.5, rel=1e-15)

    def test_blast_ambient_energy(self):
        eos = IdealEos(1.4)
        Bx = 100.0 / np.sqrt(4.0 * np.pi)
        W = np.array([1.0, 0, 0, 0, 0.1, Bx, 0, 0])
        U = state.prim_to_cons(W, eos)
        assert U[state.ENE] == pytest.approx(0.25 + Bx**2 / 2.0, rel=1e-14)

    def test_round_trip(self):
        rng = np.random.default_rng(14)
        eos = IdealEos(5.0 / 3.0)
        U = random_admissible(rng, 1000)
        U2 = state.prim_to_cons(state.cons_to_prim(U, eos), eos)
        scale = np.maximum.reduce(np.abs(U), axis=-1, keepdims=True)
        assert np.max(np.abs(U2 - U) / scale) < 1e-13
        W = state.cons_to_prim(U, eos)
        W2 = state.cons_to_prim(state.prim_to_cons(W, eos), eos)
        wscale = np.maximum.reduce(np.abs(W), axis=-1, keepdims=True)
        assert np.max(np.abs(W2 - W) / wscale) < 1e-13


class TestPlasmaBeta:
    def test_leblanc_right_state(self):
        W = np.array([0.001, 0, 0, 0, 1.0, 0, 5000.0, 5000.0])
        assert state.plasma_beta(W) == pytest.approx(4e-8, rel=1e-12)

    def test_blast_ambient(self):
        Bx = 100.0 / np.sqrt(4.0 * np.pi)
        W = np.array([1.0, 0, 0, 0, 0.1, Bx, 0, 0])
        expected = 0.2 * 4.0 * np.pi / 1e4
        assert state.plasma_beta(W) == pytest.approx(expected, rel=1e-12)
        assert state.plasma_beta(W) == pytest.approx(2.513e-4, rel=2e-4)

    def test_unit_beta_and_vanishing_field(self):
        W = np.array([1.0, 0, 0, 0, 1.0, np.sqrt(2.0), 0, 0])
        assert state.plasma_beta(W) == pytest.approx(1.0, rel=1e-14)
        W0 = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0])
        assert state.plasma_beta(W0) == np.inf


class TestEos:
    def test_general_eos_contract(self):
        eos = state.GeneralEos(lambda rho, e: 0.4 * rho * e)
        assert eos.pressure(2.0, 3.0) == pytest.approx(2.4)
        with pytest.raises(ValueError):
            state.GeneralEos(lambda rho, e: rho * e - 1.0)  # p <= 0 for small e

    def test_ideal_requires_gamma_above_one(self):
        with pytest.raises(ValueError):
            IdealEos(1.0)
