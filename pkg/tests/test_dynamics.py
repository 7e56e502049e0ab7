"""Nonlinearity, Duhamel integrals, Picard iteration, the stepper and invariants."""

import math

import numpy as np
import pytest

from oracles import direct_convolution
from qdnls.dynamics import (
    SolutionTriple,
    duhamel_I1,
    duhamel_I2,
    energy,
    free_triple,
    mass,
    nonlinearity,
    pde_residual,
    phi_map,
    picard_solve,
    reduced_triple_evolve,
    scaling_transform,
    single_equation_evolve,
    small_data,
    step_evolve,
    triple_distance,
)
from qdnls.errors import BlowUpError, NonConvergenceError
from qdnls.norms import hs_norm
from qdnls.projections import Trajectory
from qdnls.spectral import FieldTriple, FrequencyLattice

COEFFS = (1, 2, 3)


@pytest.fixture
def lat1():
    return FrequencyLattice(1, 6)


@pytest.fixture
def data1(lat1, rng):
    return small_data(lat1, rng, size=1e-2, width=1.5)


class TestNonlinearity:
    def test_against_convolution_oracle(self, rng):
        K = 3
        lat = FrequencyLattice(1, K)
        u, v, w = (lat.random_field(rng) for _ in range(3))
        R = nonlinearity(FieldTriple(u, v, w))
        k = np.arange(-K, K + 1)
        divw = 1j * k * w.coeffs[0]
        ubar = np.conj(u.coeffs[0][::-1])
        vbar = np.conj(v.coeffs[0][::-1])
        wbar_div = 1j * k * np.conj(w.coeffs[0][::-1])
        np.testing.assert_allclose(R.u.coeffs[0], -direct_convolution(divw, v.coeffs[0], K, 1), atol=1e-12)
        np.testing.assert_allclose(R.v.coeffs[0], -direct_convolution(wbar_div, u.coeffs[0], K, 1), atol=1e-12)
        np.testing.assert_allclose(R.w.coeffs[0], 1j * k * direct_convolution(u.coeffs[0], vbar, K, 1), atol=1e-12)
        assert ubar.shape == u.coeffs[0].shape

    def test_zero_state(self):
        lat = FrequencyLattice(2, 3)
        R = nonlinearity(FieldTriple.zeros(lat))
        assert all(np.all(f.coeffs == 0) for f in R)


class TestDuhamel:
    def _const_pair(self, lat, n, dt):
        a = lat.single_mode((1,), 1.0)
        b = lat.single_mode((2,), 1.0)
        return Trajectory.from_fields([a] * n, dt), Trajectory.from_fields([b] * n, dt)

    def _error(self, quad, n):
        lat = FrequencyLattice(1, 4)
        T, sigma, eta = 1.0, 1.5, 3
        dt = T / (n - 1)
        f, g = self._const_pair(lat, n, dt)
        out = duhamel_I2(sigma, f, g, quadrature=quad)
        t = out.times
        want = 1j * eta * (1 - np.exp(-1j * sigma * eta**2 * t)) / (1j * sigma * eta**2)
        return np.max(np.abs(out.data[:, 0, lat.index_of((eta,))[0]] - want))

    @pytest.mark.parametrize("quad,order", [("trapezoid", 2), ("quartic", 4)])
    def test_constant_forcing_convergence_order(self, quad, order):
        e1, e2 = self._error(quad, 101), self._error(quad, 201)
        assert e1 < 1e-3
        assert math.log2(e1 / e2) == pytest.approx(order, abs=0.3)

    def test_I1_divergence_form(self):
        lat = FrequencyLattice(1, 4)
        n, dt = 5, 0.1
        f, g = self._const_pair(lat, n, dt)
        out = duhamel_I1(2.0, f, g, t=0.0)
        assert np.all(out.coeffs == 0)
        F = duhamel_I1(2.0, f, g, t=0.1, quadrature="trapezoid").coeffs[0][lat.index_of((3,))[0]]
        # (div f) g = i e^{3ix}; trapezoid over one step
        want = 0.05 * 1j * (np.exp(-1j * 2.0 * 9 * 0.1) + 1)
        assert abs(F - want) < 1e-14

    def test_off_grid_time(self):
        lat = FrequencyLattice(1, 4)
        f, g = self._const_pair(lat, 5, 0.1)
        with pytest.raises(ValueError):
            duhamel_I2(1.0, f, g, t=0.15)
        with pytest.raises(ValueError):
            duhamel_I2(1.0, f, g, t=0.5)


class TestPicard:
    def test_converges_and_matches_stepper(self, data1):
        sol, rep = picard_solve(data1, COEFFS, 0.5, tol=1e-11, dt=5e-3)
        assert rep.converged
        assert all(r < 0.5 for r in rep.ratios)
        ref = step_evolve(data1, COEFFS, 0.5, 5e-3)
        assert triple_distance(sol, ref) < 1e-8
        assert rep.final_residual < 1e-6

    def test_fixed_point(self, data1):
        sol, _ = picard_solve(data1, COEFFS, 0.2, tol=1e-13, dt=1e-2, quadrature="quartic")
        assert triple_distance(phi_map(data1, sol, COEFFS, quadrature="quartic"), sol) < 1e-12

    def test_zero_data_is_fixed(self, lat1):
        sol, rep = picard_solve(FieldTriple.zeros(lat1), COEFFS, 0.1, dt=1e-2)
        assert rep.iterates == 1 and rep.differences == [0.0]

    def test_large_data_fails(self, lat1, rng):
        big = small_data(lat1, rng, size=50.0)
        with pytest.raises(NonConvergenceError) as info:
            picard_solve(big, COEFFS, 1.0, dt=1e-2, max_iter=30)
        assert info.value.report.iterates >= 1
        assert not info.value.report.converged

    def test_report_rows(self, data1):
        _, rep = picard_solve(data1, COEFFS, 0.1, dt=1e-2, residual=False)
        rows = rep.as_rows()
        assert rows[0][0] == 1 and math.isnan(rows[0][2])


class TestStepper:
    def test_linear_limit_is_free_flow(self, data1):
        sol = step_evolve(data1, COEFFS, 0.3, 1e-2, nonlinear_scale=0.0)
        free = free_triple(data1, COEFFS, sol.n, sol.dt)
        assert triple_distance(sol, free) < 1e-14

    def test_conservation(self, data1):
        sol = step_evolve(data1, COEFFS, 0.5, 1e-3)
        a, b = sol.state_at(0), sol.state_at(sol.n - 1)
        assert abs(mass(b) - mass(a)) <= 1e-10 * mass(a)
        assert abs(energy(b, COEFFS) - energy(a, COEFFS)) <= 1e-8 * abs(energy(a, COEFFS))

    def test_residual_small(self, data1):
        assert pde_residual(step_evolve(data1, COEFFS, 0.2, 1e-3), COEFFS) < 1e-7

    def test_blow_up_guard(self, data1):
        with pytest.raises(BlowUpError) as info:
            step_evolve(data1, COEFFS, 0.1, 1e-2, guard=0.5)
        assert info.value.step == 1

    def test_dt_lands_on_T(self, data1):
        sol = step_evolve(data1, COEFFS, 0.25, 0.1)
        assert sol.n == 4 and math.isclose(sol.times[-1], 0.25)


class TestInvariants:
    def test_mass_weights(self):
        lat = FrequencyLattice(1, 2)
        one = lat.single_mode((0,))
        st = FieldTriple(one, one * 0.0, one * 0.0)
        assert math.isclose(mass(st), 2 * 2 * math.pi)

    def test_scaling_keeps_solutions(self, data1):
        sol = step_evolve(data1, COEFFS, 0.2, 1e-3)
        scaled = scaling_transform(sol, 2)
        assert scaled.lattice.L == 2.0
        assert math.isclose(scaled.dt, 4 * sol.dt)
        assert pde_residual(scaled, COEFFS) < 1e-7

    def test_scaling_factor_checked(self, data1):
        sol = step_evolve(data1, COEFFS, 0.02, 1e-2)
        with pytest.raises(ValueError):
            scaling_transform(sol, 1.5)

    def test_small_data_size(self, rng):
        lat = FrequencyLattice(2, 4)
        data = small_data(lat, rng, size=3e-3, s=1.0)
        for f in data:
            assert math.isclose(hs_norm(f, 1.0), 3e-3)

    def test_solution_grid_check(self, lat1, rng):
        a = Trajectory(lat1, np.zeros((3, 1) + lat1.shape), 0.1)
        b = Trajectory(lat1, np.zeros((4, 1) + lat1.shape), 0.1)
        with pytest.raises(ValueError):
            SolutionTriple(a, a, b)


class TestReduction:
    def test_single_equation_matches_system(self, rng):
        lat = FrequencyLattice(2, 4)
        env = np.exp(-lat.xi_sq / 4)
        u0 = lat.random_field(rng, 1, env) * 0.05
        a = single_equation_evolve(u0, 1, 0.1, 5e-3)
        b = reduced_triple_evolve(u0, 1, 0.1, 5e-3)
        np.testing.assert_allclose(a.data, b.data, atol=1e-14)

    def test_scalar_datum_required(self, rng):
        lat = FrequencyLattice(2, 2)
        with pytest.raises(ValueError):
            single_equation_evolve(lat.random_field(rng, 2), 0, 0.1, 0.05)
