import numpy as np
import pytest

from dbsampling.numerics import NumericsError, integrate, make_grid
from dbsampling.schrodinger import (Potential, SolverError, greens,
                                    picard_terms, wave_table, xi_picard,
                                    xi_solve, xi_solve_batch)


class TestPotential:
    def test_presets_evaluate(self):
        assert Potential.zero(np.pi).value(1.0) == 0.0
        assert Potential.constant(4.0, np.pi).value(0.3) == 4.0
        assert abs(Potential.cosine(2.0, 2.0, np.pi).value(np.pi / 4)) < 1e-15
        p = Potential.polynomial([1.0, -2.0, 0.5], 2.0)
        assert abs(p.value(1.0) - (1.0 - 2.0 + 0.5)) < 1e-15

    def test_piecewise_linear_value_and_slope(self):
        p = Potential.piecewise_linear([0.0, 1.0, 2.0], [0.0, 2.0, 1.0])
        assert abs(p.value(0.5) - 1.0) < 1e-15
        assert abs(p.derivative(0.5) - 2.0) < 1e-15
        assert abs(p.derivative(1.5) + 1.0) < 1e-15
        assert p.breakpoints() == (1.0,)

    def test_derivative_l1_finite(self, cosine_pot, pwl_pot):
        assert np.isfinite(cosine_pot.derivative_l1())
        assert np.isfinite(pwl_pot.derivative_l1())
        # piecewise-linear: sum of |slope| * length in closed form
        expect = abs(-1.5) * 1.0 + abs(2.5 / 1.2) * 1.2 \
            + abs((0.25 - 1.5) / (np.pi - 2.2)) * (np.pi - 2.2) \
            + abs((-0.75 - 0.25) / (np.pi / 2)) * (np.pi / 2)
        assert abs(pwl_pot.derivative_l1() - expect) < 1e-12

    def test_parse_round_trip(self, cosine_pot, pwl_pot):
        for p in (cosine_pot, pwl_pot, Potential.zero(1.0),
                  Potential.polynomial([0.5, 1.0], 2.0)):
            q = Potential.parse(p.describe())
            x = np.linspace(0, p.s_max, 17)
            assert np.allclose(q.value(x), p.value(x), atol=1e-14)
            assert q.s_max == p.s_max

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            Potential.parse("preset sombrero 1 2 3")
        with pytest.raises(ValueError):
            Potential.parse("")

    def test_mean_value(self, cosine_pot):
        assert abs(cosine_pot.mean_value(np.pi)) < 1e-14
        assert abs(Potential.constant(4.0, 1.0).mean_value(1.0) - 4.0) < 1e-15


class TestGreens:
    def test_vanishes_on_diagonal(self):
        assert greens(3.0 + 1.0j, 1.2, 1.2) == 0.0

    def test_zero_energy_limit(self):
        assert abs(greens(0.0, 2.0, 1.0) - 1.0) < 1e-12

    def test_exact_value(self):
        assert abs(greens(4.0, np.pi, 0.0) - np.sin(2 * np.pi) / 2.0) < 1e-14

    def test_series_matches_direct_near_zero(self):
        direct = np.sin(np.sqrt(2e-9) * 1.5) / np.sqrt(2e-9)
        assert abs(greens(2e-9, 2.0, 0.5) - direct) < 1e-12


class TestXiSolve:
    def test_free_is_cosine(self):
        p = Potential.zero(np.pi)
        for z in (9.0, 0.25, -4.0, 3.0 + 1.0j):
            wf = xi_solve(p, z, s=np.pi)
            w = np.sqrt(complex(z))
            assert np.max(np.abs(wf.xi - np.cos(w * wf.grid.nodes))) < 1e-11

    def test_initial_conditions_any_potential(self, cosine_pot, pwl_pot):
        for p in (cosine_pot, pwl_pot):
            wf = xi_solve(p, 11.3, s=np.pi)
            assert wf.xi[0] == 1.0 and wf.xi_prime[0] == 0.0

    def test_constant_potential_shifts_argument(self):
        p = Potential.constant(4.0, np.pi)
        wf = xi_solve(p, 8.0, s=np.pi)
        val = wf.grid.interpolate(wf.xi, np.array([np.pi / 2]))[0]
        assert abs(val - np.cos(np.pi)) < 1e-11

    def test_real_z_stays_real(self, cosine_pot):
        wf = xi_solve(cosine_pot, 17.0, s=np.pi)
        assert np.max(np.abs(wf.xi.imag)) <= 1e-12

    def test_branch_independence(self, cosine_pot):
        # xi is even in sqrt(z): solving at z must match the Picard sum built
        # from cos(sqrt(z) x) with the principal branch, for z on both sides
        # of the branch cut
        for z in (-9.0 + 1e-30j, -9.0 - 1e-30j):
            wf = xi_solve(cosine_pot, z, s=2.0)
            ref = xi_picard(cosine_pot, z, 2.0, iterations=40, tail_tol=1e-15)
            assert abs(wf.xi[-1] - ref) < 1e-10 * (1.0 + abs(ref))

    def test_extent_mismatch_raises(self, cosine_pot):
        with pytest.raises(NumericsError):
            xi_solve(cosine_pot, 1.0, s=10.0)

    def test_wronskian_identity(self, cosine_pot):
        # Green identity with Neumann data at 0:
        # (z2 - z1) int_0^s xi1 xi2 = xi1'(s) xi2(s) - xi1(s) xi2'(s)
        s = np.pi
        z1, z2 = 7.3, 2.1
        grid = make_grid(0.0, s, oscillation=2 * np.sqrt(z1) + 1)
        t = wave_table(cosine_pot, [z1, z2], grid)
        lhs = (z2 - z1) * integrate(grid, t.xi[:, 0] * t.xi[:, 1])
        rhs = t.xi_prime[-1, 0] * t.xi[-1, 1] - t.xi[-1, 0] * t.xi_prime[-1, 1]
        assert abs(lhs - rhs) <= 1e-8


class TestPicard:
    def test_zero_iterations_is_cosine(self, cosine_pot):
        z, x = 5.0 + 0.3j, 1.7
        assert abs(xi_picard(cosine_pot, z, x, iterations=0)
                   - np.cos(np.sqrt(complex(z)) * x)) < 1e-14

    def test_zero_potential_kills_corrections(self):
        p = Potential.zero(np.pi)
        z, x = 12.0, 2.5
        assert abs(xi_picard(p, z, x, iterations=25)
                   - np.cos(np.sqrt(z) * x)) < 1e-13

    def test_matches_ode_solver(self, cosine_pot):
        z, x = 10.0, np.pi
        by_series = xi_picard(cosine_pot, z, x, iterations=30, tail_tol=1e-14)
        wf = xi_solve(cosine_pot, z, s=np.pi)
        assert abs(by_series - wf.xi[-1]) <= 1e-8

    def test_factorial_decay_of_terms(self, cosine_pot, pwl_pot):
        for p, x in ((cosine_pot, 2.0), (pwl_pot, np.pi)):
            mags = np.abs(picard_terms(p, 4.0, x, iterations=25))
            live = mags[mags > 1e-15 * mags.max()]
            peak = int(np.argmax(live))
            assert np.all(np.diff(np.log(live[peak:])) < 0)
            assert np.max(mags[12:]) < 1e-12

    def test_negative_iterations_raise(self, cosine_pot):
        with pytest.raises(NumericsError):
            xi_picard(cosine_pot, 1.0, 1.0, iterations=-1)


class TestEstimates:
    """The integral-equation growth envelopes for xi and xi'."""

    def test_xi_deviation_envelope(self, cosine_pot):
        ratios = []
        for z in (2.0, 25.0, 100.0, -4.0, 10.0 + 5.0j):
            wf = xi_solve(cosine_pot, z, s=np.pi)
            w = np.sqrt(complex(z))
            x = wf.grid.nodes[1:]
            dev = np.abs(wf.xi[1:] - np.cos(w * x))
            env = x / (1 + np.abs(w) * x) * np.exp(np.abs(w.imag) * x)
            ratios.append(np.max(dev / env))
        assert max(ratios) < 50.0

    def test_xi_prime_deviation_envelope(self, cosine_pot):
        ratios = []
        for z in (2.0, 25.0, 100.0, -4.0, 10.0 + 5.0j):
            wf = xi_solve(cosine_pot, z, s=np.pi)
            w = np.sqrt(complex(z))
            x = wf.grid.nodes[1:]
            dev = np.abs(wf.xi_prime[1:] + w * np.sin(w * x))
            env = np.exp(np.abs(w.imag) * x)
            ratios.append(np.max(dev / env))
        assert max(ratios) < 50.0


class TestEngineCrossChecks:
    def test_collocation_vs_rk_band(self, cosine_pot, pwl_pot):
        # both engines on the same grid, across the frequency band where the
        # production code switches between them
        zs = np.array([0.5, 30.0, 400.0, 1600.0, 2500.0])
        for p in (cosine_pot, pwl_pot):
            grid = make_grid(0.0, np.pi, oscillation=51.0,
                             breakpoints=p.breakpoints())
            coll = wave_table(p, zs, grid)
            rk = xi_solve_batch(p, zs, grid)
            assert np.max(np.abs(coll.xi - rk.xi)) < 1e-9
            assert np.max(np.abs(coll.xi_prime - rk.xi_prime)) / 51.0 < 1e-9

    def test_constant_potential_collocation_exact(self):
        p = Potential.constant(3.0, np.pi)
        zs = np.array([0.5, 10.0, 100.0, 2500.0, -2.0, 9.0 + 0.5j])
        grid = make_grid(0.0, np.pi, oscillation=51.0)
        t = wave_table(p, zs, grid)
        for j, z in enumerate(zs):
            w = np.sqrt(complex(z) - 3.0)
            assert np.max(np.abs(t.xi[:, j] - np.cos(w * grid.nodes))) < 5e-11

    def test_divergence_guard(self):
        p = Potential.cosine(1e9, 2.0, 1.0)
        with pytest.raises(SolverError):
            wave_table(p, [1.0], make_grid(0.0, 1.0), max_iterations=3)
