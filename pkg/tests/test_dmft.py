import numpy as np
import pytest
from scipy.integrate import quad

from qaw.dmft import (HubbardParams, MatsubaraGreen, bath_update,
                      lattice_green, matsubara_grid, self_consistency_loop,
                      solve_impurity, weiss_field)
from qaw.errors import CausalityError, GridTooSmallError


def semicircle_quad(w, d):
    """Quadrature oracle: G(i w) = int rho(e) / (i w - e) de over the
    semicircular density of half-bandwidth d."""
    rho = lambda e: (2.0 / (np.pi * d * d)) * np.sqrt(d * d - e * e)
    re = quad(lambda e: rho(e) * (-e) / (w * w + e * e), -d, d, limit=400)[0]
    im = quad(lambda e: rho(e) * (-w) / (w * w + e * e), -d, d, limit=400)[0]
    return re + 1j * im


def zero_sigma(beta, n):
    return MatsubaraGreen(beta=beta, values=np.zeros(n, dtype=np.complex128))


@pytest.fixture(scope="module")
def loop_states():
    """Converged loops at U = 0, 1, 2 (t=1, beta=16, alpha=1e-6), shared."""
    return {u: self_consistency_loop(HubbardParams(t=1.0, u=u, beta=16.0),
                                     alpha=1e-6)
            for u in (0.0, 1.0, 2.0)}


class TestGrid:
    def test_direct_formula(self):
        assert np.array_equal(matsubara_grid(np.pi, 2), [1.0, 3.0])

    def test_half_frequency(self):
        assert matsubara_grid(2 * np.pi, 1)[0] == 0.5

    def test_ratio_identity(self):
        for beta in (1.0, np.pi, 16.0, 0.37):
            w = matsubara_grid(beta, 2)
            assert w[1] / w[0] == 3.0

    def test_strictly_increasing(self):
        w = matsubara_grid(7.3, 100)
        assert np.all(np.diff(w) > 0)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            matsubara_grid(-1.0, 4)
        with pytest.raises(ValueError):
            matsubara_grid(1.0, 0)


class TestLatticeGreen:
    def test_asymptotic_tail(self):
        p = HubbardParams(t=1.0, beta=16.0)
        g = lattice_green(zero_sigma(16.0, 1024), p)
        wn = g.frequencies
        assert abs(g.values[-1] - 1.0 / (1j * wn[-1])) < 1e-3 / wn[-1]

    def test_quadrature_oracle_at_unit_frequency(self):
        # beta = pi puts the first Matsubara frequency exactly at w = 1
        p = HubbardParams(t=1.0, beta=np.pi)
        g = lattice_green(zero_sigma(np.pi, 1), p)
        # frozen: 2(i - i sqrt(5))/4 = i (1 - sqrt(5))/2
        assert g.values[0] == pytest.approx(-0.6180339887498949j, rel=1e-12)
        assert g.values[0] == pytest.approx(semicircle_quad(1.0, 2.0), abs=1e-10)

    def test_quadrature_oracle_across_grid(self):
        p = HubbardParams(t=1.0, beta=16.0)
        g = lattice_green(zero_sigma(16.0, 8), p)
        for wn, val in zip(g.frequencies, g.values):
            assert val == pytest.approx(semicircle_quad(wn, 2.0), abs=1e-10)

    def test_constant_shift_cancels_against_mu(self):
        beta, n = 16.0, 32
        base = lattice_green(zero_sigma(beta, n), HubbardParams(beta=beta))
        s = MatsubaraGreen(beta=beta,
                           values=np.full(n, 0.3, dtype=np.complex128))
        shifted = lattice_green(s, HubbardParams(beta=beta, mu=0.3))
        assert np.allclose(shifted.values, base.values, rtol=0, atol=0)

    def test_causality_violation_detected(self):
        beta, n = 16.0, 8
        s = MatsubaraGreen(beta=beta, values=np.full(n, 40j))
        with pytest.raises(CausalityError):
            lattice_green(s, HubbardParams(beta=beta))


class TestBathUpdate:
    def test_zero_green_zero_bath(self):
        p = HubbardParams(t=1.0, beta=16.0)
        g = zero_sigma(16.0, 4)
        assert np.all(bath_update(g, p).values == 0)

    def test_unit_hopping_identity(self):
        p = HubbardParams(t=1.0, beta=16.0)
        g = MatsubaraGreen(16.0, np.array([-0.5j, -0.25j]))
        assert np.array_equal(bath_update(g, p).values, g.values)

    def test_quadratic_hopping_scale(self):
        g = MatsubaraGreen(16.0, np.array([-0.5j]))
        full = bath_update(g, HubbardParams(t=1.0, beta=16.0))
        half = bath_update(g, HubbardParams(t=0.5, beta=16.0))
        assert half.values[0] == 0.25 * full.values[0]


class TestWeissField:
    def test_zero_sigma_is_identity(self):
        wn = matsubara_grid(16.0, 16)
        g = MatsubaraGreen(16.0, 1.0 / (1j * wn - 0.3))
        g0 = weiss_field(g, zero_sigma(16.0, 16))
        assert np.allclose(g0.values, g.values, rtol=1e-15)

    def test_exact_inversion(self):
        wn = matsubara_grid(16.0, 16)
        sigma = MatsubaraGreen(16.0, (0.1 - 0.2j) * np.ones(16))
        g = MatsubaraGreen(16.0, 1.0 / (1j * wn - sigma.values))
        g0 = weiss_field(g, sigma)
        assert np.allclose(g0.values, 1.0 / (1j * wn), rtol=1e-12)

    def test_round_trip(self):
        wn = matsubara_grid(16.0, 16)
        sigma = MatsubaraGreen(16.0, (0.05 - 0.4j) * np.ones(16))
        g = MatsubaraGreen(16.0, 1.0 / (1j * wn + 0.2 - sigma.values))
        g0 = weiss_field(g, sigma)
        back = 1.0 / (1.0 / g0.values - sigma.values)
        assert np.max(np.abs(back - g.values)) < 1e-12

    def test_singular_green_rejected(self):
        g = MatsubaraGreen(16.0, np.array([0.0j, -0.5j]))
        with pytest.raises(ZeroDivisionError):
            weiss_field(g, zero_sigma(16.0, 2))


class TestSolveImpurity:
    def test_u_zero_gives_exact_zero(self):
        wn = matsubara_grid(16.0, 64)
        g0 = MatsubaraGreen(16.0, 1.0 / (1j * wn))
        sigma = solve_impurity(g0, HubbardParams(u=0.0, beta=16.0))
        assert np.all(sigma.values == 0)

    def test_flat_weiss_field_analytic(self):
        # g0 = 1/(i w) has g0(tau) = -1/2, so Sigma(tau) = -U^2/8 and
        # Sigma(i w) = -i U^2 / (4 w) exactly
        wn = matsubara_grid(16.0, 64)
        g0 = MatsubaraGreen(16.0, 1.0 / (1j * wn))
        sigma = solve_impurity(g0, HubbardParams(u=1.0, beta=16.0))
        assert np.array_equal(sigma.values, -1j / (4.0 * wn))

    def test_flat_weiss_field_tau_space_oracle(self):
        # independent dense-trapezoid evaluation of the tau integral
        beta, u = 16.0, 1.0
        wn = matsubara_grid(beta, 8)
        g0 = MatsubaraGreen(beta, 1.0 / (1j * wn))
        sigma = solve_impurity(g0, HubbardParams(u=u, beta=beta))
        m = 2**14
        tau = np.linspace(0.0, beta, m + 1)
        sig_tau = u * u * (-0.5) ** 2 * (-0.5) * np.ones(m + 1)
        for k in range(4):
            oracle = np.trapezoid(np.exp(1j * wn[k] * tau) * sig_tau, tau)
            assert sigma.values[k] == pytest.approx(oracle, rel=1e-6)

    def test_u_quadratic_scaling(self):
        p = HubbardParams(t=1.0, beta=16.0)
        g0 = lattice_green(zero_sigma(16.0, 128), p)
        s1 = solve_impurity(g0, HubbardParams(u=1.0, beta=16.0))
        s2 = solve_impurity(g0, HubbardParams(u=2.0, beta=16.0))
        assert np.allclose(s2.values, 4.0 * s1.values, rtol=1e-13)

    def test_away_from_half_filling_rejected(self):
        wn = matsubara_grid(16.0, 16)
        g0 = MatsubaraGreen(16.0, 1.0 / (1j * wn))
        with pytest.raises(ValueError, match="half-filled"):
            solve_impurity(g0, HubbardParams(u=1.0, beta=16.0, mu=0.0))

    def test_bad_tail_raises_grid_error(self):
        wn = matsubara_grid(16.0, 16)
        g0 = MatsubaraGreen(16.0, 1.0 / (1j * wn) + 10.0)
        with pytest.raises(GridTooSmallError):
            solve_impurity(g0, HubbardParams(u=1.0, beta=16.0))


class TestLoop:
    def test_u_zero_converges_immediately_to_semicircle(self, loop_states):
        state = loop_states[0.0]
        assert state.converged
        assert state.iteration <= 2
        for wn, val in zip(state.g_imp.frequencies[:8], state.g_imp.values[:8]):
            assert abs(val - semicircle_quad(wn, 2.0)) < 1e-8

    def test_interacting_loop_converges(self, loop_states):
        state = loop_states[1.0]
        assert state.converged
        assert state.residual <= 1e-6
        hist = state.residual_history
        # frozen head of the committed residual curve
        assert hist[0] == pytest.approx(5.297e-2, rel=1e-2)
        assert hist[1] == pytest.approx(1.634e-2, rel=1e-2)
        assert all(b <= a for a, b in zip(hist[3:], hist[4:]))

    def test_loose_alpha_returns_after_one_iteration(self):
        state = self_consistency_loop(HubbardParams(t=1.0, u=1.0, beta=16.0),
                                      alpha=1.0)
        assert state.converged
        assert state.iteration == 1

    def test_exhausted_iterations_reported_not_raised(self):
        state = self_consistency_loop(HubbardParams(t=1.0, u=2.0, beta=16.0),
                                      alpha=1e-14, max_iter=3)
        assert not state.converged
        assert state.iteration == 3
        assert len(state.residual_history) == 3

    @pytest.mark.parametrize("u", [0.0, 1.0, 2.0])
    def test_causality_and_symmetry(self, u, loop_states):
        state = loop_states[u]
        g = state.g_imp.values
        assert np.all(g.imag < 0)
        assert np.all(state.sigma.values.imag <= 0)
        assert np.max(np.abs(g.real)) < 1e-10
        for rec in state.iterate_log:
            assert rec.im_g_imp_w0 < 0
            assert rec.im_sigma_w0 <= 0

    @pytest.mark.parametrize("u", [0.0, 1.0, 2.0])
    def test_tail_normalization(self, u, loop_states):
        state = loop_states[u]
        wn = state.g_imp.frequencies
        tail = wn * np.abs(state.g_imp.values.imag)
        top = slice(int(0.9 * wn.size), None)
        assert np.max(np.abs(tail[top] - 1.0)) < 1e-3

    def test_fixed_point_consistency(self, loop_states):
        state = loop_states[1.0]
        gap = np.max(np.abs(state.g_lat.values - state.g_imp.values))
        assert gap <= 10 * 1e-6

    def test_bath_is_quarter_bandwidth_green(self):
        state = self_consistency_loop(HubbardParams(t=0.5, u=1.0, beta=16.0),
                                      alpha=1e-6)
        assert np.allclose(state.delta.values, 0.25 * state.g_lat.values,
                           rtol=1e-14)

    def test_parameter_validation(self):
        p = HubbardParams(u=1.0, beta=16.0)
        with pytest.raises(ValueError):
            self_consistency_loop(p, alpha=0.0)
        with pytest.raises(ValueError):
            self_consistency_loop(p, max_iter=0)
        with pytest.raises(ValueError):
            self_consistency_loop(p, mixing=0.0)
        with pytest.raises(ValueError):
            self_consistency_loop(p, mixing=1.5)
