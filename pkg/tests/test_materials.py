"""Dispersive-material model: table fidelity, passivity, branch choices, and
the frequency response of the time-domain recursion coefficients.

The recursion checks evaluate the z-transform of the update stencils in
closed form and march the scalar recursions directly, so they validate the
coefficient formulas against the continuous susceptibility without touching
the field solver.
"""

import math

import numpy as np
import pytest

from msqs.constants import omega_from_wavelength
from msqs.materials import (
    SILICON,
    SILICON_FIT_MAX_RELERR,
    SILICON_NK,
    CriticalPoint,
    DrudeCPModel,
    silicon_eps_table,
)


class TestTable:
    def test_covers_operating_band(self):
        lam = SILICON_NK[:, 0]
        assert lam[0] == 700.0 and lam[-1] == 900.0
        assert 830.0 in lam
        assert np.all(np.diff(lam) == 10.0)

    def test_eps_table_is_n_plus_ik_squared(self):
        w, eps = silicon_eps_table()
        row = SILICON_NK[np.searchsorted(SILICON_NK[:, 0], 830.0)]
        nk = row[1] + 1j * row[2]
        i = int(np.argmin(np.abs(w - omega_from_wavelength(830.0))))
        assert eps[i] == pytest.approx(nk**2, rel=1e-14)
        # physical silicon in this band: transparent-ish, strongly refractive
        assert np.all(eps.real > 12.0) and np.all(eps.imag > 0.0)


class TestFitQuality:
    def test_model_matches_table_within_contract(self):
        w, eps_tab = silicon_eps_table()
        rel = np.abs(SILICON.epsilon(w) - eps_tab) / np.abs(eps_tab)
        assert float(rel.max()) <= 0.02          # shipping contract
        assert float(rel.max()) <= SILICON_FIT_MAX_RELERR * 1.0001

    def test_design_wavelength_point(self):
        w0 = omega_from_wavelength(830.0)
        nk = 3.6730 + 1j * 0.00417
        assert SILICON.epsilon(w0) == pytest.approx(
            nk**2, rel=SILICON_FIT_MAX_RELERR * 1.0001)

    def test_refractive_index_branch_and_value(self):
        w = np.linspace(0.5, 5.0, 401)
        n = SILICON.refractive_index(w)
        assert np.all(n.imag >= 0.0)
        n830 = SILICON.refractive_index(omega_from_wavelength(830.0))
        assert float(n830.real) == pytest.approx(3.6730, rel=1e-2)


class TestPassivity:
    def test_operating_sweep_non_negative(self):
        assert SILICON.min_im_eps(0.5, 5.0) >= 0.0

    def test_broadband_non_negative(self):
        # every frequency a fine grid can support, not just the fitted band
        w = np.geomspace(1e-3, 4000.0, 20001)
        assert float(SILICON.epsilon(w).imag.min()) >= -1e-12

    def test_drude_only_im_eps_positive(self):
        m = DrudeCPModel(eps_inf=1.0, drude_omega=2.0, drude_gamma=0.05,
                         poles=(CriticalPoint(0.0, 5.0, 0.0, 0.1),
                                CriticalPoint(0.0, 9.0, 0.0, 2.0)))
        w = np.linspace(0.1, 10.0, 1001)
        assert np.all(m.epsilon(w).imag > 0.0)


class TestCriticalPointAlgebra:
    def test_chi_equals_rational_transfer(self):
        # chi_p(w) must equal (alpha - i w zeta)/(O^2+G^2 - w^2 - 2iGw):
        # that identity is what lets one real second-order ODE realize the
        # complex-conjugate pole pair.
        p = CriticalPoint(amplitude=0.7, omega=4.9, phase=0.35, gamma=0.12)
        w = np.linspace(0.1, 8.0, 500)
        rational = (p.alpha - 1j * w * p.zeta) / (
            p.omega0_sq - w**2 - 2j * p.gamma * w)
        assert np.allclose(rational, p.chi(w), rtol=1e-13, atol=1e-15)

    def test_zero_phase_pole_has_no_e_dot_forcing(self):
        p = CriticalPoint(amplitude=0.66, omega=4.9, phase=0.0, gamma=0.1)
        assert p.zeta == 0.0
        assert p.alpha == pytest.approx(2.0 * 0.66 * 4.9 * 4.9)


class TestRecursionResponse:
    """The ade_coefficients stencils, driven at the laser carrier."""

    W_CARRIER = omega_from_wavelength(830.0)

    def _pole_discrete_response(self, dt: float) -> complex:
        co = SILICON.ade_coefficients(dt)
        c1, c2, c3, c4 = (co[k][0] for k in ("c1", "c2", "c3", "c4"))
        z = np.exp(-1j * self.W_CARRIER * dt)
        # P_{n+1} = c1 P_n + c2 P_{n-1} + c3 E_n + c4 (E_{n+1} - E_{n-1})
        return (c3 + c4 * (z - 1.0 / z)) / (z - c1 - c2 / z)

    def _drude_discrete_response(self, dt: float) -> complex:
        co = SILICON.ade_coefficients(dt)
        z = np.exp(-1j * self.W_CARRIER * dt)
        # J_{n+1} = a_d J_n + b_d E_n, with J staggered half a step from E
        return co["b_d"] / (z - co["a_d"]) * z**0.5

    def test_pole_recursion_matches_chi_second_order(self):
        chi = SILICON.poles[0].chi(self.W_CARRIER)
        err = [abs(self._pole_discrete_response(dt) / chi - 1.0)
               for dt in (0.01, 0.005)]
        assert err[0] <= 2e-5
        assert err[0] / err[1] == pytest.approx(4.0, rel=0.1)

    def test_drude_recursion_matches_drude_second_order(self):
        w = self.W_CARRIER
        target = SILICON.drude_omega**2 / (SILICON.drude_gamma - 1j * w)
        err = [abs(self._drude_discrete_response(dt) / target - 1.0)
               for dt in (0.01, 0.005)]
        assert err[0] <= 5e-5
        assert err[0] / err[1] == pytest.approx(4.0, rel=0.1)

    def test_marched_pole_recursion_agrees_with_z_transform(self):
        # timestep the scalar stencil long enough for the transient to die,
        # project the steady state onto the drive frequency, and compare
        # with the closed-form z-transform evaluation above.
        dt = 0.005
        w = self.W_CARRIER
        co = SILICON.ade_coefficients(dt)
        c1, c2, c3, c4 = (co[k][0] for k in ("c1", "c2", "c3", "c4"))
        n_steps = 60000                       # 300 fs >> 1/gamma = 10 fs
        t = np.arange(n_steps + 2) * dt
        e = np.cos(w * t)
        p_prev, p_cur = 0.0, 0.0
        out = np.empty(n_steps)
        for n in range(1, n_steps + 1):
            p_next = c1 * p_cur + c2 * p_prev + c3 * e[n] + c4 * (e[n + 1] - e[n - 1])
            p_prev, p_cur = p_cur, p_next
            out[n - 1] = p_cur
        period = 2.0 * math.pi / w
        m = int(round(20 * period / dt))      # project over 20 full periods
        sl = slice(n_steps - m, n_steps)
        tn = (np.arange(n_steps) + 2) * dt    # out[k] holds P_{k+2}
        phasor = 2.0 * np.mean(out[sl] * np.exp(1j * w * tn[sl]))
        assert phasor == pytest.approx(self._pole_discrete_response(dt),
                                       rel=1e-3)

    def test_inert_model_has_inert_coefficients(self):
        m = DrudeCPModel(eps_inf=12.0, drude_omega=0.0, drude_gamma=0.05,
                         poles=(CriticalPoint(0.0, 5.0, 0.0, 0.1),
                                CriticalPoint(0.0, 9.0, 0.0, 2.0)))
        co = m.ade_coefficients(0.002)
        assert co["b_d"] == 0.0
        assert co["c3"] == (0.0, 0.0) and co["c4"] == (0.0, 0.0)
        assert np.all(m.epsilon(np.linspace(0.5, 5.0, 50)) == 12.0)
