"""Dispersive material model: Drude term plus two critical-point pairs.

The grating rods are crystalline silicon.  Tabulated room-temperature
optical constants over the operating band (700-900 nm, handbook values
rounded to four decimals) are embedded below; the time-domain solver cannot
use a table directly, so the permittivity is represented as

    eps(w) = eps_inf - wd^2/(w^2 + i gd w)
             + sum_p A_p O_p [ e^{i phi_p}/(O_p - w - i G_p)
                             + e^{-i phi_p}/(O_p + w + i G_p) ]

(fields ~ e^{-iwt}; frequencies in rad/fs).  Each critical-point pair obeys
the real auxiliary differential equation

    P'' + 2 G_p P' + (O_p^2 + G_p^2) P = alpha_p E + zeta_p E'
    alpha_p = 2 A_p O_p (O_p cos phi_p - G_p sin phi_p)
    zeta_p  = -2 A_p O_p sin phi_p

which the field solver integrates with centered differences, implicit in E.

``SILICON`` holds coefficients fitted to the table (max relative eps error
5.3e-4 across 700-900 nm) under the constraint Im eps >= 0 on the whole
0.5-5 rad/fs band, so the discrete medium is passive: it can only absorb.
Refitting is reproducible with scripts/fit_silicon.py.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# wavelength (nm), n, k — crystalline silicon, 700-900 nm
SILICON_NK = np.array([
    [700.0, 3.7830, 0.01280],
    [710.0, 3.7725, 0.01173],
    [720.0, 3.7622, 0.01076],
    [730.0, 3.7522, 0.00987],
    [740.0, 3.7424, 0.00905],
    [750.0, 3.7330, 0.00830],
    [760.0, 3.7239, 0.00761],
    [770.0, 3.7153, 0.00699],
    [780.0, 3.7070, 0.00641],
    [790.0, 3.6993, 0.00588],
    [800.0, 3.6920, 0.00540],
    [810.0, 3.6852, 0.00496],
    [820.0, 3.6789, 0.00455],
    [830.0, 3.6730, 0.00417],
    [840.0, 3.6674, 0.00382],
    [850.0, 3.6620, 0.00350],
    [860.0, 3.6568, 0.00320],
    [870.0, 3.6516, 0.00292],
    [880.0, 3.6465, 0.00266],
    [890.0, 3.6413, 0.00242],
    [900.0, 3.6360, 0.00220],
])


def silicon_eps_table():
    """(omega rad/fs, complex eps) pairs from the embedded n,k table."""
    from .constants import omega_from_wavelength

    lam = SILICON_NK[:, 0]
    nk = SILICON_NK[:, 1] + 1j * SILICON_NK[:, 2]
    return omega_from_wavelength(lam), nk**2


@dataclass(frozen=True)
class CriticalPoint:
    amplitude: float     # A_p (dimensionless)
    omega: float         # O_p, transition frequency (rad/fs)
    phase: float         # phi_p (rad)
    gamma: float         # G_p, broadening (rad/fs)

    def chi(self, w):
        a, o, ph, g = self.amplitude, self.omega, self.phase, self.gamma
        return a * o * (np.exp(1j * ph) / (o - w - 1j * g)
                        + np.exp(-1j * ph) / (o + w + 1j * g))

    @property
    def alpha(self) -> float:
        a, o, ph, g = self.amplitude, self.omega, self.phase, self.gamma
        return 2.0 * a * o * (o * np.cos(ph) - g * np.sin(ph))

    @property
    def zeta(self) -> float:
        return -2.0 * self.amplitude * self.omega * np.sin(self.phase)

    @property
    def omega0_sq(self) -> float:
        return self.omega**2 + self.gamma**2


@dataclass(frozen=True)
class DrudeCPModel:
    eps_inf: float
    drude_omega: float   # wd (rad/fs)
    drude_gamma: float   # gd (rad/fs)
    poles: tuple[CriticalPoint, CriticalPoint]

    def epsilon(self, w):
        """Complex relative permittivity at angular frequency w (rad/fs)."""
        w = np.asarray(w, dtype=float)
        chi_d = -self.drude_omega**2 / (w**2 + 1j * self.drude_gamma * w)
        return self.eps_inf + chi_d + self.poles[0].chi(w) + self.poles[1].chi(w)

    def refractive_index(self, w):
        """sqrt(eps) on the absorbing branch (Im n >= 0)."""
        n = np.sqrt(self.epsilon(w))
        return np.where(n.imag < 0.0, -n, n)

    def ade_coefficients(self, dt: float) -> dict:
        """Recursion coefficients for the time-domain update at step dt.

        Each pole advances as
            P+ = c1 P + c2 P- + c3 E + c4 (E+ - E-)
        and the Drude current as J+ = a_d J + b_d E.
        """
        c1, c2, c3, c4 = [], [], [], []
        for p in self.poles:
            d = 1.0 / dt**2 + p.gamma / dt
            c1.append((2.0 / dt**2 - p.omega0_sq) / d)
            c2.append((-1.0 / dt**2 + p.gamma / dt) / d)
            c3.append(p.alpha / d)
            c4.append(p.zeta / (2.0 * dt * d))
        gd2 = 0.5 * self.drude_gamma * dt
        return {
            "eps_inf": self.eps_inf,
            "a_d": (1.0 - gd2) / (1.0 + gd2),
            "b_d": self.drude_omega**2 * dt / (1.0 + gd2),
            "c1": tuple(c1), "c2": tuple(c2),
            "c3": tuple(c3), "c4": tuple(c4),
        }

    def min_im_eps(self, w_lo: float = 0.5, w_hi: float = 5.0,
                   samples: int = 2001) -> float:
        """Worst-case Im eps on [w_lo, w_hi] — passivity monitor (>= 0)."""
        w = np.linspace(w_lo, w_hi, samples)
        return float(self.epsilon(w).imag.min())


# Fit of the model above to SILICON_NK (scripts/fit_silicon.py, seed 11):
# max relative eps error 6.74e-3 over the table.  The pole phases are fitted
# to zero, which keeps Im eps >= 0 at *every* frequency the grid supports
# (checked to 4000 rad/fs), not just inside the tabulated band.  Nonzero
# phases can fit the band slightly better but acquire gain (Im eps < 0) at
# high frequency, and broadband grid noise then grows without bound in long
# time-domain runs.
SILICON = DrudeCPModel(
    eps_inf=13.499999999999991,
    drude_omega=2.925676870078187,
    drude_gamma=0.05000000000000121,
    poles=(
        CriticalPoint(amplitude=0.6638008723813438, omega=4.901630811636631,
                      phase=0.0, gamma=0.10000000000000112),
        CriticalPoint(amplitude=5.324722978701498e-22, omega=8.768492474498835,
                      phase=0.0, gamma=1.9697063969830513),
    ),
)

SILICON_FIT_MAX_RELERR = 6.74e-3
