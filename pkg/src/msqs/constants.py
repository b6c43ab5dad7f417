"""Physical constants and unit helpers.

The whole package works in a single unit system chosen so that every
quantity of interest is O(1)-ish for nanophotonics with sub-relativistic
electrons:

    length  : nm
    time    : fs
    energy  : eV
    charge  : e (elementary charge)

Consequences (all derived, none independent):

    electric field      V/nm      (1 V/nm = 1 GV/m)
    scalar potential    V         (q*phi is then directly in eV)
    vector potential    V*fs/nm
    magnetic field      stored normalized, Hz_tilde = Z0*Hz, in V/nm,
                        so a vacuum plane wave has |E| = |Hz_tilde|

Electron mass in these units: m0 = (m0 c^2) / c^2 = 5.6856e-6 * ... see
M0 below. The electron's charge is q = -E_CHARGE.
"""

from __future__ import annotations

import math

# --- fundamental values (CODATA) -------------------------------------------
HBAR = 0.6582119569          # eV*fs
C = 299.792458               # nm/fs
M0C2 = 510998.95             # eV, electron rest energy
M0 = M0C2 / (C * C)          # eV*fs^2/nm^2  (= 5.685630)
E_CHARGE = 1.0               # elementary charge in units of e
Q_ELECTRON = -E_CHARGE       # signed electron charge

# e/eps0 in V*nm: Poisson coupling for a number density given per nm^2
# (2D sheet model).  del^2 phi = -(e/eps0) * n  with n in 1/nm^2 gives phi
# in V when lengths are in nm.
COULOMB_VNM = 18.095128      # V*nm

# Kinetic prefactor hbar^2/(2 m0) appearing in the dispersion E = D k^2.
D_KIN = HBAR * HBAR / (2.0 * M0)   # eV*nm^2, = 0.0380998...


def omega_from_wavelength(lambda_nm: float) -> float:
    """Angular frequency (rad/fs) of light with vacuum wavelength lambda_nm."""
    return 2.0 * math.pi * C / lambda_nm


def wavelength_from_omega(omega: float) -> float:
    """Vacuum wavelength (nm) for angular frequency omega (rad/fs)."""
    return 2.0 * math.pi * C / omega


def photon_energy_ev(lambda_nm: float) -> float:
    """Photon energy (eV) at vacuum wavelength lambda_nm."""
    return HBAR * omega_from_wavelength(lambda_nm)


def electron_velocity(kinetic_ev: float) -> float:
    """Electron speed (nm/fs) for a given kinetic energy, non-relativistic."""
    return math.sqrt(2.0 * kinetic_ev / M0)


def electron_kinetic_ev(v_nm_fs: float) -> float:
    """Non-relativistic kinetic energy (eV) at speed v (nm/fs)."""
    return 0.5 * M0 * v_nm_fs * v_nm_fs


def electron_wavenumber(v_nm_fs: float) -> float:
    """de Broglie wavenumber k = m v / hbar (rad/nm) at speed v (nm/fs)."""
    return M0 * v_nm_fs / HBAR


def synchronous_period(velocity_c: float, lambda_nm: float, m: int = 1) -> float:
    """Grating period (nm) phase-matched to an electron of speed velocity_c.

    An electron crossing m periods per optical cycle sees a stationary kick
    phase: Lambda = m * (v/c) * lambda0.  Velocity is in units of c.
    """
    if m < 1 or m != int(m):
        raise ValueError("harmonic order m must be a positive integer")
    return m * velocity_c * lambda_nm
