"""Closed-form references and spectrum analysis.

One half of this module is analytic physics used as test oracles and for
run design: exact free Gaussian evolution, the width-spreading law, the
exact spectral free propagator on the discrete grid, thin-film reflection
and transmission, and the synchronicity/dephasing design formulas.

The other half extracts observables from computed states: the longitudinal
momentum distribution, photon-sideband spacing, transverse diffraction
orders, and the acceleration gradient from trajectory data.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft
from scipy.signal import find_peaks

from .constants import C, D_KIN, HBAR, M0
from .errors import MsqsError, NOT_ENOUGH_SIDEBANDS, ANALYZE_INPUT
from .grids import PsiGrid
from .tdse import ENVELOPE, FULL

# ---------------------------------------------------------------------------
# analytic free-packet references
# ---------------------------------------------------------------------------


def _gauss_1d(x: np.ndarray, t: float, x0: float, w: float, k0: float):
    """Exact free evolution of exp(-(x-x0)^2/4w^2) e^{i k0 x} (normalized)."""
    b = w * w + 0.5j * HBAR * t / M0
    v = HBAR * k0 / M0
    xc = x - x0 - v * t
    pref = (2.0 * math.pi * w * w) ** -0.25 * (w * w / b) ** 0.5
    phase = k0 * (x - x0) - 0.5 * HBAR * k0 * k0 * t / M0
    return pref * np.exp(-xc * xc / (4.0 * b) + 1j * phase)


def free_gaussian(grid: PsiGrid, t: float, *, x0: float, y0: float,
                  w_long: float, w_trans: float, k_e: float,
                  representation: str = ENVELOPE) -> np.ndarray:
    """Exact free-space wave packet at time t, sampled on the window.

    The envelope representation strips the carrier plane wave in space AND
    time, psi_env = psi_full exp(-i k_e x + i w_e t) with
    w_e = hbar k_e^2 / 2m, matching the shifted kinetic operator
    D[(kx+k_e)^2 + ky^2] - D k_e^2 used by the stepper.
    """
    x = grid.x()
    y = grid.y()
    px = _gauss_1d(x, t, x0, w_long, k_e)
    py = _gauss_1d(y, t, y0, w_trans, 0.0)
    psi = px[:, None] * py[None, :]
    if representation == ENVELOPE:
        w_e = 0.5 * HBAR * k_e * k_e / M0
        psi = psi * np.exp(-1j * k_e * x)[:, None] * np.exp(1j * w_e * t)
    return psi


def packet_sigma(t: float, w: float) -> float:
    """Free-spreading width law: sigma^2(t) = w^2 + (hbar t / 2 m w)^2."""
    return math.sqrt(w * w + (0.5 * HBAR * t / (M0 * w)) ** 2)


def spreading_time(w: float) -> float:
    """Time for the width variance to double: t_s = 2 m w^2 / hbar."""
    return 2.0 * M0 * w * w / HBAR


def exact_free_step(grid: PsiGrid, psi: np.ndarray, t: float, *,
                    k_e: float, representation: str) -> np.ndarray:
    """Propagate any discrete state through exp(-i T t/hbar) exactly.

    T is the same k-diagonal kinetic operator the stepper uses, so this is
    the limiting solution of the time discretization (not of the spatial
    one) — the right yardstick for time-stepping error and unitarity.
    """
    kx = grid.kx()[:, None]
    ky = grid.ky()[None, :]
    if representation == ENVELOPE:
        t_k = D_KIN * ((kx + k_e) ** 2 + ky**2) - D_KIN * k_e**2
    elif representation == FULL:
        t_k = D_KIN * (kx**2 + ky**2)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    return scipy.fft.ifft2(np.exp(-1j * t_k * t / HBAR) * scipy.fft.fft2(psi))


# ---------------------------------------------------------------------------
# thin-film optics (transfer matrix, normal incidence, e^{-iwt})
# ---------------------------------------------------------------------------


def multilayer_rt(layers: list[tuple[complex, float]], omega: float,
                  n_in: complex = 1.0, n_out: complex = 1.0):
    """Amplitude (r, t) of a normal-incidence stack between half-spaces.

    layers: [(complex refractive index, thickness nm), ...] ordered along
    propagation.  Power reflectance is |r|^2; transmittance
    |t|^2 Re(n_out)/Re(n_in).

    Cascades amplitude transfer matrices: an interface from index a to b
    contributes (1/t_ab) [[1, r_ab], [r_ab, 1]] and a layer of phase
    thickness phi = n k0 d contributes diag(e^{-i phi}, e^{+i phi}),
    mapping (forward, backward) amplitudes on the exit side to the entry
    side.  Then t = 1/M00 and r = M10/M00.  Unlike the characteristic
    matrix in (E, H) variables, this form stays passive for absorbing
    layers: |r|^2 + |t|^2 <= 1 whenever Im n >= 0.
    """
    k0 = omega / C

    def interface(na, nb):
        r_ab = (na - nb) / (na + nb)
        t_ab = 2.0 * na / (na + nb)
        return np.array([[1.0, r_ab], [r_ab, 1.0]], dtype=complex) / t_ab

    indices = [n_in] + [n for n, _ in layers] + [n_out]
    m = np.eye(2, dtype=complex)
    for k, (n, d) in enumerate(layers):
        phi = n * k0 * d
        m = m @ interface(indices[k], n)
        m = m @ np.array([[np.exp(-1j * phi), 0.0],
                          [0.0, np.exp(1j * phi)]])
    m = m @ interface(indices[-2], n_out)
    r = m[1, 0] / m[0, 0]
    t = 1.0 / m[0, 0]
    return complex(r), complex(t)


def slab_power_rt(n_slab: complex, thickness: float, omega: float):
    """(R, T) power coefficients of one slab in vacuum at normal incidence."""
    r, t = multilayer_rt([(n_slab, thickness)], omega)
    return abs(r) ** 2, abs(t) ** 2


# ---------------------------------------------------------------------------
# momentum-space observables
# ---------------------------------------------------------------------------


def longitudinal_spectrum(grid: PsiGrid, psi: np.ndarray, *, k_e: float = 0.0,
                          representation: str = ENVELOPE):
    """Gamma_L(kx) = integral |psi~|^2 dky, on an ascending physical kx axis.

    In the envelope representation the stored momenta are offsets from the
    carrier, so the axis is shifted by k_e before sorting; spectra from
    either representation of the same state then line up bin for bin.
    """
    pk = grid.to_k(psi)
    dens = (pk * pk.conj()).real
    gamma = dens.sum(axis=1) * grid.dky
    kx = grid.kx()
    if representation == ENVELOPE:
        kx = kx + k_e
    order = np.argsort(kx)
    return kx[order], gamma[order]


def transverse_slice(grid: PsiGrid, psi: np.ndarray, *, k_e: float = 0.0,
                     representation: str = ENVELOPE,
                     kx_at: float | None = None):
    """|psi~(kx*, ky)|^2 along ky at the carrier (or requested) kx bin."""
    pk = grid.to_k(psi)
    dens = (pk * pk.conj()).real
    kx = grid.kx()
    if representation == ENVELOPE:
        kx = kx + k_e
    target = k_e if kx_at is None else kx_at
    idx = int(np.argmin(np.abs(kx - target)))
    ky = grid.ky()
    order = np.argsort(ky)
    return ky[order], dens[idx, order]


def sideband_spacing(k: np.ndarray, density: np.ndarray, *,
                     prominence_frac: float = 0.05,
                     min_peaks: int = 2):
    """Mean spacing of spectral peaks (rad/nm) and the peak positions.

    Peaks are detected with a prominence threshold relative to the spectrum
    maximum.  Raises NOT_ENOUGH_SIDEBANDS when fewer than ``min_peaks``
    survive — drive was too weak, window too short, or spectrum unresolved.
    """
    if k.ndim != 1 or k.shape != density.shape:
        raise MsqsError(ANALYZE_INPUT, "spectrum arrays must be 1-D and equal length")
    peaks, _ = find_peaks(density, prominence=prominence_frac * density.max())
    if len(peaks) < min_peaks:
        raise MsqsError(
            NOT_ENOUGH_SIDEBANDS,
            f"found {len(peaks)} spectral peaks, need >= {min_peaks}; "
            f"lower the prominence threshold or drive harder")
    spacings = np.diff(k[peaks])
    return float(np.median(spacings)), k[peaks]


def spectrum_centroid_energy(k: np.ndarray, gamma: np.ndarray) -> float:
    """Kinetic energy (eV) of the Gamma_L centroid momentum."""
    w = gamma.sum()
    if w <= 0.0:
        raise MsqsError(ANALYZE_INPUT, "empty spectrum")
    kc = float((k * gamma).sum() / w)
    return D_KIN * kc * kc


def gradient_fit(x_nm: np.ndarray, vx_nm_fs: np.ndarray):
    """Least-squares acceleration gradient from trajectory samples.

    Fits 1/2 m <vx>^2 against <x>; the slope is the energy gradient in
    eV/nm (multiply by 1e3 for MeV/m).  Returns (gradient, intercept).
    """
    ke = 0.5 * M0 * np.asarray(vx_nm_fs) ** 2
    a = np.polyfit(np.asarray(x_nm), ke, 1)
    return float(a[0]), float(a[1])


# ---------------------------------------------------------------------------
# synchronicity / dephasing design formulas
# ---------------------------------------------------------------------------


def dephasing_length(period_nm: float, v0_nm_fs: float,
                     gradient_ev_nm: float) -> float:
    """Distance over which a constant-period device slips pi out of phase.

    With kinetic energy growing linearly (gradient g), the velocity runs
    away from the design velocity v0 and the accumulated phase slip is

        dphi(L) = integral_0^L (2 pi / Lambda)(1 - v0 / v(x)) dx,
        v(x) = v0 sqrt(1 + g x / E0),   E0 = m v0^2 / 2.

    Solved in closed form: with u = sqrt(1 + g L / E0),
        dphi = (2 pi E0 / (Lambda g)) (u - 1)^2 .
    Setting dphi = pi gives L.
    """
    if gradient_ev_nm <= 0.0:
        return math.inf
    e0 = 0.5 * M0 * v0_nm_fs**2
    u = 1.0 + math.sqrt(period_nm * gradient_ev_nm / (2.0 * e0))
    return (u * u - 1.0) * e0 / gradient_ev_nm
