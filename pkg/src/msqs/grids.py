"""Grid descriptions for the field solver and the wave-function window.

Two staggered rectangular grids coexist:

* ``YeeGrid`` — the electromagnetic grid.  All field arrays have shape
  (nx, ny) and live at the standard TE_z staggered positions

      Ex[i, j] at (x0 + (i + 1/2) dx,  y0 + j dy)
      Ey[i, j] at (x0 + i dx,          y0 + (j + 1/2) dy)
      Hz[i, j] at (x0 + (i + 1/2) dx,  y0 + (j + 1/2) dy)

  The last Ex row in y (j = ny-1) and last Ey column in x feed the
  boundary; with PML all tangential E on the outermost layer stays zero
  (PEC backing), with periodic boundaries the arrays wrap.

* ``PsiGrid`` — the quantum window.  psi[i, j] is collocated at
  (wx0 + i hx, wy0 + j hy); the window origin (wx0, wy0) may shift during
  a run by whole electromagnetic cells.  Sizes are powers of two so the
  FFT-based operators stay cheap and the Nyquist bin exists explicitly.

Spectral axes follow the convention psi~(k) = (h_x h_y / 2 pi) FFT[psi],
which makes sum |psi~|^2 dkx dky == sum |psi|^2 hx hy exactly (discrete
Parseval) — norm bookkeeping relies on that identity being exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def k_axis(n: int, h: float) -> np.ndarray:
    """FFT angular wavenumber axis (rad/nm) for n samples of spacing h."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=h)


def k_axis_odd(n: int, h: float) -> np.ndarray:
    """k axis for odd-order spectral derivatives: Nyquist bin zeroed.

    The Nyquist mode of a real signal has no well-defined sign of k; keeping
    it in ik*F would break the skew symmetry of the derivative operator (and
    with it discrete anti-Hermiticity of the gauge term), so it is dropped.
    """
    k = k_axis(n, h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


@dataclass(frozen=True)
class YeeGrid:
    """Uniform 2-D electromagnetic grid (TE_z: Ex, Ey, Hz)."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("YeeGrid needs at least 2x2 cells")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid spacings must be positive")

    # --- node coordinate arrays (1-D, to be broadcast) ---------------------
    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def x_edges(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def y_edges(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny) * self.dy

    def ex_coords(self):
        return self.x_centers(), self.y_edges()

    def ey_coords(self):
        return self.x_edges(), self.y_centers()

    def hz_coords(self):
        return self.x_centers(), self.y_centers()

    def zeros(self) -> np.ndarray:
        return np.zeros((self.nx, self.ny))

    def cfl_dt(self, safety: float = 0.98) -> float:
        """Largest stable Maxwell step: safety / (c sqrt(1/dx^2 + 1/dy^2))."""
        from .constants import C

        return safety / (C * np.sqrt(1.0 / self.dx**2 + 1.0 / self.dy**2))


@dataclass
class PsiGrid:
    """Wave-function window: collocated complex field on a shiftable origin."""

    nx: int
    ny: int
    hx: float
    hy: float
    wx0: float = 0.0
    wy0: float = 0.0

    def __post_init__(self):
        if not (is_power_of_two(self.nx) and is_power_of_two(self.ny)):
            raise ValueError("psi window sizes must be powers of two")
        if self.hx <= 0 or self.hy <= 0:
            raise ValueError("grid spacings must be positive")

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def x(self) -> np.ndarray:
        return self.wx0 + np.arange(self.nx) * self.hx

    def y(self) -> np.ndarray:
        return self.wy0 + np.arange(self.ny) * self.hy

    def xy(self):
        """Broadcastable (x[:, None], y[None, :]) coordinate pair."""
        return self.x()[:, None], self.y()[None, :]

    def kx(self) -> np.ndarray:
        return k_axis(self.nx, self.hx)

    def ky(self) -> np.ndarray:
        return k_axis(self.ny, self.hy)

    def kx_odd(self) -> np.ndarray:
        return k_axis_odd(self.nx, self.hx)

    def ky_odd(self) -> np.ndarray:
        return k_axis_odd(self.ny, self.hy)

    @property
    def dkx(self) -> float:
        return 2.0 * np.pi / (self.nx * self.hx)

    @property
    def dky(self) -> float:
        return 2.0 * np.pi / (self.ny * self.hy)

    def zeros(self) -> np.ndarray:
        return np.zeros((self.nx, self.ny), dtype=np.complex128)

    def norm(self, psi: np.ndarray) -> float:
        """L2 norm integral sum|psi|^2 hx hy (== 1 for a normalized state)."""
        return float(np.vdot(psi, psi).real * self.cell_area)

    def normalize(self, psi: np.ndarray) -> np.ndarray:
        n = self.norm(psi)
        if n <= 0.0:
            raise ValueError("cannot normalize a zero field")
        return psi / np.sqrt(n)

    def to_k(self, psi: np.ndarray) -> np.ndarray:
        """Momentum amplitude psi~(k) with exact discrete Parseval pairing."""
        import scipy.fft

        return scipy.fft.fft2(psi) * (self.cell_area / (2.0 * np.pi))

    def from_k(self, psik: np.ndarray) -> np.ndarray:
        import scipy.fft

        return scipy.fft.ifft2(psik) * (2.0 * np.pi / self.cell_area)

    def shifted(self, cells_x: int) -> "PsiGrid":
        """New grid with the window origin moved by whole cells along x."""
        return PsiGrid(self.nx, self.ny, self.hx, self.hy,
                       self.wx0 + cells_x * self.hx, self.wy0)
