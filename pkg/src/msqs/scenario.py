"""Grating geometry, laser timing and synchronicity for accelerator runs.

A grating is a row of rectangular silicon rods along x.  The electron
travels along the x axis at y = 0.  ``double`` layouts place mirrored rod
rows across a vacuum gap centered on the axis; ``single`` layouts put one
row below the axis at a standoff distance.  Chirped layouts grow the local
period linearly in x so the near-field phase velocity keeps step with an
accelerating electron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C, synchronous_period
from .errors import MsqsError
from .grids import YeeGrid

GRATING_KINDS = ("none", "single", "double", "double_chirped")


@dataclass(frozen=True)
class GratingSpec:
    """Geometry of one grating (lengths in nm).

    ``period`` is the element pitch; for ``double_chirped`` it is the pitch
    at the grating start, growing linearly to ``period_end`` over
    ``chirp_length`` (default: the design length ``n_elements * period``).
    Element n is placed one local period after element n-1.
    """

    kind: str = "double"
    period: float = 33.2
    n_elements: int = 12
    rod_width: float = 16.0
    rod_height: float = 20.0
    gap: float = 30.0              # double kinds: vacuum gap on the axis
    standoff: float = 4.0          # single kind: axis height above rod tops
    period_end: float | None = None   # double_chirped: pitch at chirp end
    chirp_length: float | None = None
    x_start: float = 0.0           # leading edge of the first rod

    def __post_init__(self):
        if self.kind not in GRATING_KINDS:
            raise MsqsError.config_value(
                f"[grating].kind must be one of {GRATING_KINDS}, got {self.kind!r}")
        if self.kind == "none":
            return
        if self.n_elements < 1:
            raise MsqsError.config_value("[grating].n_elements must be >= 1")
        if self.rod_width <= 0 or self.rod_height <= 0:
            raise MsqsError.config_value(
                "[grating].rod_width_nm and rod_height_nm must be positive")
        if self.period <= self.rod_width:
            raise MsqsError.config_value(
                f"[grating].period_nm {self.period} must exceed rod_width_nm "
                f"{self.rod_width}")
        if self.kind.startswith("double") and self.gap <= 0:
            raise MsqsError.config_value("[grating].gap_nm must be positive")
        if self.kind == "single" and self.standoff <= 0:
            raise MsqsError.config_value("[grating].standoff_nm must be positive")
        if self.kind == "double_chirped":
            if self.period_end is None:
                raise MsqsError.config_value(
                    "double_chirped grating needs [grating].period_end_nm")
            if self.period_end <= self.period:
                raise MsqsError.config_value(
                    "chirped period must grow: [grating].period_end_nm > period_nm")
            if self.chirp_length is not None and self.chirp_length <= 0:
                raise MsqsError.config_value(
                    "[grating].chirp_length_nm must be positive")

    @property
    def design_length(self) -> float:
        """Nominal span: element count times the starting pitch."""
        return self.n_elements * self.period

    @property
    def _chirp_span(self) -> float:
        return (self.chirp_length if self.chirp_length is not None
                else self.design_length)

    def local_period(self, x: float) -> float:
        """Pitch at position x (linear chirp; constant for uniform kinds)."""
        if self.kind != "double_chirped":
            return self.period
        u = (x - self.x_start) / self._chirp_span
        return self.period + (self.period_end - self.period) * min(max(u, 0.0), 1.0)

    def element_positions(self) -> list[float]:
        """Leading-edge x of every rod: x_{n+1} = x_n + local_period(x_n)."""
        if self.kind == "none":
            return []
        xs = [self.x_start]
        for _ in range(self.n_elements - 1):
            xs.append(xs[-1] + self.local_period(xs[-1]))
        return xs

    def rods(self) -> list[tuple[float, float, float, float]]:
        """Rod rectangles (xa, xb, ya, yb) with the electron axis at y = 0."""
        rects = []
        for x in self.element_positions():
            xa, xb = x, x + self.rod_width
            if self.kind == "single":
                top = -self.standoff
                rects.append((xa, xb, top - self.rod_height, top))
            else:
                lo = self.gap / 2.0
                rects.append((xa, xb, lo, lo + self.rod_height))
                rects.append((xa, xb, -lo - self.rod_height, -lo))
        return rects

    @property
    def x_end(self) -> float:
        """Trailing edge of the last rod."""
        pos = self.element_positions()
        if not pos:
            return self.x_start
        return pos[-1] + self.rod_width

    def synchronicity_mismatch(self, velocity_c: float, wavelength: float,
                               m: int = 1) -> float:
        """|Λ − m·V_e·λ0/c| / Λ at the grating start."""
        lam_sync = synchronous_period(velocity_c, wavelength, m)
        return abs(self.period - lam_sync) / self.period


def build_grating(spec: GratingSpec, grid: YeeGrid,
                  wavelength: float | None = None) -> np.ndarray:
    """Rasterize the rods to a boolean Yee-cell map (cell = Hz node).

    A cell is silicon iff its center lies inside a rod.  Mirror layouts on a
    y-symmetric grid rasterize to exactly y-mirror-symmetric maps.  When a
    wavelength is given, every rod must keep at least λ0/2 of vacuum to each
    domain wall (the absorbers need working distance from scatterers).
    """
    rects = spec.rods()
    margin = 0.5 * wavelength if wavelength is not None else 0.0
    x_lo, x_hi = grid.x0 + margin, grid.x0 + grid.nx * grid.dx - margin
    y_lo, y_hi = grid.y0 + margin, grid.y0 + grid.ny * grid.dy - margin
    for r in rects:
        if r[0] < x_lo or r[1] > x_hi or r[2] < y_lo or r[3] > y_hi:
            raise MsqsError.config_value(
                f"grating rod x=[{r[0]:.1f}, {r[1]:.1f}] y=[{r[2]:.1f}, "
                f"{r[3]:.1f}] nm leaves less than {margin:.1f} nm of vacuum "
                f"to the domain walls")
    pos = spec.element_positions()
    for a, b in zip(pos, pos[1:]):
        if b < a + spec.rod_width:
            raise MsqsError.config_value(
                f"grating elements at x={a:.2f} and x={b:.2f} nm overlap")
    cells = np.zeros((grid.nx, grid.ny), dtype=bool)
    xc = grid.x0 + (np.arange(grid.nx) + 0.5) * grid.dx
    yc = grid.y0 + (np.arange(grid.ny) + 0.5) * grid.dy
    eps = 1e-9
    for (xa, xb, ya, yb) in rects:
        inx = (xc >= xa - eps) & (xc <= xb + eps)
        iny = (yc >= ya - eps) & (yc <= yb + eps)
        cells |= inx[:, None] & iny[None, :]
    return cells


@dataclass(frozen=True)
class LaserSpec:
    """Pulsed drive: counterpropagating beams along ±y (lengths nm, time fs)."""

    wavelength: float = 830.0
    e_peak: float = 0.5            # V/nm per beam
    fwhm: float | None = None      # None -> transit time of the packet
    cep: float | None = None       # None -> aligned by align_laser_timing
    t_peak: float | None = None    # None -> aligned by align_laser_timing
    beams: str = "both"

    def __post_init__(self):
        if self.wavelength <= 0:
            raise MsqsError.config_value("[laser].wavelength_nm must be positive")
        if self.e_peak < 0:
            raise MsqsError.config_value("[laser].e_peak_v_nm must be >= 0")
        if self.fwhm is not None and self.fwhm <= 0:
            raise MsqsError.config_value("[laser].fwhm_fs must be positive")
        if self.beams not in ("both", "up", "down"):
            raise MsqsError.config_value(
                f"[laser].beams must be both/up/down, got {self.beams!r}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * C / self.wavelength


@dataclass(frozen=True)
class PacketSpec:
    """Initial Gaussian electron packet (widths are |psi| std devs, nm)."""

    velocity_c: float = 0.04
    w_long: float = 10.0
    w_trans: float = 5.0
    x0: float = -150.0
    y0: float = 0.0
    representation: str = "envelope"

    def __post_init__(self):
        if not 0.0 < self.velocity_c < 1.0:
            raise MsqsError.config_value(
                "[electron].velocity_c must lie in (0, 1)")
        if self.w_long <= 0 or self.w_trans <= 0:
            raise MsqsError.config_value(
                "[electron].w_long_nm and w_trans_nm must be positive")
        if self.representation not in ("envelope", "full"):
            raise MsqsError.config_value(
                f"[electron].representation must be envelope or full, got "
                f"{self.representation!r}")

    @property
    def velocity(self) -> float:
        return self.velocity_c * C


@dataclass(frozen=True)
class LaserTiming:
    """Resolved pulse timing: the run starts at t = 0."""

    t_peak: float       # envelope maximum at the grating midpoint (fs)
    cep: float          # carrier-envelope phase (rad)
    fwhm: float         # field-envelope FWHM (fs)
    t_arrival: float    # electron arrival at the first element (fs)
    t_transit: float    # traversal time of the grating (fs)


def align_laser_timing(grating: GratingSpec, laser: LaserSpec,
                       packet: PacketSpec) -> LaserTiming:
    """Pulse timing that drives the packet through the whole grating.

    The envelope maximum is placed at the moment the packet center reaches
    the grating midpoint, the FWHM defaults to the transit time, and the
    carrier phase is chosen so the field at the first element peaks when
    the electron arrives there: with E(t) ∝ cos(ω(t−t_peak) + cep), the
    arrival-time phase ω(t_arr − t_peak) + cep is driven to zero (mod 2π).
    """
    v = packet.velocity
    if grating.kind == "none":
        t_arr = max((0.0 - packet.x0) / v, 0.0)
        t_mid = t_arr
        transit = 0.0
    else:
        t_arr = (grating.x_start - packet.x0) / v
        t_mid = (0.5 * (grating.x_start + grating.x_end) - packet.x0) / v
        transit = (grating.x_end - grating.x_start) / v
    fwhm = laser.fwhm if laser.fwhm is not None else max(transit, 10.0)
    t_peak = laser.t_peak if laser.t_peak is not None else t_mid
    if laser.cep is not None:
        cep = laser.cep
    else:
        cep = math.remainder(-laser.omega * (t_arr - t_peak), 2.0 * math.pi)
    return LaserTiming(t_peak=t_peak, cep=cep, fwhm=fwhm,
                       t_arrival=t_arr, t_transit=transit)


def dephasing_length_estimate(velocity_c: float, gradient: float,
                              period: float | None = None,
                              wavelength: float = 830.0) -> float:
    """Grating length after which a uniform pitch slips by half a cycle.

    Under a constant kinetic-energy gradient g (eV/nm) the velocity outgrows
    the design velocity and the electron slides in phase against the
    near-field by dφ/dx = (2π/Λ)(1 − V_e0/V_e(x)); the returned length
    solves the accumulated slip Δφ(L) = π in closed form (see
    ``analytics.dephasing_length``).  Zero or negative gradient never
    dephases: returns +inf.  When no pitch is given it defaults to the
    synchronous period at the given wavelength.
    """
    from .analytics import dephasing_length

    if period is None:
        period = synchronous_period(velocity_c, wavelength)
    return dephasing_length(period, velocity_c * C, gradient)


@dataclass(frozen=True)
class Scenario:
    """The physical half of a run: geometry, drive and initial state."""

    grating: GratingSpec = field(default_factory=GratingSpec)
    laser: LaserSpec = field(default_factory=LaserSpec)
    packet: PacketSpec = field(default_factory=PacketSpec)

    def timing(self) -> LaserTiming:
        return align_laser_timing(self.grating, self.laser, self.packet)

    def summary(self) -> str:
        """Human-readable build report (periods, timing, synchronicity)."""
        g, p = self.grating, self.packet
        t = self.timing()
        lines = [f"grating: {g.kind}"]
        if g.kind != "none":
            lines += [
                f"  elements: {g.n_elements} over [{g.x_start:.1f}, "
                f"{g.x_end:.1f}] nm",
                f"  period: {g.period:.3f} nm"
                + (f" -> {g.period_end:.3f} nm over {g._chirp_span:.1f} nm"
                   if g.kind == "double_chirped" else ""),
                f"  synchronicity mismatch: "
                f"{g.synchronicity_mismatch(p.velocity_c, self.laser.wavelength):.3e}",
            ]
        lines += [
            f"electron: {p.velocity_c:.4f} c, widths ({p.w_long}, {p.w_trans}) nm, "
            f"{p.representation}",
            f"laser: {self.laser.wavelength} nm, {self.laser.e_peak} V/nm, "
            f"beams {self.laser.beams}",
            f"timing: arrival {t.t_arrival:.2f} fs, peak {t.t_peak:.2f} fs, "
            f"fwhm {t.fwhm:.2f} fs, cep {t.cep:.4f} rad",
        ]
        return "\n".join(lines)
