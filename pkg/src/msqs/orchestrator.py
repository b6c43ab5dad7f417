"""Coupled Maxwell-Schrodinger run loop.

One run owns two clocks locked to an integer ratio: the electromagnetic
solver advances ``substeps`` leapfrog steps of ``dt_maxwell`` for every
quantum step ``dt_psi = substeps * dt_maxwell``, so the two simulations
agree on the time at every quantum step boundary.  Each iteration:

1. advance the fields by ``substeps`` Maxwell steps,
2. gather (Ex, Ey) onto the wave-function window (zero outside the field
   domain; wrapped along x when the field domain is x-periodic),
3. solve the window Poisson problem for the longitudinal potential phi,
4. advance the Coulomb-gauge vector potential A by trapezoidal integration,
5. advance psi by one second-order-difference step, followed by the edge
   absorber,
6. record diagnostics / write due snapshots,
7. when window tracking is enabled and the local field is quiet, slide the
   window forward by whole cells to follow the packet.

Time centering: the leapfrog step psi(t-dt) -> psi(t+dt) applies H at time
t, so the Hamiltonian potentials used in iteration k are the ones produced
by stages 2-4 of iteration k-1 (they live exactly at the step center).  The
first step is bootstrapped with the discrete leapfrog root of the t=0
Hamiltonian, which is field-free for any run that starts before the pulse
arrives (the resolved configs guarantee a pre-roll of PRE_ROLL_FWHMS
envelope widths).

Norm bookkeeping: the edge absorber and the window shifts remove amplitude
from the live window; both removals are accumulated so that

    norm(t) + absorbed(t) + discarded(t) = 1        (to roundoff)

holds for the whole run.  The leapfrog interleaves two families of time
levels and the absorber hits each family once per two steps, so the
absorbed amount is accumulated per family and every diagnostics row (whose
norm is a single level) reports its own family's total — a single shared
accumulator would double-count and break the identity at the size of the
absorbed amount itself.  The diagnostics column ``absorbed_norm`` reports
absorber plus shift losses.  A packet reaching the leading window edge (norm in
the last three columns above 1e-6), or a window shift that would drop more
than 1e-8 of the norm, aborts the run with a RUNTIME_WINDOW error; any
non-finite state aborts with RUNTIME_NAN after dumping the state as
snapshots for post-mortem inspection.

Everything written to disk (diagnostics CSV, resolved config echo, report,
snapshots, spectrum CSVs) is emitted atomically and is a pure function of
the configuration, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .analytics import longitudinal_spectrum, spectrum_centroid_energy
from .config import ScenarioConfig, echo
from .constants import HBAR, M0, Q_ELECTRON, electron_wavenumber
from .errors import MsqsError
from .grids import PsiGrid, YeeGrid
from .maxwell import DispersiveRegion, MaxwellSolver, PMLParams, PulsedBeamPair
from .materials import SILICON
from .potentials import GaugeFields, PoissonDF, divergence_fd
from .scenario import build_grating
from .snapshots import (REPRESENTATION_ENVELOPE, REPRESENTATION_FULL,
                        SnapshotHeader, SnapshotKind, atomic_write_text,
                        write_snapshot)
from .tdse import (ENVELOPE, EdgeAbsorber, SchrodingerSolver, StepPlan,
                   gaussian_packet, spectral_radius)

DIAG_COLUMNS = ("time_fs", "norm", "x_nm", "y_nm", "vx_nm_fs", "ke_eV",
                "gauge_resid", "absorbed_norm")

# Window-tracking policy: consider a shift every so many steps, move only in
# chunks of at least this many cells, and only while the gathered |E| is
# below this fraction of the drive amplitude ("quiet" field).
_SHIFT_CHECK_STRIDE = 16
_SHIFT_MIN_CELLS = 8
_QUIET_FIELD_FRAC = 0.05
# Abort thresholds (see module docstring).
_LEAD_EDGE_NORM = 1e-6
_SHIFT_DROP_NORM = 1e-8


# --- step-size negotiation -----------------------------------------------------

def _potential_allowance(cfg: ScenarioConfig, pgrid: PsiGrid,
                         k_e: float) -> float:
    """Crude upper bound (eV) on the coupling terms of H for step sizing.

    |q phi| is bounded by the drive amplitude times the transverse span it
    can act across; the A terms by the peak vector potential of two
    superposed beams acting on the largest resolvable wavenumber.
    """
    e0 = cfg.laser.e_peak
    if e0 <= 0.0:
        return 0.5
    g = cfg.grating
    if g.kind in ("double", "double_chirped"):
        span = g.gap
    elif g.kind == "single":
        span = g.standoff + g.rod_height
    else:
        span = 0.0
    v_phi = e0 * max(span, 10.0)
    a_max = 2.0 * e0 / cfg.laser.omega
    k_abs = math.pi / pgrid.hx + (abs(k_e) if
                                  cfg.packet.representation == ENVELOPE
                                  else 0.0)
    v_gauge = (HBAR * a_max / M0) * k_abs + a_max * a_max / (2.0 * M0)
    return v_phi + v_gauge


def choose_timesteps(cfg: ScenarioConfig) -> StepPlan:
    """Lock the two clocks: dt_psi = substeps * dt_maxwell under both bounds.

    The Maxwell step defaults to the CFL limit of its grid; the quantum step
    targets half the stability bound hbar/rho(H) and is then snapped UP to
    the next integer multiple of the Maxwell step (the snapped step still
    sits below the full bound whenever a valid ratio exists).
    """
    n = cfg.numerics
    ygrid = YeeGrid(n.maxwell_nx, n.maxwell_ny, n.dx_nm, n.dy_nm,
                    n.maxwell_x0_nm, n.maxwell_y0_nm)
    cfl = ygrid.cfl_dt()
    dt_m = n.dt_maxwell_fs if n.dt_maxwell_fs is not None else cfl
    if dt_m <= 0.0:
        raise MsqsError.config_stability("dt_maxwell_fs must be positive")
    if dt_m > cfl * (1.0 + 1e-12):
        raise MsqsError.config_stability(
            f"dt_maxwell_fs = {dt_m:.6e} fs exceeds the CFL limit "
            f"{cfl:.6e} fs of the {n.dx_nm} x {n.dy_nm} nm field grid")

    pgrid = PsiGrid(n.psi_nx, n.psi_ny, n.psi_hx_nm, n.psi_hy_nm,
                    n.psi_x0_nm, n.psi_y0_nm)
    k_e = electron_wavenumber(cfg.packet.velocity)
    v_allow = _potential_allowance(cfg, pgrid, k_e)
    bound = HBAR / spectral_radius(pgrid, k_e, cfg.packet.representation,
                                   v_allow)

    if n.dt_tdse_fs is not None:
        r = max(1, int(round(n.dt_tdse_fs / dt_m)))
    else:
        r = max(1, math.ceil(0.5 * bound / dt_m))
    dt_s = r * dt_m
    if not dt_s < bound:
        raise MsqsError.config_stability(
            f"quantum step {dt_s:.6e} fs (= {r} Maxwell steps) is not below "
            f"the stability bound {bound:.6e} fs; refine dt_maxwell_fs or "
            f"coarsen the psi grid")
    if r > 100000:
        raise MsqsError.config_stability(
            f"substep ratio {r} exceeds 100000 — the field and quantum "
            f"grids are too dissimilar to co-advance")
    return StepPlan(dt_maxwell=dt_m, dt_psi=dt_s, substeps=r,
                    bound_psi=bound)


# --- staggered-field gather ------------------------------------------------------

class _AxisMap:
    """1-D bilinear gather plan: source indices, weights, validity."""

    def __init__(self, frac: np.ndarray, n_src: int, wrap: bool):
        if wrap:
            u = np.mod(frac, n_src)
            i0 = np.floor(u).astype(np.int64) % n_src
            self.w = u - np.floor(u)
            self.i0 = i0
            self.i1 = (i0 + 1) % n_src
            self.valid = np.ones(frac.shape, dtype=bool)
        else:
            self.valid = (frac >= 0.0) & (frac <= n_src - 1)
            i0 = np.clip(np.floor(frac), 0, n_src - 2).astype(np.int64)
            self.w = np.where(self.valid, frac - i0, 0.0)
            self.i0 = np.where(self.valid, i0, 0)
            self.i1 = self.i0 + 1


def _gather(f: np.ndarray, mx: _AxisMap, my: _AxisMap) -> np.ndarray:
    wu = mx.w[:, None]
    wv = my.w[None, :]
    out = (f[np.ix_(mx.i0, my.i0)] * (1.0 - wu) * (1.0 - wv)
           + f[np.ix_(mx.i1, my.i0)] * wu * (1.0 - wv)
           + f[np.ix_(mx.i0, my.i1)] * (1.0 - wu) * wv
           + f[np.ix_(mx.i1, my.i1)] * wu * wv)
    out *= (mx.valid[:, None] & my.valid[None, :])
    return out


class FieldSampler:
    """Gathers the staggered (Ex, Ey) onto the collocated psi window.

    Points outside the field domain read zero; when the field domain is
    x-periodic the gather wraps in x instead.  The per-axis plans are cached
    and only the x plans change when the window slides.
    """

    def __init__(self, ygrid: YeeGrid, pgrid: PsiGrid, wrap_x: bool):
        self.ygrid = ygrid
        self.wrap_x = wrap_x
        y = pgrid.y()
        self._y_ex = _AxisMap((y - ygrid.y0) / ygrid.dy, ygrid.ny, False)
        self._y_ey = _AxisMap((y - ygrid.y0) / ygrid.dy - 0.5, ygrid.ny,
                              False)
        self.rebase(pgrid)

    def rebase(self, pgrid: PsiGrid):
        g = self.ygrid
        x = pgrid.x()
        self._x_ex = _AxisMap((x - g.x0) / g.dx - 0.5, g.nx, self.wrap_x)
        self._x_ey = _AxisMap((x - g.x0) / g.dx, g.nx, self.wrap_x)

    def ex(self, field: np.ndarray) -> np.ndarray:
        return _gather(field, self._x_ex, self._y_ex)

    def ey(self, field: np.ndarray) -> np.ndarray:
        return _gather(field, self._x_ey, self._y_ey)


# --- results ---------------------------------------------------------------------

@dataclass(frozen=True)
class DiagRow:
    time_fs: float
    norm: float
    x_nm: float
    y_nm: float
    vx_nm_fs: float
    ke_eV: float
    gauge_resid: float
    absorbed_norm: float

    def as_csv(self) -> str:
        # repr of a Python float is shortest-round-trip: the text is exact,
        # so re-running a deterministic simulation reproduces the file
        # byte for byte.
        return ",".join(repr(float(v)) for v in (
            self.time_fs, self.norm, self.x_nm, self.y_nm, self.vx_nm_fs,
            self.ke_eV, self.gauge_resid, self.absorbed_norm))


@dataclass
class RunResult:
    """Everything a caller needs from a finished run."""

    config: ScenarioConfig
    plan: StepPlan
    grid: PsiGrid                   # final (possibly shifted) window
    psi: np.ndarray                 # final state on that window
    k_e: float
    rows: list[DiagRow]
    gamma_initial: tuple[np.ndarray, np.ndarray]   # (kx rad/nm, density)
    gamma_final: tuple[np.ndarray, np.ndarray]
    norm: float
    absorbed: float                 # cumulative edge-absorber removal
    discarded: float                # cumulative window-shift removal
    parity_rel_max: float           # max ||psi(y)|-|psi(-y)|| / max|psi|
    n_shifts: int
    n_steps: int
    out_dir: str | None

    @property
    def norm_closure(self) -> float:
        """|norm + absorbed + discarded - 1|, the bookkeeping defect."""
        return abs(self.norm + self.absorbed + self.discarded - 1.0)

    @property
    def centroid_gain_ev(self) -> float:
        """Final minus initial mean kinetic energy of the Gamma_L spectrum."""
        return (spectrum_centroid_energy(*self.gamma_final)
                - spectrum_centroid_energy(*self.gamma_initial))

    def diagnostics_text(self) -> str:
        lines = [",".join(DIAG_COLUMNS)]
        lines.extend(row.as_csv() for row in self.rows)
        return "\n".join(lines) + "\n"

    def report_text(self) -> str:
        cfg = self.config
        p = self.plan
        e_i = spectrum_centroid_energy(*self.gamma_initial)
        e_f = spectrum_centroid_energy(*self.gamma_final)
        lines = [
            "coupled run report",
            "==================",
            "",
            cfg.scenario.summary(),
            "",
            f"field grid    : {cfg.numerics.maxwell_nx} x "
            f"{cfg.numerics.maxwell_ny} cells, dx={cfg.numerics.dx_nm} nm, "
            f"dy={cfg.numerics.dy_nm} nm",
            f"psi window    : {self.grid.nx} x {self.grid.ny} cells, "
            f"hx={self.grid.hx} nm, hy={self.grid.hy} nm, final origin "
            f"({self.grid.wx0}, {self.grid.wy0}) nm",
            f"steps         : {self.n_steps} quantum steps of "
            f"{p.dt_psi:.6e} fs = {p.substeps} x {p.dt_maxwell:.6e} fs "
            f"(bound {p.bound_psi:.6e} fs)",
            f"window shifts : {self.n_shifts}",
            "",
            f"norm          : {self.norm!r}",
            f"absorbed      : {self.absorbed!r}",
            f"discarded     : {self.discarded!r}",
            f"closure       : {self.norm_closure:.3e}",
            f"parity        : {self.parity_rel_max:.3e} (max rel |psi| "
            f"mirror asymmetry)",
            "",
            f"spectrum mean energy initial: {e_i!r} eV",
            f"spectrum mean energy final  : {e_f!r} eV",
            f"centroid gain               : {self.centroid_gain_ev!r} eV",
        ]
        return "\n".join(lines) + "\n"


def _spectrum_csv(k: np.ndarray, gamma: np.ndarray) -> str:
    lines = ["kx_rad_nm,gamma"]
    lines.extend(f"{repr(float(a))},{repr(float(b))}"
                 for a, b in zip(k, gamma))
    return "\n".join(lines) + "\n"


# --- the orchestrator ---------------------------------------------------------------

class Orchestrator:
    """Builds every solver from a resolved config and drives the coupled loop."""

    def __init__(self, cfg: ScenarioConfig, *, progress: bool = False):
        self.cfg = cfg
        self.progress = progress
        n = cfg.numerics

        self.plan = choose_timesteps(cfg)
        self.ygrid = YeeGrid(n.maxwell_nx, n.maxwell_ny, n.dx_nm, n.dy_nm,
                             n.maxwell_x0_nm, n.maxwell_y0_nm)
        self.wrap_x = cfg.grating.kind == "none"
        bc = ("periodic", "pml") if self.wrap_x else ("pml", "pml")

        source = None
        if cfg.laser.e_peak > 0.0:
            source = self._build_source()
        region = None
        if cfg.grating.kind != "none":
            # validates clearances/overlaps as a side effect
            build_grating(cfg.grating, self.ygrid,
                          wavelength=cfg.laser.wavelength)
            region = DispersiveRegion(self.ygrid, cfg.grating.rods(),
                                      SILICON, self.plan.dt_maxwell)
        self.maxwell = MaxwellSolver(
            self.ygrid, dt=self.plan.dt_maxwell, bc=bc,
            pml=PMLParams(thickness=n.pml_cells), source=source,
            region=region)

        self.pgrid = PsiGrid(n.psi_nx, n.psi_ny, n.psi_hx_nm, n.psi_hy_nm,
                             n.psi_x0_nm, n.psi_y0_nm)
        self.k_e = electron_wavenumber(cfg.packet.velocity)
        self.representation = cfg.packet.representation
        try:
            self.absorber = EdgeAbsorber(self.pgrid)
        except ValueError as exc:
            raise MsqsError.config_value(
                f"psi window {n.psi_nx} x {n.psi_ny} cells is too small for "
                f"the edge absorber ({exc})") from None
        self.solver = SchrodingerSolver(
            self.pgrid, k_e=self.k_e, representation=self.representation,
            absorber=self.absorber)
        self.poisson = PoissonDF(n.psi_nx, n.psi_ny, n.psi_hx_nm,
                                 n.psi_hy_nm, tol=1e-6, check_every=10)
        self.gauge = GaugeFields(n.psi_nx, n.psi_ny, n.psi_hx_nm,
                                 n.psi_hy_nm)
        self.sampler = FieldSampler(self.ygrid, self.pgrid, self.wrap_x)

        self.psi = gaussian_packet(
            self.pgrid, x0=cfg.packet.x0, y0=cfg.packet.y0,
            w_long=cfg.packet.w_long, w_trans=cfg.packet.w_trans,
            k_e=self.k_e, representation=self.representation)

        if cfg.numerics.self_field:
            self._jx_m = self.ygrid.zeros()
            self._jy_m = self.ygrid.zeros()
            self.maxwell.set_current(self._jx_m, self._jy_m)

        self.out_dir = cfg.output.out_dir or None

    # -- construction helpers --------------------------------------------------

    def _build_source(self) -> PulsedBeamPair:
        cfg = self.cfg
        n = cfg.numerics
        j_mirror = int(round(-n.maxwell_y0_nm / n.dy_nm))
        if abs(n.maxwell_y0_nm + j_mirror * n.dy_nm) > 1e-9 * n.dy_nm:
            raise MsqsError.config_value(
                "the beam mirror plane y=0 must coincide with a field row; "
                "adjust [numerics].maxwell_y0_nm or dy_nm")
        margin = n.pml_cells + 13   # injection rows sit above the absorber
        j_up = margin
        j_dn = 2 * j_mirror - j_up  # exact mirror of j_up across the axis
        if not 0 < j_up < j_mirror < j_dn < n.maxwell_ny:
            raise MsqsError.config_value(
                f"field grid rows ({n.maxwell_ny}) cannot hold mirrored "
                f"injection planes at +-{(j_mirror - j_up) * n.dy_nm} nm")
        return PulsedBeamPair(
            e0=cfg.laser.e_peak, omega=cfg.laser.omega, fwhm=cfg.laser.fwhm,
            cep=cfg.laser.cep, t_peak=cfg.laser.t_peak, j_mirror=j_mirror,
            j_up=j_up, j_dn=j_dn, dy=n.dy_nm, beams=cfg.laser.beams)

    # -- emission helpers --------------------------------------------------------

    def _rep_tag(self) -> int:
        return (REPRESENTATION_ENVELOPE if self.representation == ENVELOPE
                else REPRESENTATION_FULL)

    def _window_header(self, kind: SnapshotKind, t: float) -> SnapshotHeader:
        g = self.pgrid
        # the header carries the carrier only when the payload actually
        # factored it out; a full-representation state needs k_e = 0
        k_e = self.k_e if self.representation == ENVELOPE else 0.0
        return SnapshotHeader(kind=kind, nx=g.nx, ny=g.ny, dx=g.hx, dy=g.hy,
                              x0=g.wx0, y0=g.wy0, time=t,
                              representation=self._rep_tag(), k_e=k_e)

    def _field_header(self, kind: SnapshotKind, t: float) -> SnapshotHeader:
        g = self.ygrid
        off = {SnapshotKind.FIELD_EX: (0.5, 0.0),
               SnapshotKind.FIELD_EY: (0.0, 0.5),
               SnapshotKind.FIELD_HZ: (0.5, 0.5)}[kind]
        return SnapshotHeader(kind=kind, nx=g.nx, ny=g.ny, dx=g.dx, dy=g.dy,
                              x0=g.x0 + off[0] * g.dx,
                              y0=g.y0 + off[1] * g.dy, time=t)

    def _emit_snapshots(self, step: int, t: float):
        if self.out_dir is None:
            return
        payloads = {
            "psi": (self._window_header(SnapshotKind.PSI_RE_IM, t),
                    lambda: self.psi),
            "ex": (self._field_header(SnapshotKind.FIELD_EX, t),
                   lambda: self.maxwell.ex),
            "ey": (self._field_header(SnapshotKind.FIELD_EY, t),
                   lambda: self.maxwell.ey),
            "hz": (self._field_header(SnapshotKind.FIELD_HZ, t),
                   lambda: self.maxwell.hz),
            "phi": (self._window_header(SnapshotKind.PHI, t),
                    lambda: self.gauge.phi),
            "ax": (self._window_header(SnapshotKind.A_X, t),
                   lambda: self.gauge.ax),
            "ay": (self._window_header(SnapshotKind.A_Y, t),
                   lambda: self.gauge.ay),
        }
        for name in self.cfg.output.snapshot_kinds:
            header, get = payloads[name]
            path = os.path.join(self.out_dir, f"{name}_{step:06d}.msqs")
            write_snapshot(path, header, get())

    def _dump_state(self, label: str) -> str:
        """Best-effort post-mortem dump; never raises. Returns a note."""
        if self.out_dir is None:
            return "no output directory, state not dumped"
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            t = self.maxwell.time
            write_snapshot(os.path.join(self.out_dir, f"{label}_psi.msqs"),
                           self._window_header(SnapshotKind.PSI_RE_IM, t),
                           self.psi)
            for name, kind, arr in (
                    ("ex", SnapshotKind.FIELD_EX, self.maxwell.ex),
                    ("ey", SnapshotKind.FIELD_EY, self.maxwell.ey),
                    ("hz", SnapshotKind.FIELD_HZ, self.maxwell.hz)):
                write_snapshot(
                    os.path.join(self.out_dir, f"{label}_{name}.msqs"),
                    self._field_header(kind, t), arr)
        except Exception:       # pragma: no cover - diagnostic path only
            return "state dump failed"
        return f"state dumped to {self.out_dir}"

    # -- the loop ----------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        plan = self.plan
        dt = plan.dt_psi
        n_steps = max(1, int(round(cfg.numerics.t_end_fs / dt)))
        diag_stride = cfg.output.diag_stride
        snap_stride = cfg.output.snapshot_stride_fs
        track = cfg.numerics.moving_window == "track"
        e_peak = cfg.laser.e_peak
        area = self.pgrid.cell_area

        psi_prev: np.ndarray | None = None
        psi_cur = self.psi
        # The leapfrog interleaves two families of levels (even/odd step
        # index); the absorber hits each family once per TWO steps, so norm
        # bookkeeping closes exactly only per family.  Index by level parity;
        # every diagnostics row reports the accumulator of its own level.
        absorbed_fam = [0.0, 0.0]
        level_parity = 0
        discarded = 0.0
        n_shifts = 0
        rows: list[DiagRow] = []

        # Mirror pairing across y = 0: row j reflects onto row m - j when the
        # lattice supports it (m integer); otherwise parity is not measurable.
        g = self.pgrid
        m_float = -2.0 * g.wy0 / g.hy
        m_int = int(round(m_float))
        if abs(m_float - m_int) < 1e-9:
            j = np.arange(g.ny)
            jm = m_int - j
            sel = (jm >= 0) & (jm < g.ny)
            parity_pairs = (j[sel], jm[sel])
            parity_rel_max = 0.0
        else:
            parity_pairs = None
            parity_rel_max = float("nan")

        gamma_initial = longitudinal_spectrum(
            self.pgrid, psi_cur, k_e=self.k_e,
            representation=self.representation)

        if self.out_dir is not None:
            os.makedirs(self.out_dir, exist_ok=True)

        def diag_row(t: float) -> DiagRow:
            norm = self.pgrid.norm(psi_cur)
            x_mean, y_mean = self.solver.mean_position(psi_cur)
            vx, vy = self.solver.mean_velocity(psi_cur)
            ke = 0.5 * M0 * (vx * vx + vy * vy)
            resid = self._interior_gauge_residual()
            return DiagRow(t, norm, x_mean, y_mean, vx, ke, resid,
                           absorbed_fam[level_parity] + discarded)

        def check_state(t: float, row: DiagRow):
            nonlocal parity_rel_max
            if not (math.isfinite(row.norm) and math.isfinite(row.vx_nm_fs)):
                note = self._dump_state("abort")
                raise MsqsError.runtime_nan(
                    f"non-finite quantum state at t = {t:.6f} fs "
                    f"(step {len(rows)}); {note}")
            if not math.isfinite(float(self.maxwell.hz[0, 0])) or not \
                    math.isfinite(float(np.max(np.abs(self.maxwell.hz)))):
                note = self._dump_state("abort")
                raise MsqsError.runtime_nan(
                    f"non-finite electromagnetic field at t = {t:.6f} fs; "
                    f"{note}")
            amag = np.abs(psi_cur)
            peak = float(amag.max())
            if parity_pairs is not None and peak > 0.0:
                ja, jb = parity_pairs
                asym = float(np.max(np.abs(amag[:, ja] - amag[:, jb])))
                parity_rel_max = max(parity_rel_max, asym / peak)
            # A sliding window zero-fills state behind its leading edge, so
            # mass reaching that edge means the window is too small and the
            # run must stop.  A fixed window instead ends in the absorber
            # skirt, whose losses the norm bookkeeping already accounts for.
            if track:
                lead = float(np.sum(amag[-3:, :] ** 2)) * area
                if lead > _LEAD_EDGE_NORM:
                    note = self._dump_state("abort")
                    raise MsqsError.runtime_window(
                        f"norm {lead:.3e} within three cells of the leading "
                        f"window edge at t = {t:.6f} fs — the window is too "
                        f"small (tracking holds the window still while the "
                        f"drive field is strong, because sliding zero-fills "
                        f"the time-integrated vector potential at the new "
                        f"edge); size psi_nx to span the whole interaction; "
                        f"{note}")

        def do_shift(cells: int):
            nonlocal psi_prev, psi_cur, discarded, n_shifts
            norm_now = self.pgrid.norm(psi_cur)
            drop = float(np.sum(np.abs(psi_cur[:cells, :]) ** 2)) * area
            if drop > _SHIFT_DROP_NORM * max(norm_now, 1e-300):
                note = self._dump_state("abort")
                raise MsqsError.runtime_window(
                    f"window shift would discard {drop:.3e} of the norm "
                    f"(> {_SHIFT_DROP_NORM:.0e} allowed); the absorber has "
                    f"not cleared the trailing edge; {note}")
            for arr in (psi_prev, psi_cur):
                if arr is not None:
                    arr[:-cells, :] = arr[cells:, :]
                    arr[-cells:, :] = 0.0
            for arr in (self.solver.ax, self.solver.ay, self.solver.phi):
                if arr is not None:
                    arr[:-cells, :] = arr[cells:, :]
                    arr[-cells:, :] = 0.0
            discarded += drop
            self.pgrid = self.pgrid.shifted(cells)
            self.solver.rebase_window(self.pgrid)
            self.gauge.shift(cells)
            self.poisson.shift_history(cells)
            self.sampler.rebase(self.pgrid)
            n_shifts += 1

        rows.append(diag_row(0.0))
        check_state(0.0, rows[-1])
        next_snap = 0.0
        if snap_stride > 0.0:
            self._emit_snapshots(0, 0.0)
            next_snap = snap_stride

        report_every = max(1, n_steps // 20)
        for k in range(n_steps):
            for _ in range(plan.substeps):
                self.maxwell.step()
            ex_w = self.sampler.ex(self.maxwell.ex)
            ey_w = self.sampler.ey(self.maxwell.ey)
            phi = self.poisson.solve(
                divergence_fd(ex_w, ey_w, self.pgrid.hx, self.pgrid.hy))
            self.gauge.advance(dt, ex_w, ey_w, phi)

            # H must act at the step center: use the potentials produced by
            # the PREVIOUS iteration (still held by the solver); install the
            # fresh ones afterwards for the next step.
            if psi_prev is None:
                psi_next = self.solver.bootstrap(psi_cur, dt)
                before = self.pgrid.norm(psi_next)
                psi_next = psi_next * self.absorber.factor(dt)
                removed = before - self.pgrid.norm(psi_next)
            else:
                psi_next, removed = self.solver.step_pair(psi_prev, psi_cur,
                                                          dt)
            level_parity = (k + 1) & 1
            absorbed_fam[level_parity] += removed
            psi_prev, psi_cur = psi_cur, psi_next
            self.psi = psi_cur
            self.solver.set_potentials(self.gauge.ax.copy(),
                                       self.gauge.ay.copy(), phi.copy())
            if cfg.numerics.self_field:
                self._deposit_current(psi_cur)

            t = (k + 1) * dt
            is_last = k + 1 == n_steps
            if (k + 1) % diag_stride == 0 or is_last:
                row = diag_row(t)
                rows.append(row)
                check_state(t, row)

            if track and (k + 1) % _SHIFT_CHECK_STRIDE == 0 and not is_last:
                quiet = e_peak <= 0.0 or max(
                    float(np.max(np.abs(ex_w))),
                    float(np.max(np.abs(ey_w)))) <= _QUIET_FIELD_FRAC * e_peak
                if quiet:
                    w = (psi_cur * psi_cur.conj()).real
                    s = float(w.sum())
                    if s > 0.0:
                        x_mean = float((w * self.pgrid.x()[:, None]).sum()) / s
                        center = self.pgrid.wx0 + 0.5 * self.pgrid.nx * \
                            self.pgrid.hx
                        cells = int((x_mean - center) // self.pgrid.hx)
                        if cells >= _SHIFT_MIN_CELLS:
                            do_shift(cells)

            if snap_stride > 0.0 and (t + 1e-9 >= next_snap or is_last):
                self._emit_snapshots(k + 1, t)
                while next_snap <= t + 1e-9:
                    next_snap += snap_stride

            if self.progress and ((k + 1) % report_every == 0 or is_last):
                print(f"  step {k + 1}/{n_steps}  t={t:9.3f} fs  "
                      f"norm={rows[-1].norm:.6f}", file=sys.stderr)

        gamma_final = longitudinal_spectrum(
            self.pgrid, psi_cur, k_e=self.k_e,
            representation=self.representation)

        result = RunResult(
            config=cfg, plan=plan, grid=self.pgrid, psi=psi_cur,
            k_e=self.k_e, rows=rows, gamma_initial=gamma_initial,
            gamma_final=gamma_final, norm=self.pgrid.norm(psi_cur),
            absorbed=absorbed_fam[level_parity], discarded=discarded,
            parity_rel_max=parity_rel_max, n_shifts=n_shifts,
            n_steps=n_steps, out_dir=self.out_dir)
        if self.out_dir is not None:
            self._write_outputs(result)
        return result

    # -- coupling details ----------------------------------------------------------

    def _interior_gauge_residual(self) -> float:
        """max |div A| over the central half of the window (FD stencil).

        A local stencil keeps the monitor blind to the step at the edge of
        the field domain, where the gathered E (hence A) drops to zero.
        """
        g = self.pgrid
        div = divergence_fd(self.gauge.ax, self.gauge.ay, g.hx, g.hy)
        i0, i1 = g.nx // 4, 3 * g.nx // 4
        return float(np.max(np.abs(div[i0:i1, :])))

    def _deposit_current(self, psi: np.ndarray):
        """Splat the packet's charge current onto the field grid (one-step lag)."""
        jx_w, jy_w = self.solver.probability_current(psi)
        g = self.ygrid
        p = self.pgrid
        scale = Q_ELECTRON * (p.hx * p.hy) / (g.dx * g.dy)
        self._jx_m.fill(0.0)
        self._jy_m.fill(0.0)
        K.deposit_bilinear(self._jx_m, np.ascontiguousarray(jx_w * scale),
                           (p.wx0 - g.x0) / g.dx - 0.5, p.hx / g.dx,
                           (p.wy0 - g.y0) / g.dy, p.hy / g.dy)
        K.deposit_bilinear(self._jy_m, np.ascontiguousarray(jy_w * scale),
                           (p.wx0 - g.x0) / g.dx, p.hx / g.dx,
                           (p.wy0 - g.y0) / g.dy - 0.5, p.hy / g.dy)

    # -- output -----------------------------------------------------------------------

    def _write_outputs(self, result: RunResult):
        out = self.out_dir
        atomic_write_text(os.path.join(out, "diagnostics.csv"),
                          result.diagnostics_text())
        atomic_write_text(os.path.join(out, "resolved.ini"), echo(self.cfg))
        atomic_write_text(os.path.join(out, "report.txt"),
                          result.report_text())
        if self.cfg.output.final_spectrum:
            atomic_write_text(os.path.join(out, "gamma_initial.csv"),
                              _spectrum_csv(*result.gamma_initial))
            atomic_write_text(os.path.join(out, "gamma_final.csv"),
                              _spectrum_csv(*result.gamma_final))
            write_snapshot(
                os.path.join(out, "psi_final.msqs"),
                self._window_header(SnapshotKind.PSI_RE_IM,
                                    result.rows[-1].time_fs), result.psi)
            g = self.pgrid
            spec = np.fft.fftshift(g.to_k(result.psi))
            kx_phys = np.fft.fftshift(g.kx()) + (
                self.k_e if self.representation == ENVELOPE else 0.0)
            ky = np.fft.fftshift(g.ky())
            header = SnapshotHeader(
                kind=SnapshotKind.SPECTRUM, nx=g.nx, ny=g.ny, dx=g.dkx,
                dy=g.dky, x0=float(kx_phys[0]), y0=float(ky[0]),
                time=result.rows[-1].time_fs,
                representation=self._rep_tag(),
                k_e=self.k_e if self.representation == ENVELOPE else 0.0)
            write_snapshot(os.path.join(out, "spectrum_final.msqs"),
                           header, spec)


def run_config(cfg: ScenarioConfig, *, out_dir: str | None = "__config__",
               progress: bool = False) -> RunResult:
    """Run a resolved config; out_dir overrides the config (None = no files)."""
    if out_dir != "__config__":
        cfg = replace(cfg, output=replace(cfg.output,
                                          out_dir=out_dir or ""))
    return Orchestrator(cfg, progress=progress).run()
