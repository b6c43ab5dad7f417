"""Command-line surface: run, oracle, analyze, validate, sweep.

Every failure exits nonzero after printing a single machine-parsable line

    ERROR <CLASS>: message

to stderr, where <CLASS> is one of the documented error classes
(errors.ALL_CLASSES), so scripted drivers can branch on the class without
scraping prose.  Usage mistakes (bad flags, missing arguments) use the
pseudo-class USAGE and exit status 2; everything else exits 1.

Subcommands
-----------
run CONFIG       full coupled simulation, outputs per the [output] section
oracle CONFIG    analytic free-space evolution of the configured packet,
                 written as PSI snapshots (the reference the solver is
                 benchmarked against, and a ready-made viz input)
analyze SNAP...  momentum analysis of PSI/SPECTRUM snapshots: longitudinal
                 spectrum CSV, transverse spectrum CSV, centroid, and
                 sideband / transverse-order spacings
validate         built-in invariant suite (fast, no inputs): units and
                 synchronicity identities, config echo fixed point,
                 snapshot round trip, kernel table, norm conservation,
                 manufactured Poisson solution, gauge divergence, and the
                 absorbing-boundary energy sink
sweep CONFIG     repeat the run over a linear scan of one config key and
                 collect a one-line-per-run summary CSV

Common flags: --out DIR (override the output directory), --threads N
(FFT worker pool size), --quiet.
"""

from __future__ import annotations

import configparser
import contextlib
import io
import math
import os
import re
import sys
import tempfile

import click
import numpy as np

from . import _kernels
from .analytics import free_gaussian, longitudinal_spectrum, sideband_spacing
from .config import _SECTIONS, echo, load_config, parse_config
from .constants import C, D_KIN, HBAR, M0, electron_wavenumber, \
    synchronous_period
from .errors import IO_FORMAT, NOT_ENOUGH_SIDEBANDS, VALIDATE, MsqsError
from .grids import PsiGrid, YeeGrid
from .maxwell import MaxwellSolver, PMLParams
from .orchestrator import run_config
from .potentials import GaugeFields, PoissonDF, divergence_fd
from .snapshots import REPRESENTATION_ENVELOPE, SnapshotHeader, SnapshotKind, \
    atomic_write_text, read_snapshot, write_snapshot
from .tdse import ENVELOPE, FULL, SchrodingerSolver, gaussian_packet, \
    spectral_radius


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


@contextlib.contextmanager
def _workers(n: int):
    """Size the FFT worker pool (and the numba pool when present)."""
    n = max(1, int(n))
    try:  # pragma: no cover - numba presence varies by install
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except Exception:
        pass
    import scipy.fft

    with scipy.fft.set_workers(n):
        yield


def _common(fn):
    fn = click.option("--quiet", is_flag=True,
                      help="Suppress progress and summary output.")(fn)
    fn = click.option("--threads", default=1, show_default=True, type=int,
                      metavar="N", help="FFT worker pool size.")(fn)
    fn = click.option("--out", "out_dir", default=None, metavar="DIR",
                      help="Override the output directory.")(fn)
    return fn


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise MsqsError.config_value(
            f"cannot read config {path!r}: {exc}") from None


def _spectrum_csv_text(axis_name: str, k: np.ndarray, g: np.ndarray) -> str:
    lines = [f"{axis_name},gamma"]
    lines.extend(f"{float(a)!r},{float(b)!r}" for a, b in zip(k, g))
    return "\n".join(lines) + "\n"


@click.group()
def cli():
    """Coupled Maxwell-Schrodinger simulator for laser-driven gratings."""


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@cli.command()
@click.argument("config", type=click.Path())
@_common
def run(config, out_dir, threads, quiet):
    """Run the coupled simulation described by CONFIG."""
    cfg = load_config(config)
    with _workers(threads):
        res = run_config(
            cfg, out_dir=out_dir if out_dir is not None else "__config__",
            progress=not quiet)
    if not quiet:
        click.echo(f"steps         : {res.n_steps}")
        click.echo(f"window shifts : {res.n_shifts}")
        click.echo(f"final norm    : {res.norm!r}")
        click.echo(f"norm closure  : {res.norm_closure:.3e}")
        click.echo(f"centroid gain : {res.centroid_gain_ev!r} eV")
        click.echo(f"outputs       : {res.out_dir or '(none)'}")


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


@cli.command()
@click.argument("config", type=click.Path())
@_common
def oracle(config, out_dir, threads, quiet):
    """Write analytic free-space snapshots of CONFIG's electron packet.

    The packet evolves under the exact dispersive free propagator (no
    laser, no grating, no self-field) on the configured window; snapshots
    land at the configured snapshot stride, or at t = 0 and t = t_end when
    no stride is set.
    """
    cfg = load_config(config)
    n = cfg.numerics
    out = out_dir if out_dir is not None else (cfg.output.out_dir or None)
    if not out:
        raise MsqsError.config_value(
            "oracle needs an output directory: set [output].out_dir or "
            "pass --out")
    grid = PsiGrid(n.psi_nx, n.psi_ny, n.psi_hx_nm, n.psi_hy_nm,
                   n.psi_x0_nm, n.psi_y0_nm)
    pk = cfg.packet
    k_e = electron_wavenumber(pk.velocity)
    stride = cfg.output.snapshot_stride_fs
    t_end = n.t_end_fs
    if stride > 0.0:
        times = [i * stride for i in range(int(t_end / stride + 1e-9) + 1)]
        if times[-1] < t_end - 1e-9:
            times.append(t_end)
    else:
        times = [0.0, t_end]

    os.makedirs(out, exist_ok=True)
    rep_tag = (REPRESENTATION_ENVELOPE if pk.representation == ENVELOPE
               else 0)
    with _workers(threads):
        for i, t in enumerate(times):
            psi = free_gaussian(grid, t, x0=pk.x0, y0=pk.y0,
                                w_long=pk.w_long, w_trans=pk.w_trans,
                                k_e=k_e, representation=pk.representation)
            header = SnapshotHeader(
                kind=SnapshotKind.PSI_RE_IM, nx=grid.nx, ny=grid.ny,
                dx=grid.hx, dy=grid.hy, x0=grid.wx0, y0=grid.wy0, time=t,
                representation=rep_tag,
                k_e=k_e if pk.representation == ENVELOPE else 0.0)
            path = os.path.join(out, f"oracle_psi_{i:06d}.msqs")
            write_snapshot(path, header, psi)
            if not quiet:
                click.echo(f"wrote {path} (t = {t:g} fs)")


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _snapshot_spectra(header: SnapshotHeader, payload: np.ndarray):
    """(kx, gamma_L, ky, gamma_T) on ascending physical momentum axes."""
    if header.kind == SnapshotKind.PSI_RE_IM:
        grid = PsiGrid(header.nx, header.ny, header.dx, header.dy,
                       header.x0, header.y0)
        rep = (ENVELOPE if header.representation == REPRESENTATION_ENVELOPE
               else FULL)
        kx, gl = longitudinal_spectrum(grid, payload, k_e=header.k_e,
                                       representation=rep)
        pk = grid.to_k(payload)
        dens = (pk * pk.conj()).real
        ky = grid.ky()
        order = np.argsort(ky)
        gt = dens.sum(axis=0)[order] * grid.dkx
        return kx, gl, ky[order], gt
    if header.kind == SnapshotKind.SPECTRUM:
        dens = (payload * payload.conj()).real
        kx = header.x0 + header.dx * np.arange(header.nx)
        ky = header.y0 + header.dy * np.arange(header.ny)
        return kx, dens.sum(axis=1) * header.dy, ky, \
            dens.sum(axis=0) * header.dx
    raise MsqsError.analyze_input(
        f"snapshot kind {header.kind.name} carries no momentum content "
        "to analyze (expected PSI_RE_IM or SPECTRUM)")


def _spacing_line(k: np.ndarray, g: np.ndarray) -> str:
    try:
        spacing, peaks = sideband_spacing(k, g)
        return f"{spacing!r} rad/nm ({len(peaks)} peaks)"
    except MsqsError as exc:
        if exc.code != NOT_ENOUGH_SIDEBANDS:
            raise
        return "none detected"


@cli.command()
@click.argument("snapshots", nargs=-1, required=True, type=click.Path())
@_common
def analyze(snapshots, out_dir, threads, quiet):
    """Momentum analysis of PSI or SPECTRUM snapshots.

    For each input file this writes the longitudinal spectrum
    ``<stem>_gamma.csv`` and the transverse spectrum ``<stem>_gamma_t.csv``
    next to the input (or into --out), and prints the spectrum centroid
    plus detected sideband / transverse-order spacings.
    """
    with _workers(threads):
        for path in snapshots:
            header, payload = read_snapshot(path)
            kx, gl, ky, gt = _snapshot_spectra(header, payload)

            total = float(gl.sum())
            if total <= 0.0:
                raise MsqsError.analyze_input(
                    f"{path}: empty spectrum (all-zero payload)")
            kc = float((kx * gl).sum() / total)

            dest = out_dir if out_dir is not None else \
                (os.path.dirname(path) or ".")
            os.makedirs(dest, exist_ok=True)
            stem = os.path.splitext(os.path.basename(path))[0]
            gpath = os.path.join(dest, f"{stem}_gamma.csv")
            tpath = os.path.join(dest, f"{stem}_gamma_t.csv")
            atomic_write_text(gpath, _spectrum_csv_text("kx_rad_nm", kx, gl))
            atomic_write_text(tpath, _spectrum_csv_text("ky_rad_nm", ky, gt))

            if quiet:
                continue
            click.echo(f"{path}:")
            click.echo(f"  kind               : {header.kind.name.lower()}")
            click.echo(f"  time_fs            : {header.time!r}")
            click.echo(f"  grid               : {header.nx} x {header.ny}")
            click.echo(f"  gamma_csv          : {gpath}")
            click.echo(f"  transverse_csv     : {tpath}")
            click.echo(f"  centroid_k_rad_nm  : {kc!r}")
            click.echo(f"  centroid_v_c       : {HBAR * kc / (M0 * C)!r}")
            click.echo(f"  centroid_ke_ev     : {D_KIN * kc * kc!r}")
            click.echo(f"  sideband_spacing   : {_spacing_line(kx, gl)}")
            click.echo(f"  transverse_spacing : {_spacing_line(ky, gt)}")


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _check_units() -> str:
    lam = synchronous_period(0.04, 830.0, 1)
    if lam != 33.2:
        raise AssertionError(f"synchronous period {lam!r} != 33.2 nm")
    omega = 2.0 * math.pi * C / 830.0
    e_photon = HBAR * omega
    e_grating = HBAR * 0.04 * C * 2.0 * math.pi / lam
    rel = abs(e_grating - e_photon) / e_photon
    if rel > 1e-3:
        raise AssertionError(
            f"synchronicity energy mismatch {rel:.3e} > 1e-3")
    return f"Lambda(0.04c, 830 nm) = {lam} nm, energy mismatch {rel:.1e}"


def _check_config_echo() -> str:
    text = ("[grating]\nkind = double\n"
            "[laser]\nwavelength_nm = 830\n"
            "[electron]\nvelocity_c = 0.04\n")
    cfg = parse_config(text)
    once = echo(cfg)
    twice = echo(parse_config(once))
    if once != twice:
        raise AssertionError("echo(parse(echo(cfg))) differs from echo(cfg)")
    if cfg.grating.period != 33.2:
        raise AssertionError(
            f"default period resolved to {cfg.grating.period!r}, not 33.2")
    return f"echo fixed point holds; default period {cfg.grating.period} nm"


def _check_snapshot_roundtrip() -> str:
    rng = np.random.default_rng(7)
    payload = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    header = SnapshotHeader(kind=SnapshotKind.PSI_RE_IM, nx=5, ny=3,
                            dx=0.5, dy=0.25, x0=-1.0, y0=2.0, time=3.25,
                            representation=1, k_e=103.5)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "roundtrip.msqs")
        write_snapshot(path, header, payload)
        back_header, back = read_snapshot(path)
        if back_header != header:
            raise AssertionError("header did not round-trip")
        if back.tobytes() != np.ascontiguousarray(payload).tobytes():
            raise AssertionError("payload bytes did not round-trip")

        with open(path, "rb") as fh:
            raw = fh.read()
        short = os.path.join(tmp, "short.msqs")
        with open(short, "wb") as fh:
            fh.write(raw[:-8])
        try:
            read_snapshot(short)
            raise AssertionError("truncated payload was accepted")
        except MsqsError:
            pass

        bumped = os.path.join(tmp, "version.msqs")
        with open(bumped, "wb") as fh:
            fh.write(raw[:4] + bytes([raw[4] + 1]) + raw[5:])
        try:
            read_snapshot(bumped)
            raise AssertionError("future format version was accepted")
        except MsqsError:
            pass
    return "write/read bit-identical; truncation and version drift rejected"


def _check_kernels() -> str:
    pairs = _kernels.KERNEL_PAIRS
    for name, (fast, plain) in pairs.items():
        if not callable(fast) or not callable(plain):
            raise AssertionError(f"kernel pair {name!r} is incomplete")
    backend = "numba" if _kernels.USE_NUMBA else "numpy"
    return f"{len(pairs)} kernel pairs bound, active backend {backend}"


def _check_tdse_norm() -> str:
    grid = PsiGrid(128, 64, 1.0, 1.0, -64.0, -31.5)
    k_e = electron_wavenumber(0.04 * C)
    solver = SchrodingerSolver(grid, k_e=k_e, representation=ENVELOPE)
    psi = gaussian_packet(grid, x0=-32.0, y0=0.0, w_long=6.0, w_trans=4.0,
                          k_e=k_e, representation=ENVELOPE)
    dt = 0.4 * HBAR / spectral_radius(grid, k_e, ENVELOPE, 0.5)
    prev, cur = psi, solver.bootstrap(psi, dt)
    for _ in range(200):
        nxt, _removed = solver.step_pair(prev, cur, dt)
        prev, cur = cur, nxt
    drift = abs(grid.norm(cur) - 1.0)
    if drift > 1e-10:
        raise AssertionError(f"norm drift {drift:.3e} > 1e-10 in 200 steps")
    return f"|N - 1| = {drift:.1e} after 200 leapfrog steps"


def _check_poisson() -> str:
    nx = ny = 64
    i = np.arange(nx)[:, None] / (nx - 1)
    j = np.arange(ny)[None, :] / (ny - 1)
    phi_exact = np.sin(np.pi * i) * np.sin(np.pi * j)
    lap = np.zeros_like(phi_exact)
    lap[1:-1, :] += phi_exact[2:, :] - 2 * phi_exact[1:-1, :] + \
        phi_exact[:-2, :]
    lap[:, 1:-1] += phi_exact[:, 2:] - 2 * phi_exact[:, 1:-1] + \
        phi_exact[:, :-2]
    source = -lap
    source[0, :] = source[-1, :] = 0.0
    source[:, 0] = source[:, -1] = 0.0
    solver = PoissonDF(nx, ny, 1.0, 1.0, tol=1e-8)
    phi = solver.solve(source, warm=False)
    rel = float(np.max(np.abs(phi - phi_exact)) / np.max(np.abs(phi_exact)))
    if rel > 1e-6:
        raise AssertionError(f"manufactured solution rel err {rel:.3e} > 1e-6")
    return f"manufactured solution rel err {rel:.1e} " \
           f"({solver.last_sweeps} sweeps)"


def _check_gauge() -> str:
    # Optical-band waves on a production-shaped window.  Transversality is
    # asserted over the central half — the region the packet occupies — as
    # the Dirichlet wall of the Poisson solve leaves a harmonic boundary
    # layer along the rim, inside the absorber skirt where psi vanishes.
    nx, ny = 512, 128
    x = np.arange(nx)[:, None]
    y = np.arange(ny)[None, :]
    k1, k2 = 2.0 * math.pi / 830.0, 0.0095
    ex = 0.25 * np.cos(k1 * x + 0.3) * np.cos(k2 * y + 0.7)
    ey = 0.20 * np.sin(k1 * x + 1.1) * np.cos(k2 * y + 0.2)
    pois = PoissonDF(nx, ny, 1.0, 1.0, tol=1e-8)
    gauge = GaugeFields(nx, ny, 1.0, 1.0)
    for _ in range(5):
        phi = pois.solve(divergence_fd(ex, ey, 1.0, 1.0))
        gauge.advance(0.01, ex, ey, phi)
    max_a = max(float(np.max(np.abs(gauge.ax))),
                float(np.max(np.abs(gauge.ay))))
    div = np.abs(divergence_fd(gauge.ax, gauge.ay, 1.0, 1.0))
    core = float(div[nx // 4:3 * nx // 4, ny // 4:3 * ny // 4].max())
    if core > 1e-6 * max_a:
        raise AssertionError(
            f"gauge divergence {core:.3e} > 1e-6 * max|A| = "
            f"{1e-6 * max_a:.3e} over the window core")
    return f"core max|div A| / max|A| = {core / max_a:.1e} after 5 advances"


def _check_pml() -> str:
    grid = YeeGrid(64, 64, 1.0, 1.0, 0.0, 0.0)
    solver = MaxwellSolver(grid, bc=("pml", "pml"), pml=PMLParams())
    ii, jj = np.indices(solver.hz.shape)
    solver.hz[:] = np.exp(-((ii - 32.0) ** 2 + (jj - 32.0) ** 2) /
                          (2.0 * 4.0 ** 2))

    def energy() -> float:
        return float((solver.ex ** 2).sum() + (solver.ey ** 2).sum() +
                     (solver.hz ** 2).sum())

    e0 = energy()
    for _ in range(400):
        solver.step()
    ratio = energy() / e0
    if ratio > 1e-4:
        raise AssertionError(
            f"energy fraction {ratio:.3e} survived the absorbing boundary "
            "(> 1e-4)")
    return f"residual energy fraction {ratio:.1e} after domain transit"


_VALIDATE_CHECKS = (
    ("units-synchronicity", _check_units),
    ("config-echo", _check_config_echo),
    ("snapshot-roundtrip", _check_snapshot_roundtrip),
    ("kernel-pairs", _check_kernels),
    ("schrodinger-norm", _check_tdse_norm),
    ("poisson-manufactured", _check_poisson),
    ("gauge-divergence", _check_gauge),
    ("absorbing-boundary", _check_pml),
)


@cli.command()
@click.option("--threads", default=1, show_default=True, type=int,
              metavar="N", help="FFT worker pool size.")
@click.option("--quiet", is_flag=True, help="Only report failures.")
def validate(threads, quiet):
    """Run the built-in invariant suite (no inputs, a few seconds)."""
    failed = []
    with _workers(threads):
        for name, check in _VALIDATE_CHECKS:
            try:
                detail = check()
                if not quiet:
                    click.echo(f"PASS {name:24s} {detail}")
            except Exception as exc:
                failed.append(name)
                click.echo(f"FAIL {name:24s} {exc}")
    if failed:
        raise MsqsError(VALIDATE,
                        f"{len(failed)} of {len(_VALIDATE_CHECKS)} checks "
                        f"failed: {', '.join(failed)}")
    if not quiet:
        click.echo(f"validate: all {len(_VALIDATE_CHECKS)} checks passed")


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


_VARY_RE = re.compile(
    r"(?P<section>[a-z_]+)\.(?P<key>[a-z0-9_]+)"
    r"=(?P<a>[^:]+):(?P<b>[^:]+):(?P<n>\d+)$")


def _parse_vary(spec: str):
    m = _VARY_RE.fullmatch(spec.strip())
    if m is None:
        raise MsqsError.config_value(
            f"--vary expects section.key=a:b:n (e.g. "
            f"laser.e_peak_v_nm=0.1:0.5:5), got {spec!r}")
    section, key = m["section"], m["key"]
    if section not in _SECTIONS:
        raise MsqsError.config_key(f"unknown sweep section [{section}]")
    if key not in _SECTIONS[section]:
        raise MsqsError.config_key(
            f"unknown sweep key {key!r} in section [{section}]")
    try:
        a, b, n = float(m["a"]), float(m["b"]), int(m["n"])
    except ValueError as exc:
        raise MsqsError.config_value(f"--vary bounds: {exc}") from None
    if n < 1:
        raise MsqsError.config_value("--vary needs n >= 1 samples")
    values = np.linspace(a, b, n) if n > 1 else np.array([a])
    tag = _SECTIONS[section][key][0]
    if tag in ("i", "oi"):
        fmt = lambda v: str(int(round(v)))  # noqa: E731
    else:
        fmt = lambda v: repr(float(v))      # noqa: E731
    return section, key, values, fmt


@cli.command()
@click.argument("config", type=click.Path())
@click.option("--vary", required=True, metavar="SECTION.KEY=A:B:N",
              help="Key to scan linearly from A to B in N runs.")
@_common
def sweep(config, vary, out_dir, threads, quiet):
    """Run CONFIG once per value of a scanned key; write a summary CSV.

    Individual runs write no files; the summary lands in --out (default:
    the config's [output].out_dir, or the working directory) as
    ``sweep_summary.csv`` with one row per run.
    """
    text = _read_text(config)
    section, key, values, fmt = _parse_vary(vary)
    doc = configparser.ConfigParser(interpolation=None,
                                    inline_comment_prefixes=("#", ";"))
    try:
        doc.read_string(text)
    except configparser.Error as exc:
        raise MsqsError.config_value(f"config syntax error: {exc}") from None

    header = (f"{section}.{key},norm,absorbed,discarded,n_steps,"
              f"centroid_k_rad_nm,centroid_gain_ev,vx_final_nm_fs,"
              f"ke_final_ev")
    lines = [header]
    with _workers(threads):
        for v in values:
            vstr = fmt(v)
            if not doc.has_section(section):
                doc.add_section(section)
            doc.set(section, key, vstr)
            buf = io.StringIO()
            doc.write(buf)
            cfg = parse_config(buf.getvalue())
            res = run_config(cfg, out_dir=None)
            kf, gf = res.gamma_final
            kc = float((kf * gf).sum() / gf.sum())
            last = res.rows[-1]
            lines.append(",".join((
                vstr, repr(float(res.norm)), repr(float(res.absorbed)),
                repr(float(res.discarded)), str(res.n_steps), repr(kc),
                repr(float(res.centroid_gain_ev)),
                repr(float(last.vx_nm_fs)), repr(float(last.ke_eV)))))
            if not quiet:
                click.echo(f"{section}.{key} = {vstr}: centroid gain "
                           f"{res.centroid_gain_ev:.6e} eV, norm "
                           f"{res.norm:.9f}")

    dest = out_dir
    if dest is None:
        try:
            dest = parse_config(text).output.out_dir or "."
        except MsqsError:
            dest = "."
    os.makedirs(dest, exist_ok=True)
    path = os.path.join(dest, "sweep_summary.csv")
    atomic_write_text(path, "\n".join(lines) + "\n")
    if not quiet:
        click.echo(f"summary: {path}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, standalone_mode=False)
        return rv if isinstance(rv, int) else 0
    except MsqsError as exc:
        print(exc.cli_text(), file=sys.stderr)
        return 1
    except OSError as exc:
        # Missing or unreadable files surface through the same one-line
        # contract as malformed ones.
        print(f"ERROR {IO_FORMAT}: {exc}", file=sys.stderr)
        return 1
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        print(f"ERROR USAGE: {exc.format_message()}", file=sys.stderr)
        return 2
    except click.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
