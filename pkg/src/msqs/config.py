"""INI-style run configuration: strict parsing, defaults, resolution, echo.

Sections and keys are fixed; an unknown section or key is an error (silent
typos in physics configs are the costliest failure mode), with a suggestion
when the intent is guessable.  Every optional key has a deterministic
default, many of which resolve from the physics (the grating period defaults
to the synchronous period, the packet start defaults to a position that puts
the pulse peak 1.8 envelope-widths after t = 0, grids default to the
geometry plus absorber margins).  ``echo()`` renders the fully resolved
configuration back to INI text; parsing that text reproduces the same
resolved configuration exactly.
"""

from __future__ import annotations

import configparser
import difflib
import io
import math
from dataclasses import dataclass, field, replace

from .constants import synchronous_period
from .errors import MsqsError
from .scenario import (GRATING_KINDS, GratingSpec, LaserSpec, PacketSpec,
                       Scenario, align_laser_timing)

# How many envelope FWHMs before the pulse peak the run starts (envelope
# value there ~1.2e-4, so switch-on transients stay below spectral floors).
PRE_ROLL_FWHMS = 1.8
# How many FWHMs past the peak the run keeps going before the final spectrum.
TAIL_FWHMS = 1.6
# Rows between a TFSF injection line and the scattered-field structures.
_TFSF_CLEARANCE = 5
# Rows between the TFSF line and the start of the absorbing layer.
_PML_CLEARANCE = 13


@dataclass(frozen=True)
class NumericsSpec:
    """Grid and stepping controls (None = derive from the scenario)."""

    dx_nm: float = 1.0
    dy_nm: float = 1.0
    maxwell_nx: int | None = None
    maxwell_ny: int | None = None
    maxwell_x0_nm: float | None = None
    maxwell_y0_nm: float | None = None
    pml_cells: int = 12
    psi_nx: int = 2048
    psi_ny: int = 128
    psi_hx_nm: float = 1.0
    psi_hy_nm: float = 1.0
    psi_x0_nm: float | None = None
    psi_y0_nm: float | None = None
    t_end_fs: float | None = None
    dt_maxwell_fs: float | None = None
    dt_tdse_fs: float | None = None
    moving_window: str = "off"
    self_field: bool = False

    def __post_init__(self):
        if self.dx_nm <= 0 or self.dy_nm <= 0:
            raise MsqsError.config_value("numerics grid spacings must be positive")
        if self.psi_hx_nm <= 0 or self.psi_hy_nm <= 0:
            raise MsqsError.config_value("numerics psi spacings must be positive")
        if self.pml_cells < 4:
            raise MsqsError.config_value("numerics pml_cells must be >= 4")
        if self.moving_window not in ("off", "track"):
            raise MsqsError.config_value(
                f"numerics moving_window must be off or track, got "
                f"{self.moving_window!r}")
        if self.t_end_fs is not None and self.t_end_fs <= 0:
            raise MsqsError.config_value("numerics t_end_fs must be positive")


SNAPSHOT_FIELD_NAMES = ("psi", "ex", "ey", "hz", "phi", "ax", "ay")


@dataclass(frozen=True)
class OutputSpec:
    """What the run writes besides the diagnostics CSV."""

    out_dir: str = "out"
    diag_stride: int = 1
    snapshot_stride_fs: float = 0.0     # 0 = no periodic snapshots
    snapshot_kinds: tuple[str, ...] = ("psi",)
    final_spectrum: bool = True

    def __post_init__(self):
        if self.diag_stride < 1:
            raise MsqsError.config_value("output diag_stride must be >= 1")
        if self.snapshot_stride_fs < 0:
            raise MsqsError.config_value(
                "output snapshot_stride_fs must be >= 0")
        for k in self.snapshot_kinds:
            if k not in SNAPSHOT_FIELD_NAMES:
                raise MsqsError.config_value(
                    f"output snapshot kind {k!r} is not one of "
                    f"{SNAPSHOT_FIELD_NAMES}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved run description."""

    grating: GratingSpec = field(default_factory=GratingSpec)
    laser: LaserSpec = field(default_factory=LaserSpec)
    packet: PacketSpec = field(default_factory=PacketSpec)
    numerics: NumericsSpec = field(default_factory=NumericsSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.grating, self.laser, self.packet)


# --- key tables --------------------------------------------------------------
# name -> (type tag, default).  Type tags: f float, of optional float,
# i int, oi optional int, b bool, s string, ss comma-separated strings.

_GRATING_KEYS = {
    "kind": ("s", "double"),
    "period_nm": ("of", None),
    "n_elements": ("i", 12),
    "rod_width_nm": ("f", 16.0),
    "rod_height_nm": ("f", 20.0),
    "gap_nm": ("f", 30.0),
    "standoff_nm": ("f", 4.0),
    "period_end_nm": ("of", None),
    "chirp_length_nm": ("of", None),
    "x_start_nm": ("f", 0.0),
}

_LASER_KEYS = {
    "wavelength_nm": ("f", 830.0),
    "e_peak_v_nm": ("f", 0.5),
    "fwhm_fs": ("of", None),
    "cep_rad": ("of", None),
    "t_peak_fs": ("of", None),
    "beams": ("s", "both"),
}

_ELECTRON_KEYS = {
    "velocity_c": ("f", 0.04),
    "w_long_nm": ("f", 10.0),
    "w_trans_nm": ("f", 5.0),
    "x0_nm": ("of", None),
    "y0_nm": ("f", 0.0),
    "representation": ("s", "envelope"),
}

_NUMERICS_KEYS = {
    "dx_nm": ("f", 1.0),
    "dy_nm": ("f", 1.0),
    "maxwell_nx": ("oi", None),
    "maxwell_ny": ("oi", None),
    "maxwell_x0_nm": ("of", None),
    "maxwell_y0_nm": ("of", None),
    "pml_cells": ("i", 12),
    "psi_nx": ("i", 2048),
    "psi_ny": ("i", 128),
    "psi_hx_nm": ("f", 1.0),
    "psi_hy_nm": ("f", 1.0),
    "psi_x0_nm": ("of", None),
    "psi_y0_nm": ("of", None),
    "t_end_fs": ("of", None),
    "dt_maxwell_fs": ("of", None),
    "dt_tdse_fs": ("of", None),
    "moving_window": ("s", "off"),
    "self_field": ("b", False),
}

_OUTPUT_KEYS = {
    "out_dir": ("s", "out"),
    "diag_stride": ("i", 1),
    "snapshot_stride_fs": ("f", 0.0),
    "snapshot_kinds": ("ss", ("psi",)),
    "final_spectrum": ("b", True),
}

_SECTIONS = {
    "grating": _GRATING_KEYS,
    "laser": _LASER_KEYS,
    "electron": _ELECTRON_KEYS,
    "numerics": _NUMERICS_KEYS,
    "output": _OUTPUT_KEYS,
}

# Names people reach for first, mapped to the grammar's spelling.
_ALIASES = {
    "grating": {
        "lambda": "period_nm", "period": "period_nm", "pitch": "period_nm",
        "pitch_nm": "period_nm", "elements": "n_elements",
        "gap": "gap_nm", "width": "rod_width_nm", "height": "rod_height_nm",
    },
    "laser": {
        "lambda0": "wavelength_nm", "lambda": "wavelength_nm",
        "wavelength": "wavelength_nm", "lambda_nm": "wavelength_nm",
        "e0": "e_peak_v_nm", "e_peak": "e_peak_v_nm",
        "amplitude": "e_peak_v_nm", "fwhm": "fwhm_fs", "cep": "cep_rad",
        "duration": "fwhm_fs", "duration_fs": "fwhm_fs",
    },
    "electron": {
        "velocity": "velocity_c", "v": "velocity_c", "beta": "velocity_c",
        "x0": "x0_nm", "y0": "y0_nm", "wl": "w_long_nm", "wt": "w_trans_nm",
    },
    "numerics": {
        "dx": "dx_nm", "dy": "dy_nm", "t_end": "t_end_fs",
        "hx": "psi_hx_nm", "hy": "psi_hy_nm",
    },
    "output": {
        "dir": "out_dir", "outdir": "out_dir",
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(section: str, key: str, tag: str, raw: str):
    raw = raw.strip()
    try:
        if tag == "f":
            return float(raw)
        if tag == "of":
            return None if raw.lower() in ("", "auto", "none") else float(raw)
        if tag == "i":
            return int(raw)
        if tag == "oi":
            return None if raw.lower() in ("", "auto", "none") else int(raw)
        if tag == "b":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if tag == "ss":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        return raw
    except ValueError as exc:
        raise MsqsError.config_value(
            f"[{section}].{key}: cannot parse {raw!r} ({exc})") from None
    raise AssertionError(tag)


def _unknown_key_error(section: str, key: str) -> MsqsError:
    msg = f"unknown key {key!r} in section [{section}]"
    alias = _ALIASES.get(section, {}).get(key.lower())
    if alias is None:
        near = difflib.get_close_matches(key, _SECTIONS[section], n=1,
                                         cutoff=0.6)
        alias = near[0] if near else None
    if alias:
        msg += f" — did you mean {alias!r}?"
    return MsqsError.config_key(msg)


def parse_config(text: str) -> ScenarioConfig:
    """Parse INI text to a fully resolved ScenarioConfig."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise MsqsError.config_value(f"config syntax error: {exc}") from None

    for section in parser.sections():
        if section not in _SECTIONS:
            near = difflib.get_close_matches(section, _SECTIONS, n=1,
                                             cutoff=0.6)
            hint = f" — did you mean [{near[0]}]?" if near else ""
            raise MsqsError.config_key(f"unknown section [{section}]{hint}")

    values: dict[str, dict[str, object]] = {}
    for section, keys in _SECTIONS.items():
        got = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in keys:
                    raise _unknown_key_error(section, key)
                got[key] = _parse_value(section, key, keys[key][0], raw)
        for key, (tag, default) in keys.items():
            got.setdefault(key, default)
        values[section] = got
    return _resolve(values)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise MsqsError.config_value(f"cannot read config {path!r}: {exc}") \
            from None


def _resolve(v: dict[str, dict[str, object]]) -> ScenarioConfig:
    g, l, e, n, o = (v["grating"], v["laser"], v["electron"], v["numerics"],
                     v["output"])

    period = g["period_nm"]
    if period is None:
        period = synchronous_period(e["velocity_c"], l["wavelength_nm"])
    grating = GratingSpec(
        kind=g["kind"], period=period, n_elements=g["n_elements"],
        rod_width=g["rod_width_nm"], rod_height=g["rod_height_nm"],
        gap=g["gap_nm"], standoff=g["standoff_nm"],
        period_end=g["period_end_nm"], chirp_length=g["chirp_length_nm"],
        x_start=g["x_start_nm"])

    laser = LaserSpec(
        wavelength=l["wavelength_nm"], e_peak=l["e_peak_v_nm"],
        fwhm=l["fwhm_fs"], cep=l["cep_rad"], t_peak=l["t_peak_fs"],
        beams=l["beams"])

    # Packet placement: default start puts the pulse peak PRE_ROLL_FWHMS
    # envelope widths after t = 0 (the envelope is ~1.2e-4 at switch-on).
    x0 = e["x0_nm"]
    if x0 is None:
        probe = PacketSpec(velocity_c=e["velocity_c"], w_long=e["w_long_nm"],
                           w_trans=e["w_trans_nm"], x0=0.0, y0=e["y0_nm"],
                           representation=e["representation"])
        t0 = align_laser_timing(grating, laser, probe)
        if grating.kind == "none":
            mid = 0.0
        else:
            mid = 0.5 * (grating.x_start + grating.x_end)
        x0 = round(mid - PRE_ROLL_FWHMS * t0.fwhm * probe.velocity, 3)
    packet = PacketSpec(velocity_c=e["velocity_c"], w_long=e["w_long_nm"],
                        w_trans=e["w_trans_nm"], x0=x0, y0=e["y0_nm"],
                        representation=e["representation"])

    timing = align_laser_timing(grating, laser, packet)
    laser = replace(laser, fwhm=timing.fwhm, cep=timing.cep,
                    t_peak=timing.t_peak)

    numerics = NumericsSpec(
        dx_nm=n["dx_nm"], dy_nm=n["dy_nm"],
        maxwell_nx=n["maxwell_nx"], maxwell_ny=n["maxwell_ny"],
        maxwell_x0_nm=n["maxwell_x0_nm"], maxwell_y0_nm=n["maxwell_y0_nm"],
        pml_cells=n["pml_cells"], psi_nx=n["psi_nx"], psi_ny=n["psi_ny"],
        psi_hx_nm=n["psi_hx_nm"], psi_hy_nm=n["psi_hy_nm"],
        psi_x0_nm=n["psi_x0_nm"], psi_y0_nm=n["psi_y0_nm"],
        t_end_fs=n["t_end_fs"], dt_maxwell_fs=n["dt_maxwell_fs"],
        dt_tdse_fs=n["dt_tdse_fs"], moving_window=n["moving_window"],
        self_field=n["self_field"])
    numerics = _resolve_numerics(numerics, grating, laser, packet, timing)

    output = OutputSpec(
        out_dir=o["out_dir"], diag_stride=o["diag_stride"],
        snapshot_stride_fs=o["snapshot_stride_fs"],
        snapshot_kinds=tuple(o["snapshot_kinds"]),
        final_spectrum=o["final_spectrum"])

    return ScenarioConfig(grating=grating, laser=laser, packet=packet,
                          numerics=numerics, output=output)


def _resolve_numerics(n: NumericsSpec, grating: GratingSpec, laser: LaserSpec,
                      packet: PacketSpec, timing) -> NumericsSpec:
    """Fill the geometry Nones from the scenario."""
    lam = laser.wavelength
    pml_x = n.pml_cells * n.dx_nm
    pml_y = n.pml_cells * n.dy_nm

    if grating.kind == "none":
        rod_extent = 0.0
        nx = n.maxwell_nx if n.maxwell_nx is not None else 64
        x0 = n.maxwell_x0_nm if n.maxwell_x0_nm is not None else (
            round(packet.x0 - 0.5 * nx * n.dx_nm))
        psi_half = 0.5 * n.psi_ny * n.psi_hy_nm
        tfsf_y = math.ceil(abs(packet.y0) + psi_half + _TFSF_CLEARANCE)
    else:
        rod_extent = (grating.standoff + grating.rod_height
                      if grating.kind == "single"
                      else 0.5 * grating.gap + grating.rod_height)
        margin = 0.5 * lam + pml_x
        x0 = n.maxwell_x0_nm if n.maxwell_x0_nm is not None else (
            math.floor(grating.x_start - margin))
        if n.maxwell_nx is not None:
            nx = n.maxwell_nx
        else:
            x1 = math.ceil(grating.x_start + grating.design_length + margin)
            nx = int(round((x1 - x0) / n.dx_nm))
        tfsf_y = math.ceil(rod_extent + 0.5 * lam + _TFSF_CLEARANCE)

    if n.maxwell_ny is not None:
        ny = n.maxwell_ny
    else:
        # odd row count: the node lattice is closed under y -> -y, so a
        # mirror-symmetric scenario evolves mirror-symmetrically to the bit
        ny = int(round(2.0 * (tfsf_y + (_PML_CLEARANCE + n.pml_cells)
                              * n.dy_nm) / n.dy_nm)) + 1
    y0 = n.maxwell_y0_nm if n.maxwell_y0_nm is not None else (
        -float(ny // 2) * n.dy_nm)

    psi_x0 = n.psi_x0_nm if n.psi_x0_nm is not None else (
        round(packet.x0 - 0.25 * n.psi_nx * n.psi_hx_nm))
    # Rows sit at y0 +- (j + 1/2) hy: every row has an exact mirror partner
    # across the beam axis, so a symmetric scenario stays symmetric to the
    # last bit (there is no unpaired edge row to seed asymmetry).
    psi_y0 = n.psi_y0_nm if n.psi_y0_nm is not None else (
        packet.y0 - 0.5 * (n.psi_ny - 1) * n.psi_hy_nm)
    t_end = n.t_end_fs if n.t_end_fs is not None else (
        round(timing.t_peak + TAIL_FWHMS * timing.fwhm, 3))

    out = replace(n, maxwell_nx=nx, maxwell_ny=ny, maxwell_x0_nm=float(x0),
                  maxwell_y0_nm=float(y0), psi_x0_nm=float(psi_x0),
                  psi_y0_nm=float(psi_y0), t_end_fs=t_end)
    _validate_geometry(out, laser)
    return out


def _validate_geometry(n: NumericsSpec, laser: LaserSpec) -> None:
    if n.maxwell_nx < 2 or n.maxwell_ny < 2 * n.pml_cells + 8:
        raise MsqsError.config_value(
            f"maxwell grid {n.maxwell_nx}x{n.maxwell_ny} is too small for "
            f"{n.pml_cells}-cell absorbing layers")
    # the quantum window must lie inside the field region in y
    y_lo = n.maxwell_y0_nm + (n.pml_cells + _PML_CLEARANCE) * n.dy_nm
    y_hi = n.maxwell_y0_nm + (n.maxwell_ny - n.pml_cells
                              - _PML_CLEARANCE) * n.dy_nm
    p_lo = n.psi_y0_nm
    p_hi = n.psi_y0_nm + n.psi_ny * n.psi_hy_nm
    if p_lo < y_lo or p_hi > y_hi:
        raise MsqsError.config_value(
            f"psi window y=[{p_lo:.1f}, {p_hi:.1f}] nm must lie inside the "
            f"driven field region y=[{y_lo:.1f}, {y_hi:.1f}] nm")


# --- echo ---------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(value)
    return str(value)


def echo(cfg: ScenarioConfig) -> str:
    """Render the resolved config as INI text; reparsing it is a fixed point."""
    spec_fields = {
        "grating": (cfg.grating, {
            "kind": "kind", "period_nm": "period", "n_elements": "n_elements",
            "rod_width_nm": "rod_width", "rod_height_nm": "rod_height",
            "gap_nm": "gap", "standoff_nm": "standoff",
            "period_end_nm": "period_end", "chirp_length_nm": "chirp_length",
            "x_start_nm": "x_start"}),
        "laser": (cfg.laser, {
            "wavelength_nm": "wavelength", "e_peak_v_nm": "e_peak",
            "fwhm_fs": "fwhm", "cep_rad": "cep", "t_peak_fs": "t_peak",
            "beams": "beams"}),
        "electron": (cfg.packet, {
            "velocity_c": "velocity_c", "w_long_nm": "w_long",
            "w_trans_nm": "w_trans", "x0_nm": "x0", "y0_nm": "y0",
            "representation": "representation"}),
        # numerics/output dataclass fields carry the key names directly
        "numerics": (cfg.numerics, {k: k for k in _NUMERICS_KEYS}),
        "output": (cfg.output, {k: k for k in _OUTPUT_KEYS}),
    }
    buf = io.StringIO()
    for section, keys in _SECTIONS.items():
        obj, mapping = spec_fields[section]
        buf.write(f"[{section}]\n")
        for key in keys:
            value = getattr(obj, mapping[key])
            if value is None:
                continue
            buf.write(f"{key} = {_fmt(value)}\n")
        buf.write("\n")
    return buf.getvalue()
