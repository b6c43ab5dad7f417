"""Coupled Maxwell–Schrödinger simulator for laser-driven electron packets.

Units everywhere: length nm, time fs, energy eV, charge in units of e.
Electric fields are V/nm; the magnetic field is stored impedance-normalized
(Z0·H, also V/nm) so vacuum plane waves have |E| = |H̃|.
"""

from .constants import (
    C,
    HBAR,
    M0,
    M0C2,
    Q_ELECTRON,
    electron_velocity,
    electron_wavenumber,
    omega_from_wavelength,
    photon_energy_ev,
    synchronous_period,
)
from .config import ScenarioConfig, load_config, parse_config
from .errors import MsqsError
from .grids import PsiGrid, YeeGrid
from .orchestrator import Orchestrator, RunResult, choose_timesteps, run_config
from .scenario import (
    GratingSpec,
    LaserSpec,
    PacketSpec,
    Scenario,
    align_laser_timing,
    build_grating,
    dephasing_length_estimate,
)
from .snapshots import SnapshotHeader, SnapshotKind, read_snapshot, write_snapshot

__version__ = "0.1.0"

__all__ = [
    "C",
    "HBAR",
    "M0",
    "M0C2",
    "GratingSpec",
    "LaserSpec",
    "MsqsError",
    "Orchestrator",
    "PacketSpec",
    "PsiGrid",
    "Q_ELECTRON",
    "RunResult",
    "Scenario",
    "ScenarioConfig",
    "SnapshotHeader",
    "SnapshotKind",
    "YeeGrid",
    "__version__",
    "align_laser_timing",
    "build_grating",
    "choose_timesteps",
    "dephasing_length_estimate",
    "electron_velocity",
    "electron_wavenumber",
    "load_config",
    "omega_from_wavelength",
    "parse_config",
    "photon_energy_ev",
    "read_snapshot",
    "run_config",
    "synchronous_period",
    "write_snapshot",
]
