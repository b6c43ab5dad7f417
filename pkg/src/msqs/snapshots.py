"""Binary snapshot container for fields, wave functions and spectra.

One file = one 128-byte little-endian header + one row-major float64
payload.  Complex payloads store interleaved (re, im) pairs, which is the
native memory layout of ``numpy.complex128``, so round trips are byte
exact and zero-copy.  Writers go through a temp file and ``os.replace`` so
a crashed run never leaves a half-written snapshot behind.

Header layout (bytes 0..71, rest zero padding):

    magic      4s   b"MSQS"
    version    u32  format revision (currently 1)
    kind       u32  payload kind (SnapshotKind)
    nx, ny     u32  grid dims; payload shape is (nx, ny), x first
    dx, dy     f64  grid spacings, nm
    x0, y0     f64  window origin, nm
    time       f64  simulation time, fs
    repr       u32  0 = full wave function, 1 = comoving envelope
    k_e        f64  carrier wavenumber rad/nm (0 for full representation)

Readers validate magic, version and the size arithmetic against the file
length before allocating the payload.
"""

from __future__ import annotations

import enum
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import MsqsError

MAGIC = b"MSQS"
VERSION = 1
HEADER_SIZE = 128
_HEADER_FMT = "<4sIIIIdddddId"
_HEADER_USED = struct.calcsize(_HEADER_FMT)
assert _HEADER_USED <= HEADER_SIZE


class SnapshotKind(enum.IntEnum):
    FIELD_EX = 0
    FIELD_EY = 1
    FIELD_HZ = 2
    PSI_RE_IM = 3
    PHI = 4
    A_X = 5
    A_Y = 6
    SPECTRUM = 7


COMPLEX_KINDS = frozenset({SnapshotKind.PSI_RE_IM, SnapshotKind.SPECTRUM})

REPRESENTATION_FULL = 0
REPRESENTATION_ENVELOPE = 1


@dataclass(frozen=True)
class SnapshotHeader:
    """Typed view of the fixed 128-byte header."""

    kind: SnapshotKind
    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float
    time: float
    representation: int = REPRESENTATION_FULL
    k_e: float = 0.0
    version: int = VERSION

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise MsqsError.io_format(
                f"snapshot dims must be positive, got ({self.nx}, {self.ny})")
        if self.representation not in (REPRESENTATION_FULL,
                                       REPRESENTATION_ENVELOPE):
            raise MsqsError.io_format(
                f"unknown representation tag {self.representation}")

    @property
    def is_complex(self) -> bool:
        return self.kind in COMPLEX_KINDS

    @property
    def payload_bytes(self) -> int:
        return self.nx * self.ny * 8 * (2 if self.is_complex else 1)

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    def pack(self) -> bytes:
        raw = struct.pack(
            _HEADER_FMT, MAGIC, self.version, int(self.kind),
            self.nx, self.ny, self.dx, self.dy, self.x0, self.y0,
            self.time, self.representation, self.k_e)
        return raw + b"\x00" * (HEADER_SIZE - len(raw))

    @classmethod
    def unpack(cls, buf: bytes) -> "SnapshotHeader":
        if len(buf) < HEADER_SIZE:
            raise MsqsError.io_format(
                f"snapshot header truncated: {len(buf)} of "
                f"{HEADER_SIZE} bytes")
        (magic, version, kind, nx, ny, dx, dy, x0, y0, time, rep,
         k_e) = struct.unpack(_HEADER_FMT, buf[:_HEADER_USED])
        if magic != MAGIC:
            raise MsqsError.io_format(
                f"bad snapshot magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise MsqsError.io_format(
                f"unsupported snapshot version {version}, expected {VERSION}")
        try:
            kind = SnapshotKind(kind)
        except ValueError:
            raise MsqsError.io_format(f"unknown snapshot kind {kind}") from None
        return cls(kind=kind, nx=nx, ny=ny, dx=dx, dy=dy, x0=x0, y0=y0,
                   time=time, representation=rep, k_e=k_e, version=version)


def write_snapshot(path: str, header: SnapshotHeader,
                   payload: np.ndarray) -> None:
    """Atomically write header + payload to ``path``."""
    if payload.shape != (header.nx, header.ny):
        raise MsqsError.io_format(
            f"payload shape {payload.shape} does not match header dims "
            f"({header.nx}, {header.ny})")
    data = np.ascontiguousarray(payload, dtype=header.dtype)
    raw = data.view(np.float64) if header.is_complex else data
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".msqs.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header.pack())
            fh.write(raw.tobytes())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    """Write text via a same-directory temp file + rename (all-or-nothing)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".txt.tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_snapshot(path: str) -> tuple[SnapshotHeader, np.ndarray]:
    """Read and validate one snapshot; returns (header, payload)."""
    size = os.stat(path).st_size
    with open(path, "rb") as fh:
        header = SnapshotHeader.unpack(fh.read(HEADER_SIZE))
        expected = HEADER_SIZE + header.payload_bytes
        if size != expected:
            raise MsqsError.io_format(
                f"snapshot {path!r}: file is {size} bytes but the header "
                f"implies {expected}")
        raw = fh.read(header.payload_bytes)
    if len(raw) != header.payload_bytes:
        raise MsqsError.io_format(
            f"snapshot {path!r}: truncated payload "
            f"({len(raw)} of {header.payload_bytes} bytes)")
    flat = np.frombuffer(raw, dtype=np.float64)
    if header.is_complex:
        flat = flat.view(np.complex128)
    return header, flat.reshape(header.nx, header.ny).copy()
