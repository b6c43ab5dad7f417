"""Snapshot byte format: round trip, validation, atomic text writes."""

import os
import struct

import numpy as np
import pytest

from msqs.errors import IO_FORMAT, MsqsError
from msqs.snapshots import (HEADER_SIZE, MAGIC, VERSION, SnapshotHeader,
                            SnapshotKind, atomic_write_text, read_snapshot,
                            write_snapshot)


def _header(kind=SnapshotKind.PSI_RE_IM, nx=16, ny=8, **kw):
    defaults = dict(kind=kind, nx=nx, ny=ny, dx=0.5, dy=1.0, x0=-4.0,
                    y0=-4.0, time=1.25, representation=1, k_e=103.5842)
    defaults.update(kw)
    return SnapshotHeader(**defaults)


def _payload(header, rng):
    shape = (header.nx, header.ny)
    if header.is_complex:
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return rng.standard_normal(shape)


class TestRoundTrip:
    def test_bit_identical(self, tmp_path, rng):
        h = _header()
        payload = _payload(h, rng)
        p = tmp_path / "a.msqs"
        write_snapshot(str(p), h, payload)
        h2, data = read_snapshot(str(p))
        assert h2 == h
        assert data.dtype == payload.dtype
        assert np.array_equal(data, payload)

    def test_all_kinds_round_trip(self, tmp_path, rng):
        for kind in SnapshotKind:
            h = _header(kind=kind)
            payload = _payload(h, rng)
            p = tmp_path / f"{kind.name}.msqs"
            write_snapshot(str(p), h, payload)
            h2, data = read_snapshot(str(p))
            assert h2.kind == kind
            assert np.array_equal(data, payload)

    def test_rewrite_gives_identical_bytes(self, tmp_path, rng):
        h = _header()
        payload = _payload(h, rng)
        pa, pb = tmp_path / "a.msqs", tmp_path / "b.msqs"
        write_snapshot(str(pa), h, payload)
        write_snapshot(str(pb), h, payload)
        assert pa.read_bytes() == pb.read_bytes()

    def test_header_is_128_bytes(self, tmp_path, rng):
        h = _header()
        p = tmp_path / "a.msqs"
        write_snapshot(str(p), h, _payload(h, rng))
        assert HEADER_SIZE == 128
        expected = HEADER_SIZE + h.nx * h.ny * (16 if h.is_complex else 8)
        assert p.stat().st_size == expected


class TestValidation:
    def _written(self, tmp_path, rng):
        h = _header()
        p = tmp_path / "a.msqs"
        write_snapshot(str(p), h, _payload(h, rng))
        return p

    def test_truncated_payload_rejected(self, tmp_path, rng):
        p = self._written(tmp_path, rng)
        raw = p.read_bytes()
        p.write_bytes(raw[:-16])
        with pytest.raises(MsqsError) as exc:
            read_snapshot(str(p))
        assert exc.value.code == IO_FORMAT
        assert "truncat" in str(exc.value).lower()

    def test_future_version_rejected(self, tmp_path, rng):
        p = self._written(tmp_path, rng)
        raw = bytearray(p.read_bytes())
        # version field sits right after the 4-byte magic
        raw[4:8] = struct.pack("<I", VERSION + 1)
        p.write_bytes(bytes(raw))
        with pytest.raises(MsqsError) as exc:
            read_snapshot(str(p))
        assert exc.value.code == IO_FORMAT
        assert "version" in str(exc.value).lower()

    def test_bad_magic_rejected(self, tmp_path, rng):
        p = self._written(tmp_path, rng)
        raw = bytearray(p.read_bytes())
        raw[:4] = b"XXXX"
        p.write_bytes(bytes(raw))
        with pytest.raises(MsqsError) as exc:
            read_snapshot(str(p))
        assert exc.value.code == IO_FORMAT

    def test_short_header_rejected(self, tmp_path):
        p = tmp_path / "a.msqs"
        p.write_bytes(MAGIC + b"\x00" * 10)
        with pytest.raises(MsqsError) as exc:
            read_snapshot(str(p))
        assert exc.value.code == IO_FORMAT

    def test_header_shape_validation(self):
        with pytest.raises(MsqsError):
            _header(nx=0)

    def test_payload_shape_mismatch(self, tmp_path, rng):
        h = _header(nx=16, ny=8)
        with pytest.raises(MsqsError):
            write_snapshot(str(tmp_path / "a.msqs"), h,
                           rng.standard_normal((8, 16)) + 0j)


class TestAtomicText:
    def test_writes_content(self, tmp_path):
        p = tmp_path / "out.csv"
        atomic_write_text(str(p), "a,b\n1,2\n")
        assert p.read_text() == "a,b\n1,2\n"

    def test_no_temp_residue(self, tmp_path):
        atomic_write_text(str(tmp_path / "out.csv"), "x\n")
        assert sorted(os.listdir(tmp_path)) == ["out.csv"]

    def test_overwrites_atomically(self, tmp_path):
        p = tmp_path / "out.csv"
        atomic_write_text(str(p), "first\n")
        atomic_write_text(str(p), "second\n")
        assert p.read_text() == "second\n"
