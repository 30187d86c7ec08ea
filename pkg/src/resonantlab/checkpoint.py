"""Versioned little-endian binary checkpoints.

Resonant state (magic ``RSNL``)::

    4s   magic
    u32  format version
    u32  mode radius P
    u32  number of modes (2P+1)^2
    u32  Nx
    f64  Lx
    f64  time
    f64  re, im interleaved; mode-major in canonical ModeSet order, x fastest

NLS state (magic ``NLS3``)::

    4s   magic
    u32  format version
    u32  Nx
    u32  Ny
    f64  Lx
    f64  dt
    f64  time
    f64  re, im interleaved; x fastest, then y1, then y2 (Fortran order of
         the in-memory ``values[ix, iy1, iy2]`` array)
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .lattice import ModeSet
from .resonant.system import VecState
from .spectral.grid import Field3D, GridSpec

VERSION = 1
RSNL = b"RSNL"
NLS3 = b"NLS3"
_RSNL_HEAD = struct.Struct("<4sIIIIdd")
_NLS3_HEAD = struct.Struct("<4sIIIddd")


def _interleave(values: np.ndarray) -> bytes:
    out = np.empty(values.size * 2, dtype="<f8")
    flat = values.ravel(order="K")
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tobytes()


def _deinterleave(buf: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(buf, dtype="<f8", count=2 * count)
    return raw[0::2] + 1j * raw[1::2]


def write_resonant(path, s: VecState) -> None:
    head = _RSNL_HEAD.pack(RSNL, VERSION, s.modes.radius, len(s.modes), s.Nx, s.Lx, s.time)
    Path(path).write_bytes(head + _interleave(np.ascontiguousarray(s.fields)))


def read_resonant(path) -> VecState:
    data = Path(path).read_bytes()
    if len(data) < _RSNL_HEAD.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, version, radius, n_modes, nx, lx, t = _RSNL_HEAD.unpack_from(data)
    if magic != RSNL:
        raise ValueError(f"{path}: not a resonant checkpoint (magic {magic!r})")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    modes = ModeSet(radius)
    if len(modes) != n_modes:
        raise ValueError(f"{path}: mode count {n_modes} inconsistent with radius {radius}")
    body = data[_RSNL_HEAD.size :]
    if len(body) != 16 * n_modes * nx:
        raise ValueError(f"{path}: payload size mismatch")
    fields = _deinterleave(body, n_modes * nx).reshape(n_modes, nx)
    return VecState(modes, lx, nx, fields, t)


def write_nls(path, field: Field3D, time: float = 0.0) -> None:
    g = field.grid
    head = _NLS3_HEAD.pack(NLS3, VERSION, g.Nx, g.Ny, g.Lx, g.dt, time)
    Path(path).write_bytes(head + _interleave(np.asfortranarray(field.values)))


def read_nls(path) -> tuple[Field3D, float]:
    data = Path(path).read_bytes()
    if len(data) < _NLS3_HEAD.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, version, nx, ny, lx, dt, t = _NLS3_HEAD.unpack_from(data)
    if magic != NLS3:
        raise ValueError(f"{path}: not an NLS checkpoint (magic {magic!r})")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    body = data[_NLS3_HEAD.size :]
    n = nx * ny * ny
    if len(body) != 16 * n:
        raise ValueError(f"{path}: payload size mismatch")
    values = _deinterleave(body, n).reshape((nx, ny, ny), order="F")
    return Field3D(GridSpec(lx, nx, ny, dt), values), t
