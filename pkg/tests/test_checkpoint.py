import struct

import numpy as np
import pytest

from resonantlab.checkpoint import read_nls, read_resonant, write_nls, write_resonant
from resonantlab.lattice import ModeSet
from resonantlab.resonant import multimode_gaussian
from resonantlab.spectral.grid import Field3D, GridSpec


def test_resonant_round_trip(tmp_path):
    s = multimode_gaussian(ModeSet(1), 16.0, 32, seed=3).replace(
        multimode_gaussian(ModeSet(1), 16.0, 32, seed=3).fields, 1.25
    )
    p = tmp_path / "s.bin"
    write_resonant(p, s)
    r = read_resonant(p)
    assert r.modes == s.modes and r.Nx == 32 and r.Lx == 16.0 and r.time == 1.25
    assert np.array_equal(r.fields, s.fields)
    assert p.stat().st_size == 36 + 16 * 9 * 32


def test_resonant_layout(tmp_path):
    f = np.zeros((9, 4), dtype=complex)
    f[0, 1] = 2 + 3j
    from resonantlab.resonant import VecState

    p = tmp_path / "s.bin"
    write_resonant(p, VecState(ModeSet(1), 1.0, 4, f))
    raw = p.read_bytes()
    assert raw[:4] == b"RSNL"
    assert struct.unpack_from("<4sIIIIdd", raw)[1:5] == (1, 1, 9, 4)
    body = np.frombuffer(raw[36:], dtype="<f8")
    assert body[2] == 2.0 and body[3] == 3.0  # mode 0, x index 1


def test_nls_round_trip_and_x_fastest(tmp_path):
    g = GridSpec(8.0, 8, 4, 0.01)
    v = np.arange(8 * 16).reshape(g.shape) * (1 + 0.5j)
    p = tmp_path / "u.bin"
    write_nls(p, Field3D(g, v), 0.5)
    f, t = read_nls(p)
    assert t == 0.5 and f.grid == g
    assert np.array_equal(f.values, v)
    body = np.frombuffer(p.read_bytes()[struct.calcsize("<4sIIIddd"):], dtype="<f8")
    # consecutive records step through x first
    assert body[2] == v[1, 0, 0].real and body[4] == v[2, 0, 0].real


def test_corrupt_files_rejected(tmp_path):
    g = GridSpec(8.0, 8, 4)
    p = tmp_path / "u.bin"
    write_nls(p, Field3D(g, np.ones(g.shape)))
    raw = p.read_bytes()
    for bad in (b"XXXX" + raw[4:], raw[:-8], raw[:10], raw[:4] + struct.pack("<I", 9) + raw[8:]):
        p.write_bytes(bad)
        with pytest.raises(ValueError):
            read_nls(p)
    with pytest.raises(ValueError):
        read_resonant(p)
