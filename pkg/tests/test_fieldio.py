import struct

import numpy as np
import pytest

from lifespan import fieldio
from lifespan.data import BumpProfile, OscillatoryParams, make_divfree_random, make_oscillatory_data, named_field
from lifespan.spectral import Grid


@pytest.mark.parametrize("name", ["fixture", "random", "cos1", "zero"])
def test_round_trip_bit_exact(name, tmp_path):
    a = named_field(name, Grid(8, box_len=3.5), seed=11)
    path = tmp_path / "f.lsl"
    fieldio.write_field(path, a)
    b = fieldio.read_field(path)
    assert type(b) is type(a)
    assert b.grid == a.grid
    assert b.coeffs.tobytes() == a.coeffs.tobytes()


def test_oscillatory_round_trip():
    d = make_oscillatory_data(OscillatoryParams(1 / 8, 0.5), BumpProfile(), Grid(32))
    assert fieldio.loads(fieldio.dumps(d.u0)).coeffs.tobytes() == d.u0.coeffs.tobytes()


def test_layout():
    g = Grid(8, box_len=2.0)
    a = make_divfree_random(g, 1, (0, 1))
    buf = fieldio.dumps(a)
    magic, n1, n2, n3 = struct.unpack_from("<4sQQQ", buf)
    (box,) = struct.unpack_from("<d", buf, 28)
    (ncomp,) = struct.unpack_from("<Q", buf, 36)
    assert (magic, n1, n2, n3, box, ncomp) == (b"LSL1", 8, 8, 8, 2.0, 3)
    pairs = np.frombuffer(buf, dtype="<f8", offset=44).reshape(3, 8, 8, 8, 2)
    # first entry is the most negative wavenumber on every axis
    c = a.coeffs[0, -4, -4, -4]
    assert tuple(pairs[0, 0, 0, 0]) == (c.real, c.imag)
    assert len(buf) == 44 + 3 * 8**3 * 16


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b[:10],
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:-16],
        lambda b: b[:36] + struct.pack("<Q", 2) + b[44:],
    ],
)
def test_bad_input_rejected(mutate):
    buf = fieldio.dumps(named_field("fixture", Grid(8)))
    with pytest.raises(fieldio.FormatError):
        fieldio.loads(mutate(buf))
