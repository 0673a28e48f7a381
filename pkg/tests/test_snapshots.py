import numpy as np
import pytest

from meanfield_lab.manybody import ManyBodyState
from meanfield_lab.marginals import partial_trace
from meanfield_lab.snapshots import HEADER_SIZE, read_header, read_rdm, read_state, write_rdm, write_state
from meanfield_lab.suites import random_symmetric_state


@pytest.mark.parametrize("order", ["<", ">"])
def test_state_round_trip(tmp_path, grid8, rng, order):
    s = ManyBodyState(grid8, 3, random_symmetric_state(grid8, 3, rng), t=0.75)
    path = tmp_path / "psi.bin"
    write_state(path, s, byteorder=order)
    raw = path.read_bytes()
    assert len(raw) == HEADER_SIZE + 16 * 8**3 and raw[:4] == b"MFLB" and chr(raw[5]) == order
    back = read_state(path)
    np.testing.assert_array_equal(back.psi, s.psi)
    assert (back.N, back.t, back.grid) == (3, 0.75, grid8)


@pytest.mark.parametrize("order", ["<", ">"])
def test_rdm_round_trip(tmp_path, grid8, rng, order):
    s = ManyBodyState(grid8, 3, random_symmetric_state(grid8, 3, rng))
    g = partial_trace(s, 2)
    path = tmp_path / "g2.bin"
    write_rdm(path, g, N=3, t=0.5, byteorder=order)
    h, back = read_rdm(path)
    assert (h.N, h.k, h.t, h.M, h.d) == (3, 2, 0.5, 8, 1)
    np.testing.assert_array_equal(back.matrix, g.matrix)


def test_header_validation(tmp_path, grid8, rng):
    s = ManyBodyState(grid8, 2, random_symmetric_state(grid8, 2, rng))
    write_state(tmp_path / "a.bin", s)
    raw = (tmp_path / "a.bin").read_bytes()
    with pytest.raises(ValueError):
        read_header(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        read_header(raw[:4] + b"\x07" + raw[5:])
    with pytest.raises(ValueError):
        read_rdm(tmp_path / "a.bin")
