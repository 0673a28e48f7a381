"""Binary snapshots of N-body states and reduced density matrices.

Layout (all multi-byte fields in the byte order named by the tag byte)::

    offset  size  field
    0       4     magic b"MFLB"
    4       1     format version (1)
    5       1     endianness tag: b"<" little or b">" big
    6       1     payload kind: 0 = N-body state, 1 = reduced density matrix
    7       1     reserved (0)
    8       4     uint32 d
    12      4     uint32 M
    16      4     uint32 N   (particle number of the source state)
    20      4     uint32 k   (marginal order; equals N for states)
    24      8     float64 L
    32      8     float64 t
    40      ...   complex128 payload

States are written in position basis, C order over (x_1, ..., x_N), each x_i
itself C order over its d axes with site index j <-> x = j * L / M.  Reduced
density matrices are (M^d)^k x (M^d)^k, row-major, rows and columns ordered
like states.  Coefficients include the quadrature weight sqrt(h^d).
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec, make_grid
from .manybody import ManyBodyState
from .marginals import ReducedDensityMatrix

MAGIC = b"MFLB"
VERSION = 1
KIND_STATE = 0
KIND_RDM = 1
_BODY = "IIIIdd"
HEADER_SIZE = 8 + struct.calcsize("<" + _BODY)


@dataclass(frozen=True)
class SnapshotHeader:
    kind: int
    d: int
    M: int
    N: int
    k: int
    L: float
    t: float
    byteorder: str = "<"


def _native_tag() -> str:
    return "<" if sys.byteorder == "little" else ">"


def _pack(h: SnapshotHeader) -> bytes:
    head = MAGIC + bytes([VERSION]) + h.byteorder.encode() + bytes([h.kind, 0])
    return head + struct.pack(h.byteorder + _BODY, h.d, h.M, h.N, h.k, h.L, h.t)


def read_header(raw: bytes) -> SnapshotHeader:
    if raw[:4] != MAGIC:
        raise ValueError("not a snapshot file (bad magic)")
    if raw[4] != VERSION:
        raise ValueError(f"unsupported snapshot version {raw[4]}")
    tag = chr(raw[5])
    if tag not in "<>":
        raise ValueError(f"bad endianness tag {tag!r}")
    d, M, N, k, L, t = struct.unpack(tag + _BODY, raw[8:HEADER_SIZE])
    return SnapshotHeader(raw[6], d, M, N, k, L, t, tag)


def _write(path, header: SnapshotHeader, data: np.ndarray) -> None:
    dtype = np.dtype(header.byteorder + "c16")
    with open(Path(path), "wb") as fh:
        fh.write(_pack(header))
        fh.write(np.ascontiguousarray(data, dtype=dtype).tobytes())


def _read(path) -> tuple[SnapshotHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    header = read_header(raw)
    data = np.frombuffer(raw, dtype=np.dtype(header.byteorder + "c16"), offset=HEADER_SIZE)
    return header, data.astype(complex)


def write_state(path, state: ManyBodyState, byteorder: str | None = None) -> None:
    g = state.grid
    h = SnapshotHeader(KIND_STATE, g.d, g.M, state.N, state.N, g.L, float(state.t), byteorder or _native_tag())
    _write(path, h, state.psi)


def read_state(path, grid: GridSpec | None = None) -> ManyBodyState:
    h, data = _read(path)
    if h.kind != KIND_STATE:
        raise ValueError("snapshot holds a density matrix, not a state")
    grid = grid or make_grid(h.d, h.M, h.L)
    return ManyBodyState(grid, h.N, data.reshape(grid.shape * h.N), h.t)


def write_rdm(path, gamma: ReducedDensityMatrix, N: int, t: float = 0.0, byteorder: str | None = None) -> None:
    g = gamma.grid
    h = SnapshotHeader(KIND_RDM, g.d, g.M, N, gamma.k, g.L, float(t), byteorder or _native_tag())
    _write(path, h, gamma.matrix)


def read_rdm(path) -> tuple[SnapshotHeader, ReducedDensityMatrix]:
    h, data = _read(path)
    if h.kind != KIND_RDM:
        raise ValueError("snapshot holds a state, not a density matrix")
    grid = make_grid(h.d, h.M, h.L)
    dim = grid.size**h.k
    return h, ReducedDensityMatrix(grid, h.k, data.reshape(dim, dim))
