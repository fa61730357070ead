"""Binary checkpoints: byte-exact snapshots of a FlowState.

Layout (all little-endian):

    bytes 0..3    magic "GRFL"
    u32           format version (currently 1)
    3 x u32       grid points per axis
    3 x f64       box lengths
    f64           time t
    then row-major f64 arrays in order: g (6 components), A (3),
    B (3), f (1), each of shape (n1, n2, n3)
"""

import struct

import numpy as np

from .errors import FormatError, TruncatedFile
from .flow import FlowState
from .mesh import make_grid

MAGIC = b"GRFL"
VERSION = 1
_HEADER = struct.Struct("<4sI3I3dd")


def checkpoint_write(state, path):
    n = state.grid.n
    header = _HEADER.pack(MAGIC, VERSION, *n, *state.grid.length, state.t)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (state.g, state.A, state.B, state.f):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def checkpoint_read(path, backend="spectral"):
    """Rebuild the state; the derivative backend is not stored and must
    be chosen by the caller (default spectral)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(blob)} bytes is shorter than the header")
    magic, version, n1, n2, n3, l1, l2, l3, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")

    shape = (n1, n2, n3)
    points = n1 * n2 * n3
    counts = (6, 3, 3, 1)
    need = _HEADER.size + 8 * points * sum(counts)
    if len(blob) < need:
        raise TruncatedFile(f"{path}: need {need} bytes, found {len(blob)}")
    if len(blob) > need:
        raise FormatError(f"{path}: {len(blob) - need} trailing bytes")

    grid = make_grid(shape, (l1, l2, l3), backend)
    offset = _HEADER.size
    arrays = []
    for count in counts:
        m = count * points
        flat = np.frombuffer(blob, dtype="<f8", count=m, offset=offset)
        offset += 8 * m
        arr = flat.reshape((count,) + shape if count > 1 else shape)
        arrays.append(arr.astype(np.float64))
    g, A, B, f = arrays
    return FlowState(grid=grid, t=t, g=g, A=A, B=B, f=f)
