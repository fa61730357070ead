"""Packed tensor storage and pointwise matrix algebra.

Symmetric rank-2 fields are stored with 6 components in the order
(11, 12, 13, 22, 23, 33); antisymmetric rank-2 fields with 3 components
in the order (12, 13, 23).  Full tensors carry their component axes
first, e.g. shape (3, 3, n1, n2, n3), so einsum contractions can use a
trailing ellipsis for the grid axes.
"""

import numpy as np

from .errors import NonFinite, NonSPDMetric

SYM2_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
ASYM2_PAIRS = ((0, 1), (0, 2), (1, 2))

# Permutation symbol eps[i,j,k] with eps[0,1,2] = +1.
EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k, _s in ((0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0),
                       (0, 2, 1, -1.0), (2, 1, 0, -1.0), (1, 0, 2, -1.0)):
    EPS3[_i, _j, _k] = _s


def sym2_to_full(packed):
    """Expand (6, ...) symmetric storage to a full (3, 3, ...) array."""
    out = np.empty((3, 3) + packed.shape[1:], dtype=packed.dtype)
    for k, (i, j) in enumerate(SYM2_PAIRS):
        out[i, j] = packed[k]
        if i != j:
            out[j, i] = packed[k]
    return out


def sym2_from_full(full):
    """Pack the upper triangle of a full (3, 3, ...) array."""
    out = np.empty((6,) + full.shape[2:], dtype=full.dtype)
    for k, (i, j) in enumerate(SYM2_PAIRS):
        out[k] = full[i, j]
    return out


def asym2_to_full(packed):
    """Expand (3, ...) antisymmetric storage to a full (3, 3, ...) array."""
    out = np.zeros((3, 3) + packed.shape[1:], dtype=packed.dtype)
    for k, (i, j) in enumerate(ASYM2_PAIRS):
        out[i, j] = packed[k]
        out[j, i] = -packed[k]
    return out


def asym2_from_full(full):
    out = np.empty((3,) + full.shape[2:], dtype=full.dtype)
    for k, (i, j) in enumerate(ASYM2_PAIRS):
        out[k] = full[i, j]
    return out


def threeform_to_full(h):
    """Expand the single independent component H_123 = h to H_ijk = h * eps_ijk."""
    return EPS3.reshape((3, 3, 3) + (1,) * h.ndim) * h


def det3_sym(packed):
    """Determinant of a packed symmetric (6, ...) field."""
    a, b, c, d, e, f = packed
    return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)


def inv3_sym(packed, det=None):
    """Inverse of a packed symmetric (6, ...) field, returned full (3, 3, ...).

    Uses the explicit adjugate; no pivoting, so callers are expected to
    have validated positivity first.
    """
    a, b, c, d, e, f = packed
    if det is None:
        det = det3_sym(packed)
    inv = np.empty((3, 3) + packed.shape[1:], dtype=packed.dtype)
    inv[0, 0] = d * f - e * e
    inv[0, 1] = c * e - b * f
    inv[0, 2] = b * e - c * d
    inv[1, 1] = a * f - c * c
    inv[1, 2] = b * c - a * e
    inv[2, 2] = a * d - b * b
    inv[1, 0] = inv[0, 1]
    inv[2, 0] = inv[0, 2]
    inv[2, 1] = inv[1, 2]
    return inv / det


def spd_minors(packed):
    """Leading principal minors (m1, m2, m3) of a packed symmetric field."""
    a, b, c, d, e, f = packed
    m1 = a
    m2 = a * d - b * b
    m3 = det3_sym(packed)
    return m1, m2, m3


def require_spd(packed, det_floor, where=""):
    """Raise NonSPDMetric unless all three Sylvester minors clear the floor."""
    m1, m2, m3 = spd_minors(packed)
    min_det = float(np.min(m3))
    if not (np.all(m1 > 0.0) and np.all(m2 > 0.0) and np.all(m3 >= det_floor)):
        label = f" ({where})" if where else ""
        raise NonSPDMetric(
            f"metric not SPD{label}: min leading minors "
            f"({float(np.min(m1)):.3e}, {float(np.min(m2)):.3e}, {min_det:.3e}), "
            f"det floor {det_floor:.1e}",
            min_det=min_det,
        )
    return min_det


def require_finite(where, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NonFinite(f"non-finite values in {where}")


def sym_eigvals(full):
    """Eigenvalues of a (3, 3, ...) symmetric field, shape (..., 3) ascending."""
    mat = np.moveaxis(full, (0, 1), (-2, -1))
    return np.linalg.eigvalsh(mat)
