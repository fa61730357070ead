"""Field strengths, stress contractions and gauge-orthogonal projection.

A is a one-form potential with curvature F_ij = d_i A_j - d_j A_i.
B is a two-form potential, packed as (B12, B13, B23); its exterior
derivative in 3D has a single independent component

    h = H_123 = d_1 B_23 - d_2 B_13 + d_3 B_12,

and the full three-form is H_ijk = h * eps_ijk.  Squared norms use full
metric contractions over all index ranges, e.g. F2 = F_ij F_kl g^{ik} g^{jl}.
"""

from dataclasses import dataclass

import numpy as np

from .tensors import threeform_to_full


def field_strength_F(A, grid):
    """F_ij = d_i A_j - d_j A_i, full (3, 3, ...), exactly antisymmetric."""
    dA = grid.grad(A)  # (i, j, ...) = d_i A_j
    return dA - np.einsum("ij...->ji...", dA)


def field_strength_H(B, grid):
    """Single component h = H_123 of dB for packed B = (B12, B13, B23)."""
    return (grid.partial(B[2], 0) - grid.partial(B[1], 1)
            + grid.partial(B[0], 2))


@dataclass
class MatterBundle:
    F: np.ndarray          # (3, 3, ...) antisymmetric
    h: np.ndarray          # scalar field, H_123 component
    H_full: np.ndarray     # (3, 3, 3, ...)
    stress_F: np.ndarray   # (3, 3, ...):  F_i^k F_jk
    stress_H: np.ndarray   # (3, 3, ...):  H_ikl H_j^kl
    F2: np.ndarray         # scalar field |F|^2
    H2: np.ndarray         # scalar field |H|^2


def contractions(F, h, g_inv):
    """All metric contractions of the field strengths used by the flow.

    stress_F[i, j] = F_ik F_jl g^{kl}; stress_H[i, j] = H_ikl H_jab g^{ka} g^{lb};
    F2 and H2 are their traces against g^{ij}.  In 3D the H stress is
    pointwise isotropic: stress_H = (H2 / 3) g.
    """
    H_full = threeform_to_full(h)
    stress_F = np.einsum("kl...,ik...,jl...->ij...", g_inv, F, F, optimize=True)
    stress_H = np.einsum("ka...,lb...,ikl...,jab...->ij...",
                         g_inv, g_inv, H_full, H_full, optimize=True)
    F2 = np.einsum("ij...,ij...->...", g_inv, stress_F)
    H2 = np.einsum("ij...,ij...->...", g_inv, stress_H)
    return MatterBundle(F=F, h=h, H_full=H_full, stress_F=stress_F,
                        stress_H=stress_H, F2=F2, H2=H2)


def _longitudinal_split(vec, grid):
    """Fourier data (spec, longitudinal part, |k|^2) for a vector field.

    Uses the grid's Nyquist-zeroed wavenumbers, so modes invisible to the
    derivative operator (k = 0 and pure Nyquist) have |k|^2 = 0 here.
    """
    spec = grid.rfft(vec)  # (3, n1, n2, n3r)
    k1, k2, k3 = grid.wavenumbers
    k2sum = k1 * k1 + k2 * k2 + k3 * k3
    safe = np.where(k2sum == 0.0, 1.0, k2sum)
    kdot = k1 * spec[0] + k2 * spec[1] + k3 * spec[2]
    longit = np.stack([k1 * kdot / safe,
                       k2 * kdot / safe,
                       k3 * kdot / safe])
    return spec, longit, k2sum


def hodge_project_A(A, grid):
    """Remove the longitudinal (pure-gauge, divergence) part of A.

    Keeps the harmonic k = 0 component and leaves F = dA unchanged up to
    roundoff.  Idempotent.
    """
    spec, longit, _ = _longitudinal_split(A, grid)
    return grid.irfft(spec - longit)


def hodge_project_B(B, grid):
    """Keep only the part of B that carries H = dB (plus harmonic modes).

    Uses the dual vector b_i = eps_ijk B_jk / 2 = (B23, -B13, B12); dB
    depends only on the longitudinal part of b, so the transverse part is
    pure gauge and is dropped.  Idempotent; preserves H up to roundoff.
    """
    b = np.stack([B[2], -B[1], B[0]])
    spec, longit, k2sum = _longitudinal_split(b, grid)
    keep = np.where(k2sum == 0.0, spec, longit)
    b_new = grid.irfft(keep)
    return np.stack([b_new[2], -b_new[1], b_new[0]])
