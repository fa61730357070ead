"""Periodic grids and discrete derivatives on the 3-torus.

Fields live on a regular n1 x n2 x n3 lattice over [0, L1) x [0, L2) x
[0, L3), grid axes always last.  Two derivative backends are supported:

    spectral   FFT differentiation; Nyquist modes are zeroed so that the
               operator is skew-adjoint and real fields stay real
    central4   fourth-order centered finite differences via np.roll
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonSPDMetric, ValidationError
from .tensors import det3_sym

BACKENDS = ("spectral", "central4")


@dataclass(frozen=True)
class Grid:
    n: tuple
    length: tuple
    backend: str = "spectral"

    @property
    def spacing(self):
        return tuple(L / m for L, m in zip(self.length, self.n))

    @property
    def num_points(self):
        n1, n2, n3 = self.n
        return n1 * n2 * n3

    @property
    def cell_volume(self):
        h1, h2, h3 = self.spacing
        return h1 * h2 * h3

    @property
    def shape(self):
        return tuple(self.n)

    def axis_coords(self, axis):
        return np.arange(self.n[axis]) * self.spacing[axis]

    @cached_property
    def coords(self):
        """Meshgrid coordinate arrays (X1, X2, X3), each shaped like a field."""
        return tuple(np.meshgrid(*(self.axis_coords(a) for a in range(3)),
                                 indexing="ij"))

    @cached_property
    def wavenumbers(self):
        """Real wavenumber arrays on the rfftn layout, Nyquist zeroed.

        Shapes broadcast to (n1, n2, n3//2 + 1).
        """
        n1, n2, n3 = self.n
        h1, h2, h3 = self.spacing
        k1 = 2.0 * np.pi * np.fft.fftfreq(n1, d=h1)
        k2 = 2.0 * np.pi * np.fft.fftfreq(n2, d=h2)
        k3 = 2.0 * np.pi * np.fft.rfftfreq(n3, d=h3)
        if n1 % 2 == 0:
            k1[n1 // 2] = 0.0
        if n2 % 2 == 0:
            k2[n2 // 2] = 0.0
        if n3 % 2 == 0:
            k3[-1] = 0.0
        return (k1[:, None, None], k2[None, :, None], k3[None, None, :])

    @cached_property
    def _ik(self):
        return tuple(1j * k for k in self.wavenumbers)

    def rfft(self, values):
        return np.fft.rfftn(values, axes=(-3, -2, -1))

    def irfft(self, spec):
        return np.fft.irfftn(spec, s=self.shape, axes=(-3, -2, -1))

    def partial(self, values, axis):
        """Partial derivative along a grid axis; broadcasts over leading axes."""
        if self.backend == "spectral":
            return self.irfft(self.rfft(values) * self._ik[axis])
        return self._central4(values, axis)

    def grad(self, values):
        """All three partials at once, stacked on a new leading axis.

        For the spectral backend this shares one forward transform, which
        is the main reason batched (3, T, n1, n2, n3)-style layouts pay off.
        """
        out = np.empty((3,) + values.shape, dtype=values.dtype)
        if self.backend == "spectral":
            spec = self.rfft(values)
            for a in range(3):
                out[a] = self.irfft(spec * self._ik[a])
        else:
            for a in range(3):
                out[a] = self._central4(values, a)
        return out

    def _central4(self, values, axis):
        ax = values.ndim - 3 + axis
        h = self.spacing[axis]
        p1 = np.roll(values, -1, axis=ax)
        m1 = np.roll(values, 1, axis=ax)
        p2 = np.roll(values, -2, axis=ax)
        m2 = np.roll(values, 2, axis=ax)
        return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)

    def coordinate_integral(self, values):
        """Plain sum times cell volume (no metric factor)."""
        return float(np.sum(values)) * self.cell_volume


def make_grid(n, length, backend="spectral"):
    n = tuple(int(m) for m in n)
    length = tuple(float(L) for L in length)
    if len(n) != 3 or len(length) != 3:
        raise ValidationError("grid", "need 3 extents and 3 lengths")
    if any(m < 4 for m in n):
        raise ValidationError("grid.n", f"each extent must be >= 4, got {n}")
    if any(L <= 0.0 for L in length):
        raise ValidationError("grid.L", f"each length must be > 0, got {length}")
    if backend not in BACKENDS:
        raise ValidationError("grid.backend",
                              f"unknown backend {backend!r}, expected one of {BACKENDS}")
    return Grid(n=n, length=length, backend=backend)


def integrate_scalar(values, g, grid):
    """Integral of a scalar against the metric volume element sqrt(det g).

    g is packed symmetric storage (6, n1, n2, n3).
    """
    det = det3_sym(g)
    if np.any(det <= 0.0):
        raise NonSPDMetric("cannot integrate: det g <= 0 somewhere",
                           min_det=float(np.min(det)))
    return float(np.sum(values * np.sqrt(det))) * grid.cell_volume
