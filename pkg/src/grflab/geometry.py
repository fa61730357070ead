"""Curvature and covariant calculus for a metric sampled on a periodic grid.

Index conventions (all lower unless stated):

    christoffel gamma[k, i, j]      Gamma^k_ij
    riemann_up  up[k, i, j, l]      R^k_ijl = d_i Gamma^k_jl - d_j Gamma^k_il + ...
    riemann     down[i, j, k, l]    R_ijkl = g_kp R^p_ijl
    ricci       ric[i, k]           R_ik = g^{jl} R_ijkl

The sign conventions make the round sphere have positive scalar curvature
and the Laplacian g^{ij} (Hess f)_ij nonpositive on its lowest mode.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid
from .tensors import inv3_sym, require_spd, sym2_to_full

DET_FLOOR = 1e-8

_LETTERS = "ijklmn"


def inverse_metric(g, det_floor=DET_FLOOR):
    """Pointwise inverse of a packed metric, returned full (3, 3, ...).

    Refuses non-SPD input: all Sylvester minors must be positive and the
    determinant must clear det_floor.
    """
    require_spd(g, det_floor, where="inverse_metric")
    return inv3_sym(g)


def christoffel(g, grid, g_inv=None):
    """Levi-Civita connection coefficients Gamma^k_ij, shape (3, 3, 3, ...).

    Built from dg[a, m, n] = d_a g_mn as g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)/2;
    the (i, j) symmetry is exact by construction.
    """
    if g_inv is None:
        g_inv = inverse_metric(g)
    g_full = sym2_to_full(g)
    dg = grid.grad(g_full)  # (a, m, n, ...)
    t1 = np.einsum("ijl...->lij...", dg)        # [l, i, j] = d_i g_jl
    sym = t1 + np.einsum("lij...->lji...", t1)  # + d_j g_il
    core = 0.5 * (sym - dg)                     # dg[l, i, j] = d_l g_ij
    return np.einsum("kl...,lij...->kij...", g_inv, core)


def riemann(g, gamma, grid, g_full=None):
    """Riemann tensor, returned as (up, down) with the layouts above."""
    if g_full is None:
        g_full = sym2_to_full(g)
    dgamma = grid.grad(gamma)  # (a, k, j, l, ...) = d_a Gamma^k_jl
    up = np.einsum("ikjl...->kijl...", dgamma)
    up = up - np.einsum("jkil...->kijl...", dgamma)
    up = up + np.einsum("kip...,pjl...->kijl...", gamma, gamma)
    up = up - np.einsum("kjp...,pil...->kijl...", gamma, gamma)
    down = np.einsum("kp...,pijl...->ijkl...", g_full, up)
    return up, down


def ricci_and_scalar(riemann_down, g_inv):
    """Ricci tensor R_ik = g^{jl} R_ijkl and scalar R = g^{ik} R_ik."""
    ric = np.einsum("jl...,ijkl...->ik...", g_inv, riemann_down)
    scal = np.einsum("ik...,ik...->...", g_inv, ric)
    return ric, scal


def cov_deriv(tensor, gamma, grid):
    """Covariant derivative of an all-lower-index tensor field.

    tensor has shape (3,)*r + grid.shape; the result prepends the
    derivative index: out[a, i1..ir] = nabla_a T_{i1..ir}.
    """
    rank = tensor.ndim - 3
    out = grid.grad(tensor)
    idx = _LETTERS[:rank]
    for s in range(rank):
        t_idx = idx[:s] + "p" + idx[s + 1:]
        out = out - np.einsum(f"pa{idx[s]}...,{t_idx}...->a{idx}...",
                              gamma, tensor)
    return out


def covariant_hessian(f, gamma, grid):
    """(Hess f)_ij = d_i d_j f - Gamma^k_ij d_k f, exactly symmetric for spectral."""
    df = grid.grad(f)
    ddf = grid.grad(df)  # (i, j, ...) = d_i d_j f
    ddf = 0.5 * (ddf + np.einsum("ij...->ji...", ddf))
    return ddf - np.einsum("kij...,k...->ij...", gamma, df)


def laplacian(f, g_inv, gamma, grid):
    """Metric Laplacian g^{ij}(Hess f)_ij (nonpositive spectrum convention)."""
    return np.einsum("ij...,ij...->...", g_inv, covariant_hessian(f, gamma, grid))


def tensor_laplacian(tensor, g_inv, gamma, grid):
    """Rough Laplacian g^{ab} nabla_a nabla_b T for an all-lower tensor."""
    second = cov_deriv(cov_deriv(tensor, gamma, grid), gamma, grid)
    rank = tensor.ndim - 3
    idx = _LETTERS[:rank]
    return np.einsum(f"ab...,ab{idx}...->{idx}...", g_inv, second)


def quad_b(riemann_down, g_inv):
    """B_ijkl = g^{pr} g^{qs} R_piqj R_rksl (quadratic curvature tensor)."""
    return np.einsum("pr...,qs...,piqj...,rksl...->ijkl...",
                     g_inv, g_inv, riemann_down, riemann_down, optimize=True)


@dataclass
class CurvatureBundle:
    """Everything downstream code usually needs about one metric."""

    grid: Grid
    g: np.ndarray            # packed (6, ...)
    g_full: np.ndarray       # (3, 3, ...)
    g_inv: np.ndarray        # (3, 3, ...)
    gamma: np.ndarray        # (3, 3, 3, ...)
    riemann_up: np.ndarray   # (3, 3, 3, 3, ...)
    riemann_down: np.ndarray
    ricci: np.ndarray        # (3, 3, ...)
    scalar: np.ndarray       # (...)
    _quad_b: np.ndarray = field(default=None, repr=False)

    @property
    def quad_b(self):
        if self._quad_b is None:
            self._quad_b = quad_b(self.riemann_down, self.g_inv)
        return self._quad_b


def curvature_bundle(g, grid, det_floor=DET_FLOOR):
    g_inv = inverse_metric(g, det_floor=det_floor)
    g_full = sym2_to_full(g)
    gamma = christoffel(g, grid, g_inv=g_inv)
    up, down = riemann(g, gamma, grid, g_full=g_full)
    ric, scal = ricci_and_scalar(down, g_inv)
    return CurvatureBundle(grid=grid, g=g, g_full=g_full, g_inv=g_inv,
                           gamma=gamma, riemann_up=up, riemann_down=down,
                           ricci=ric, scalar=scal)
