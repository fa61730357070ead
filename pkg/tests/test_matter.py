import numpy as np

from grflab.matter import (
    contractions,
    field_strength_F,
    field_strength_H,
    hodge_project_A,
    hodge_project_B,
)
from grflab.tensors import inv3_sym

from conftest import packed_identity

TWO_PI = 2.0 * np.pi


def flat_inverse(shape):
    g_inv = np.zeros((3, 3) + shape)
    g_inv[0, 0] = g_inv[1, 1] = g_inv[2, 2] = 1.0
    return g_inv


def test_field_strength_F_closed_form(grid16, x1):
    # A = (0, sin(2 pi x1), 0) gives F_12 = -F_21 = 2 pi cos(2 pi x1).
    A = np.zeros((3,) + grid16.shape)
    A[1] = np.sin(TWO_PI * x1)
    F = field_strength_F(A, grid16)
    expected = TWO_PI * np.cos(TWO_PI * x1)
    assert np.allclose(F[0, 1], expected, atol=1e-10)
    assert np.array_equal(F, -np.swapaxes(F, 0, 1))
    assert np.max(np.abs(F[0, 2])) <= 1e-12
    assert np.max(np.abs(F[1, 2])) <= 1e-12


def test_field_strength_F_kills_gradients(grid16, x1):
    # A = d(alpha) is pure gauge, so F vanishes identically.
    alpha = 0.3 * np.cos(TWO_PI * x1) + 0.1 * np.sin(TWO_PI * grid16.coords[2])
    A = grid16.grad(alpha)
    F = field_strength_F(A, grid16)
    assert np.max(np.abs(F)) <= 1e-12


def test_field_strength_H_closed_form(grid16, x1):
    # B stored as (B_12, B_13, B_23); only B_23 = -c/(2 pi) cos(2 pi x1)
    # gives h = H_123 = d_1 B_23 = c sin(2 pi x1).
    c = 0.2
    B = np.zeros((3,) + grid16.shape)
    B[2] = -(c / TWO_PI) * np.cos(TWO_PI * x1)
    h = field_strength_H(B, grid16)
    assert np.allclose(h, c * np.sin(TWO_PI * x1), atol=1e-12)


def test_field_strength_H_sign_convention(grid16):
    # h = d_1 B_23 - d_2 B_13 + d_3 B_12, checked one slot at a time.
    x1, x2, x3 = grid16.coords
    for slot, coord, sign in ((2, x1, 1.0), (1, x2, -1.0), (0, x3, 1.0)):
        B = np.zeros((3,) + grid16.shape)
        B[slot] = np.sin(TWO_PI * coord)
        h = field_strength_H(B, grid16)
        assert np.allclose(h, sign * TWO_PI * np.cos(TWO_PI * coord),
                           atol=1e-10), slot


def test_contractions_flat_closed_forms(grid16):
    shape = grid16.shape
    g_inv = flat_inverse(shape)
    # constant h: H2 = 6 h^2 and stress_H = 2 h^2 delta_ij
    h = np.full(shape, 0.7)
    F = np.zeros((3, 3) + shape)
    bundle = contractions(F, h, g_inv)
    assert np.allclose(bundle.H2, 6.0 * 0.49, atol=1e-13)
    for i in range(3):
        assert np.allclose(bundle.stress_H[i, i], 2.0 * 0.49, atol=1e-13)
    assert np.max(np.abs(bundle.stress_H[0, 1])) <= 1e-14
    assert np.max(np.abs(bundle.F2)) == 0.0
    # constant F_12 = c: F2 = 2 c^2, stress_F = diag(c^2, c^2, 0)
    c = 0.4
    F = np.zeros((3, 3) + shape)
    F[0, 1] = c
    F[1, 0] = -c
    bundle = contractions(F, np.zeros(shape), g_inv)
    assert np.allclose(bundle.F2, 2.0 * c * c, atol=1e-13)
    assert np.allclose(bundle.stress_F[0, 0], c * c, atol=1e-13)
    assert np.allclose(bundle.stress_F[1, 1], c * c, atol=1e-13)
    assert np.max(np.abs(bundle.stress_F[2, 2])) == 0.0


def test_h_stress_is_isotropic_for_any_metric(grid16):
    # In 3D, H_ikl H_j^kl = (H2/3) g_ij identically.
    rng = np.random.default_rng(8)
    g = packed_identity(grid16.shape)
    g += 0.1 * rng.standard_normal((6, 1, 1, 1))
    g_inv = inv3_sym(g)
    h = np.sin(TWO_PI * grid16.coords[1])
    bundle = contractions(np.zeros((3, 3) + grid16.shape), h, g_inv)
    from grflab.tensors import sym2_to_full
    g_full = sym2_to_full(g)
    assert np.allclose(bundle.stress_H, (bundle.H2 / 3.0) * g_full,
                       rtol=1e-12, atol=1e-13)


def test_hodge_project_A_removes_longitudinal_part(grid16, x1):
    rng = np.random.default_rng(9)
    A = rng.standard_normal((3,) + grid16.shape) * 0.1
    A_proj = hodge_project_A(A, grid16)
    # divergence-free afterwards
    div = sum(grid16.partial(A_proj[i], i) for i in range(3))
    assert np.max(np.abs(div)) <= 1e-12
    # F unchanged
    F0 = field_strength_F(A, grid16)
    F1 = field_strength_F(A_proj, grid16)
    assert np.max(np.abs(F1 - F0)) <= 1e-12
    # idempotent
    assert np.allclose(hodge_project_A(A_proj, grid16), A_proj, atol=1e-13)
    # a pure gradient projects to its mean
    alpha = 0.2 * np.sin(TWO_PI * x1)
    A_grad = grid16.grad(alpha)
    proj = hodge_project_A(A_grad, grid16)
    assert np.max(np.abs(proj)) <= 1e-12


def test_hodge_project_B_preserves_H_and_fixes_gauge(grid16, x1):
    rng = np.random.default_rng(10)
    B = rng.standard_normal((3,) + grid16.shape) * 0.1
    B_proj = hodge_project_B(B, grid16)
    h0 = field_strength_H(B, grid16)
    h1 = field_strength_H(B_proj, grid16)
    assert np.max(np.abs(h1 - h0)) <= 1e-12
    assert np.allclose(hodge_project_B(B_proj, grid16), B_proj, atol=1e-13)
    # pure gauge B = d(xi) (two-form exterior derivative of a one-form)
    xi = np.zeros((3,) + grid16.shape)
    xi[1] = 0.3 * np.sin(TWO_PI * x1)
    dxi = np.stack([
        grid16.partial(xi[1], 0) - grid16.partial(xi[0], 1),
        grid16.partial(xi[2], 0) - grid16.partial(xi[0], 2),
        grid16.partial(xi[2], 1) - grid16.partial(xi[1], 2),
    ])
    proj = hodge_project_B(dxi, grid16)
    assert np.max(np.abs(proj)) <= 1e-12


def test_hodge_project_B_keeps_constant_part(grid16):
    # the harmonic (constant) part of B survives projection
    B = np.zeros((3,) + grid16.shape)
    B[0] = 0.25
    assert np.allclose(hodge_project_B(B, grid16), B, atol=1e-14)
