import math

import numpy as np
import pytest

from grflab.config import RunConfig
from grflab.errors import StepRejected, ValidationError
from grflab.flow import (
    FlowParams,
    FlowState,
    TimeSeriesRow,
    deturck_vector,
    fill_finite_difference,
    flat_state,
    probe_step,
    rhs_coupled,
    rhs_deturck,
    rhs_plain,
    run,
    step,
    suggest_dt,
)
from grflab.geometry import cov_deriv, curvature_bundle
from grflab.initialdata import build_initial

from conftest import packed_identity

TWO_PI = 2.0 * np.pi


def maxwell_state(grid, eps=1e-3):
    state = flat_state(grid)
    state.A[1] = eps * np.sin(TWO_PI * grid.coords[0])
    return state


def bfield_state(grid, c=0.2):
    state = flat_state(grid)
    state.B[2] = -(c / TWO_PI) * np.cos(TWO_PI * grid.coords[0])
    return state


def test_flat_state_is_fixed_point_of_all_rhs(grid16):
    state = flat_state(grid16)
    for rhs in (rhs_plain, rhs_deturck):
        out = rhs(state, FlowParams(mode="plain"))
        assert all(np.max(np.abs(piece)) == 0.0 for piece in out)
    out = rhs_coupled(state, FlowParams(mode="coupled", chi=0.0))
    assert all(np.max(np.abs(piece)) == 0.0 for piece in out)


def test_maxwell_rhs_is_heat_flow_on_the_potential(grid16):
    # For A = (0, eps sin(2 pi x1), 0) on a flat metric the divergence of F
    # reduces to the componentwise Laplacian: dA = -(2 pi)^2 A.
    state = maxwell_state(grid16, eps=1e-3)
    dg, dA, dB = rhs_plain(state)
    assert np.allclose(dA, -(TWO_PI ** 2) * state.A, atol=1e-12)
    assert np.max(np.abs(dB)) <= 1e-15
    # metric source is quadratic in eps: stress ~ eps^2
    assert np.max(np.abs(dg)) <= 1e-4


def test_bfield_rhs_closed_forms(grid16, x1):
    # h = c sin(2 pi x1): the H stress is 2 h^2 delta pointwise, so
    # dg = h^2 * identity, and dB follows heat flow on the potential.
    c = 0.2
    state = bfield_state(grid16, c=c)
    dg, dA, dB = rhs_plain(state)
    h2 = (c * np.sin(TWO_PI * x1)) ** 2
    for diag in (0, 3, 5):
        assert np.allclose(dg[diag], h2, atol=1e-13)
    for off in (1, 2, 4):
        assert np.max(np.abs(dg[off])) <= 1e-13
    assert np.max(np.abs(dA)) == 0.0
    assert np.allclose(dB[2], -(TWO_PI ** 2) * state.B[2], atol=1e-12)
    assert np.max(np.abs(dB[:2])) <= 1e-13


def test_coupled_rhs_scalar_closed_form(grid16, x1):
    # Flat metric, no matter, f = eps sin(2 pi x1):
    # df = chi + 3 (2 pi)^2 f + kappa eps^2 (2 pi)^2 cos^2(2 pi x1)
    eps = 1e-2
    f = eps * np.sin(TWO_PI * x1)
    grad2 = (eps * TWO_PI * np.cos(TWO_PI * x1)) ** 2
    for variant, kappa in (("thm31", 2.0), ("intro", 1.0)):
        state = flat_state(grid16)
        state.f[:] = f
        chi = 0.25
        params = FlowParams(mode="coupled", chi=chi, f_variant=variant)
        dg, dA, dB, df = rhs_coupled(state, params)
        expected = chi + 3.0 * TWO_PI ** 2 * f + kappa * grad2
        assert np.allclose(df, expected, atol=1e-12), variant
        assert np.max(np.abs(dg)) == 0.0


def test_coupled_constant_source(grid16):
    state = flat_state(grid16)
    _, _, _, df = rhs_coupled(state, FlowParams(mode="coupled", chi=1.0))
    assert np.allclose(df, 1.0, atol=1e-15)


def test_deturck_vector_vanishes_at_background(grid16):
    rng = np.random.default_rng(12)
    g = packed_identity(grid16.shape)
    g[0] += 0.05 * np.sin(TWO_PI * grid16.coords[1])
    V = deturck_vector(g, g, grid16)
    assert np.max(np.abs(V)) == 0.0


def test_deturck_vector_conformal_closed_form(grid16, x1):
    # g = exp(2 phi) delta against a flat background gives V_i = -d_i phi.
    phi = 0.05 * np.sin(TWO_PI * x1)
    g = np.exp(2.0 * phi) * packed_identity(grid16.shape)
    V = deturck_vector(g, packed_identity(grid16.shape), grid16)
    expected = -grid16.grad(phi)
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(V - expected)) <= 1e-8 * scale


def test_deturck_rhs_differs_by_symmetrized_gradient(grid16, x1):
    phi = 0.04 * np.cos(TWO_PI * x1)
    g = np.exp(2.0 * phi) * packed_identity(grid16.shape)
    state = FlowState(grid=grid16, t=0.0, g=g,
                      A=np.zeros((3,) + grid16.shape),
                      B=np.zeros((3,) + grid16.shape),
                      f=np.zeros(grid16.shape))
    params = FlowParams(mode="deturck", background_g=packed_identity(grid16.shape))
    dg_plain, _, _ = rhs_plain(state, params)
    dg_fixed, _, _ = rhs_deturck(state, params)
    V = deturck_vector(g, params.background_g, grid16)
    geo = curvature_bundle(g, grid16)
    covV = cov_deriv(V, geo.gamma, grid16)
    sym = covV + np.einsum("ai...->ia...", covV)
    from grflab.tensors import sym2_from_full
    assert np.allclose(dg_fixed - dg_plain, sym2_from_full(sym), atol=1e-13)


def test_step_rejects_nonpositive_dt(grid16):
    state = flat_state(grid16)
    params = FlowParams(mode="plain")
    with pytest.raises(ValidationError):
        step(state, params, 0.0)
    with pytest.raises(ValidationError):
        step(state, params, -1e-3)


def test_step_preserves_flat_state(grid16):
    params = FlowParams(mode="coupled", integrator="rk4")
    state = flat_state(grid16)
    for _ in range(5):
        state = step(state, params, 1e-3)
    assert np.max(np.abs(state.g - packed_identity(grid16.shape))) == 0.0
    assert np.max(np.abs(state.f)) == 0.0
    assert state.t == pytest.approx(5e-3)


def test_euler_step_is_exact_shift(grid16):
    # Euler: A_new = A + dt * rhs(A), with the rhs evaluated at the old state.
    state = maxwell_state(grid16, eps=1e-3)
    params = FlowParams(mode="plain", integrator="euler")
    dt = 1e-4
    new = step(state, params, dt)
    expected = (1.0 - dt * TWO_PI ** 2) * state.A
    assert np.allclose(new.A, expected, atol=1e-17)


def test_probe_step_accepts_negative_dt(grid16):
    state = maxwell_state(grid16, eps=1e-3)
    params = FlowParams(mode="plain", integrator="euler")
    back = probe_step(state, params, -1e-4)
    assert back.t == pytest.approx(-1e-4)
    expected = (1.0 + 1e-4 * TWO_PI ** 2) * state.A
    assert np.allclose(back.A, expected, atol=1e-17)


def test_euler_rejects_above_stability_limit(grid16):
    # Highest surviving mode is m = 7 (the Nyquist line is annihilated), so a
    # fixed dt above the explicit heat-stability bound for that mode must
    # blow up in a handful of steps.
    rng = np.random.default_rng(123)
    state = flat_state(grid16)
    state.g += 1e-6 * rng.standard_normal((6,) + grid16.shape)
    params = FlowParams(mode="plain", integrator="euler")
    dt = 3.0 / (TWO_PI * 7.0) ** 2
    with pytest.raises(StepRejected) as exc_info:
        run(state, params, t_end=50.0 * dt, fixed_dt=dt)
    assert len(exc_info.value.rows) >= 1
    assert exc_info.value.rows[-1].t <= 50.0 * dt


def test_rk4_self_convergence_is_fourth_order(grid16):
    cfg = RunConfig(init_kind="perturbed", init_amplitude=0.005, init_seed=7)
    params = FlowParams(mode="coupled", f_variant="thm31", chi=0.0)
    t_end = 2e-4

    def final_fields(dt):
        state = build_initial(cfg, grid=grid16)
        while state.t < t_end - 1e-15:
            state = step(state, params, min(dt, t_end - state.t))
        return np.concatenate([state.g.ravel(), state.A.ravel(),
                               state.B.ravel(), state.f.ravel()])

    u1 = final_fields(5e-5)
    u2 = final_fields(2.5e-5)
    u3 = final_fields(1.25e-5)
    err1 = np.linalg.norm(u1 - u2)
    err2 = np.linalg.norm(u2 - u3)
    order = math.log2(err1 / err2)
    assert order >= 3.5, (err1, err2, order)


def test_suggest_dt_scales_with_metric_eigenvalues(grid16):
    params = FlowParams(mode="plain", cfl=0.2)
    state = flat_state(grid16)
    base = suggest_dt(state, params)
    assert base == 0.2 * (1.0 / 16.0) ** 2 / 6.0
    # stretching a direction (g_11 = 4) leaves max eig of g^{-1} at 1
    state4 = flat_state(grid16)
    state4.g[0] = 4.0
    assert suggest_dt(state4, params) == base
    # shrinking (g_11 = 1/4) doubles the inverse-metric eigenvalue twice
    state_q = flat_state(grid16)
    state_q.g[0] = 0.25
    assert suggest_dt(state_q, params) == pytest.approx(base / 4.0, rel=1e-13)


def test_flow_params_validation():
    with pytest.raises(ValidationError):
        FlowParams(mode="warp")
    with pytest.raises(ValidationError):
        FlowParams(integrator="leapfrog")
    with pytest.raises(ValidationError):
        FlowParams(f_variant="thm99")
    with pytest.raises(ValidationError):
        FlowParams(cfl=0.0)
    with pytest.raises(ValidationError):
        FlowParams(cfl=5.0)
    FlowParams(cfl=1.0)  # boundary value is legal


def test_run_observation_schedule(grid16):
    params = FlowParams(mode="coupled")
    rows, final = run(flat_state(grid16), params, t_end=12e-3,
                      fixed_dt=1e-3, cadence=1, lambda_every=10)
    assert len(rows) == 13
    assert [r.step for r in rows] == list(range(13))
    ts = [r.t for r in rows]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert final.t == pytest.approx(12e-3)
    # eigenvalue column fills every tenth observation only
    for i, row in enumerate(rows):
        if i % 10 == 0:
            assert math.isfinite(row.lam)
            assert abs(row.lam) <= 1e-10
        else:
            assert math.isnan(row.lam)
    # flat flow: S identically zero
    assert all(abs(r.S) <= 1e-14 for r in rows)


def test_run_cadence_and_final_emission(grid16):
    params = FlowParams(mode="plain")
    rows, _ = run(flat_state(grid16), params, t_end=7e-3,
                  fixed_dt=1e-3, cadence=3)
    assert [r.step for r in rows] == [0, 3, 6, 7]


def test_run_validates_inputs(grid16):
    params = FlowParams(mode="plain")
    with pytest.raises(ValidationError):
        run(flat_state(grid16), params, t_end=0.0)
    with pytest.raises(ValidationError):
        run(flat_state(grid16), params, t_end=1e-2, cadence=0)


def test_fill_finite_difference_stencils():
    rows = [TimeSeriesRow(step=i, t=t, S=t * t, dSdt_formula=0.0)
            for i, t in enumerate((0.0, 0.1, 0.3))]
    fill_finite_difference(rows)
    # interior row uses the centered difference
    assert rows[1].dSdt_finite_difference == pytest.approx(
        (0.09 - 0.0) / 0.3, rel=1e-14)
    # ends fall back to one-sided differences
    assert rows[0].dSdt_finite_difference == pytest.approx(0.01 / 0.1, rel=1e-14)
    assert rows[2].dSdt_finite_difference == pytest.approx(
        (0.09 - 0.01) / 0.2, rel=1e-14)
    single = [TimeSeriesRow(step=0, t=0.0, S=1.0, dSdt_formula=0.0)]
    fill_finite_difference(single)
    assert math.isnan(single[0].dSdt_finite_difference)
