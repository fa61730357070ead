"""Right-hand sides of the flow variants and explicit time stepping.

Three modes share one assembly path:

    plain     dg = -2(Ric - 1/4 HH - FF);  dA = -div F;  dB = div H
    coupled   plain plus the scalar equation
              df = chi - 2R - 3 lap f + kappa |grad f|^2 + H^2/3 + 3/2 F^2
    deturck   plain dg plus the symmetrized gradient of the gauge vector
              V_i = g_ik g^{jl} (Gamma - Gamma~)^k_jl

The coupled scalar equation carries an anti-diffusive -3 lap f term (the
measure e^{-f} dV is transported backward); see suggest_dt and the
stability notes in the README before attempting long horizons with it.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import functional
from .errors import NonFinite, NonSPDMetric, StepRejected, ValidationError
from .geometry import (DET_FLOOR, christoffel, cov_deriv, curvature_bundle,
                       inverse_metric, laplacian)
from .matter import (contractions, field_strength_F, field_strength_H,
                     hodge_project_A, hodge_project_B)
from .mesh import Grid, integrate_scalar
from .tensors import (asym2_from_full, det3_sym, require_finite, require_spd,
                      sym2_from_full, sym2_to_full, sym_eigvals)

MODES = ("plain", "coupled", "deturck")
F_VARIANTS = ("thm31", "intro")
INTEGRATORS = ("euler", "rk4")


@dataclass
class FlowState:
    """One snapshot of the evolving fields.

    g is packed symmetric (6, n1, n2, n3) in the order
    (11, 12, 13, 22, 23, 33); A is (3, ...); B is packed antisymmetric
    (3, ...) in the order (12, 13, 23); f is a scalar field.
    """

    grid: Grid
    t: float
    g: np.ndarray
    A: np.ndarray
    B: np.ndarray
    f: np.ndarray

    def copy(self):
        return FlowState(grid=self.grid, t=self.t, g=self.g.copy(),
                         A=self.A.copy(), B=self.B.copy(), f=self.f.copy())

    def validate(self, det_floor=DET_FLOOR):
        require_finite("state fields", self.g, self.A, self.B, self.f)
        require_spd(self.g, det_floor, where=f"t={self.t:.6g}")


def flat_state(grid):
    shape = grid.shape
    g = np.zeros((6,) + shape)
    g[0] = g[3] = g[5] = 1.0
    return FlowState(grid=grid, t=0.0, g=g, A=np.zeros((3,) + shape),
                     B=np.zeros((3,) + shape), f=np.zeros(shape))


@dataclass
class FlowParams:
    mode: str = "coupled"
    chi: float = 0.0
    f_variant: str = "thm31"
    cfl: float = 0.2
    integrator: str = "rk4"
    reproject_gauge: bool = False
    background_g: np.ndarray = None  # packed; None means flat identity
    det_floor: float = DET_FLOOR

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError("mode", f"unknown mode {self.mode!r}")
        if self.f_variant not in F_VARIANTS:
            raise ValidationError("f_variant", f"unknown variant {self.f_variant!r}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError("integrator",
                                  f"unknown integrator {self.integrator!r}")
        if not (0.0 < self.cfl <= 1.0):
            raise ValidationError("cfl", f"cfl must be in (0, 1], got {self.cfl}")


def _base_increments(state, params):
    """dg (full, before mode corrections), dA, dB and the geometry reuse."""
    grid = state.grid
    geo = curvature_bundle(state.g, grid, det_floor=params.det_floor)
    F = field_strength_F(state.A, grid)
    h = field_strength_H(state.B, grid)
    mat = contractions(F, h, geo.g_inv)

    dg_full = -2.0 * (geo.ricci - 0.25 * mat.stress_H - mat.stress_F)

    covF = cov_deriv(F, geo.gamma, grid)        # (k, i, l) = nabla_k F_il
    dA = -np.einsum("kl...,kil...->i...", geo.g_inv, covF)

    covH = cov_deriv(mat.H_full, geo.gamma, grid)  # (k, l, i, j)
    divH = np.einsum("kl...,klij...->ij...", geo.g_inv, covH)
    dB = asym2_from_full(0.5 * (divH - np.einsum("ij...->ji...", divH)))

    return geo, mat, dg_full, dA, dB


def rhs_plain(state, params=None):
    """Metric/Maxwell/B-field system; returns packed (dg, dA, dB)."""
    params = params or FlowParams(mode="plain")
    _, _, dg_full, dA, dB = _base_increments(state, params)
    return _pack_sym(dg_full), dA, dB


def _pack_sym(dg_full):
    return sym2_from_full(0.5 * (dg_full + np.einsum("ij...->ji...", dg_full)))


def _scalar_rhs(state, params, geo, mat):
    grid = state.grid
    lap_f = laplacian(state.f, geo.g_inv, geo.gamma, grid)
    df = grid.grad(state.f)
    grad2 = np.einsum("ij...,i...,j...->...", geo.g_inv, df, df)
    kappa = 2.0 if params.f_variant == "thm31" else 1.0
    return (params.chi - 2.0 * geo.scalar - 3.0 * lap_f + kappa * grad2
            + mat.H2 / 3.0 + 1.5 * mat.F2)


def rhs_coupled(state, params):
    """Full coupled system; returns packed (dg, dA, dB, df)."""
    geo, mat, dg_full, dA, dB = _base_increments(state, params)
    df = _scalar_rhs(state, params, geo, mat)
    return _pack_sym(dg_full), dA, dB, df


def deturck_vector(g, background_g, grid):
    """Gauge vector V_i = g_ik g^{jl} (Gamma^k_jl - Gamma~^k_jl)."""
    g_inv = inverse_metric(g)
    gamma = christoffel(g, grid, g_inv=g_inv)
    gamma_ref = christoffel(background_g, grid,
                            g_inv=inverse_metric(background_g))
    g_full = sym2_to_full(g)
    return np.einsum("ik...,jl...,kjl...->i...", g_full, g_inv,
                     gamma - gamma_ref, optimize=True)


def _deturck_correction(state, params, geo):
    grid = state.grid
    if params.background_g is None:
        gamma_ref = np.zeros_like(geo.gamma)
    else:
        gamma_ref = christoffel(params.background_g, grid,
                                g_inv=inverse_metric(params.background_g))
    V = np.einsum("ik...,jl...,kjl...->i...", geo.g_full, geo.g_inv,
                  geo.gamma - gamma_ref, optimize=True)
    covV = cov_deriv(V, geo.gamma, grid)  # (a, i) = nabla_a V_i
    return covV + np.einsum("ai...->ia...", covV)


def rhs_deturck(state, params):
    """Gauge-fixed metric flow; returns packed (dg, dA, dB)."""
    geo, mat, dg_full, dA, dB = _base_increments(state, params)
    dg_full = dg_full + _deturck_correction(state, params, geo)
    return _pack_sym(dg_full), dA, dB


def _increments(state, params):
    """(dg, dA, dB, df) packed, for whatever mode params selects."""
    geo, mat, dg_full, dA, dB = _base_increments(state, params)
    if params.mode == "deturck":
        dg_full = dg_full + _deturck_correction(state, params, geo)
    if params.mode == "coupled":
        df = _scalar_rhs(state, params, geo, mat)
    else:
        df = np.zeros_like(state.f)
    return _pack_sym(dg_full), dA, dB, df


def _shift(state, incr, dt, scale=1.0):
    dg, dA, dB, df = incr
    c = dt * scale
    return FlowState(grid=state.grid, t=state.t + c, g=state.g + c * dg,
                     A=state.A + c * dA, B=state.B + c * dB,
                     f=state.f + c * df)


def _advance(state, params, dt):
    """One explicit step of signed size dt, without final validation."""
    if params.integrator == "euler":
        return _shift(state, _increments(state, params), dt)
    k1 = _increments(state, params)
    k2 = _increments(_shift(state, k1, dt, 0.5), params)
    k3 = _increments(_shift(state, k2, dt, 0.5), params)
    k4 = _increments(_shift(state, k3, dt, 1.0), params)
    combo = tuple((a + 2.0 * b + 2.0 * c + d) / 6.0
                  for a, b, c, d in zip(k1, k2, k3, k4))
    return _shift(state, combo, dt)


def step(state, params, dt):
    """Advance by dt > 0 and validate; raises StepRejected on blow-up."""
    if dt <= 0.0:
        raise ValidationError("dt", f"dt must be positive, got {dt}")
    try:
        new = _advance(state, params, dt)
        new.validate(det_floor=params.det_floor)
    except (NonSPDMetric, NonFinite) as exc:
        raise StepRejected(f"step from t={state.t:.6g} with dt={dt:.3e} "
                           f"rejected: {exc}", state=state) from exc
    return new


def probe_step(state, params, dt):
    """Single step of either sign, for finite-difference probing."""
    try:
        new = _advance(state, params, dt)
        new.validate(det_floor=params.det_floor)
    except (NonSPDMetric, NonFinite) as exc:
        raise StepRejected(f"probe from t={state.t:.6g} with dt={dt:.3e} "
                           f"rejected: {exc}", state=state) from exc
    return new


def suggest_dt(state, params):
    """Parabolic step bound cfl * min(h^2) / (6 * max eigenvalue of g^{-1})."""
    g_inv = inverse_metric(state.g, det_floor=params.det_floor)
    lam_max = float(np.max(sym_eigvals(g_inv)))
    h2 = min(h * h for h in state.grid.spacing)
    return params.cfl * h2 / (6.0 * lam_max)


@dataclass
class TimeSeriesRow:
    step: int
    t: float
    S: float
    dSdt_formula: float
    dSdt_finite_difference: float = math.nan
    lam: float = math.nan
    integral_F2: float = math.nan
    integral_H2: float = math.nan
    integral_R: float = math.nan
    integral_R2: float = math.nan
    min_det_g: float = math.nan
    max_abs_f: float = math.nan


CSV_COLUMNS = ("step", "t", "S", "dSdt_formula", "dSdt_finite_difference",
               "lambda", "integral_F2", "integral_H2", "integral_R",
               "integral_R2", "min_det_g", "max_abs_f")


def observe(state, params, step_index, with_lambda=False, lambda_tol=1e-8):
    """Diagnostics row for one state; the eigensolve is optional (costly)."""
    grid = state.grid
    report = functional.dS_dt_formula(state, chi=params.chi)
    geo = curvature_bundle(state.g, grid, det_floor=params.det_floor)
    F = field_strength_F(state.A, grid)
    h = field_strength_H(state.B, grid)
    mat = contractions(F, h, geo.g_inv)
    lam = math.nan
    if with_lambda:
        lam = functional.lambda_eigen(state, tol=lambda_tol).lam
    return TimeSeriesRow(
        step=step_index,
        t=state.t,
        S=report.S,
        dSdt_formula=report.dSdt_formula,
        lam=lam,
        integral_F2=integrate_scalar(mat.F2, state.g, grid),
        integral_H2=integrate_scalar(mat.H2, state.g, grid),
        integral_R=integrate_scalar(geo.scalar, state.g, grid),
        integral_R2=integrate_scalar(geo.scalar ** 2, state.g, grid),
        min_det_g=float(np.min(det3_sym(state.g))),
        max_abs_f=float(np.max(np.abs(state.f))),
    )


def fill_finite_difference(rows):
    """Populate dSdt_finite_difference by differencing the S column in place."""
    m = len(rows)
    if m < 2:
        return rows
    for i in range(m):
        lo = max(i - 1, 0)
        hi = min(i + 1, m - 1)
        dt = rows[hi].t - rows[lo].t
        if dt > 0.0:
            rows[i].dSdt_finite_difference = (rows[hi].S - rows[lo].S) / dt
    return rows


def run(initial, params, t_end, cadence=1, lambda_every=10, lambda_tol=1e-8,
        fixed_dt=None):
    """Integrate to t_end collecting TimeSeriesRow diagnostics.

    Observes every `cadence` steps (plus step 0 and the final step); the
    eigenvalue column is filled every `lambda_every` observations.  On
    StepRejected the exception is re-raised carrying the partial rows.
    Returns (rows, final_state).
    """
    if t_end <= initial.t:
        raise ValidationError("t_end", "t_end must exceed the initial time")
    if cadence < 1:
        raise ValidationError("cadence", "cadence must be >= 1")
    if params.mode == "deturck" and params.background_g is None:
        params = replace(params, background_g=initial.g.copy())
    state = initial
    rows = []

    def _emit(st, k):
        with_lam = (len(rows) % lambda_every == 0)
        rows.append(observe(st, params, k, with_lambda=with_lam,
                            lambda_tol=lambda_tol))

    _emit(state, 0)
    k = 0
    tiny = 1e-12 * max(t_end, 1.0)
    try:
        while state.t < t_end - tiny:
            dt = fixed_dt if fixed_dt is not None else suggest_dt(state, params)
            dt = min(dt, t_end - state.t)
            state = step(state, params, dt)
            if params.reproject_gauge:
                state = replace(state,
                                A=hodge_project_A(state.A, state.grid),
                                B=hodge_project_B(state.B, state.grid))
            k += 1
            if k % cadence == 0 or state.t >= t_end - tiny:
                _emit(state, k)
    except StepRejected as exc:
        fill_finite_difference(rows)
        exc.rows = rows
        raise
    fill_finite_difference(rows)
    return rows, state
