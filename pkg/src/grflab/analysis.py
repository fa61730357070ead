"""Certification suites: parabolic symbol positivity, critical-point
residuals, finite-difference verification of the curvature evolution
identities, structural identities, and the integration-by-parts check.

Every verifier is a pure function of an immutable state snapshot and
returns a small report dataclass.  Random sampling is always driven by
an explicit seed recorded in the report.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import flow, functional
from .errors import NonSPDMetric, ValidationError
from .geometry import (cov_deriv, covariant_hessian, curvature_bundle,
                       laplacian, tensor_laplacian)
from .mesh import integrate_scalar
from .tensors import det3_sym


@dataclass
class EllipticityReport:
    min_quadratic_form: float
    samples: int
    metric_condition_max: float
    seed: int


@dataclass
class ResidualReport:
    identity_name: str
    linf: float
    l2: float
    dt_used: float = math.nan
    resolution: tuple = (0, 0, 0)
    extras: dict = field(default_factory=dict)


def random_spd_metrics(count, seed, cond_max=100.0):
    """Random SPD 3x3 samples with eigenvalues log-uniform in a band of
    condition at most cond_max, rotated by Haar-distributed frames."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((count, 3, 3)))
    q = q * np.sign(np.einsum("mii->mi", r))[:, None, :]
    half = 0.5 * math.log10(cond_max)
    eig = 10.0 ** rng.uniform(-half, half, size=(count, 3))
    return np.einsum("mik,mk,mjk->mij", q, eig, q)


def fibonacci_directions(count, seed):
    """Near-uniform unit vectors (golden-spiral lattice), randomly rotated
    so the sample set carries no axis bias."""
    i = np.arange(count)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / count
    theta = 2.0 * math.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    dirs = np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)
    rng = np.random.default_rng(seed)
    q, rr = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(rr))
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return dirs @ q.T


def symbol_positivity(g_samples, xi_samples, seed=0, chunk=8192):
    """Minimum of the principal-symbol quadratic form over sampled frequencies.

    The second-order symbol acts block-diagonally on the 12 evolving
    components, as g^{kl} xi_k xi_l on each, so the minimum over unit
    xi in R^{3x12} equals the minimum over unit covectors xi in R^3 of
    xi . g^{-1} xi; sampling single directions is therefore lossless.
    """
    g_samples = np.asarray(g_samples, dtype=float)
    if g_samples.ndim == 2:
        g_samples = g_samples[None]
    eig = np.linalg.eigvalsh(g_samples)
    if float(np.min(eig)) <= 0.0:
        raise NonSPDMetric("symbol sample set contains a non-SPD matrix",
                           min_det=float(np.min(np.prod(eig, axis=-1))))
    cond_max = float(np.max(eig[:, 2] / eig[:, 0]))

    inv_flat = np.linalg.inv(g_samples).reshape(-1, 9)
    dirs = fibonacci_directions(xi_samples, seed)
    best = math.inf
    for lo in range(0, xi_samples, chunk):
        d = dirs[lo:lo + chunk]
        w = (d[:, :, None] * d[:, None, :]).reshape(len(d), 9)
        vals = inv_flat @ w.T
        best = min(best, float(vals.min()))
    return EllipticityReport(min_quadratic_form=best, samples=xi_samples,
                             metric_condition_max=cond_max, seed=seed)


def _pointwise_sq(tensor, g_inv):
    """|T|^2 with every index contracted by the metric; rank 0..4."""
    rank = tensor.ndim - 3
    if rank == 0:
        return tensor * tensor
    letters = "ijkl"[:rank]
    other = "abcd"[:rank]
    metrics = [g_inv] * rank
    pattern = (",".join(f"{p}{q}..." for p, q in zip(letters, other))
               + f",{letters}...,{other}...->...")
    return np.einsum(pattern, *metrics, tensor, tensor, optimize=True)


def _norms(residual_field, g, g_inv, grid):
    pw = _pointwise_sq(residual_field, g_inv)
    linf = float(np.sqrt(np.max(pw)))
    l2 = float(np.sqrt(integrate_scalar(pw, g, grid)))
    return linf, l2


def critical_residuals(state, chi=0.0):
    """Stationarity residuals (metric, Maxwell, B-field, scalar).

    The Maxwell and B-field equations are the weighted divergences
    div(F e^{-f}) and div(H e^{-f}), i.e. e^{-f} times the X and Y
    residual fields of the monotonicity formula.
    """
    geo, mat = functional.state_bundles(state)
    sigma, M, X, Y, _ = functional.residual_fields(geo, mat, state.f, chi)
    weight = np.exp(-state.f)
    grid = state.grid
    fields = (("metric_stationarity", M),
              ("maxwell_stationarity", weight * X),
              ("bfield_stationarity", weight * Y),
              ("scalar_stationarity", sigma))
    reports = []
    for name, r in fields:
        linf, l2 = _norms(r, state.g, geo.g_inv, grid)
        reports.append(ResidualReport(identity_name=name, linf=linf, l2=l2,
                                      resolution=grid.n))
    return reports


def _second_cov(S, gamma, grid):
    """D[a, b, c, d] = nabla_a nabla_b S_cd for a 2-tensor S."""
    return cov_deriv(cov_deriv(S, gamma, grid), gamma, grid)


def _hessian_combination(D2):
    """P(S)_ijkl from the stress Hessian D2[a,b,c,d] = nabla_a nabla_b S_cd:

        nabla_i nabla_l S_kj - nabla_i nabla_k S_jl
        - nabla_j nabla_l S_ki + nabla_j nabla_k S_il
    """
    return (np.einsum("ilkj...->ijkl...", D2)
            - np.einsum("ikjl...->ijkl...", D2)
            - np.einsum("jlki...->ijkl...", D2)
            + np.einsum("jkil...->ijkl...", D2))


def _riemann_stress_coupling(S, geo):
    """C(S)_ijkl = g^{mn} (S_km R_ijnl + S_ml R_ijkn)."""
    down = geo.riemann_down
    return (np.einsum("mn...,km...,ijnl...->ijkl...", geo.g_inv, S, down,
                      optimize=True)
            + np.einsum("mn...,ml...,ijkn...->ijkl...", geo.g_inv, S, down,
                        optimize=True))


def _term_groups(which, geo, mat, grid):
    """RHS of the curvature evolution identity, split into named groups.

    Each group carries its printed coefficient, so the identity asserts
    that the sum of the groups equals d(curvature)/dt.
    """
    gi = geo.g_inv
    gamma = geo.gamma
    down = geo.riemann_down
    ric = geo.ricci
    SH = mat.stress_H
    SF = mat.stress_F

    if which == "riemann":
        B = geo.quad_b
        quad = 2.0 * (B - np.einsum("ijlk...->ijkl...", B)
                      - np.einsum("iljk...->ijkl...", B)
                      + np.einsum("ikjl...->ijkl...", B))
        ric_mixed = np.einsum("pq...,qi...->pi...", gi, ric)
        ricci_term = -(np.einsum("pjkl...,pi...->ijkl...", down, ric_mixed)
                       + np.einsum("ipkl...,pj...->ijkl...", down, ric_mixed)
                       + np.einsum("ijpl...,pk...->ijkl...", down, ric_mixed)
                       + np.einsum("ijkp...,pl...->ijkl...", down, ric_mixed))
        return {
            "laplacian": tensor_laplacian(down, gi, gamma, grid),
            "quadratic": quad,
            "ricci_riemann": ricci_term,
            "h_hessian": 0.25 * _hessian_combination(_second_cov(SH, gamma, grid)),
            "h_riemann": 0.25 * _riemann_stress_coupling(SH, geo),
            "maxwell_hessian": _hessian_combination(_second_cov(SF, gamma, grid)),
            "maxwell_riemann": _riemann_stress_coupling(SF, geo),
        }

    if which == "ricci":
        quad = (2.0 * np.einsum("pr...,qs...,piqk...,rs...->ik...",
                                gi, gi, down, ric, optimize=True)
                - 2.0 * np.einsum("pq...,pi...,qk...->ik...", gi, ric, ric,
                                  optimize=True))

        def traced_hessian(S):
            D2 = _second_cov(S, gamma, grid)
            return np.einsum("jl...,ijkl...->ik...", gi,
                             _hessian_combination(D2), optimize=True)

        def traced_coupling(S):
            a = np.einsum("mn...,km...,in...->ik...", gi, S, ric,
                          optimize=True)
            b = np.einsum("jl...,mn...,ml...,ijkn...->ik...", gi, gi, S,
                          down, optimize=True)
            return a - b

        return {
            "laplacian": tensor_laplacian(ric, gi, gamma, grid),
            "quadratic": quad,
            "h_hessian": 0.25 * traced_hessian(SH),
            "h_riemann": 0.25 * traced_coupling(SH),
            "maxwell_hessian": traced_hessian(SF),
            "maxwell_riemann": traced_coupling(SF),
        }

    if which == "scalar":
        def div_div_minus_lap_trace(S):
            D2 = _second_cov(S, gamma, grid)
            return (np.einsum("jl...,ik...,ilkj...->...", gi, gi, D2,
                              optimize=True)
                    - np.einsum("jl...,ik...,ikjl...->...", gi, gi, D2,
                                optimize=True))

        coupled_stress = 0.5 * SH + 2.0 * SF
        return {
            "laplacian": laplacian(geo.scalar, gi, gamma, grid),
            "ricci_squared": 2.0 * np.einsum("ia...,kb...,ik...,ab...->...",
                                             gi, gi, ric, ric, optimize=True),
            "h_hessian": 0.5 * div_div_minus_lap_trace(SH),
            "maxwell_hessian": 2.0 * div_div_minus_lap_trace(SF),
            "curvature_stress": -np.einsum("ip...,kq...,ik...,pq...->...",
                                           gi, gi, ric, coupled_stress,
                                           optimize=True),
        }

    raise ValidationError("which", f"unknown curvature quantity {which!r}")


_CURVATURE_OF = {
    "riemann": lambda geo: geo.riemann_down,
    "ricci": lambda geo: geo.ricci,
    "scalar": lambda geo: geo.scalar,
}


def verify_curvature_evolution(state, params, dt_probe, which="scalar"):
    """Compare d(curvature)/dt along the metric/matter flow with the
    closed-form evolution identity.

    The time derivative is a centered rk4 probe at t +/- dt_probe; the
    identity's right side is assembled at the center state.  The report
    carries absolute and relative norms plus the least-squares best-fit
    coefficient of each named term group against the measured derivative
    (all printed coefficients included, so a correct identity fits 1.0).
    """
    if params.mode != "plain":
        raise ValidationError(
            "mode", "curvature evolution identities hold along the plain "
                    f"metric/matter flow; got mode={params.mode!r}")
    if dt_probe <= 0.0:
        raise ValidationError("dt_probe", "dt_probe must be positive")
    if which not in _CURVATURE_OF:
        raise ValidationError("which", f"unknown curvature quantity {which!r}")

    probe_params = replace(params, integrator="rk4")
    plus = flow.probe_step(state, probe_params, dt_probe)
    minus = flow.probe_step(state, probe_params, -dt_probe)
    take = _CURVATURE_OF[which]
    fd = (take(curvature_bundle(plus.g, state.grid))
          - take(curvature_bundle(minus.g, state.grid))) / (2.0 * dt_probe)

    geo, mat = functional.state_bundles(state)
    groups = _term_groups(which, geo, mat, state.grid)
    rhs = sum(groups.values())
    residual = fd - rhs

    grid = state.grid
    linf, l2 = _norms(residual, state.g, geo.g_inv, grid)
    ref_linf, ref_l2 = _norms(rhs, state.g, geo.g_inv, grid)

    weight = np.sqrt(np.sqrt(det3_sym(state.g)) * grid.cell_volume)
    columns = [(weight * grp).reshape(-1) for grp in groups.values()]
    target = (weight * fd).reshape(-1)
    coeffs, *_ = np.linalg.lstsq(np.stack(columns, axis=1), target,
                                 rcond=None)

    tiny = np.finfo(float).tiny
    return ResidualReport(
        identity_name=f"curvature_evolution_{which}",
        linf=linf,
        l2=l2,
        dt_used=dt_probe,
        resolution=grid.n,
        extras={
            "linf_relative": float(linf / max(ref_linf, tiny)),
            "l2_relative": float(l2 / max(ref_l2, tiny)),
            "reference_l2": ref_l2,
            "coefficients": dict(zip(groups.keys(), map(float, coeffs))),
        },
    )


def structural_identities(state):
    """Exactness checks that hold for any A, B on any SPD metric:
    closedness of F and H, 3D isotropy of the H stress, and the
    symmetries of the Riemann tensor."""
    grid = state.grid
    geo, mat = functional.state_bundles(state)
    gi = geo.g_inv
    down = geo.riemann_down

    covF = cov_deriv(mat.F, geo.gamma, grid)
    f_bianchi = (covF + np.einsum("jmi...->mij...", covF)
                 + np.einsum("ijm...->mij...", covF))

    covH = cov_deriv(mat.H_full, geo.gamma, grid)
    h_bianchi = (covH - np.einsum("imjk...->mijk...", covH)
                 + np.einsum("jmik...->mijk...", covH)
                 - np.einsum("kmij...->mijk...", covH))

    isotropy = mat.stress_H - (mat.H2 / 3.0) * geo.g_full

    checks = (
        ("f_bianchi", f_bianchi),
        ("h_bianchi", h_bianchi),
        ("stress_isotropy", isotropy),
        ("riemann_antisymmetry_first",
         down + np.einsum("jikl...->ijkl...", down)),
        ("riemann_antisymmetry_second",
         down + np.einsum("ijlk...->ijkl...", down)),
        ("riemann_pair_symmetry",
         down - np.einsum("klij...->ijkl...", down)),
        ("riemann_first_bianchi",
         down + np.einsum("iklj...->ijkl...", down)
         + np.einsum("iljk...->ijkl...", down)),
    )
    reports = []
    for name, r in checks:
        linf, l2 = _norms(r, state.g, gi, grid)
        reports.append(ResidualReport(identity_name=name, linf=linf, l2=l2,
                                      resolution=grid.n))
    return reports


def integration_by_parts_check(state):
    """Both sides of the weighted-measure identity

        int (lap f - |grad f|^2)(R - |grad f|^2 + 2 lap f) e^{-f} dV
          = 2 int Hess(f) . (Hess(f) + Ric) e^{-f} dV

    evaluated independently; the report carries their difference."""
    grid = state.grid
    geo, _ = functional.state_bundles(state)
    f = state.f
    df = grid.grad(f)
    gi = geo.g_inv
    grad2 = np.einsum("ij...,i...,j...->...", gi, df, df)
    hess = covariant_hessian(f, geo.gamma, grid)
    lap_f = np.einsum("ij...,ij...->...", gi, hess)
    weight = np.exp(-f)

    lhs = integrate_scalar(
        weight * (lap_f - grad2) * (geo.scalar - grad2 + 2.0 * lap_f),
        state.g, grid)
    rhs = 2.0 * integrate_scalar(
        weight * np.einsum("ia...,jb...,ij...,ab...->...", gi, gi, hess,
                           hess + geo.ricci, optimize=True),
        state.g, grid)
    diff = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs), np.finfo(float).tiny)
    return ResidualReport(
        identity_name="integration_by_parts",
        linf=diff,
        l2=diff,
        resolution=grid.n,
        extras={"lhs": float(lhs), "rhs": float(rhs),
                "relative": float(diff / scale)},
    )
