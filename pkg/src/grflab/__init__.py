"""Geometric flow laboratory on the flat periodic 3-torus.

The state is a Riemannian metric g, a one-form potential A (curvature
F = dA), a two-form potential B (torsion H = dB) and a scalar f, all
sampled on a regular periodic grid.  Submodules:

    mesh        grids, spectral/finite-difference derivatives, integration
    tensors     packed symmetric/antisymmetric storage and small helpers
    geometry    Christoffel symbols, curvature tensors, covariant calculus
    matter      field strengths, stress contractions, gauge projection
    flow        right-hand sides, time stepping, diagnostics time series
    functional  weighted action, its dissipation formula, lowest eigenvalue
    analysis    symbol positivity, stationarity residuals, evolution checks
    cli         command line driver (run / verify / gauge-fix / spectrum)

Heavy imports are deferred; ``import grflab`` stays cheap so the CLI can
pin thread counts before numpy is loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "mesh",
    "tensors",
    "geometry",
    "matter",
    "flow",
    "functional",
    "analysis",
    "config",
    "initialdata",
    "checkpoint",
    "report",
    "errors",
    "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
