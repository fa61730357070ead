"""Initial data construction: flat, seeded band-limited perturbations of
flat, or checkpoint resumption.

Perturbations live on Fourier modes with every integer index in
[-2, 2] (zero mode excluded), so derived curvatures stay smooth at any
grid size and runs at different resolutions start from the same
continuum fields.  Each scalar field is normalized to unit sup norm
before scaling by the amplitude; fields are drawn in the fixed order
g components, A, B, f, so a given seed is reproducible.

Amplitudes must stay below about 0.3: the six metric components each
perturb by up to the amplitude, and the identity loses positivity once
the total symmetric perturbation reaches eigenvalue -1.
"""

import itertools

import numpy as np

from . import checkpoint
from .errors import ValidationError
from .flow import FlowState, flat_state
from .matter import hodge_project_A, hodge_project_B
from .mesh import make_grid

MAX_MODE = 2


def _mode_list(max_mode):
    """Canonical half of the nonzero integer lattice cube (m ~ -m)."""
    modes = []
    for m in itertools.product(range(-max_mode, max_mode + 1), repeat=3):
        if m == (0, 0, 0):
            continue
        if m > (0, 0, 0):  # lexicographic representative of {m, -m}
            modes.append(m)
    return modes


_MODES = _mode_list(MAX_MODE)


def band_limited_field(grid, rng, max_mode=MAX_MODE):
    """Random real field on low Fourier modes, unit sup norm."""
    modes = _MODES if max_mode == MAX_MODE else _mode_list(max_mode)
    x1, x2, x3 = grid.coords
    l1, l2, l3 = grid.length
    out = np.zeros(grid.shape)
    coeffs = rng.standard_normal((len(modes), 2))
    for (m1, m2, m3), (a, b) in zip(modes, coeffs):
        phase = 2.0 * np.pi * (m1 * x1 / l1 + m2 * x2 / l2 + m3 * x3 / l3)
        out += a * np.cos(phase) + b * np.sin(phase)
    return out / np.max(np.abs(out))


def build_initial(cfg, grid=None):
    """FlowState for a RunConfig; see the config module for the knobs."""
    if cfg.init_kind == "from_checkpoint":
        return checkpoint.checkpoint_read(cfg.init_path, backend=cfg.backend)
    if grid is None:
        grid = make_grid(cfg.n, cfg.length, cfg.backend)
    state = flat_state(grid)
    if cfg.init_kind == "flat" or cfg.init_amplitude == 0.0:
        return state
    if cfg.init_kind != "perturbed":
        raise ValidationError("init.kind", f"unknown kind {cfg.init_kind!r}")

    rng = np.random.default_rng(cfg.init_seed)
    amp = cfg.init_amplitude
    if "g" in cfg.init_fields:
        for c in range(6):
            state.g[c] += amp * band_limited_field(grid, rng)
    if "A" in cfg.init_fields:
        for c in range(3):
            state.A[c] += amp * band_limited_field(grid, rng)
    if "B" in cfg.init_fields:
        for c in range(3):
            state.B[c] += amp * band_limited_field(grid, rng)
    if "f" in cfg.init_fields:
        state.f += amp * band_limited_field(grid, rng)

    if cfg.project_initial:
        state = FlowState(grid=grid, t=state.t, g=state.g,
                          A=hodge_project_A(state.A, grid),
                          B=hodge_project_B(state.B, grid), f=state.f)
    state.validate()
    return state
