"""Run configuration: a small key=value format with dotted keys.

One `key = value` pair per line; `#` starts a comment; unknown keys are
rejected so typos cannot silently fall back to defaults.

    grid.n = 16,16,16        # points per axis (each >= 4)
    grid.L = 1,1,1           # box lengths
    grid.backend = spectral  # spectral | central4
    mode = coupled           # plain | coupled | deturck
    chi = 0.0                # constant in the action / scalar equation
    f_variant = thm31        # thm31 | intro (|grad f|^2 coefficient 2 vs 1)
    cfl = 0.2
    integrator = rk4         # euler | rk4
    t_end = 0.05             # required by `run`
    cadence = 1              # observe every this many steps
    lambda_every = 10        # eigenvalue every this many observations
    lambda_tol = 1e-8
    init.kind = perturbed    # flat | perturbed | from_checkpoint
    init.amplitude = 0.01
    init.seed = 7
    init.fields = g,A,B,f    # which fields receive the perturbation
    init.path =              # checkpoint path for from_checkpoint
    gauge.project_initial = true
    gauge.reproject = false  # re-project A, B after every step
    output.dir = out
    output.prefix = run
    output.figures = true
    verify.dt_probe = 1e-5
    verify.metric_samples = 10000
    verify.xi_samples = 100000
    verify.seed = 0
"""

from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .flow import F_VARIANTS, INTEGRATORS, MODES
from .mesh import BACKENDS, make_grid

INIT_KINDS = ("flat", "perturbed", "from_checkpoint")
FIELD_NAMES = ("g", "A", "B", "f")


@dataclass
class RunConfig:
    n: tuple = (16, 16, 16)
    length: tuple = (1.0, 1.0, 1.0)
    backend: str = "spectral"
    mode: str = "coupled"
    chi: float = 0.0
    f_variant: str = "thm31"
    cfl: float = 0.2
    integrator: str = "rk4"
    t_end: float = None
    cadence: int = 1
    lambda_every: int = 10
    lambda_tol: float = 1e-8
    init_kind: str = "flat"
    init_amplitude: float = 0.01
    init_seed: int = 0
    init_fields: tuple = FIELD_NAMES
    init_path: str = None
    project_initial: bool = True
    reproject: bool = False
    output_dir: str = "out"
    output_prefix: str = "run"
    figures: bool = True
    verify_dt_probe: float = 1e-5
    verify_metric_samples: int = 10000
    verify_xi_samples: int = 100000
    verify_seed: int = 0


def _parse_bool(key, raw):
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValidationError(key, f"expected a boolean, got {raw!r}")


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(key, f"expected a number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(key, f"expected an integer, got {raw!r}") from None


def _parse_int_triple(key, raw):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValidationError(key, f"expected three integers, got {raw!r}")
    return tuple(_parse_int(key, p) for p in parts)


def _parse_float_triple(key, raw):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValidationError(key, f"expected three numbers, got {raw!r}")
    return tuple(_parse_float(key, p) for p in parts)


def _parse_fields(key, raw):
    if not raw:
        return ()
    parts = tuple(p.strip() for p in raw.split(","))
    for p in parts:
        if p not in FIELD_NAMES:
            raise ValidationError(key, f"unknown field {p!r} "
                                       f"(choose from {FIELD_NAMES})")
    return parts


def _parse_str(key, raw):
    return raw or None


_KEYS = {
    "grid.n": ("n", _parse_int_triple),
    "grid.L": ("length", _parse_float_triple),
    "grid.backend": ("backend", lambda k, v: v),
    "mode": ("mode", lambda k, v: v),
    "chi": ("chi", _parse_float),
    "f_variant": ("f_variant", lambda k, v: v),
    "cfl": ("cfl", _parse_float),
    "integrator": ("integrator", lambda k, v: v),
    "t_end": ("t_end", _parse_float),
    "cadence": ("cadence", _parse_int),
    "lambda_every": ("lambda_every", _parse_int),
    "lambda_tol": ("lambda_tol", _parse_float),
    "init.kind": ("init_kind", lambda k, v: v),
    "init.amplitude": ("init_amplitude", _parse_float),
    "init.seed": ("init_seed", _parse_int),
    "init.fields": ("init_fields", _parse_fields),
    "init.path": ("init_path", _parse_str),
    "gauge.project_initial": ("project_initial", _parse_bool),
    "gauge.reproject": ("reproject", _parse_bool),
    "output.dir": ("output_dir", lambda k, v: v),
    "output.prefix": ("output_prefix", lambda k, v: v),
    "output.figures": ("figures", _parse_bool),
    "verify.dt_probe": ("verify_dt_probe", _parse_float),
    "verify.metric_samples": ("verify_metric_samples", _parse_int),
    "verify.xi_samples": ("verify_xi_samples", _parse_int),
    "verify.seed": ("verify_seed", _parse_int),
}


def validate_config(cfg):
    """Range/enum checks shared by the parser and programmatic callers."""
    for v in cfg.n:
        if v < 4:
            raise ValidationError("grid.n", f"each axis needs >= 4 points, got {cfg.n}")
    for v in cfg.length:
        if v <= 0.0:
            raise ValidationError("grid.L", f"box lengths must be positive, got {cfg.length}")
    if cfg.backend not in BACKENDS:
        raise ValidationError("grid.backend", f"unknown backend {cfg.backend!r}")
    if cfg.mode not in MODES:
        raise ValidationError("mode", f"unknown mode {cfg.mode!r}")
    if cfg.f_variant not in F_VARIANTS:
        raise ValidationError("f_variant", f"unknown variant {cfg.f_variant!r}")
    if cfg.integrator not in INTEGRATORS:
        raise ValidationError("integrator", f"unknown integrator {cfg.integrator!r}")
    if not (0.0 < cfg.cfl):
        raise ValidationError("cfl", f"cfl must be positive, got {cfg.cfl}")
    if cfg.t_end is not None and cfg.t_end <= 0.0:
        raise ValidationError("t_end", f"t_end must be positive, got {cfg.t_end}")
    if cfg.cadence < 1:
        raise ValidationError("cadence", "cadence must be >= 1")
    if cfg.lambda_every < 1:
        raise ValidationError("lambda_every", "lambda_every must be >= 1")
    if cfg.lambda_tol <= 0.0:
        raise ValidationError("lambda_tol", "lambda_tol must be positive")
    if cfg.init_kind not in INIT_KINDS:
        raise ValidationError("init.kind", f"unknown kind {cfg.init_kind!r}")
    if cfg.init_amplitude < 0.0:
        raise ValidationError("init.amplitude", "amplitude must be >= 0")
    if cfg.init_kind == "from_checkpoint" and not cfg.init_path:
        raise ValidationError("init.path", "required for init.kind=from_checkpoint")
    if cfg.verify_dt_probe <= 0.0:
        raise ValidationError("verify.dt_probe", "dt_probe must be positive")
    if cfg.verify_metric_samples < 1:
        raise ValidationError("verify.metric_samples", "need at least one sample")
    if cfg.verify_xi_samples < 1:
        raise ValidationError("verify.xi_samples", "need at least one sample")
    return cfg


def parse_config(text):
    cfg = RunConfig()
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(line_no, f"expected key=value, got {raw_line.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(line_no, "empty key")
        if key not in _KEYS:
            raise ValidationError(key, "unknown key")
        attr, parser = _KEYS[key]
        setattr(cfg, attr, parser(key, value))
    return validate_config(cfg)


def config_grid(cfg):
    return make_grid(cfg.n, cfg.length, cfg.backend)
