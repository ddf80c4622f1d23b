"""
Experiment Configuration

Parses the flat `key = value` experiment files of the command-line runner
into an ExperimentConfig. Keys carry dotted section prefixes; unknown keys
and malformed values raise ConfigError with the offending line.

    command = validate
    grid_h = 1/32, 1/64
    validate.cases = exp-radial-coupled
    solve.newton_tol = 1e-10
"""

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from moving_planes.sweep import SweepConfig
from solver.newton import InitStrategy, SolveConfig
from utils.errors import ConfigError
from utils.keyvalue import parse_lines

COMMANDS = ("solve", "sweep", "barrier", "check", "validate")
THREADS_ENV = "MA_THREADS"

KNOWN_KEYS = frozenset({
    "command", "case", "domain", "domain.center", "domain.semi_axes", "domain.exponent",
    "domain.skew", "rhs", "rhs.coefficients", "rhs.derivative_mode", "grid_h", "boundary.u",
    "boundary.v", "output_dir", "seed",
    "solve.newton_tol", "solve.max_iters", "solve.beta", "solve.min_step", "solve.init_strategy",
    "solve.linear_solver_tol",
    "sweep.lambda_count", "sweep.sign_tol", "sweep.interior_margin", "sweep.u_field",
    "sweep.v_field", "sweep.heatmaps",
    "barrier.m", "barrier.C0", "barrier.G_max", "barrier.F_max", "barrier.samples",
    "check.samples", "check.u", "check.v", "check.p1", "check.p2",
    "validate.cases",
})

Range = Tuple[float, float]


def parse_float(text: str) -> float:
    """Decimal or fraction (1/64)"""
    text = text.strip()
    if "/" in text:
        return float(Fraction(text.replace(" ", "")))
    return float(text)


def parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(parse_float(part) for part in text.split(",") if part.strip())


def parse_names(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def parse_range(text: str) -> Range:
    values = parse_float_list(text)
    if len(values) != 2:
        raise ValueError(f"expected 'lo, hi', got {text!r}")
    return values[0], values[1]


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def boundary_function(spec: str):
    """
    Dirichlet data from a config value

    A number gives constant data; `quadratic` is |x|^2 / 2 and `gaussian`
    exp(|x|^2 / 2), the two exact solutions of the manufactured catalog.
    """
    name = spec.strip().lower()
    if name == "quadratic":
        return lambda x1, x2: 0.5 * (np.asarray(x1) ** 2 + np.asarray(x2) ** 2)
    if name == "gaussian":
        return lambda x1, x2: np.exp(0.5 * (np.asarray(x1) ** 2 + np.asarray(x2) ** 2))
    value = parse_float(spec)
    return lambda x1, x2: np.full(np.broadcast(x1, x2).shape, value)


@dataclass(frozen=True)
class BarrierGrid:
    """Input grids of the barrier table; every combination is one row"""
    m: Tuple[float, ...] = (1.0,)
    C0: Tuple[float, ...] = (1.0,)
    G_max: Tuple[float, ...] = (1.0,)
    F_max: Tuple[float, ...] = (1.0,)
    samples: int = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    case: Optional[str] = None
    domain: str = "disk"
    domain_params: Dict[str, object] = field(default_factory=dict)
    rhs: str = "linear"
    rhs_coefficients: Optional[Tuple[float, ...]] = None
    derivative_mode: str = "closed_form"
    grid_h: Tuple[float, ...] = (1.0 / 32.0,)
    boundary_u: str = "0"
    boundary_v: str = "0"
    output_dir: Path = Path("out")
    seed: int = 0
    solve: SolveConfig = field(default_factory=SolveConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    sweep_u_field: Optional[Path] = None
    sweep_v_field: Optional[Path] = None
    sweep_heatmaps: Tuple[float, ...] = ()
    barrier: BarrierGrid = field(default_factory=BarrierGrid)
    check_samples: int = 100_000
    check_box: Dict[str, Range] = field(default_factory=dict)
    validate_cases: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r} (known: {', '.join(COMMANDS)})")
        if not self.grid_h or any(not h > 0.0 for h in self.grid_h):
            raise ConfigError(f"grid_h must be positive, got {self.grid_h}")
        if self.command != "validate" and len(self.grid_h) != 1:
            raise ConfigError(f"a list of grid_h values is only accepted by validate, got {self.grid_h}")
        if (self.sweep_u_field is None) != (self.sweep_v_field is None):
            raise ConfigError("sweep.u_field and sweep.v_field must be given together")

    @property
    def h(self) -> float:
        return self.grid_h[-1]


def _section(values: Dict[str, str], prefix: str) -> Dict[str, str]:
    return {key[len(prefix) + 1:]: value for key, value in values.items() if key.startswith(prefix + ".")}


def parse_config(text: str, source: str = "<string>", command: Optional[str] = None,
                 output_dir=None, seed: Optional[int] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from file text

    Args:
        text: contents of the config file
        source: name used in error messages
        command, output_dir, seed: command-line overrides

    Raises:
        ConfigError: on unknown keys or malformed values
    """
    try:
        values, lines = parse_lines(text, source)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        key = unknown[0]
        raise ConfigError(f"{source}:{lines[key]}: unknown key {key!r}")

    current = "<none>"
    try:
        kwargs = {}
        current = "command"
        kwargs["command"] = command or values.get("command", "")
        for key in ("case", "domain", "rhs", "boundary.u", "boundary.v"):
            if key in values:
                current = key
                kwargs[key.replace(".", "_")] = values[key]

        domain_params = {}
        for key, parse in (("center", parse_range), ("semi_axes", parse_range),
                           ("exponent", parse_float), ("skew", parse_float)):
            current = f"domain.{key}"
            if current in values:
                domain_params[key] = parse(values[current])
        kwargs["domain_params"] = domain_params

        current = "rhs.coefficients"
        if current in values:
            kwargs["rhs_coefficients"] = parse_float_list(values[current])
        current = "rhs.derivative_mode"
        if current in values:
            kwargs["derivative_mode"] = values[current].strip().lower()
        current = "grid_h"
        if current in values:
            kwargs["grid_h"] = parse_float_list(values[current])
        current = "output_dir"
        if output_dir is not None or current in values:
            kwargs["output_dir"] = Path(output_dir if output_dir is not None else values[current])
        current = "seed"
        if seed is not None or current in values:
            kwargs["seed"] = int(seed if seed is not None else values[current])

        solve = _section(values, "solve")
        solve_kwargs = {}
        for key, parse in (("newton_tol", parse_float), ("max_iters", int), ("beta", parse_float),
                           ("min_step", parse_float), ("linear_solver_tol", parse_float)):
            current = f"solve.{key}"
            if key in solve:
                solve_kwargs[key] = parse(solve[key])
        current = "solve.init_strategy"
        if "init_strategy" in solve:
            solve_kwargs["init_strategy"] = InitStrategy(solve["init_strategy"].strip().lower())
        current = "solve"
        kwargs["solve"] = SolveConfig(**solve_kwargs)

        sweep = _section(values, "sweep")
        sweep_kwargs = {"threads": threads_from_env()}
        for key, parse in (("lambda_count", int), ("sign_tol", parse_float),
                           ("interior_margin", parse_float)):
            current = f"sweep.{key}"
            if key in sweep:
                sweep_kwargs[key] = parse(sweep[key])
        current = "sweep"
        kwargs["sweep"] = SweepConfig(**sweep_kwargs)
        for key in ("u_field", "v_field"):
            if key in sweep:
                kwargs[f"sweep_{key}"] = Path(sweep[key])
        current = "sweep.heatmaps"
        if "heatmaps" in sweep:
            kwargs["sweep_heatmaps"] = parse_float_list(sweep["heatmaps"])

        barrier = _section(values, "barrier")
        barrier_kwargs = {}
        for key in ("m", "C0", "G_max", "F_max"):
            current = f"barrier.{key}"
            if key in barrier:
                barrier_kwargs[key] = parse_float_list(barrier[key])
        current = "barrier.samples"
        if "samples" in barrier:
            barrier_kwargs["samples"] = int(barrier["samples"])
        kwargs["barrier"] = BarrierGrid(**barrier_kwargs)

        check = _section(values, "check")
        current = "check.samples"
        if "samples" in check:
            kwargs["check_samples"] = int(check["samples"])
        box = {}
        for key in ("u", "v", "p1", "p2"):
            current = f"check.{key}"
            if key in check:
                box[key] = parse_range(check[key])
        kwargs["check_box"] = box

        current = "validate.cases"
        if current in values:
            kwargs["validate_cases"] = parse_names(values[current])

        current = "config"
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        where = f"{source}:{lines[current]}" if current in lines else source
        raise ConfigError(f"{where}: bad value for {current}: {exc}") from None


def load_config(path, command: Optional[str] = None, output_dir=None,
                seed: Optional[int] = None) -> ExperimentConfig:
    """
    Read and parse an experiment file

    Raises:
        ConfigError: if the file cannot be read or does not parse
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), command=command, output_dir=output_dir, seed=seed)


def threads_from_env(env: Optional[Dict[str, str]] = None) -> int:
    """
    Worker threads from MA_THREADS, 1 when unset

    Raises:
        ConfigError: if the variable is not a positive integer
    """
    env = os.environ if env is None else env
    raw = env.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return threads
