"""
Scenario configuration: flat KEY=value files, LAMBDA_SE_* environment
variables and command-line overrides resolved into typed module inputs.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .errors import ConfigError, EmissionError
from .field_states import (DEFAULT_SIGMAS, FieldState, adjacent_window, coherent_state, separated_fock,
                           single_fock)
from .model import DEFAULT_DENSITY, FrequencyGrid, SystemParams
from .time_domain import IntegratorConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "LAMBDA_SE_"
STATE_FAMILIES = ("coherent", "fock", "window", "separated")
SOLVERS = ("fast", "oracle", "both")
# excluded from artifact provenance
RUNTIME_KEYS = ("threads", "out")

DEFAULTS: Dict[str, str] = {
    "gamma1": "0.5",
    "gamma2": "0.5",
    "omega21": "1.0",
    "gbar": "0.25",
    "phi": "0",
    "phi_g": "0",
    "phi_ghat": "0",
    "density": repr(DEFAULT_DENSITY),
    "interference": "true",
    "state": "coherent",
    "alpha": "20",
    "phi_alpha": "0",
    "sigmas": repr(DEFAULT_SIGMAS),
    "n0": "400",
    "width": "1",
    "kappas": "0,2,4",
    "grid_lo": "-40",
    "grid_hi": "40",
    "grid_count": "4001",
    "solver": "fast",
    "dt": "0.001",
    "t_end": "80",
    "threads": "1",
    "out": "out",
    "name": "spectrum",
    "omega_rabi": "5",
    "dip_lo": "4.0",
    "dip_hi": "5.5",
}


def parse_number(text: str) -> float:
    """Float, optionally written as a multiple of pi: 'pi', '-pi/2', '3*pi/2', '0.5*pi'."""
    raw = str(text).strip().lower()
    if "pi" not in raw:
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"Not a number: {text!r}") from e
    head, _, tail = raw.partition("pi")
    head = head.strip().rstrip("*").strip()
    tail = tail.strip()
    try:
        coefficient = {"": 1.0, "+": 1.0, "-": -1.0}.get(head)
        if coefficient is None:
            coefficient = float(head)
        divisor = 1.0
        if tail:
            if not tail.startswith("/"):
                raise ValueError(tail)
            divisor = float(tail[1:])
    except ValueError as e:
        raise ConfigError(f"Cannot parse pi expression {text!r}") from e
    if divisor == 0:
        raise ConfigError(f"Division by zero in {text!r}")
    return coefficient * math.pi / divisor


def parse_int(text: str) -> int:
    value = parse_number(text)
    if not value.is_integer():
        raise ConfigError(f"Expected an integer, got {text!r}")
    return int(value)


def parse_bool(text: str) -> bool:
    raw = str(text).strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"Expected a boolean, got {text!r}")


def parse_int_list(text: str) -> Tuple[int, ...]:
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ConfigError("Expected a comma-separated integer list")
    return tuple(parse_int(item) for item in items)


def _choice(options: Tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = str(text).strip().lower()
        if value not in options:
            raise ConfigError(f"Expected one of {options}, got {text!r}")
        return value
    return parse


def _text(text: str) -> str:
    value = str(text).strip()
    if not value:
        raise ConfigError("Empty value")
    return value


PARSERS: Dict[str, Callable[[str], Any]] = {
    "gamma1": parse_number, "gamma2": parse_number, "omega21": parse_number, "gbar": parse_number,
    "phi": parse_number, "phi_g": parse_number, "phi_ghat": parse_number, "density": parse_number,
    "interference": parse_bool, "state": _choice(STATE_FAMILIES), "alpha": parse_number,
    "phi_alpha": parse_number, "sigmas": parse_number, "n0": parse_int, "width": parse_int,
    "kappas": parse_int_list, "grid_lo": parse_number, "grid_hi": parse_number, "grid_count": parse_int,
    "solver": _choice(SOLVERS), "dt": parse_number, "t_end": parse_number, "threads": parse_int,
    "out": _text, "name": _text, "omega_rabi": parse_number, "dip_lo": parse_number, "dip_hi": parse_number,
}


@dataclass(frozen=True)
class StateSpec:
    """Tagged field-state description; build() runs the matching constructor."""
    family: str = "coherent"
    alpha: float = 20.0
    phi_alpha: float = 0.0
    sigmas: float = DEFAULT_SIGMAS
    n0: int = 400
    width: int = 1
    kappas: Tuple[int, ...] = (0, 2, 4)

    def build(self) -> FieldState:
        if self.family == "coherent":
            return coherent_state(self.alpha, self.phi_alpha, self.sigmas)
        if self.family == "fock":
            return single_fock(self.n0)
        if self.family == "window":
            return adjacent_window(self.n0, self.width, self.phi_alpha)
        if self.family == "separated":
            return separated_fock(self.n0, self.kappas, self.phi_alpha)
        raise ConfigError(f"Unknown state family {self.family!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    params: SystemParams
    state: StateSpec
    grid: FrequencyGrid
    solver: str = "fast"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    threads: int = 1
    out: str = "out"
    name: str = "spectrum"
    omega_rabi: float = 5.0
    dip_window: Tuple[float, float] = (4.0, 5.5)
    resolved: Mapping[str, str] = field(default_factory=dict)

    def record(self) -> Dict[str, str]:
        """Resolved key → value strings embedded in artifacts (runtime-only keys excluded)."""
        return {key: self.resolved[key] for key in sorted(self.resolved) if key not in RUNTIME_KEYS}


def _normalize(source: Mapping[str, Optional[str]], origin: str) -> Dict[str, str]:
    values = {}
    for key, value in source.items():
        name = key.strip().lower()
        if name not in PARSERS:
            raise ConfigError(f"Unknown key {key!r} in {origin}")
        if value is None:
            raise ConfigError(f"Key {key!r} in {origin} has no value")
        values[name] = str(value)
    return values


def read_config_file(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    return _normalize(dotenv_values(path), path)


def environment_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    prefixed = {key[len(ENV_PREFIX):]: value for key, value in environ.items() if key.upper().startswith(ENV_PREFIX)}
    return _normalize(prefixed, "environment")


def parse_assignments(items: Optional[List[str]]) -> Dict[str, str]:
    """--set key=value pairs."""
    values = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Expected key=value, got {item!r}")
        values[key] = value
    return _normalize(values, "--set")


def resolve(raw: Mapping[str, str]) -> ScenarioConfig:
    """Typed ScenarioConfig from a complete key → string mapping."""
    unknown = sorted(set(raw) - set(PARSERS))
    if unknown:
        raise ConfigError(f"Unknown keys: {unknown}")
    merged = dict(DEFAULTS, **raw)
    typed: Dict[str, Any] = {}
    for key, parser in PARSERS.items():
        try:
            typed[key] = parser(merged[key])
        except ConfigError as e:
            raise ConfigError(f"{key}: {e}") from e

    try:
        params = SystemParams(
            gamma1=typed["gamma1"], gamma2=typed["gamma2"], omega21=typed["omega21"], gbar_mag=typed["gbar"],
            phi=typed["phi"], phi_g=typed["phi_g"], phi_ghat=typed["phi_ghat"], density=typed["density"],
            interference=typed["interference"])
        grid = FrequencyGrid(typed["grid_lo"], typed["grid_hi"], typed["grid_count"])
        integrator = IntegratorConfig(dt=typed["dt"], t_end=typed["t_end"])
    except EmissionError as e:
        raise ConfigError(str(e)) from e
    if typed["threads"] < 0:
        raise ConfigError(f"threads must be >= 0, got {typed['threads']}")
    if typed["dip_lo"] > typed["dip_hi"]:
        raise ConfigError(f"dip_lo {typed['dip_lo']} exceeds dip_hi {typed['dip_hi']}")

    state = StateSpec(typed["state"], typed["alpha"], typed["phi_alpha"], typed["sigmas"], typed["n0"],
                      typed["width"], typed["kappas"])
    canonical = {key: _canonical(typed[key]) for key in PARSERS}
    return ScenarioConfig(params, state, grid, typed["solver"], integrator, typed["threads"], typed["out"],
                          typed["name"], typed["omega_rabi"], (typed["dip_lo"], typed["dip_hi"]), canonical)


def _canonical(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    return str(value)


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, str]] = None,
                environ: Optional[Mapping[str, str]] = None) -> ScenarioConfig:
    """
    Resolve defaults < file < LAMBDA_SE_* environment < explicit overrides.

    Raises:
        ConfigError: unknown keys, unparseable values, invalid combinations
    """
    raw: Dict[str, str] = {}
    if path:
        raw.update(read_config_file(path))
    raw.update(environment_overrides(environ))
    raw.update(_normalize(overrides or {}, "overrides"))
    config = resolve(raw)
    logger.debug(f"Resolved config: {config.record()}")
    return config
