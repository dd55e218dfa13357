"""Run configuration: a flat ``key = value`` text format.

Lines hold one ``key = value`` pair; ``#`` starts a comment; blank lines are
ignored. Unknown keys are hard errors so typos cannot silently fall back to
defaults. Omitted keys take the defaults below, which reproduce the
reference two-qubit setup (all rates in units of delta, times in 1/delta).
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .qmatrix import bell_even_state, bell_odd_state, check_density_matrix

__all__ = ["SimulationConfig", "parse_config", "format_config", "build_initial_state"]

_NAMED_STATES = ("bell-odd", "bell-even")


@dataclass(frozen=True)
class SimulationConfig:
    """All physical and numerical knobs of one simulation run."""

    epsilon: float = 1.5
    zeta: float = 0.0
    eta: float = 0.3
    gamma: float = 4.0
    beta: float = 2.5
    initial_state: str = "bell-odd"   # named state or a 4x4 matrix literal
    t_max: float = 10.0
    grid_dt: float = 0.02
    matsubara_cutoff: int | str = 12  # K, or "auto" together with depth
    depth: int | str = 2              # L, or "auto"
    terminator: str = "closed-form"
    atol: float = 1e-10
    rtol: float = 1e-8
    max_ados: int = 100_000
    converge_tol: float = 1e-5
    n_theta: int = 64
    n_phi: int = 128
    refine_tol: float = 1e-10
    event_window: int = 2
    event_threshold: float = 20.0
    plateau_tol: float = 0.05
    crossing_zero_tol: float = 1e-9
    sweep_workers: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        _validate(self)

    @property
    def auto_truncation(self):
        return self.matsubara_cutoff == "auto" or self.depth == "auto"

    def grid(self):
        """The output time grid [0, t_max] with spacing grid_dt."""
        n = int(round(self.t_max / self.grid_dt))
        return np.linspace(0.0, n * self.grid_dt, n + 1)


#: config keys in file order; single source of truth for parse and format
_KEYS = {f.name for f in fields(SimulationConfig)}

_POSITIVE = ("gamma", "beta", "t_max", "grid_dt", "atol", "rtol",
             "converge_tol", "refine_tol", "event_threshold", "plateau_tol")
_NONNEGATIVE = ("epsilon", "eta", "crossing_zero_tol")
_POSITIVE_INT = ("max_ados", "n_theta", "n_phi", "event_window", "sweep_workers")


def _validate(cfg):
    for key in _POSITIVE:
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be positive, got {getattr(cfg, key)}")
    for key in _NONNEGATIVE:
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be >= 0, got {getattr(cfg, key)}")
    for key in _POSITIVE_INT:
        value = getattr(cfg, key)
        if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
            raise ConfigError(f"{key} must be a positive integer, got {value!r}")
    if cfg.t_max < cfg.grid_dt:
        raise ConfigError(f"t_max ({cfg.t_max}) must be >= grid_dt ({cfg.grid_dt})")
    for key in ("matsubara_cutoff", "depth"):
        value = getattr(cfg, key)
        if value == "auto":
            continue
        if not isinstance(value, int) or value < 0:
            raise ConfigError(f"{key} must be a nonnegative integer or 'auto', got {value!r}")
    if (cfg.matsubara_cutoff == "auto") != (cfg.depth == "auto"):
        raise ConfigError("matsubara_cutoff and depth must be 'auto' together")
    if cfg.terminator not in ("closed-form", "tail-sum"):
        raise ConfigError(f"terminator must be 'closed-form' or 'tail-sum', got {cfg.terminator!r}")
    if cfg.initial_state not in _NAMED_STATES:
        try:
            build_initial_state(cfg.initial_state)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"initial_state is invalid: {exc}") from exc


def build_initial_state(state_text):
    """Resolve a named initial state or a 4x4 matrix literal to an array."""
    if state_text == "bell-odd":
        return bell_odd_state()
    if state_text == "bell-even":
        return bell_even_state()
    try:
        raw = ast.literal_eval(state_text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(
            f"initial_state must be one of {_NAMED_STATES} or a 4x4 matrix "
            f"literal, got {state_text!r}"
        ) from exc
    mat = np.array(raw, dtype=complex)
    if mat.shape != (4, 4):
        raise ConfigError(f"initial_state literal has shape {mat.shape}, expected (4, 4)")
    try:
        return check_density_matrix(mat, dim=4)
    except Exception as exc:
        raise ConfigError(f"initial_state literal is not a density matrix: {exc}") from exc


def _parse_value(key, text, lineno):
    if key in ("initial_state", "terminator", "output_dir"):
        return text
    if key in ("matsubara_cutoff", "depth") and text == "auto":
        return "auto"
    try:
        value = ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"line {lineno}: cannot parse value for {key}: {text!r}") from exc
    if key in _POSITIVE_INT or key in ("matsubara_cutoff", "depth", "event_window"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"line {lineno}: {key} must be an integer, got {text!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"line {lineno}: {key} must be a number, got {text!r}")
    return float(value)


def parse_config(text):
    """Parse configuration text into a validated :class:`SimulationConfig`.

    Raises :class:`ConfigError` with the offending line number on malformed
    lines, unknown keys, duplicate keys or invalid values.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value_text:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[key] = _parse_value(key, value_text, lineno)
    return SimulationConfig(**values)


def format_config(cfg):
    """Serialize a config to the same text format ``parse_config`` reads."""
    lines = []
    for f in fields(SimulationConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, float):
            lines.append(f"{f.name} = {value!r}")
        else:
            lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
