"""Experiment specs and their flat ``key = value`` text form.

One key per line, ``#`` starts a comment, blank lines are ignored. Keys
are the CLI flag names with dashes turned into underscores.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Any, Callable

from ..models import MODEL_NAMES, JamForm, Ramp
from ..rng import DEFAULT_SEED

COMMANDS = ("chsh", "audit", "optimize", "jamming", "sample")
AUDITS = ("nonsignaling", "empirical", "unary", "all")
METHODS = ("lhv", "tsirelson", "lp", "all")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Malformed config text; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(ValueError):
    """A key or value the spec does not accept; ``key`` names it."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"expected a non-negative integer, got {text!r}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {text!r}")
    return value


def _quad(text: str) -> str:
    text = text.strip()
    if text == "canonical":
        return text
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("quad is 'canonical' or four comma-separated angles a,a_prime,b,b_prime")
    return ",".join(repr(_float(p)) for p in parts)


def _event(text: str) -> str:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) < 2:
        raise ValueError("event is t,x1[,x2,...]")
    return ",".join(repr(_float(p)) for p in parts)


def _out(text: str) -> str:
    if not text.strip():
        raise ValueError("output path is empty")
    return text.strip()


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    model: str = "superquantum-pr"
    ramp: str = Ramp.SMOOTH_SINE.value
    jammed: bool = False
    jam_form: str = JamForm.SAW.value
    quad: str = "canonical"
    angle: float = 0.0
    n: int = 0
    seed: int = DEFAULT_SEED
    audit: str = "all"
    grid: int = 100
    alpha: float = 0.01
    method: str = "all"
    restarts: int = 10
    tolerance: float = 1e-9
    dim: int = 1
    a: str | None = None
    b: str | None = None
    j: str | None = None
    budget: int = 64
    workers: int = 1
    format: str = "csv"
    out: str | None = None
    strict: bool = False

    def output_path(self) -> str:
        return self.out or f"{self.command}.{self.format}"

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


PARSERS: dict[str, Callable[[str], Any]] = {
    "command": _choice(COMMANDS),
    "model": _choice(MODEL_NAMES),
    "ramp": _choice(tuple(r.value for r in Ramp)),
    "jammed": _bool,
    "jam_form": _choice(tuple(f.value for f in JamForm)),
    "quad": _quad,
    "angle": _float,
    "n": _count,
    "seed": _seed,
    "audit": _choice(AUDITS),
    "grid": _count,
    "alpha": _float,
    "method": _choice(METHODS),
    "restarts": _count,
    "tolerance": _float,
    "dim": _count,
    "a": _event,
    "b": _event,
    "j": _event,
    "budget": _count,
    "workers": _count,
    "format": _choice(FORMATS),
    "out": _out,
    "strict": _bool,
}
KEYS = tuple(f.name for f in fields(ExperimentSpec))
assert set(KEYS) == set(PARSERS)


def read_pairs(text: str) -> dict[str, str]:
    """Raw ``key -> value`` strings; rejects malformed lines and duplicates."""
    pairs: dict[str, str] = {}
    seen_on: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", lineno)
        key = key.replace("-", "_")
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen_on[key]})", lineno)
        pairs[key] = value
        seen_on[key] = lineno
    return pairs


def build_spec(values: dict[str, str]) -> ExperimentSpec:
    """Typed spec from string values, defaults filled, cross-field checks applied."""
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ValidationError(unknown[0], "unknown key")
    if "command" not in values:
        raise ValidationError("command", "missing")
    typed = {}
    for key, text in values.items():
        try:
            typed[key] = PARSERS[key](text)
        except ValueError as exc:
            raise ValidationError(key, str(exc)) from None
    spec = ExperimentSpec(**typed)
    _cross_check(spec)
    return spec


def _cross_check(spec: ExperimentSpec) -> None:
    if spec.workers < 1:
        raise ValidationError("workers", "must be >= 1")
    if spec.command == "sample" and spec.n < 1:
        raise ValidationError("n", "sample needs n >= 1")
    if spec.command == "audit" and spec.grid < 2:
        raise ValidationError("grid", "must be >= 2")
    if not 0 < spec.alpha < 1:
        raise ValidationError("alpha", "must lie in (0, 1)")
    if spec.tolerance <= 0:
        raise ValidationError("tolerance", "must be positive")
    if spec.command == "jamming":
        if spec.dim < 1:
            raise ValidationError("dim", "must be >= 1")
        if spec.budget < 1:
            raise ValidationError("budget", "must be >= 1")
        for key in ("a", "b", "j"):
            value = getattr(spec, key)
            if value is None:
                raise ValidationError(key, "jamming needs events a, b and j")
            if len(value.split(",")) != spec.dim + 1:
                raise ValidationError(key, f"expected t plus {spec.dim} spatial coordinates")


def parse_config(text: str) -> ExperimentSpec:
    return build_spec(read_pairs(text))


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(spec: ExperimentSpec) -> str:
    lines = []
    for key in KEYS:
        value = getattr(spec, key)
        if value is not None:
            lines.append(f"{key} = {_render(value)}")
    return "\n".join(lines) + "\n"
