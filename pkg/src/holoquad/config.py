"""Run configuration: flat ``key = value`` text with bracketed numeric lists.

Example::

    # canonical tree-(b) family
    a = [0, -1, 0, 1]
    b = [0, -1, -1, -2]
    epsilons = [0.1, 0.01, 0.001]
    delta = 0.2
    grid = [64, 17]

Values are Python literals read with :func:`ast.literal_eval`; entries of
``a``, ``b`` and ``c`` may also be rational strings such as ``"1/3"``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError
from .geometry import AffineSections
from .harness import DEFAULT_GRID, EPS_FLOOR

KEYS = {"a", "b", "c", "epsilons", "epsilon", "delta", "grid", "output", "format", "svg"}
FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; ``epsilons`` is sorted descending.

    ``epsilon`` is the single scale used by ``map``, ``tree --svg`` and
    ``modulus``; it defaults to the largest entry of ``epsilons``.
    """

    a: tuple
    b: tuple
    c: tuple
    epsilons: tuple
    epsilon: float
    delta: float | None
    grid: tuple
    output: str | None
    format: str
    emit_svg: bool

    def sections(self) -> AffineSections:
        """Build the sections (may raise GeometryError, reported as a domain error)."""
        return AffineSections(self.a, self.b, self.c)


def _number(v, key: str):
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: cannot read {v!r} as a rational number") from exc
    raise ConfigError(f"{key}: expected a number, got {v!r}")


def _four(raw: dict, key: str, default=None) -> tuple:
    if key not in raw:
        if default is not None:
            return default
        raise ConfigError(f"missing key {key!r}")
    v = raw[key]
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ConfigError(f"{key} must be a list of four numbers")
    out = tuple(_number(x, key) for x in v)
    if not all(math.isfinite(float(x)) for x in out):
        raise ConfigError(f"{key} must be finite")
    return out


def parse_config_text(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if value.lower() in ("true", "false"):
            raw[key] = value.lower() == "true"
            continue
        try:
            raw[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            # bare words such as csv or a path
            raw[key] = value
    return _build(raw)


def _build(raw: dict) -> RunConfig:
    a = _four(raw, "a")
    b = _four(raw, "b")
    c = _four(raw, "c", (0, 0, 0, 0))

    eps = raw.get("epsilons", [raw["epsilon"]] if "epsilon" in raw else None)
    if eps is None:
        raise ConfigError("missing key 'epsilons' (or 'epsilon')")
    if isinstance(eps, (int, float)) and not isinstance(eps, bool):
        eps = [eps]
    if not isinstance(eps, (list, tuple)) or not eps:
        raise ConfigError("epsilons must be a non-empty list")
    try:
        eps = sorted((float(e) for e in eps), reverse=True)
    except (TypeError, ValueError) as exc:
        raise ConfigError("epsilons must be numbers") from exc
    if not all(math.isfinite(e) and e >= EPS_FLOOR for e in eps):
        raise ConfigError(f"every epsilon must be finite and at least {EPS_FLOOR:g}")
    epsilon = float(raw.get("epsilon", eps[0]))
    if not (math.isfinite(epsilon) and epsilon >= EPS_FLOOR):
        raise ConfigError(f"epsilon must be finite and at least {EPS_FLOOR:g}")

    delta = raw.get("delta")
    if delta is not None:
        if isinstance(delta, bool) or not isinstance(delta, (int, float)) or not 0 < delta < 0.5:
            raise ConfigError("delta must be a number in (0, 0.5)")
        delta = float(delta)

    grid = raw.get("grid", DEFAULT_GRID)
    if (not isinstance(grid, (list, tuple)) or len(grid) != 2
            or not all(isinstance(g, int) and not isinstance(g, bool) and g >= 2 for g in grid)):
        raise ConfigError("grid must be [n_tau, n_sigma] with integers >= 2")

    fmt = str(raw.get("format", "csv"))
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    out = raw.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output must be a path prefix")
    svg = raw.get("svg", False)
    if not isinstance(svg, bool):
        raise ConfigError("svg must be true or false")
    return RunConfig(a, b, c, tuple(eps), epsilon, delta, tuple(grid), out, fmt, svg)


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(p)!r}: {exc.strerror}") from exc
    return parse_config_text(text)
