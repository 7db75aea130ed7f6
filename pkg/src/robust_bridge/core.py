"""Domain types shared by every solver: coefficients, parameters, grids.

The bridge is

    dX = (a(t) - r/(1-t) X) dt + sigma(t) sqrt(r/(1-t) X) dB,   X_0 = X_1 = 0,

on the unit interval. Coefficient curves ``a`` and ``sigma`` are either
constants or piecewise-linear curves on their own sample grid; ``r`` is a
positive constant.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidGrid,
    InvalidPsi,
    NegativeSource,
    NonPositiveReversion,
    NonPositiveVolatility,
    OutOfDomain,
    ParseError,
    UnboundedCoefficient,
)

__all__ = [
    "Case",
    "Coefficient",
    "BridgeParams",
    "TimeGrid",
    "DEFAULT_PARAMS",
    "validate_params",
    "eval_coeff",
    "check_psi",
    "load_params",
    "read_curve_csv",
]


class Case(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"

    @property
    def sign(self) -> int:
        """+1 for the upper (maximising) problem, -1 for the lower one."""
        return 1 if self is Case.UPPER else -1

    @classmethod
    def parse(cls, value: "Case | str") -> "Case":
        if isinstance(value, Case):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown case {value!r}; expected 'lower' or 'upper'") from None


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Coefficient:
    """A time function on [0, 1]: a constant, or linear interpolation of samples."""

    times: np.ndarray | None = None
    values: np.ndarray | None = None
    constant: float | None = None

    def __post_init__(self):
        if self.constant is not None:
            if self.times is not None or self.values is not None:
                raise ValueError("a coefficient is either constant or sampled, not both")
            object.__setattr__(self, "constant", float(self.constant))
            return
        if self.times is None or self.values is None:
            raise ValueError("sampled coefficient needs both times and values")
        t = _frozen(self.times)
        v = _frozen(self.values)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("times and values must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")
        if not (math.isclose(t[0], 0.0, abs_tol=1e-12) and math.isclose(t[-1], 1.0, abs_tol=1e-12)):
            raise ValueError("sample times must run from 0 to 1")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def const(cls, value: float) -> "Coefficient":
        return cls(constant=value)

    @classmethod
    def sampled(cls, times, values) -> "Coefficient":
        return cls(times=times, values=values)

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def samples(self) -> np.ndarray:
        """Values that define the curve (one entry for a constant)."""
        if self.is_constant:
            return np.array([self.constant])
        return np.asarray(self.values)

    def max(self) -> float:
        # the max of a piecewise-linear curve is attained at a sample
        return float(np.max(self.samples()))

    def min(self) -> float:
        return float(np.min(self.samples()))

    def __call__(self, t: float) -> float:
        return eval_coeff(self, t)

    def on_grid(self, t: np.ndarray) -> np.ndarray:
        """Vectorised evaluation at nodes already known to lie in [0, 1]."""
        t = np.asarray(t, dtype=float)
        if self.is_constant:
            return np.full(t.shape, self.constant)
        return np.interp(t, self.times, self.values)

    def scaled(self, factor: float) -> "Coefficient":
        if self.is_constant:
            return Coefficient.const(self.constant * factor)
        return Coefficient.sampled(self.times, self.values * factor)

    def __repr__(self) -> str:
        if self.is_constant:
            return f"Coefficient.const({self.constant!r})"
        return f"Coefficient.sampled(<{self.times.size} samples>)"


def _as_coefficient(x) -> Coefficient:
    if isinstance(x, Coefficient):
        return x
    return Coefficient.const(float(x))


def eval_coeff(curve: Coefficient, t: float) -> float:
    """Evaluate ``curve`` at ``t``; raises :class:`OutOfDomain` outside [0, 1]."""
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise OutOfDomain(f"t={t!r} is outside [0, 1]")
    if curve.is_constant:
        return curve.constant
    return float(np.interp(t, curve.times, curve.values))


@dataclass(frozen=True)
class BridgeParams:
    """Source rate ``a``, reversion exponent ``r`` and volatility ``sigma``.

    Plain numbers are promoted to constant coefficients. Construction does not
    validate; call :func:`validate_params` (every solver does).
    """

    a: Coefficient
    r: float
    sigma: Coefficient

    def __post_init__(self):
        object.__setattr__(self, "a", _as_coefficient(self.a))
        object.__setattr__(self, "sigma", _as_coefficient(self.sigma))
        object.__setattr__(self, "r", float(self.r))

    @property
    def sigma_bar(self) -> float:
        return self.sigma.max()

    @property
    def is_constant(self) -> bool:
        return self.a.is_constant and self.sigma.is_constant

    def replace(self, **changes) -> "BridgeParams":
        kw = {"a": self.a, "r": self.r, "sigma": self.sigma}
        kw.update(changes)
        return BridgeParams(**kw)


# Constant-coefficient fit to the 10-min juvenile ayu counts; the reference case.
DEFAULT_PARAMS = BridgeParams(a=0.03673, r=0.7100, sigma=0.7252)


def validate_params(p: BridgeParams) -> float:
    """Check the parameter invariants and return ``sigma_bar = max sigma``."""
    if not math.isfinite(p.r):
        raise UnboundedCoefficient(f"r={p.r!r} is not finite")
    if p.r <= 0:
        raise NonPositiveReversion(f"r must be > 0, got {p.r!r}")
    a = p.a.samples()
    s = p.sigma.samples()
    if not np.all(np.isfinite(a)):
        raise UnboundedCoefficient("source curve a has non-finite samples")
    if not np.all(np.isfinite(s)):
        raise UnboundedCoefficient("volatility curve sigma has non-finite samples")
    if np.any(a < 0):
        raise NegativeSource(f"a must be >= 0, min sample is {a.min()!r}")
    if np.any(s <= 0):
        raise NonPositiveVolatility(f"sigma must be > 0, min sample is {s.min()!r}")
    return float(s.max())


def check_psi(psi: float) -> float:
    psi = float(psi)
    if not (psi >= 0 and math.isfinite(psi)):
        raise InvalidPsi(f"psi must be finite and >= 0, got {psi!r}")
    return psi


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps`` steps on [0, 1]."""

    n_steps: int
    dt: float = field(init=False)

    def __post_init__(self):
        n = self.n_steps
        if isinstance(n, float):
            if not n.is_integer():
                raise InvalidGrid(f"n_steps must be an integer, got {n!r}")
            n = int(n)
            object.__setattr__(self, "n_steps", n)
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise InvalidGrid(f"n_steps must be an integer, got {n!r}")
        if n < 10:
            raise InvalidGrid(f"n_steps must be >= 10, got {n}")
        object.__setattr__(self, "n_steps", int(n))
        object.__setattr__(self, "dt", 1.0 / int(n))

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    def nodes(self) -> np.ndarray:
        """Grid nodes ``k / n_steps``; the last node is exactly 1."""
        return np.arange(self.n_nodes) / self.n_steps


# ---------------------------------------------------------------------------
# parameter files


def read_curve_csv(path: str | Path) -> Coefficient:
    """Read a two-column ``t,value`` CSV into a sampled coefficient."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty curve file", line=1) from None
        if [h.strip() for h in header] != ["t", "value"]:
            raise ParseError(f"{path}: expected header 't,value', got {','.join(header)!r}", line=1)
        ts, vs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 columns", line=lineno)
            try:
                ts.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                raise ParseError(f"{path}: non-numeric value", line=lineno) from None
    try:
        return Coefficient.sampled(ts, vs)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_params(path: str | Path) -> BridgeParams:
    """Load a ``key=value`` parameter file.

    Keys: ``r`` (required), ``a`` or ``a_file``, ``sigma`` or ``sigma_file``.
    ``*_file`` entries name ``t,value`` CSVs, resolved relative to the
    parameter file. Blank lines and ``#`` comments are ignored.
    """
    path = Path(path)
    entries: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}: expected key=value", line=lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in {"a", "r", "sigma", "a_file", "sigma_file"}:
                raise ParseError(f"{path}: unknown key {key!r}", line=lineno)
            if key in entries:
                raise ParseError(f"{path}: duplicate key {key!r}", line=lineno)
            entries[key] = value

    def number(key):
        try:
            return float(entries[key])
        except ValueError:
            raise ParseError(f"{path}: {key} is not a number: {entries[key]!r}") from None

    def curve(key):
        has_const, has_file = key in entries, f"{key}_file" in entries
        if has_const == has_file:
            raise ParseError(f"{path}: give exactly one of {key} / {key}_file")
        if has_const:
            return Coefficient.const(number(key))
        return read_curve_csv(path.parent / entries[f"{key}_file"])

    if "r" not in entries:
        raise ParseError(f"{path}: missing key 'r'")
    return BridgeParams(a=curve("a"), r=number("r"), sigma=curve("sigma"))
