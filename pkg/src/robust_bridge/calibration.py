"""Count-data ingestion and constant-coefficient moment matching.

Two CSV layouts are accepted:

* normalized: ``day,t,count`` with ``t`` already in [0, 1];
* raw: ``day,timestamp,count,sunrise,sunset`` with times in seconds since
  midnight, mapped to ``t = (timestamp - sunrise) / (sunset - sunrise)``;
  records outside the daylight window are dropped.

The fit minimises the sum over populated bins of squared mean and squared
standard-deviation residuals (equal weights) between the data and the moment
equations of the bridge, over ``log a, log r, log sigma`` with Nelder-Mead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .bounds import mean_curve
from .core import BridgeParams, TimeGrid, validate_params
from .errors import DegenerateData, EmptyInput, NonMonotoneTime, ParseError

__all__ = [
    "CountSeries",
    "EmpiricalMoments",
    "FitResult",
    "ingest",
    "empirical_moments",
    "theoretical_moments",
    "model_moments_at",
    "fit_constants",
    "write_fit_csv",
]

NORMALIZED_HEADER = ["day", "t", "count"]
RAW_HEADER = ["day", "timestamp", "count", "sunrise", "sunset"]


@dataclass(frozen=True, eq=False)
class CountSeries:
    days: np.ndarray  # str day id per record
    t: np.ndarray
    counts: np.ndarray

    @property
    def n_days(self) -> int:
        return int(np.unique(self.days).size)

    def __len__(self) -> int:
        return int(self.t.size)


@dataclass(frozen=True, eq=False)
class EmpiricalMoments:
    bin_centers: np.ndarray
    means: np.ndarray  # NaN in empty bins
    stds: np.ndarray
    counts_per_bin: np.ndarray

    @property
    def usable(self) -> np.ndarray:
        return self.counts_per_bin > 0


def _number(text: str, what: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} is not a number: {text!r}", line=lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} is not finite: {text!r}", line=lineno)
    return value


def ingest(csv_path: str | Path, mode: str = "normalized") -> CountSeries:
    """Read a count CSV (``mode`` is ``"normalized"`` or ``"raw"``)."""
    if mode not in ("normalized", "raw"):
        raise ValueError(f"mode must be 'normalized' or 'raw', got {mode!r}")
    expected = NORMALIZED_HEADER if mode == "normalized" else RAW_HEADER
    days, ts, counts = [], [], []
    with Path(csv_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInput(f"{csv_path} is empty")
        if [h.strip() for h in header] != expected:
            raise ParseError(f"expected header {','.join(expected)!r}, got {','.join(header)!r}",
                             line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise ParseError(f"expected {len(expected)} columns, got {len(row)}", line=lineno)
            day = row[0].strip()
            count = _number(row[2], "count", lineno)
            if count < 0:
                raise ParseError(f"negative count {count}", line=lineno)
            if mode == "normalized":
                t = _number(row[1], "t", lineno)
                if not 0.0 <= t <= 1.0:
                    raise ParseError(f"t={t} outside [0, 1]", line=lineno)
            else:
                stamp = _number(row[1], "timestamp", lineno)
                rise = _number(row[3], "sunrise", lineno)
                sset = _number(row[4], "sunset", lineno)
                if not sset > rise:
                    raise ParseError("sunset must be after sunrise", line=lineno)
                t = (stamp - rise) / (sset - rise)
                if not 0.0 <= t <= 1.0:
                    continue
            days.append(day)
            ts.append(t)
            counts.append(count)
    if not ts:
        raise EmptyInput(f"{csv_path} has no usable records")
    days_a = np.array(days)
    t_a = np.array(ts)
    for day in np.unique(days_a):
        td = t_a[days_a == day]
        if np.any(np.diff(td) <= 0):
            raise NonMonotoneTime(f"times of day {day!r} are not strictly increasing")
    return CountSeries(days_a, t_a, np.array(counts))


def empirical_moments(series: CountSeries, n_bins: int) -> EmpiricalMoments:
    """Pooled per-bin mean and (population) standard deviation on uniform bins."""
    if n_bins < 4:
        raise ValueError(f"n_bins must be >= 4, got {n_bins}")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, series.t, side="right") - 1, 0, n_bins - 1)
    n = np.bincount(idx, minlength=n_bins)
    s1 = np.bincount(idx, weights=series.counts, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(n > 0, s1 / n, np.nan)
    stds = np.full(n_bins, np.nan)
    for b in np.flatnonzero(n):
        stds[b] = float(np.std(series.counts[idx == b]))
    return EmpiricalMoments(0.5 * (edges[:-1] + edges[1:]), means, stds, n)


def theoretical_moments(params: BridgeParams, grid: TimeGrid,
                        scheme: str = "trapezoid") -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of the bridge on the grid nodes.

    The second moment ``q`` solves ``q' = 2 a m - 2 lam q + sigma^2 lam m``
    (``lam = r/(1-t)``), stepped with the same implicit treatment of ``lam`` as
    the mean, which is taken from :func:`robust_bridge.bounds.mean_curve`.
    """
    validate_params(params)
    n, dt = grid.n_steps, grid.dt
    t = grid.nodes()
    m = mean_curve(params, grid, scheme=scheme)
    a = params.a.on_grid(t)
    s2 = params.sigma.on_grid(t) ** 2
    lam = np.zeros(n + 1)
    lam[:n] = params.r / (1.0 - t[:n])
    src = ((2.0 * a + s2 * lam) * m).tolist()
    lam2 = (2.0 * lam).tolist()
    q = [0.0] * (n + 1)
    x = 0.0
    if scheme == "euler":
        for k in range(n - 1):
            x = (x + dt * src[k]) / (1.0 + dt * lam2[k + 1])
            q[k + 1] = x
    elif scheme == "trapezoid":
        h = 0.5 * dt
        for k in range(n - 1):
            x = (x * (1.0 - h * lam2[k]) + h * (src[k] + src[k + 1])) / (1.0 + h * lam2[k + 1])
            q[k + 1] = x
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    var = np.array(q) - m**2
    return m, np.sqrt(np.maximum(var, 0.0))


def model_moments_at(params: BridgeParams, grid: TimeGrid, t: np.ndarray):
    """Model mean and std interpolated at arbitrary times (e.g. bin centers)."""
    m, s = theoretical_moments(params, grid)
    nodes = grid.nodes()
    return np.interp(t, nodes, m), np.interp(t, nodes, s)


@dataclass(frozen=True)
class FitResult:
    params: BridgeParams
    objective: float
    n_bins_used: int
    identifiable: bool = True
    weights: tuple[float, float] = (1.0, 1.0)  # (mean, std) residual weights
    history: tuple[float, ...] = field(default=(), repr=False)


def fit_constants(emp: EmpiricalMoments, init: BridgeParams, grid: TimeGrid,
                  max_iter: int = 4000, xatol: float = 1e-9, fatol: float = 1e-16) -> FitResult:
    """Least-squares fit of constant ``(a, r, sigma)`` to binned means and stds.

    Positivity is enforced by optimising logarithms. All-zero data carries no
    information on ``r`` and ``sigma``; the fit still runs (``a`` is driven
    towards 0) and the result is flagged ``identifiable=False``.
    """
    use = emp.usable & np.isfinite(emp.means) & np.isfinite(emp.stds)
    n_used = int(use.sum())
    if n_used < 4:
        raise DegenerateData(f"need at least 4 populated bins, got {n_used}")
    validate_params(init)
    if not init.is_constant:
        raise ValueError("fit_constants starts from constant coefficients")
    tc = emp.bin_centers[use]
    mu, sd = emp.means[use], emp.stds[use]
    nodes = grid.nodes()

    def objective(z):
        a, r, sigma = np.exp(z)
        if not all(map(math.isfinite, (a, r, sigma))) or r <= 0 or sigma <= 0:
            return math.inf
        m, s = theoretical_moments(BridgeParams(a, r, sigma), grid)
        mm = np.interp(tc, nodes, m)
        ss = np.interp(tc, nodes, s)
        return float(np.sum((mm - mu) ** 2) + np.sum((ss - sd) ** 2))

    history: list[float] = []
    z0 = np.log([max(init.a.constant, 1e-12), init.r, init.sigma.constant])
    res = minimize(objective, z0, method="Nelder-Mead",
                   callback=lambda intermediate_result: history.append(float(intermediate_result.fun)),
                   options={"maxiter": max_iter, "xatol": xatol, "fatol": fatol})
    a, r, sigma = np.exp(res.x)
    zero_data = bool(np.all(mu == 0) and np.all(sd == 0))
    return FitResult(BridgeParams(float(a), float(r), float(sigma)), float(res.fun), n_used,
                     identifiable=not zero_data, history=tuple(history))


def write_fit_csv(fit: FitResult, path: str | Path) -> None:
    p = fit.params
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "r", "sigma", "objective", "n_bins_used"])
        w.writerow([f"{p.a.constant:.12g}", f"{p.r:.12g}", f"{p.sigma.constant:.12g}",
                    f"{fit.objective:.12g}", fit.n_bins_used])
