"""Benchmark value, robust lower/upper bounds and their relative entropy.

For the worst-case drift the controlled state is again a bridge whose
reversion is multiplied by ``c_t = 1 - sign * sigma_t^2 psi A_t``; its mean
solves the linear equation

    dm/dt = a_t - r/(1-t) c_t m,    m_0 = 0,

and the entropy spent by the adversary follows from the bound value ``B_0``:
``kappa = psi (B_0 - E)`` for the lower case and ``psi (E - B_0)`` for the
upper one, ``E`` being the integral of ``m`` over [0, 1].
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._parallel import worker_count
from .core import BridgeParams, Case, TimeGrid, check_psi, validate_params
from .errors import NotBracketed
from .riccati import RiccatiSolution, solve_A

__all__ = [
    "BoundResult",
    "mean_curve",
    "compute_F",
    "compute_bound",
    "sweep_psi",
    "invert_kappa",
    "write_sweep_csv",
    "SWEEP_HEADER",
]

SWEEP_HEADER = ["case", "psi", "bound", "distorted_integral", "kappa", "count_ratio", "blow_up"]


def mean_curve(params: BridgeParams, grid: TimeGrid, factor: np.ndarray | None = None,
               scheme: str = "trapezoid") -> np.ndarray:
    """Mean of the (possibly distorted) bridge on the grid nodes.

    The reversion term is always implicit so the exploding rate at ``t -> 1``
    only ever appears in a denominator; the last node is pinned to 0.
    ``scheme="euler"`` is the plain one-step implicit method,
    ``"trapezoid"`` the Crank-Nicolson variant (second order away from ``t = 1``).
    """
    n = grid.n_steps
    dt = grid.dt
    t = grid.nodes()
    a = params.a.on_grid(t).tolist()
    lam = np.empty(n + 1)
    lam[:n] = params.r / (1.0 - t[:n])
    lam[n] = math.inf
    if factor is not None:
        lam[:n] *= np.asarray(factor)[:n]
    lam = lam.tolist()
    m = [0.0] * (n + 1)
    x = 0.0
    if scheme == "euler":
        for k in range(n - 1):
            x = (x + dt * a[k]) / (1.0 + dt * lam[k + 1])
            m[k + 1] = x
    elif scheme == "trapezoid":
        h = 0.5 * dt
        for k in range(n - 1):
            x = (x * (1.0 - h * lam[k]) + h * (a[k] + a[k + 1])) / (1.0 + h * lam[k + 1])
            m[k + 1] = x
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return np.array(m)


def _integral(m: np.ndarray, grid: TimeGrid) -> float:
    return float(np.trapezoid(m, dx=grid.dt))


def compute_F(params: BridgeParams, grid: TimeGrid, scheme: str = "trapezoid") -> float:
    """Expected time integral of the benchmark bridge."""
    validate_params(params)
    return _integral(mean_curve(params, grid, scheme=scheme), grid)


@dataclass(frozen=True, eq=False)
class BoundResult:
    case: Case
    psi: float
    bound_value: float
    distorted_integral: float
    kappa: float
    count_ratio: float
    blow_up: bool
    benchmark: float = math.nan
    riccati: RiccatiSolution | None = field(default=None, repr=False)

    def row(self) -> list[str]:
        return [self.case.value, _fmt(self.psi), _fmt(self.bound_value),
                _fmt(self.distorted_integral), _fmt(self.kappa), _fmt(self.count_ratio),
                "true" if self.blow_up else "false"]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def compute_bound(params: BridgeParams, case: Case | str, psi: float, grid: TimeGrid, *,
                  F: float | None = None, scheme: str = "trapezoid",
                  riccati_scheme: str = "trapezoid",
                  riccati: RiccatiSolution | None = None) -> BoundResult:
    """Bound value, distorted expected integral, entropy and count ratio at ``psi``.

    ``F`` may be passed to skip recomputing the benchmark. On blow-up every
    numeric field except ``psi`` is NaN.
    """
    validate_params(params)
    case = Case.parse(case)
    psi = check_psi(psi)
    if F is None:
        F = compute_F(params, grid, scheme=scheme)
    if riccati is None:
        riccati = solve_A(params, case, psi, grid, scheme=riccati_scheme)
    elif riccati.case is not case or riccati.psi != psi or riccati.grid != grid:
        raise ValueError("supplied Riccati solution does not match (case, psi, grid)")
    if riccati.blow_up:
        nan = math.nan
        return BoundResult(case, psi, nan, nan, nan, nan, True, F, riccati)
    t = grid.nodes()
    factor = 1.0 - case.sign * params.sigma.on_grid(t) ** 2 * psi * riccati.A
    E = _integral(mean_curve(params, grid, factor, scheme=scheme), grid)
    B0 = riccati.B0
    if psi == 0.0:
        kappa = 0.0
    else:
        kappa = psi * (E - B0) if case is Case.UPPER else psi * (B0 - E)
    ratio = E / F if F != 0 else math.nan
    return BoundResult(case, psi, B0, E, kappa, ratio, False, F, riccati)


def _bound_task(psi, params, case, grid, F, scheme):
    res = compute_bound(params, case, psi, grid, F=F, scheme=scheme)
    # the Riccati arrays are large and not needed by sweep consumers
    return BoundResult(res.case, res.psi, res.bound_value, res.distorted_integral, res.kappa,
                       res.count_ratio, res.blow_up, res.benchmark)


def sweep_psi(params: BridgeParams, case: Case | str, psi_values: Iterable[float],
              grid: TimeGrid, workers: int | None = None,
              scheme: str = "trapezoid") -> list[BoundResult]:
    """One :class:`BoundResult` per ``psi``, in input order; blow-ups are kept."""
    validate_params(params)
    case = Case.parse(case)
    psis = [check_psi(p) for p in psi_values]
    if not psis:
        return []
    F = compute_F(params, grid, scheme=scheme)
    task = partial(_bound_task, params=params, case=case, grid=grid, F=F, scheme=scheme)
    n = min(worker_count(workers), len(psis))
    if n <= 1:
        return [task(p) for p in psis]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(task, psis))


def invert_kappa(params: BridgeParams, case: Case | str, kappa_target: float, grid: TimeGrid,
                 psi_max: float, rel_tol: float = 1e-6, max_iter: int = 200,
                 scheme: str = "trapezoid") -> float:
    """Find ``psi`` in ``[0, psi_max]`` with ``kappa(psi) = kappa_target`` by bisection.

    Relies on ``kappa`` increasing in ``psi``. A blow-up is treated as
    ``kappa = +inf``. Raises :class:`NotBracketed` if ``kappa(psi_max)`` is
    below the target.
    """
    validate_params(params)
    case = Case.parse(case)
    kappa_target = float(kappa_target)
    if not (kappa_target >= 0 and math.isfinite(kappa_target)):
        raise ValueError(f"kappa_target must be finite and >= 0, got {kappa_target!r}")
    psi_max = check_psi(psi_max)
    if kappa_target == 0.0:
        return 0.0
    F = compute_F(params, grid, scheme=scheme)
    tol = rel_tol * max(1.0, kappa_target)

    def kappa(psi):
        res = compute_bound(params, case, psi, grid, F=F, scheme=scheme)
        return math.inf if res.blow_up else res.kappa

    k_hi = kappa(psi_max)
    if k_hi < kappa_target - tol:
        raise NotBracketed(f"kappa({psi_max}) = {k_hi:.6g} < target {kappa_target:.6g}")
    if abs(k_hi - kappa_target) <= tol:
        return psi_max
    lo, hi = 0.0, psi_max
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        k = kappa(mid)
        if abs(k - kappa_target) <= tol:
            return mid
        if k < kappa_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def write_sweep_csv(results: Sequence[BoundResult], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for res in results:
            w.writerow(res.row())
