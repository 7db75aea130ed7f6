"""Riccati-type equations for the sensitivity coefficient ``A``.

The value of the robust problem is affine in the state, ``A_t x + B_t``, with

    -dA/dt = r/(1-t) * (-A +/- sigma_t^2 psi A^2 / 2) + 1,   A_1 = 0,

(``+`` for the upper bound, ``-`` for the lower one) and ``B_0 = int a_t A_t dt``.
The coefficient ``r/(1-t)`` explodes at the terminal time, so the equation is
integrated in reversed time ``s = 1 - t`` after the substitution

    A_{1-s} = s (1 + Y_s) / (1 + r),

which leaves the stiff linear term ``-(r+1) Y / s`` and a bounded quadratic
forcing ``+/- q omega_s^2 (1 + Y_s)^2`` with ``q = r psi / (2 (r+1))`` and
``omega_s = sigma_{1-s}``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core import BridgeParams, Case, TimeGrid, check_psi, validate_params
from .errors import InconsistentInput, NoConvergence

__all__ = [
    "RiccatiSolution",
    "NovikovReport",
    "SufficientCondition",
    "FeasibleInterval",
    "BLOW_UP_LIMIT",
    "solve_A",
    "solve_A_picard",
    "check_sufficient",
    "feasible_interval",
    "lemma1_feasible_interval",
    "novikov_check",
    "write_A_csv",
]

BLOW_UP_LIMIT = 1e8
SCHEMES = ("trapezoid", "euler")


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    case: Case
    psi: float
    grid: TimeGrid
    A: np.ndarray  # forward time, A[k] = A(k dt); NaN where never reached
    A0: float
    B0: float
    blow_up: bool
    blow_up_time: float | None
    max_sigma2_psi_A: float
    Y: np.ndarray = field(repr=False)  # reversed time, Y[j] = Y(j dt)
    scheme: str = "trapezoid"
    iterations: int | None = None

    def t(self) -> np.ndarray:
        return self.grid.nodes()


def _march(rp: float, coef, extra, base: float, dt: float, n: int,
           scheme: str, floor: float | None):
    """Integrate ``y' = -rp y / s + coef_j ((y + base)^2 + extra_j)`` from ``y(0) = 0``.

    The stiff term is implicit, the quadratic forcing explicit. ``"euler"`` is
    the first-order split step; ``"trapezoid"`` treats the stiff term by the
    trapezoidal rule and the forcing by Heun's predictor-corrector, after a
    single Euler start step (the stiff term is 0/0 at ``s = 0``).

    Returns ``(y, j_fail)``; ``j_fail`` is the first index where ``|y|``
    exceeded :data:`BLOW_UP_LIMIT` (entries from there on are NaN), else None.
    """
    out = np.full(n + 1, np.nan)
    out[0] = 0.0
    ys = [0.0] * (n + 1)
    y = 0.0
    limit = BLOW_UP_LIMIT
    half = 0.5 * dt
    fail = None
    for j in range(n):
        s1 = (j + 1) * dt
        f0 = coef[j] * ((y + base) ** 2 + extra[j])
        if scheme == "euler" or j == 0:
            y = (y + dt * f0) / (1.0 + rp * dt / s1)
        else:
            lin0 = -rp * y / (j * dt)
            yp = (y + dt * f0) / (1.0 + rp * dt / s1)
            f1 = coef[j + 1] * ((yp + base) ** 2 + extra[j + 1])
            y = (y + half * (lin0 + f0 + f1)) / (1.0 + rp * half / s1)
        if floor is not None and y < floor:
            y = floor
        if not (abs(y) <= limit):
            fail = j + 1
            break
        ys[j + 1] = y
    stop = n + 1 if fail is None else fail
    out[:stop] = ys[:stop]
    return out, fail


def _finish(params: BridgeParams, case: Case, psi: float, grid: TimeGrid, Y: np.ndarray,
            fail: int | None, scheme: str, iterations: int | None = None) -> RiccatiSolution:
    n = grid.n_steps
    s = grid.nodes()
    U = s * (1.0 + Y) / (1.0 + params.r)
    A = U[::-1].copy()
    A[-1] = 0.0
    t = s  # same nodes, forward time
    if fail is None:
        B0 = float(np.trapezoid(params.a.on_grid(t) * A, dx=grid.dt))
        m = float(np.max(params.sigma.on_grid(t) ** 2 * psi * A))
        blow_time = None
    else:
        B0 = math.nan
        m = math.inf
        blow_time = 1.0 - fail / n
    A.setflags(write=False)
    Y.setflags(write=False)
    return RiccatiSolution(case=case, psi=psi, grid=grid, A=A, A0=float(A[0]), B0=B0,
                           blow_up=fail is not None, blow_up_time=blow_time,
                           max_sigma2_psi_A=m, Y=Y, scheme=scheme, iterations=iterations)


def _omega2(params: BridgeParams, grid: TimeGrid) -> np.ndarray:
    # omega_s = sigma_{1-s} on the reversed-time nodes
    return params.sigma.on_grid(1.0 - grid.nodes()) ** 2


def solve_A(params: BridgeParams, case: Case | str, psi: float, grid: TimeGrid,
            scheme: str = "trapezoid") -> RiccatiSolution:
    """Solve for ``A`` on ``grid`` and report blow-up instead of raising.

    Blow-up (only possible in the upper case) is declared when the transformed
    variable exceeds ``1e8`` in magnitude or turns non-finite;
    ``blow_up_time`` is the forward time at which that happened.
    """
    validate_params(params)
    case = Case.parse(case)
    psi = check_psi(psi)
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    r = params.r
    q = case.sign * r * psi / (2.0 * (r + 1.0))
    coef = (q * _omega2(params, grid)).tolist()
    extra = [0.0] * grid.n_nodes
    # lower case: U >= 0, i.e. Y >= -1, holds for the exact solution
    floor = -1.0 if case is Case.LOWER else None
    Y, fail = _march(r + 1.0, coef, extra, 1.0, grid.dt, grid.n_steps, scheme, floor)
    return _finish(params, case, psi, grid, Y, fail, scheme)


def solve_A_picard(params: BridgeParams, psi: float, grid: TimeGrid,
                   max_iter: int = 200, tol: float = 1e-10) -> RiccatiSolution:
    """Upper-case ``A`` by successive substitution in the integral form

        Y_s = q s^-(r+1) int_0^s m^(r+1) omega_m^2 (Y_m + 1)^2 dm,

    starting from ``Y = 0``; the integral is a cumulative trapezoid on the grid.
    Raises :class:`NoConvergence` when ``max_iter`` is exhausted or the iterates
    stop being finite.
    """
    validate_params(params)
    psi = check_psi(psi)
    r = params.r
    q = r * psi / (2.0 * (r + 1.0))
    s = grid.nodes()
    w = s ** (r + 1.0)
    wo = w * _omega2(params, grid)
    Y = np.zeros(grid.n_nodes)
    update = math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            integral = cumulative_trapezoid(wo * (Y + 1.0) ** 2, dx=grid.dt, initial=0.0)
            new = np.zeros_like(Y)
            new[1:] = q * integral[1:] / w[1:]
            if not np.all(np.isfinite(new)):
                raise NoConvergence(f"iterates became non-finite after {it} iterations (psi={psi})")
            update = float(np.max(np.abs(new - Y)))
            Y = new
            if update <= tol:
                return _finish(params, Case.UPPER, psi, grid, Y, None, "picard", iterations=it)
    raise NoConvergence(f"no convergence in {max_iter} iterations (psi={psi}, last update {update:.3e})")


@dataclass(frozen=True)
class SufficientCondition:
    holds: bool
    threshold: float


def check_sufficient(params: BridgeParams, psi: float) -> SufficientCondition:
    """Global-existence condition ``sigma_bar^2 psi < threshold``.

    The threshold is the minimum of the five bounds used by the existence
    argument divided by ``sigma_bar^2``; for every ``r > 0`` it equals
    ``r / (2 sigma_bar^2)``.
    """
    sigma_bar = validate_params(params)
    r = params.r
    bound = min(r + 1.0, (r + 1.0) ** 2 / (2.0 * r), 2.0 * (r + 1.0) ** 2 / r,
                (r + 1.0) * (r + 4.0) / (2.0 * (r + 2.0)), r / 2.0)
    threshold = bound / sigma_bar**2
    return SufficientCondition(holds=bool(psi < threshold), threshold=threshold)


@dataclass(frozen=True)
class FeasibleInterval:
    low: float
    high: float
    Q: float

    def contains(self, y: float) -> bool:
        return self.low < y < self.high


def feasible_interval(params: BridgeParams, psi: float) -> FeasibleInterval | None:
    """Open interval of truncation levels ``Ybar`` meeting the four a-priori bounds.

    With ``Q = r sigma_bar^2 psi / ((r+1)(r+2))`` the constraints are

        Ybar > (1 - sqrt(1 - 2Q)) / Q - 1
        Ybar < 1/Q - 1
        Ybar < r / ((r+2) Q) - 1
        Ybar < sqrt(2 (r+1) / ((r+2) Q)) - 1

    Returns None when ``Q >= 1/2`` or the intersection is empty.
    """
    sigma_bar = validate_params(params)
    psi = check_psi(psi)
    r = params.r
    Q = r * sigma_bar**2 * psi / ((r + 1.0) * (r + 2.0))
    if Q == 0.0:  # psi = 0, or small enough to underflow
        return FeasibleInterval(0.0, math.inf, 0.0)
    if Q >= 0.5:
        return None
    root = math.sqrt(1.0 - 2.0 * Q)
    # (1 - root)/Q - 1 rewritten without cancellation for small Q
    low = (1.0 - root) / (1.0 + root)
    high = min(1.0 / Q - 1.0,
               r / ((r + 2.0) * Q) - 1.0,
               math.sqrt(2.0 * (r + 1.0) / ((r + 2.0) * Q)) - 1.0)
    if not low < high:
        return None
    return FeasibleInterval(low, high, Q)


@dataclass(frozen=True, eq=False)
class NovikovReport:
    psi: float
    W: np.ndarray
    Z: np.ndarray
    comparison_holds: bool
    I0: float
    blow_up: bool = False


lemma1_feasible_interval = feasible_interval  # name used by existing callers


def novikov_check(params: BridgeParams, psi: float, grid: TimeGrid,
                  riccati: RiccatiSolution) -> NovikovReport:
    """Solve the exponential-moment auxiliary equation and compare it with ``Y``.

    ``W`` solves ``W' = -(r+1) W / s + q omega^2 (W^2 + (1 + Y)^2)``, ``W_0 = 0``,
    with the same scheme as the Riccati solve; ``Z`` is the Riccati solution's
    ``Y``. The report records whether ``W <= Z + 1`` on every node and the
    resulting bound ``I0 = psi int_0^1 a_{1-s} s W_s / (1+r) ds`` on the log of
    the exponential moment (infinite when ``W`` blows up).
    """
    validate_params(params)
    psi = check_psi(psi)
    if riccati.case is not Case.UPPER:
        raise InconsistentInput("Novikov check needs an upper-case Riccati solution")
    if riccati.blow_up:
        raise InconsistentInput("Riccati solution blew up; nothing to verify")
    if riccati.grid.n_steps != grid.n_steps:
        raise InconsistentInput(
            f"grid has {grid.n_steps} steps but the Riccati solution has {riccati.grid.n_steps}")
    if not math.isclose(riccati.psi, psi, rel_tol=0, abs_tol=1e-15):
        raise InconsistentInput(f"Riccati solution is for psi={riccati.psi}, not {psi}")
    r = params.r
    q = r * psi / (2.0 * (r + 1.0))
    coef = (q * _omega2(params, grid)).tolist()
    Z = np.asarray(riccati.Y)
    extra = ((1.0 + Z) ** 2).tolist()
    scheme = riccati.scheme if riccati.scheme in SCHEMES else "trapezoid"
    W, fail = _march(r + 1.0, coef, extra, 0.0, grid.dt, grid.n_steps, scheme, None)
    if fail is not None:
        holds, I0 = False, math.inf
    else:
        s = grid.nodes()
        holds = bool(np.all(W <= Z + 1.0))
        I0 = float(psi * np.trapezoid(params.a.on_grid(1.0 - s) * s * W / (1.0 + r), dx=grid.dt))
    W.setflags(write=False)
    return NovikovReport(psi=psi, W=W, Z=Z, comparison_holds=holds, I0=I0, blow_up=fail is not None)


def write_A_csv(sol: RiccatiSolution, path: str | Path, max_rows: int = 10001) -> int:
    """Write ``t,A`` rows at a uniform stride, at most ``max_rows`` data rows."""
    if max_rows < 2:
        raise ValueError("max_rows must be >= 2")
    n_nodes = sol.grid.n_nodes
    stride = max(1, math.ceil((n_nodes - 1) / (max_rows - 1)))
    idx = np.arange(0, n_nodes, stride)
    t = sol.grid.nodes()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "A"])
        for k in idx:
            w.writerow([f"{t[k]:.12g}", f"{sol.A[k]:.12g}"])
    return len(idx)
