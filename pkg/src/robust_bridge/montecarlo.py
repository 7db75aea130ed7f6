"""Path simulation of the benchmark and worst-case bridges.

Scheme (per path, step ``dt``, rate ``lam_k = r / (1 - t_k)``)::

    x_{k+1} = (x_k + a_k dt + sigma_k sqrt(lam_k x_k^+) dB_k) / (1 + dt lam_{k+1} c_{k+1})
    X_k     = max(x_k, 0)

i.e. full truncation: the auxiliary state ``x`` may dip below zero, only its
positive part enters the square root and every reported quantity. The
reversion is implicit, so the exploding rate near ``t = 1`` only damps.
``c = 1`` for the benchmark and ``1 -/+ sigma^2 psi A`` for the upper/lower
worst case. Paths are advanced up to ``t = 1 - epsilon`` and pinned to 0 at
``t = 1``.

Each path owns a counter-based Philox stream keyed by ``seed`` with the path
index in the high counter words. Each uniform draw is mapped to the midpoint of
its 2^-53 cell and through the inverse normal CDF, so an ensemble is
bit-identical whatever the block size or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._parallel import worker_count
from .core import BridgeParams, Case, TimeGrid, check_psi, validate_params
from .errors import BenchmarkEnsemble, BlowUpInput, InconsistentInput, MissingRiccati
from .riccati import RiccatiSolution

__all__ = [
    "PathEnsemble",
    "EntropyEstimate",
    "PinningDiagnostics",
    "simulate",
    "estimate_entropy",
    "pinning_diagnostics",
    "path_stream",
    "write_paths_csv",
    "write_trace_csv",
]

_TIME_CHUNK = 512


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    case: Case | None  # None for the benchmark bridge
    psi: float
    n_paths: int
    seed: int
    integrals: np.ndarray
    entropies: np.ndarray  # empty for the benchmark and for psi = 0
    min_value: float
    end_values: np.ndarray
    grid: TimeGrid
    epsilon: float
    trace_t: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    traces: np.ndarray = field(default_factory=lambda: np.empty((0, 0)), repr=False)

    @property
    def is_benchmark(self) -> bool:
        return self.case is None

    def mean_integral(self) -> tuple[float, float]:
        """Sample mean of the path integrals and its standard error."""
        return _mean_se(self.integrals)


@dataclass(frozen=True)
class EntropyEstimate:
    mean: float
    std_error: float


@dataclass(frozen=True)
class PinningDiagnostics:
    max_end_value: float
    mean_end_value: float


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x)
    if x.size == 0:
        return math.nan, math.nan
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return float(np.mean(x)), se


def path_stream(seed: int, path_index: int) -> np.random.Generator:
    """The random stream of one path: Philox keyed by ``seed``, counter offset by path."""
    return np.random.Generator(np.random.Philox(key=seed, counter=int(path_index) << 128))


def _parse_case(case) -> Case | None:
    if case is None or (isinstance(case, str) and case.lower() == "benchmark"):
        return None
    return Case.parse(case)


def simulate(params: BridgeParams, case: Case | str | None, psi: float,
             riccati: RiccatiSolution | None, n_paths: int, seed: int, grid: TimeGrid,
             epsilon: float = 1e-4, *, block_size: int = 4096, workers: int | None = None,
             trace_paths: int = 0, trace_points: int = 1001) -> PathEnsemble:
    """Simulate ``n_paths`` bridges and accumulate per-path integral and entropy.

    ``case=None`` (or ``"benchmark"``) simulates the undistorted bridge and
    ignores ``psi``/``riccati``. The worst-case drifts need the Riccati solution
    at the same ``psi``; it is linearly interpolated onto ``grid``.
    ``trace_paths`` keeps decimated trajectories of the first few paths.
    When ``epsilon`` is below the step size the cut-off is the last interior node.
    """
    validate_params(params)
    case = _parse_case(case)
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon!r}")

    n, dt = grid.n_steps, grid.dt
    t = grid.nodes()
    # cut-off node: nearest to 1 - epsilon, but never the pinned node itself
    k_end = min(int(round((1.0 - epsilon) * n)), n - 1)
    if k_end < 1:
        raise ValueError(f"epsilon={epsilon} leaves no interior steps on a {n}-step grid")

    if case is None:
        psi = 0.0
        A = np.zeros(n + 1)
    else:
        psi = check_psi(psi)
        if riccati is None:
            raise MissingRiccati(f"{case.value} case needs a Riccati solution")
        if riccati.blow_up:
            raise BlowUpInput(f"Riccati solution at psi={riccati.psi} blew up")
        if riccati.case is not case or not math.isclose(riccati.psi, psi, rel_tol=1e-12, abs_tol=0):
            raise InconsistentInput(
                f"Riccati solution is ({riccati.case.value}, psi={riccati.psi}), "
                f"not ({case.value}, psi={psi})")
        A = np.interp(t, riccati.t(), riccati.A)

    a = params.a.on_grid(t)
    sigma = params.sigma.on_grid(t)
    lam = np.zeros(n + 1)
    lam[:n] = params.r / (1.0 - t[:n])
    sign = 0 if case is None else case.sign
    c = 1.0 - sign * sigma**2 * psi * A
    den = 1.0 + dt * lam * c
    drift = a * dt
    vol = sigma * np.sqrt(lam * dt)
    ent_w = 0.5 * (A * sigma * psi) ** 2 * lam * dt
    track_entropy = case is not None and psi > 0.0

    n_trace = min(max(int(trace_paths), 0), n_paths)
    stride = max(1, math.ceil(k_end / max(trace_points - 2, 1)))
    trace_idx = np.arange(0, k_end + 1, stride)
    if trace_idx[-1] != k_end:
        trace_idx = np.append(trace_idx, k_end)

    from . import _kernels  # compiled on first use, cached on disk

    inv_den = 1.0 / den
    trace_col = np.full(n + 1, -1, dtype=np.int64)
    trace_col[trace_idx[:-1]] = np.arange(trace_idx.size - 1)

    def run_block(start: int) -> tuple:
        count = min(block_size, n_paths - start)
        gens = [path_stream(seed, p) for p in range(start, start + count)]
        x = np.zeros(count)
        total = np.zeros(count)
        entropy = np.zeros(count)
        keep = min(n_trace - start, count) if start < n_trace else 0
        traces = np.zeros((keep, trace_idx.size + 1))
        for k0 in range(0, k_end, _TIME_CHUNK):
            k1 = min(k_end, k0 + _TIME_CHUNK)
            u = np.empty((count, k1 - k0))
            for i, g in enumerate(gens):
                g.random(out=u[i])
            _kernels.advance(u, k0, x, total, entropy, drift, vol, inv_den, ent_w,
                             track_entropy, trace_col, traces)
        xp = np.maximum(x, 0.0)
        # trapezoid over [0, 1 - eps] (X_0 = 0), then linear decay to the pin at t = 1
        integral = dt * (total - 0.5 * xp) + 0.5 * (n - k_end) * dt * xp
        if keep:
            traces[:, -2] = xp[:keep]  # k_end
            traces[:, -1] = 0.0
        return integral, entropy, xp, traces if keep else None

    starts = list(range(0, n_paths, block_size))
    nw = min(worker_count(workers), len(starts))
    if nw <= 1:
        blocks = [run_block(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            blocks = list(pool.map(run_block, starts))

    integrals = np.concatenate([b[0] for b in blocks])
    # no distortion, nothing recorded: psi = 0 behaves like the benchmark for entropy
    entropies = np.concatenate([b[1] for b in blocks]) if track_entropy else np.empty(0)
    end_values = np.concatenate([b[2] for b in blocks])
    # every path starts at X_0 = 0 and reported values are truncated at 0
    min_value = min(0.0, float(end_values.min()))
    if n_trace:
        traces = np.vstack([b[3] for b in blocks if b[3] is not None])
        trace_t = np.append(t[trace_idx], 1.0)
    else:
        traces, trace_t = np.empty((0, 0)), np.empty(0)
    for arr in (integrals, entropies, end_values, traces, trace_t):
        arr.setflags(write=False)
    return PathEnsemble(case=case, psi=psi, n_paths=n_paths, seed=seed, integrals=integrals,
                        entropies=entropies, min_value=min_value, end_values=end_values,
                        grid=grid, epsilon=epsilon, trace_t=trace_t, traces=traces)


def estimate_entropy(ens: PathEnsemble) -> EntropyEstimate:
    """Sample mean and standard error of the per-path relative entropy."""
    if ens.is_benchmark or ens.entropies.size == 0:
        raise BenchmarkEnsemble("benchmark and psi = 0 ensembles carry no entropy")
    mean, se = _mean_se(ens.entropies)
    return EntropyEstimate(mean, se)


def pinning_diagnostics(ens: PathEnsemble) -> PinningDiagnostics:
    """Size of the paths at the cut-off time ``1 - epsilon``."""
    ends = np.asarray(ens.end_values)
    return PinningDiagnostics(float(ends.max()), float(ends.mean()))


def write_paths_csv(ens: PathEnsemble, path: str | Path) -> None:
    ent = ens.entropies if ens.entropies.size else None
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "integral", "entropy", "end_value"])
        for i in range(ens.n_paths):
            e = f"{ent[i]:.12g}" if ent is not None else ""
            w.writerow([i, f"{ens.integrals[i]:.12g}", e, f"{ens.end_values[i]:.12g}"])


def write_trace_csv(ens: PathEnsemble, path_index: int, path: str | Path) -> None:
    """Decimated ``t,x`` trajectory of one traced path."""
    if not 0 <= path_index < ens.traces.shape[0]:
        raise IndexError(f"path {path_index} was not traced (have {ens.traces.shape[0]})")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x"])
        for tt, xx in zip(ens.trace_t, ens.traces[path_index]):
            w.writerow([f"{tt:.12g}", f"{xx:.12g}"])
