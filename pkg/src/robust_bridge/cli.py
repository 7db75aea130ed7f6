"""Command-line interface: ``robust-bridge <command> [options]``.

Exit codes: 0 success, 1 invalid input or I/O failure, 2 Riccati blow-up
(the result file is still written where the command produces one).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bounds, calibration, montecarlo, riccati
from .core import DEFAULT_PARAMS, BridgeParams, Case, TimeGrid, load_params
from .errors import BridgeError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOW_UP = 2

DEFAULT_STEPS = 1_000_000
FAST_STEPS = 100_000
SIM_STEPS = 10_000
FIT_STEPS = 10_000

TABLE1_PSI = (5.0, 10.0, 50.0, 100.0, 400.0)
TABLE2_PSI = (5.0, 10.0, 13.0, 14.0, 15.0)
TABLE_HEADER = ["psi", "kappa", "count_ratio"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for blow-up here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    params_file: Path | None
    n_steps: int = DEFAULT_STEPS
    epsilon: float = 1e-4
    seed: int = 0
    out: Path | None = None

    def __post_init__(self):
        if self.n_steps < 10:
            raise UsageError(f"--n-steps must be >= 10, got {self.n_steps}")
        if not 0.0 < self.epsilon < 0.1:
            raise UsageError(f"--epsilon must be in (0, 0.1), got {self.epsilon}")

    def params(self) -> BridgeParams:
        return DEFAULT_PARAMS if self.params_file is None else load_params(self.params_file)

    def grid(self) -> TimeGrid:
        return TimeGrid(self.n_steps)


def _config(args, default_steps: int = DEFAULT_STEPS) -> RunConfig:
    n = args.n_steps
    if n is None:
        n = FAST_STEPS if getattr(args, "fast", False) and default_steps > FAST_STEPS else default_steps
    return RunConfig(params_file=args.params, n_steps=n,
                     epsilon=getattr(args, "epsilon", 1e-4), seed=getattr(args, "seed", 0),
                     out=getattr(args, "out", None))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _g(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# commands


def cmd_bound(args) -> int:
    cfg = _config(args)
    params, grid = cfg.params(), cfg.grid()
    res = bounds.compute_bound(params, args.case, args.psi, grid)
    bounds.write_sweep_csv([res], cfg.out)
    if args.a_out is not None:
        riccati.write_A_csv(res.riccati, args.a_out)
    if res.blow_up:
        print(f"{res.case.value} psi={_g(res.psi)}: Riccati solution blew up "
              f"at t={res.riccati.blow_up_time:.6g}", file=sys.stderr)
        return EXIT_BLOW_UP
    print(f"{res.case.value} psi={_g(res.psi)}: bound={res.bound_value:.6g} "
          f"kappa={res.kappa:.6g} count_ratio={res.count_ratio:.6g}")
    return EXIT_OK


def _write_table(results, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(TABLE_HEADER)
        for res in results:
            w.writerow([_g(res.psi), _g(res.kappa), _g(res.count_ratio)])


def cmd_tables(args) -> int:
    cfg = _config(args)
    params, grid = cfg.params(), cfg.grid()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    for name, case, psis in (("table1.csv", Case.LOWER, TABLE1_PSI),
                             ("table2.csv", Case.UPPER, TABLE2_PSI)):
        results = bounds.sweep_psi(params, case, psis, grid)
        _write_table(results, out_dir / name)
        for res in results:
            print(f"{case.value:5s} psi={res.psi:<6g} kappa={res.kappa:<12.6g} "
                  f"count_ratio={res.count_ratio:.6g}")
        if any(res.blow_up for res in results):
            code = EXIT_BLOW_UP
    return code


def _psi_range(lo: float, hi: float, step: float) -> list[float]:
    if not step > 0:
        raise UsageError("--psi-step must be > 0")
    if hi < lo:
        raise UsageError("--psi-max must be >= --psi-min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    psis = _psi_range(args.psi_min, args.psi_max, args.psi_step)
    results = bounds.sweep_psi(cfg.params(), args.case, psis, cfg.grid())
    bounds.write_sweep_csv(results, cfg.out)
    first = next((res.psi for res in results if res.blow_up), None)
    msg = f"{len(results)} values of psi written to {cfg.out}"
    if first is not None:
        msg += f"; first blow-up at psi={_g(first)}"
    print(msg)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args, default_steps=SIM_STEPS)
    params, grid = cfg.params(), cfg.grid()
    case = None if args.case == "benchmark" else Case.parse(args.case)
    ric = None
    if case is not None:
        ric = riccati.solve_A(params, case, args.psi, grid)
        if ric.blow_up:
            print(f"{case.value} psi={_g(args.psi)}: Riccati solution blew up; nothing to simulate",
                  file=sys.stderr)
            return EXIT_BLOW_UP
    ens = montecarlo.simulate(params, case, args.psi, ric, args.paths, cfg.seed, grid,
                              cfg.epsilon, trace_paths=1 if args.trace_out else 0)
    if cfg.out is not None:
        montecarlo.write_paths_csv(ens, cfg.out)
    if args.trace_out is not None:
        montecarlo.write_trace_csv(ens, 0, args.trace_out)
    mean, se = ens.mean_integral()
    label = "benchmark" if case is None else f"{case.value} psi={_g(ens.psi)}"
    line = f"{label}: paths={ens.n_paths} mean_integral={mean:.6g} se={se:.3g}"
    if case is not None and ens.psi > 0:
        ent = montecarlo.estimate_entropy(ens)
        line += f" entropy={ent.mean:.6g} entropy_se={ent.std_error:.3g}"
    pin = montecarlo.pinning_diagnostics(ens)
    line += f" min_value={ens.min_value:.3g} max_end_value={pin.max_end_value:.3g}"
    print(line)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _config(args)
    params = cfg.params()
    psi = args.psi
    suff = riccati.check_sufficient(params, psi)
    print(f"sufficient: {'yes' if suff.holds else 'no'} (threshold {suff.threshold:.3g})")
    iv = riccati.feasible_interval(params, psi)
    if iv is None:
        print("feasible interval: none (a-priori bounds infeasible)")
    else:
        print(f"feasible interval: ({iv.low:.6g}, {iv.high:.6g}) Q={iv.Q:.6g}")
    grid = cfg.grid()
    sol = riccati.solve_A(params, Case.UPPER, psi, grid)
    if sol.blow_up:
        print(f"novikov: not evaluated (upper Riccati solution blows up at t={sol.blow_up_time:.6g})")
        return EXIT_BLOW_UP
    rep = riccati.novikov_check(params, psi, grid, sol)
    print(f"novikov: comparison {'holds' if rep.comparison_holds else 'fails'}, I0={rep.I0:.6g}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args, default_steps=FIT_STEPS)
    series = calibration.ingest(args.data, args.mode)
    emp = calibration.empirical_moments(series, args.bins)
    fit = calibration.fit_constants(emp, cfg.params(), cfg.grid())
    calibration.write_fit_csv(fit, cfg.out)
    p = fit.params
    print(f"fit over {fit.n_bins_used} bins ({series.n_days} days, equal mean/std weights): "
          f"a={p.a.constant:.6g} r={p.r:.6g} sigma={p.sigma.constant:.6g} "
          f"objective={fit.objective:.6g}")
    if not fit.identifiable:
        print("warning: data are identically zero; r and sigma are not identifiable",
              file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(n_steps_help: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--params", type=Path, default=None,
                   help="key=value parameter file (default: the reference constants)")
    p.add_argument("--n-steps", type=int, default=None, help=n_steps_help)
    p.add_argument("--fast", action="store_true", help=f"use {FAST_STEPS} steps unless --n-steps is given")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-bridge",
                     description="Robust bounds, simulation and calibration for a CIR bridge.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ode = _common(f"time steps (default {DEFAULT_STEPS})")

    p = sub.add_parser("bound", parents=[ode], help="one bound, its entropy and count ratio")
    p.add_argument("--case", choices=["lower", "upper"], required=True)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--a-out", type=Path, default=None, help="also write the t,A curve")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("tables", parents=[ode], help="regenerate the count-ratio tables")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sweep", parents=[ode], help="bounds over a psi range")
    p.add_argument("--case", choices=["lower", "upper"], required=True)
    p.add_argument("--psi-min", type=float, default=0.0)
    p.add_argument("--psi-max", type=float, required=True)
    p.add_argument("--psi-step", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[_common(f"time steps (default {SIM_STEPS})")],
                       help="Monte Carlo ensemble of the benchmark or worst-case bridge")
    p.add_argument("--case", choices=["benchmark", "lower", "upper"], required=True)
    p.add_argument("--psi", type=float, default=0.0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--out", type=Path, default=None, help="per-path CSV")
    p.add_argument("--trace-out", type=Path, default=None, help="t,x trajectory of path 0")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", parents=[ode], help="existence and Novikov diagnostics at psi")
    p.add_argument("--psi", type=float, required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("calibrate", parents=[_common(f"time steps of the fit (default {FIT_STEPS})")],
                       help="fit constant a, r, sigma to binned count moments")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--mode", choices=["raw", "normalized"], default="normalized")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BridgeError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
