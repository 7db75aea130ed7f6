"""Write CSV data behind the bound, A-profile and entropy figures.

Produces, in ``--out-dir``:
  sweep_upper.csv / sweep_lower.csv   bound, kappa and count ratio against psi
  A_upper_psi*.csv / A_lower_psi*.csv  decimated t,A profiles
Plotting is left to external tools.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from robust_bridge import DEFAULT_PARAMS, Case, TimeGrid, solve_A, sweep_psi
from robust_bridge.bounds import write_sweep_csv
from robust_bridge.riccati import write_A_csv


def main():
    ap = argparse.ArgumentParser(description="CSV data for the bound/entropy figures")
    ap.add_argument("--n-steps", type=int, default=100_000)
    ap.add_argument("--out-dir", type=Path, default=Path("results/figures"))
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    grid = TimeGrid(args.n_steps)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    upper = np.round(np.arange(0.0, 16.0 + 1e-9, 0.1), 10)
    lower = np.concatenate([np.arange(0.0, 10.0, 0.5), np.arange(10.0, 401.0, 10.0)])
    for case, psis, name in ((Case.UPPER, upper, "sweep_upper.csv"),
                             (Case.LOWER, lower, "sweep_lower.csv")):
        res = sweep_psi(DEFAULT_PARAMS, case, psis.tolist(), grid, workers=args.workers)
        write_sweep_csv(res, out / name)
        blown = [r.psi for r in res if r.blow_up]
        note = f", first blow-up at psi={blown[0]:g}" if blown else ""
        print(f"{name}: {len(res)} rows{note}")

    for case, psis in ((Case.UPPER, (1, 5, 10, 15)), (Case.LOWER, (1, 10, 100, 400))):
        for psi in psis:
            sol = solve_A(DEFAULT_PARAMS, case, psi, grid)
            write_A_csv(sol, out / f"A_{case.value}_psi{psi}.csv", max_rows=1001)
    print(f"written to {out}")


if __name__ == "__main__":
    main()
