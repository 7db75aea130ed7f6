"""Monte Carlo cross-checks of the moment-ODE values and the entropy identity.

For the benchmark and each worst case, compares the ensemble mean of the
time integral with the ODE value and the mean per-path entropy with kappa,
reporting z-scores (|estimate - target| / standard error).
"""

from __future__ import annotations

import argparse
import time

from robust_bridge import (
    DEFAULT_PARAMS,
    Case,
    TimeGrid,
    compute_bound,
    compute_F,
    estimate_entropy,
    pinning_diagnostics,
    simulate,
    solve_A,
)


def main():
    ap = argparse.ArgumentParser(description="Monte Carlo oracles")
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--n-steps", type=int, default=10_000, help="simulation grid")
    ap.add_argument("--ode-steps", type=int, default=1_000_000, help="reference ODE grid")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epsilon", type=float, default=1e-4)
    args = ap.parse_args()
    grid, fine = TimeGrid(args.n_steps), TimeGrid(args.ode_steps)

    F = compute_F(DEFAULT_PARAMS, fine)
    t0 = time.perf_counter()
    ens = simulate(DEFAULT_PARAMS, None, 0.0, None, args.paths, args.seed, grid, args.epsilon)
    mean, se = ens.mean_integral()
    pin = pinning_diagnostics(ens)
    print(f"benchmark     mean {mean:.6g} se {se:.2e} F {F:.6g} z {abs(mean - F) / se:5.2f}"
          f"  min X {ens.min_value:g}  mean end {pin.mean_end_value:.2e}"
          f"  ({time.perf_counter() - t0:.0f}s)")

    for case, psi in ((Case.LOWER, 5.0), (Case.LOWER, 100.0), (Case.UPPER, 5.0), (Case.UPPER, 10.0)):
        t0 = time.perf_counter()
        ref = compute_bound(DEFAULT_PARAMS, case, psi, fine, F=F)
        ric = solve_A(DEFAULT_PARAMS, case, psi, grid)
        ens = simulate(DEFAULT_PARAMS, case, psi, ric, args.paths, args.seed + 1, grid, args.epsilon)
        mean, se = ens.mean_integral()
        ent = estimate_entropy(ens)
        zm = abs(mean - ref.distorted_integral) / se
        ze = abs(ent.mean - ref.kappa) / ent.std_error
        print(f"{case.value:5s} psi={psi:<5g} mean {mean:.6g} ODE {ref.distorted_integral:.6g} z {zm:5.2f}"
              f"  entropy {ent.mean:.5g} kappa {ref.kappa:.5g} z {ze:5.2f}"
              f"  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
