"""Solver accuracy against the Mehler oracle, and trapped horizon vs resolution.

Writes convergence.csv (h, ds, sup error on |y| ≤ 5) and, with --horizon,
horizon.csv (h, ds, s reached by the search within the budget).
"""

import argparse
from pathlib import Path

import numpy as np

from complex_heat_blowup.decomposition import ShrinkingParams
from complex_heat_blowup.io import write_csv
from complex_heat_blowup.kernel import apply_semigroup
from complex_heat_blowup.shooting import search
from complex_heat_blowup.solver import Field, SolverConfig, evolve


def free_error(h: float, ds: float, psi: float = 0.5) -> float:
    cfg = SolverConfig(ds=ds, h=h, ymax=40.0, cadence=ds, potential=False, nonlinear=False, residual=False)
    y = cfg.grid(1.0)
    g = lambda x: np.exp(-x * x / 8)  # noqa: E731
    rec = evolve(Field(y, g(y), np.zeros_like(y)), 1.0, 1.0 + psi, config=cfg)
    ref = apply_semigroup(psi, g, y).values
    return float(np.max(np.abs(rec.fields[-1].q - ref)[np.abs(y) <= 5]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("convergence_out"))
    ap.add_argument("--horizon", type=float, help="also search to this s at each resolution")
    ap.add_argument("--budget", type=int, default=120)
    args = ap.parse_args()

    rows = []
    prev = None
    for k in range(4):
        h, ds = 0.2 / 2**k, 0.04 / 2**k
        err = free_error(h, ds)
        rate = prev / err if prev else float("nan")
        print(f"h={h:<8g} ds={ds:<8g} err={err:.3e} ratio={rate:.2f}")
        rows.append([h, ds, err, rate])
        prev = err
    write_csv(args.out / "convergence.csv", ["h", "ds", "sup_error", "ratio"], rows)

    if args.horizon:
        sp = ShrinkingParams()
        rows = []
        for h, ds in [(0.1, 0.02), (0.05, 0.01)]:
            res = search(sp, args.horizon, args.budget, SolverConfig(h=h, ds=ds, K0=sp.K0), margin=0.0)
            best = max(r["s_exit"] for r in res.log)
            print(f"h={h} ds={ds}: {res.status}, best s={best:.2f} after {res.evaluations} runs")
            rows.append([h, ds, res.status, best, res.evaluations])
        write_csv(args.out / "horizon.csv", ["h", "ds", "status", "s_reached", "evaluations"], rows)


if __name__ == "__main__":
    main()
