"""Sensitivity of a trapped trajectory to the domain truncation.

Reruns fixed parameters with several ymax values and both boundary
conditions and reports the largest change in the normalized expanding
modes and in s²q̃2 relative to the reference run.
"""

import argparse
from pathlib import Path

import numpy as np

from complex_heat_blowup.decomposition import ShrinkingParams
from complex_heat_blowup.io import write_csv
from complex_heat_blowup.shooting import ShootParams, mode_series, run_trajectory, search
from complex_heat_blowup.solver import SolverConfig, default_ymax


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s-max", type=float, default=30.0)
    ap.add_argument("--d0", type=float)
    ap.add_argument("--dt0", type=float)
    ap.add_argument("--out", type=Path, default=Path("ymax_out"))
    args = ap.parse_args()

    sp = ShrinkingParams()
    if args.d0 is None or args.dt0 is None:
        res = search(sp, args.s_max, margin=5.0)
        p = res.params
        print(f"searched: d0={p.d0:.17g} dt0={p.dt0:.17g} ({res.status})")
    else:
        p = ShootParams(d0=args.d0, dt0=args.dt0)

    base_ymax = default_ymax(args.s_max, sp.K0)
    ref = None
    rows = []
    for bc in ("dirichlet", "neumann"):
        for factor in (0.75, 1.0, 1.5):
            ymax = factor * base_ymax
            if ymax < 2 * sp.K0 * np.sqrt(args.s_max):
                continue
            rec = run_trajectory(p, sp, args.s_max, SolverConfig(ymax=ymax, bc=bc), keep_fields=False)
            m = mode_series(rec)
            series = np.column_stack([m["s"] ** 2 * m["q0"], m["s"] ** 2 * m["qt2"]])
            if ref is None:
                ref = series
            n = min(len(ref), len(series))
            diff = float(np.max(np.abs(series[:n] - ref[:n])))
            print(f"bc={bc:9s} ymax={ymax:7.2f} exit={rec.exit.mode}@{rec.exit.s_exit:.2f} max change={diff:.3e}")
            rows.append([bc, ymax, rec.exit.mode, rec.exit.s_exit, diff])
    write_csv(args.out / "ymax_sensitivity.csv", ["bc", "ymax", "exit_mode", "s_exit", "max_change"], rows)


if __name__ == "__main__":
    main()
