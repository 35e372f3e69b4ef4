"""Smallest starting time s0 for which the search traps a window of given length.

For each s0 the default constants are kept and the search targets s0 + window
(refined to s0 + window + margin). Results go to scan_s0.csv.
"""

import argparse
import time
from pathlib import Path

from complex_heat_blowup.decomposition import ShrinkingParams
from complex_heat_blowup.io import write_csv
from complex_heat_blowup.shooting import search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s0", type=float, nargs="+", default=[8.0, 10.0, 12.0, 15.0, 20.0])
    ap.add_argument("--window", type=float, default=10.0)
    ap.add_argument("--margin", type=float, default=5.0)
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--out", type=Path, default=Path("scan_s0_out"))
    args = ap.parse_args()

    rows = []
    for s0 in args.s0:
        sp = ShrinkingParams(s0=s0)
        t0 = time.perf_counter()
        res = search(sp, s0 + args.window, args.budget, margin=args.margin)
        ev = res.record.exit
        elapsed = time.perf_counter() - t0
        print(
            f"s0={s0:g}: {res.status} evals={res.evaluations} reached s={res.record.s_end:.2f} "
            f"exit={ev.mode} d0={res.params.d0:.6g} dt0={res.params.dt0:.6g} t={elapsed:.0f}s"
        )
        rows.append([s0, res.status, res.evaluations, res.record.s_end, ev.mode, res.params.d0, res.params.dt0])
    write_csv(
        args.out / "scan_s0.csv",
        ["s0", "status", "evaluations", "s_reached", "exit_mode", "d0", "dt0"],
        rows,
    )


if __name__ == "__main__":
    main()
