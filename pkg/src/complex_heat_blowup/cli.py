"""Command-line entry point: basis-check | simulate | shoot | verify.

Exit codes: 0 pass, 1 property failure, 2 numerical divergence, 3 search
incomplete, 64 usage, 66 missing input.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, load_config
from .shooting import run_trajectory, sample_exits, search
from .verify import basis_suite, run_checks, write_report

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_DIVERGED = 2
EXIT_INCOMPLETE = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

log = logging.getLogger("complex_heat_blowup")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="seed for random sampling phases")
    p.add_argument("--workers", type=int, help="parallel trajectory evaluations")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="complex-heat-blowup", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("basis-check", help="Hermite and Mehler-kernel property suite")
    _common(p)
    p.add_argument("--verbose", action="store_true", help="print every residual")

    p = sub.add_parser("simulate", help="evolve one trajectory and emit CSVs")
    _common(p)
    p.add_argument("--resume", type=Path, metavar="DIR", help="continue from the last snapshot in DIR")

    p = sub.add_parser("shoot", help="search for trapped initial-data parameters")
    _common(p)

    p = sub.add_parser("verify", help="profile checks on a stored trajectory")
    _common(p)
    p.add_argument("trajectory", type=Path, help="trajectory directory written by simulate/shoot")
    return parser


def _resolve(args, base: RunConfig | None = None) -> RunConfig:
    if args.config is not None and not args.config.is_file():
        raise FileNotFoundError(f"config file {args.config} not found")
    cfg = load_config(args.config, args.set, base=base)
    extra = {}
    if args.seed is not None:
        extra["seed"] = args.seed
    if args.workers is not None:
        extra["workers"] = args.workers
    return replace(cfg, **extra).validate() if extra else cfg


def cmd_basis_check(args) -> int:
    for prop in basis_suite():
        if args.verbose:
            status = "pass" if prop.passed else "FAIL"
            print(f"{prop.name:20s} residual={prop.residual:.3e} tol={prop.tol:.0e} {status}")
        if not prop.passed:
            print(f"property failed: {prop.name} (residual {prop.residual:.3e} > {prop.tol:.0e})")
            return EXIT_FAIL
    print("basis-check: all properties pass")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.resume is not None:
        return _resume(args)
    cfg = _resolve(args)
    out = args.out or Path("simulate_out")
    record = run_trajectory(
        cfg.shoot_params(), cfg.shrinking(), cfg.horizon, cfg.solver(), stop_on_exit=False
    )
    io.write_trajectory(out, record, cfg)
    return _report_run(record, out)


def _report_run(record, out: Path) -> int:
    ev = record.exit
    print(f"s_end={record.s_end:.4f} status={record.status} first_exit={ev.mode}@{ev.s_exit:.4f} -> {out}")
    if record.status == "diverged":
        print(f"solver diverged: {record.message}")
        return EXIT_DIVERGED
    return EXIT_OK


def _resume(args) -> int:
    src = args.resume
    if not (src / "config.txt").is_file() or not io.list_snapshots(src):
        print(f"nothing to resume in {src}")
        return EXIT_NOINPUT
    base = load_config(src / "config.txt")
    cfg = _resolve(args, base=base)
    out = args.out or src
    if out.resolve() != src.resolve():
        shutil.copytree(src, out, dirs_exist_ok=True)
    s_start, state = io.read_snapshot(io.list_snapshots(out)[-1])
    if not cfg.horizon > s_start + 1e-9:
        print(f"trajectory already reaches s={s_start:.4f} >= s_max={cfg.horizon:.4f}")
        return EXIT_OK
    previous = [m for m in io.read_modes(out / "modes.csv") if m.s <= s_start + 1e-9]
    old_exit, _ = io.read_exit(out / "exit.csv")
    record = run_trajectory(
        cfg.shoot_params(), cfg.shrinking(), cfg.horizon, cfg.solver(),
        stop_on_exit=False, initial=state, s_start=s_start,
    )  # fmt: skip
    (out / "config.txt").write_text(cfg.to_text())
    io.write_modes(out / "modes.csv", previous + record.modes[1:])
    if old_exit.mode not in ("none",):
        record.exit = old_exit
    io.write_exit(out / "exit.csv", record.exit, record.status)
    for k, (s, f) in enumerate(zip(record.s, record.fields)):
        if k and (k % cfg.snapshot_stride == 0 or k == len(record.s) - 1):
            io.write_snapshot(out / "snapshots", f, s)
    return _report_run(record, out)


def cmd_shoot(args) -> int:
    cfg = _resolve(args)
    out = args.out or Path("shoot_out")
    out.mkdir(parents=True, exist_ok=True)
    sp = cfg.shrinking()
    result = search(
        sp, cfg.horizon, cfg.budget, cfg.solver(), workers=cfg.workers, margin=cfg.margin
    )
    io.write_search_log(out / "search_log.csv", result.log)
    best_cfg = replace(cfg, **asdict(result.params))
    io.write_trajectory(out / "best", result.record, best_cfg)
    ev = result.record.exit
    io.write_csv(
        out / "summary.csv",
        ["status", "evaluations", "d0", "d1", "dt0", "dt1", "s_end", "exit_mode"],
        [[result.status, result.evaluations, *result.params.as_array(), result.record.s_end, ev.mode]],
    )
    if cfg.draws:
        draws = sample_exits(sp, cfg.draws, cfg.horizon, cfg.seed, cfg.solver(), workers=cfg.workers)
        io.write_csv(
            out / "exits.csv",
            ["draw", "d0", "d1", "dt0", "dt1", "s_exit", "mode", "sign", "crossing_rate"],
            ([i, *p.as_array(), e.s_exit, e.mode, e.sign, e.crossing_rate] for i, (p, e) in enumerate(draws)),
        )
    print(
        f"search {result.status} after {result.evaluations} evaluations: "
        f"d0={result.params.d0:.17g} d1={result.params.d1:.17g} "
        f"dt0={result.params.dt0:.17g} dt1={result.params.dt1:.17g} "
        f"trapped to s={result.record.s_end:.4f} (target {cfg.horizon:.4f})"
    )
    return EXIT_OK if result.trapped else EXIT_INCOMPLETE


def cmd_verify(args) -> int:
    try:
        record, stored = io.load_trajectory(args.trajectory)
    except FileNotFoundError as exc:
        print(f"missing trajectory: {exc}")
        return EXIT_NOINPUT
    cfg = _resolve(args, base=stored)
    results = run_checks(record, R=cfg.R, eta0=cfg.eta0)
    out = args.out or args.trajectory / "report"
    write_report(out, results)
    for r in results:
        line = f"{r.name:18s} {'pass' if r.passed else 'FAIL'}"
        if r.note:
            line += f"  ({r.note})"
        print(line)
    ok = all(r.passed for r in results)
    print(f"summary: {'pass' if ok else 'fail'} -> {out / 'summary.csv'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "basis-check": cmd_basis_check,
    "simulate": cmd_simulate,
    "shoot": cmd_shoot,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except ValueError as exc:
        # inconsistent settings, e.g. a grid narrower than the cutoff support
        print(f"invalid setup: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
