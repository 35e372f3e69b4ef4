"""CSV emission and reloading of trajectories.

A trajectory directory holds

    config.txt              resolved RunConfig
    modes.csv               one row per observer tick
    exit.csv                first exit from the shrinking set (or "none")
    snapshots/snap_s*.csv   y, q, qt every ``snapshot_stride`` ticks

Floats are written with 17 significant digits, so a reloaded snapshot is
bit-identical to the state that was written.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .decomposition import ShrinkingParams
from .shooting import ExitEvent, ModeSample
from .solver import Field, TrajectoryRecord

USAGE_KEYS = (
    "q0", "q1", "q2", "qminus", "qe",
    "qt0", "qt1", "qt2", "qtminus", "qte",
)  # fmt: skip
MODE_HEADER = (
    ["s", "q0", "q1", "q2", "qt0", "qt1", "qt2"]
    + [f"u_{k}" for k in USAGE_KEYS]
    + ["worst", "member"]
)
EXIT_HEADER = ["s_exit", "mode", "sign", "crossing_rate", "status"]
SEARCH_HEADER = ["eval_id", "d0", "d1", "dt0", "dt1", "s_exit", "exit_mode", "exit_sign"]


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def mode_rows(samples: list[ModeSample]):
    for m in samples:
        yield [m.s, *m.q, *m.qt, *(m.usage[k] for k in USAGE_KEYS), m.worst, m.member]


def write_modes(path, samples: list[ModeSample], append: bool = False) -> Path:
    path = Path(path)
    if append and path.exists():
        with path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in mode_rows(samples):
                w.writerow([fmt(v) for v in row])
        return path
    return write_csv(path, MODE_HEADER, mode_rows(samples))


def read_modes(path) -> list[ModeSample]:
    out = []
    for row in read_csv(path):
        out.append(
            ModeSample(
                s=float(row["s"]),
                q=np.array([float(row[f"q{i}"]) for i in range(3)]),
                qt=np.array([float(row[f"qt{i}"]) for i in range(3)]),
                usage={k: float(row[f"u_{k}"]) for k in USAGE_KEYS},
                worst=row["worst"],
                member=row["member"] == "1",
            )
        )
    return out


def snapshot_name(s: float) -> str:
    return f"snap_s{s:.4f}.csv"


def write_snapshot(directory, state: Field, s: float) -> Path:
    return write_csv(
        Path(directory) / snapshot_name(s), ["y", "q", "qt"], zip(state.y, state.q, state.qt)
    )


def read_snapshot(path) -> tuple[float, Field]:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    s = float(path.stem[len("snap_s"):])
    return s, Field(data[:, 0], data[:, 1], data[:, 2])


def list_snapshots(directory) -> list[Path]:
    snaps = Path(directory) / "snapshots"
    return sorted(snaps.glob("snap_s*.csv"), key=lambda p: float(p.stem[len("snap_s"):]))


def write_exit(path, ev: ExitEvent, status: str) -> Path:
    return write_csv(path, EXIT_HEADER, [[ev.s_exit, ev.mode, ev.sign, ev.crossing_rate, status]])


def read_exit(path) -> tuple[ExitEvent, str]:
    row = read_csv(path)[0]
    ev = ExitEvent(float(row["s_exit"]), row["mode"], int(row["sign"]), float(row["crossing_rate"]))
    return ev, row["status"]


def write_search_log(path, rows: list[dict]) -> Path:
    return write_csv(path, SEARCH_HEADER, ([r[k] for k in SEARCH_HEADER] for r in rows))


def write_trajectory(directory, record: TrajectoryRecord, cfg: RunConfig, stride: int | None = None) -> Path:
    """Write config, modes, exit and every ``stride``-th field snapshot."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.txt").write_text(cfg.to_text())
    write_modes(directory / "modes.csv", record.modes)
    write_exit(directory / "exit.csv", record.exit, record.status)
    stride = stride or cfg.snapshot_stride
    for k, (s, f) in enumerate(zip(record.s, record.fields)):
        if k % stride == 0 or k == len(record.s) - 1:
            write_snapshot(directory / "snapshots", f, s)
    return directory


def load_trajectory(directory, sp: ShrinkingParams | None = None) -> tuple[TrajectoryRecord, RunConfig]:
    """Rebuild a record from a trajectory directory.

    Fields come from the snapshots, the mode diagnostics from modes.csv at
    full observer cadence. Raises FileNotFoundError if anything is missing.
    """
    directory = Path(directory)
    for name in ("config.txt", "modes.csv", "exit.csv"):
        if not (directory / name).is_file():
            raise FileNotFoundError(f"{directory / name} not found")
    snaps = list_snapshots(directory)
    if not snaps:
        raise FileNotFoundError(f"no snapshots under {directory / 'snapshots'}")
    cfg = load_config(directory / "config.txt")
    record = TrajectoryRecord()
    for path in snaps:
        s, f = read_snapshot(path)
        record.s.append(s)
        record.fields.append(f)
    record.modes = read_modes(directory / "modes.csv")
    record.exit, record.status = read_exit(directory / "exit.csv")
    record.params = cfg.shoot_params()
    record.shrinking = sp or cfg.shrinking()
    return record, cfg
