"""Initial-data family, trajectory tracking against V_A × Ṽ_Ã, and the search
over the four expanding-direction parameters (d0, d1, dt0, dt1).

A trajectory leaves the shrinking set through one of its bounds; away from
the right parameters that is always one of the expanding modes q0, q1, q̃0,
q̃1, and the sign it leaves with says on which side of the trapping
parameter we are. The search is a signed coordinate bisection built on that.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import profile
from .decomposition import ShrinkingParams, check_pair, decompose_pair, _projection_rows
from .hermite import hermite
from .solver import Field, SolverConfig, TrajectoryRecord, apply_L, evolve

log = logging.getLogger(__name__)

EXPANDING = ("q0", "q1", "qt0", "qt1")
COORDS = ("d0", "d1", "dt0", "dt1")
MODE_INDEX = {"q0": 0, "q1": 1, "q2": 2, "qt0": 0, "qt1": 1, "qt2": 2}


@dataclass(frozen=True)
class ShootParams:
    d0: float = 0.0
    d1: float = 0.0
    dt0: float = 0.0
    dt1: float = 0.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not -2.0 <= v <= 2.0:
                raise ValueError(f"{name}={v} outside [-2, 2]")

    def as_array(self) -> np.ndarray:
        return np.array([self.d0, self.d1, self.dt0, self.dt1])

    @classmethod
    def from_array(cls, a) -> "ShootParams":
        return cls(*(float(x) for x in a))


@dataclass
class ExitEvent:
    s_exit: float
    mode: str  # EXPANDING, q2/qminus/qe and q̃ analogues, "none" or "diverged"
    sign: int
    crossing_rate: float


@dataclass
class ModeSample:
    s: float
    q: np.ndarray  # (q0, q1, q2)
    qt: np.ndarray  # (q̃0, q̃1, q̃2)
    usage: dict[str, float]
    worst: str
    member: bool


def initial_data(p: ShootParams, sp: ShrinkingParams, y: np.ndarray) -> Field:
    """q = A/s0² (d0 + d1 y) χ(2y, s0);  q̃ = [Ã/s0^α (d̃0 + d̃1 y) + B̃/s0² h2] χ(2y, s0)."""
    y = np.asarray(y, dtype=float)
    s0 = sp.s0
    if y[-1] < sp.K0 * np.sqrt(s0):
        raise ValueError("grid does not cover the support of the initial data")
    cut = profile.cutoff_chi(2.0 * y, s0, sp.K0)
    q = sp.A / s0**2 * (p.d0 + p.d1 * y) * cut
    qt = (sp.At / s0**sp.alpha * (p.dt0 + p.dt1 * y) + sp.Bt / s0**2 * hermite(2, y)) * cut
    return Field(y, q, qt)


def mode_derivatives(state: Field, s: float, K0: float, config: SolverConfig):
    """Exact d/ds of (q_m, q̃_m), m = 0..2, from the PDE right-hand side.

    d/ds <χq, k_m> = <χ q_s + χ_s q, k_m>.
    """
    y = state.y
    rows = _projection_rows(y)
    chi = profile.cutoff_chi(y, s, K0)
    chi_s = profile.cutoff_chi_ds(y, s, K0)
    V = profile.potential_V(y, s)
    R = profile.residual_R(y, s)
    q, qt = state.q, state.qt
    q_s = apply_L(q, y, config.advection) + V * q + q * q - qt * qt + R
    qt_s = apply_L(qt, y, config.advection) + V * qt + 2.0 * q * qt
    return rows @ (chi * q_s + chi_s * q), rows @ (chi * qt_s + chi_s * qt)


def _exit_event(sample: ModeSample, dq, dqt, state: Field, s: float, sp, config) -> ExitEvent:
    violated = {k: v for k, v in sample.usage.items() if v > 1.0}
    mode = max(violated, key=violated.get)
    if mode in MODE_INDEX:
        idx = MODE_INDEX[mode]
        value = (sample.qt if mode.startswith("qt") else sample.q)[idx]
        dm_q, dm_qt = mode_derivatives(state, s, sp.K0, config)
        rate = float((dm_qt if mode.startswith("qt") else dm_q)[idx])
        sign = 1 if value > 0 else -1
    else:
        d = dqt if mode.startswith("qt") else dq
        part = d.r_minus if mode.endswith("minus") else d.r_e
        sign = 1 if part[np.argmax(np.abs(part))] > 0 else -1
        rate = float("nan")
    return ExitEvent(s_exit=s, mode=mode, sign=sign, crossing_rate=rate)


def run_trajectory(
    p: ShootParams,
    sp: ShrinkingParams,
    s_max: float,
    config: SolverConfig | None = None,
    *,
    keep_fields: bool = True,
    stop_on_exit: bool = True,
    initial: Field | None = None,
    s_start: float | None = None,
) -> TrajectoryRecord:
    """Evolve the initial data and watch membership in V_A(s) × Ṽ_Ã(s).

    Stops at the first observer tick outside the set (the numerical s_*),
    unless ``stop_on_exit`` is False, in which case the first exit is still
    recorded but the run continues to ``s_max``. Passing ``initial`` and
    ``s_start`` resumes from a stored state instead of the initial family.
    """
    config = config or SolverConfig(K0=sp.K0)
    if config.K0 != sp.K0:
        config = replace(config, K0=sp.K0)
    if initial is None:
        state0 = initial_data(p, sp, config.grid(s_max))
        s_start = sp.s0
    else:
        if s_start is None:
            raise ValueError("resuming needs the state's time s_start")
        state0 = initial
    samples: list[ModeSample] = []
    exit_box: list[ExitEvent] = []

    def observer(state: Field, s: float) -> bool:
        dq, dqt = decompose_pair(state, s, sp.K0)
        report = check_pair(dq, dqt, s, sp)
        sample = ModeSample(s, dq.modes, dqt.modes, report.usage, report.worst, report.member)
        samples.append(sample)
        if not report.member and not exit_box:
            exit_box.append(_exit_event(sample, dq, dqt, state, s, sp, config))
            return stop_on_exit
        return False

    record = evolve(state0, s_start, s_max, observer, config, keep_fields=keep_fields)
    record.modes = samples
    record.params = p
    record.shrinking = sp
    if exit_box:
        record.exit = exit_box[0]
    elif record.status == "diverged":
        record.exit = ExitEvent(record.s_end, "diverged", 0, float("nan"))
    else:
        record.exit = ExitEvent(record.s_end, "none", 0, 0.0)
    return record


def truncate(record: TrajectoryRecord, s_end: float) -> TrajectoryRecord:
    """The part of a record up to ``s_end``; an exit after s_end is dropped."""
    keep = [i for i, s in enumerate(record.s) if s <= s_end + 1e-9]
    out = TrajectoryRecord(
        s=[record.s[i] for i in keep],
        fields=[record.fields[i] for i in keep] if record.fields else [],
        modes=[m for m in record.modes if m.s <= s_end + 1e-9],
        status=record.status,
        message=record.message,
        params=record.params,
        shrinking=record.shrinking,
    )
    ev = record.exit
    if ev is not None and ev.mode != "none" and ev.s_exit <= s_end + 1e-9:
        out.exit = ev
    else:
        out.exit = ExitEvent(out.s_end, "none", 0, 0.0)
        if out.status == "stopped":
            out.status = "ok"
    return out


def mode_series(record: TrajectoryRecord) -> dict[str, np.ndarray]:
    s = np.array([m.s for m in record.modes])
    q = np.array([m.q for m in record.modes]).reshape(-1, 3)
    qt = np.array([m.qt for m in record.modes]).reshape(-1, 3)
    out = {"s": s}
    for i in range(3):
        out[f"q{i}"] = q[:, i]
        out[f"qt{i}"] = qt[:, i]
    return out


def reduced_ode_residuals(record: TrajectoryRecord, sp: ShrinkingParams | None = None):
    """Residuals of the reduced mode ODEs, each rescaled by its expected bound.

    q0: s²|q0' - q0|          q1: s²|q1' - q1/2|
    qt0: s^(3-η)/Ã² |q̃0' - q̃0|   qt1: same with q̃1/2
    qt2: s^(α+1)/Ã |q̃2' + (2/s) q̃2|
    """
    sp = sp or record.shrinking
    m = mode_series(record)
    if m["s"].size < 3:
        raise ValueError("need at least three ticks for the derivative")
    s = m["s"]
    d = {k: np.gradient(m[k], s) for k in ("q0", "q1", "qt0", "qt1", "qt2")}
    return {
        "s": s,
        "q0": s**2 * np.abs(d["q0"] - m["q0"]),
        "q1": s**2 * np.abs(d["q1"] - 0.5 * m["q1"]),
        "qt0": s ** (3 - sp.eta) / sp.At**2 * np.abs(d["qt0"] - m["qt0"]),
        "qt1": s ** (3 - sp.eta) / sp.At**2 * np.abs(d["qt1"] - 0.5 * m["qt1"]),
        "qt2": s ** (sp.alpha + 1) / sp.At * np.abs(d["qt2"] + 2.0 / s * m["qt2"]),
    }


def normalized_expanding(sample: ModeSample, sp: ShrinkingParams) -> np.ndarray:
    s = sample.s
    return np.array(
        [
            s**2 * sample.q[0] / sp.A,
            s**2 * sample.q[1] / sp.A,
            s**sp.alpha * sample.qt[0] / sp.At,
            s**sp.alpha * sample.qt[1] / sp.At,
        ]
    )


def exit_map_from_record(record: TrajectoryRecord) -> np.ndarray:
    return normalized_expanding(record.modes[-1], record.shrinking)


def exit_map(p: ShootParams, sp: ShrinkingParams, s_max: float, config=None) -> np.ndarray:
    """Φ(d): normalized (q0, q1, q̃0, q̃1) at the exit time (or at s_max if trapped)."""
    return exit_map_from_record(run_trajectory(p, sp, s_max, config, keep_fields=False))


def initial_expanding_modes(p: ShootParams, sp: ShrinkingParams, y: np.ndarray) -> np.ndarray:
    """(q0, q1, q̃0, q̃1) at s0 for the given parameters."""
    f = initial_data(p, sp, y)
    dq, dqt = decompose_pair(f, sp.s0, sp.K0)
    return np.array([dq.r0, dq.r1, dqt.r0, dqt.r1])


# ---------------------------------------------------------------------------
# search


@dataclass
class SearchResult:
    params: ShootParams
    record: TrajectoryRecord
    status: str  # trapped | budget | stalled
    evaluations: int
    log: list[dict] = field(default_factory=list)

    @property
    def trapped(self) -> bool:
        return self.status == "trapped"


def _evaluate(args):
    p, sp, s_max, config = args
    rec = run_trajectory(p, sp, s_max, config, keep_fields=False)
    return rec


def search(
    sp: ShrinkingParams,
    s_max: float,
    budget: int = 200,
    config: SolverConfig | None = None,
    *,
    workers: int = 1,
    margin: float = 0.0,
    min_width: float = 1e-14,
    restart_width: float = 1e-9,
) -> SearchResult:
    """Signed coordinate bisection for parameters trapped up to ``s_max``.

    With ``margin`` > 0 the bisection keeps refining until the trajectory
    stays trapped to s_max + margin (or the budget runs out), so that the
    returned record, cut at s_max, is not already drifting out through an
    expanding mode at its end.

    Each generation refines the coordinate whose mode exited last. With
    ``workers`` > 1 the interval is cut into workers+1 pieces and the
    interior points are run in parallel; workers = 1 is plain bisection.
    Every exit through an expanding mode also halves that mode's own
    bracket. Coordinates sit at 0 until their mode is seen exiting, so with
    d1 = d̃1 = 0 (parity) and, for B̃ = 0, d̃0 = 0 (real data) the search
    never leaves the invariant subspace unless round-off forces it to.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    config = config or SolverConfig(K0=sp.K0)
    horizon = s_max + margin
    lo = np.full(4, -2.0)
    hi = np.full(4, 2.0)
    current = np.zeros(4)
    rows: list[dict] = []
    best: tuple[tuple, ShootParams, TrajectoryRecord] | None = None
    evaluations = 0
    coord = 0
    status = "budget"
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while evaluations < budget:
            n = min(max(1, workers), budget - evaluations)
            if n == 1:
                xs = [0.5 * (lo[coord] + hi[coord])]
            else:
                xs = list(np.linspace(lo[coord], hi[coord], n + 2)[1:-1])
            cands = []
            for x in xs:
                c = current.copy()
                c[coord] = x
                cands.append(ShootParams.from_array(c))
            jobs = [(c, sp, horizon, config) for c in cands]
            recs = list(pool.map(_evaluate, jobs)) if pool else [_evaluate(j) for j in jobs]

            gen_best = None
            for c, rec in zip(cands, recs):
                evaluations += 1
                ev = rec.exit
                rows.append(
                    {
                        "eval_id": evaluations,
                        **asdict(c),
                        "s_exit": ev.s_exit,
                        "exit_mode": ev.mode,
                        "exit_sign": ev.sign,
                    }
                )
                # merit: trapped time, with a trapped run beating an exit at the last tick
                merit = (ev.s_exit, ev.mode == "none")
                if best is None or merit > best[0]:
                    best = (merit, c, rec)
                if gen_best is None or merit > gen_best[0]:
                    gen_best = (merit, c, rec)
                if ev.mode in EXPANDING:
                    # the exit brackets its own coordinate, whichever one was probed
                    j = EXPANDING.index(ev.mode)
                    x = c.as_array()[j]
                    if ev.sign > 0:
                        hi[j] = min(hi[j], x)
                    else:
                        lo[j] = max(lo[j], x)
            if best[2].exit.mode == "none":
                status = "trapped"
                break

            for j in range(4):
                if hi[j] - lo[j] < min_width:
                    # stale bracket after the other coordinates moved: reopen it
                    mid = 0.5 * (lo[j] + hi[j])
                    lo[j] = max(-2.0, mid - restart_width)
                    hi[j] = min(2.0, mid + restart_width)
                    log.info("reopening %s around %.17g", COORDS[j], mid)
            current = 0.5 * (lo + hi)

            mode = gen_best[2].exit.mode
            if mode not in EXPANDING:
                status = "stalled"
                log.warning("exit via non-expanding mode %s; stopping search", mode)
                break
            coord = EXPANDING.index(mode)
    finally:
        if pool is not None:
            pool.shutdown()

    _, params, _ = best
    # rerun the best candidate with fields kept, for the caller's diagnostics
    record = truncate(run_trajectory(params, sp, horizon, config), s_max)
    if record.exit.mode == "none":
        status = "trapped"
    elif status == "trapped":
        status = "budget"
    return SearchResult(params, record, status, evaluations, rows)


def _draw_exit(args):
    p, sp, s_max, config = args
    return run_trajectory(p, sp, s_max, config, keep_fields=False).exit


def sample_exits(
    sp: ShrinkingParams,
    n: int,
    s_max: float,
    seed: int = 0,
    config: SolverConfig | None = None,
    *,
    box: float = 1.0,
    workers: int = 1,
) -> list[tuple[ShootParams, ExitEvent]]:
    """Exits of ``n`` trajectories with parameters uniform in [-box, box]^4.

    box = 1 keeps the initial data inside V_A(s0) × Ṽ_Ã(s0), so every exit is
    a genuine exit of the flow rather than of the initial data.
    """
    rng = np.random.default_rng(seed)
    params = [ShootParams.from_array(rng.uniform(-box, box, 4)) for _ in range(n)]
    jobs = [(p, sp, s_max, config) for p in params]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            exits = list(pool.map(_draw_exit, jobs))
    else:
        exits = [_draw_exit(j) for j in jobs]
    return list(zip(params, exits))
