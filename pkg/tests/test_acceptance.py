"""Acceptance gate: one printed pass/fail line per criterion, pinned tolerances.

The long trapped run (s0 = 20 to 40) is searched with a 5-unit margin so the
window that is checked does not end on the unstable excursion that precedes
every numerical exit. The three smallest resolvable x0 need matching times
s ∈ {37, 38, 39}, hence the 20-unit window.
"""

import time

import numpy as np
import pytest

from complex_heat_blowup import io, verify
from complex_heat_blowup.cli import main
from complex_heat_blowup.decomposition import ShrinkingParams, decompose, recompose
from complex_heat_blowup.profile import cutoff_chi
from complex_heat_blowup.shooting import EXPANDING, ShootParams, run_trajectory, sample_exits, search
from complex_heat_blowup.solver import SolverConfig
from test_solver import _free_error

SP = ShrinkingParams()
LONG_END = 40.0
LONG_MARGIN = 5.0


@pytest.fixture(scope="module")
def trapped_long():
    t0 = time.perf_counter()
    res = search(SP, LONG_END, budget=200, margin=LONG_MARGIN)
    res.elapsed = time.perf_counter() - t0
    return res


def test_basis_and_kernel_suite(acceptance_line):
    t0 = time.perf_counter()
    props = {p.name: p for p in verify.basis_suite()}
    elapsed = time.perf_counter() - t0
    ok = (
        props["orthogonality"].residual <= 1e-10
        and props["mehler_eigen"].residual <= 1e-6
        and props["mehler_composition"].residual <= 1e-6
        and all(p.passed for p in props.values())
        and elapsed < 10
    )
    detail = " ".join(f"{k}={p.residual:.1e}" for k, p in props.items()) + f" t={elapsed:.1f}s"
    acceptance_line("basis_kernel_suite", ok, detail)
    assert ok


def test_solver_vs_oracle(acceptance_line):
    t0 = time.perf_counter()
    fine = _free_error(0.05, 0.01)
    coarse = _free_error(0.1, 0.02)
    finer = _free_error(0.025, 0.005)
    elapsed = time.perf_counter() - t0
    ratio = min(coarse / fine, fine / finer)
    ok = fine <= 1e-4 and ratio >= 3.5 and elapsed < 60
    detail = f"err={fine:.2e} (≤1e-4) halving ratios {coarse / fine:.2f}, {fine / finer:.2f} (≥3.5) t={elapsed:.1f}s"
    acceptance_line("solver_vs_oracle", ok, detail)
    assert ok


def test_trapped_trajectory_exists(tmp_path, acceptance_line):
    t0 = time.perf_counter()
    code = main(["-q", "shoot", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    record, cfg = io.load_trajectory(tmp_path / "best")
    s = np.array([m.s for m in record.modes])
    inside = all(m.member for m in record.modes)
    spacing = np.allclose(np.diff(s), 0.1)
    ok = code == 0 and inside and spacing and s[0] == SP.s0 and s[-1] >= SP.s0 + 10 - 1e-9 and elapsed < 1800
    worst = max(max(m.usage.values()) for m in record.modes)
    detail = (
        f"exit={code} d=({cfg.d0:.6g}, {cfg.d1:.3g}, {cfg.dt0:.6g}, {cfg.dt1:.3g}) "
        f"s∈[{s[0]:.1f}, {s[-1]:.1f}] ticks={s.size} max usage={worst:.3f} t={elapsed:.0f}s"
    )
    acceptance_line("trapped_trajectory", ok, detail)
    assert ok


def test_exit_mode_confinement(acceptance_line):
    t0 = time.perf_counter()
    draws = sample_exits(SP, 100, SP.s0 + 10, seed=0)
    elapsed = time.perf_counter() - t0
    modes = [ev.mode for _, ev in draws]
    exits = [ev for _, ev in draws if ev.mode != "none"]
    confined = all(ev.mode in EXPANDING for ev in exits)
    transverse = all(np.sign(ev.crossing_rate) == ev.sign for ev in exits if ev.mode in EXPANDING)
    counts = {m: modes.count(m) for m in sorted(set(modes))}
    ok = confined and transverse and len(exits) > 0
    acceptance_line("exit_confinement", ok, f"{counts} transverse={transverse} t={elapsed:.1f}s")
    assert ok


def test_reduced_dynamics(trapped_long, acceptance_line):
    r = verify.check_reduced_dynamics(trapped_long.record)
    c = r.constants
    detail = f"max s²|q0'-q0|={c['max_q0']:.3g} s²|q1'-q1/2|={c['max_q1']:.2g} scaled q̃2={c['max_qt2']:.3g}"
    ok = r.passed and verify.is_trapped(trapped_long.record)
    acceptance_line("reduced_dynamics", ok, detail)
    assert ok


def test_null_mode_law(trapped_long, acceptance_line):
    r = verify.check_null_mode(trapped_long.record)
    c = r.constants
    detail = f"l={c.get('l', float('nan')):.4f} tail fluct={c.get('relative_fluctuation', float('nan')):.2%} (≤10%) B̃={SP.Bt}"
    acceptance_line("null_mode_law", r.passed, detail + (f" {r.note}" if r.note else ""))
    assert r.passed


def test_profile_bound(trapped_long, acceptance_line):
    r = verify.check_profile(trapped_long.record)
    c = r.constants
    detail = f"C={c['C']:.3f} final-half C={c['C_final_half']:.3f} slope={c['slope']:.2e} (≤0)"
    acceptance_line("profile_bound", r.passed, detail)
    assert r.passed


def test_imaginary_profile(trapped_long, acceptance_line):
    r = verify.check_imaginary(trapped_long.record, R=2.0)
    c = r.constants
    detail = f"C(R=2)={c.get('C', float('nan')):.3f} C(R=1)={c.get('C_R1', float('nan')):.3f} C(R=4)={c.get('C_R4', float('nan')):.3f}"
    acceptance_line("imaginary_profile", r.passed, detail)
    assert r.passed


def test_final_profile(trapped_long, acceptance_line):
    r = verify.check_final_profile(trapped_long.record)
    c = r.constants
    ratios = ", ".join(f"{c[k]:.3f}" for k in sorted(c) if k.startswith("ratio_s"))
    detail = f"ratios (x0 decreasing) [{ratios}] in [0.7,1.3] K0 spread={c.get('K0_spread', float('nan')):.3f}"
    acceptance_line("final_profile", r.passed, detail)
    assert r.passed


def test_blowup_point_and_dominance(trapped_long, acceptance_line):
    r = verify.check_single_point(trapped_long.record)
    c = r.constants
    detail = (
        f"(T-t)|v(0,t)| end={c['origin_real_end']:.4f} max (T-t)|ṽ(0,t)|log²={c['origin_imag_scaled_max']:.3f} "
        f"x0≠0 final≤{max(v for k, v in c.items() if k.startswith('final_x0.')):.1e} stable={bool(c['stable'])}"
    )
    acceptance_line("single_point", r.passed, detail)
    assert r.passed


def test_invariance_suite(trapped_long, acceptance_line):
    t0 = time.perf_counter()
    cfg = SolverConfig(ymax=100.0)
    real = run_trajectory(ShootParams(0.3, 0.2, 0.0, 0.0), ShrinkingParams(Bt=0.0), 22.0, cfg)
    real_ok = all(np.all(f.qt == 0.0) for f in real.fields)

    rec = trapped_long.record
    odd = max(max(abs(m.q[1]), abs(m.qt[1])) for m in rec.modes)
    parity_ok = odd <= 1e-8

    recompose_err = 0.0
    support_ok = True
    for s, f in zip(rec.s[::10], rec.fields[::10]):
        inner = SP.K0 * np.sqrt(s)
        for g in (f.q, f.qt):
            d = decompose(g, f.y, s, SP.K0)
            recompose_err = max(recompose_err, float(np.max(np.abs(recompose(d) - g))))
            support_ok &= bool(np.all(d.r_e[np.abs(f.y) <= inner] == 0.0))
            support_ok &= bool(np.all((cutoff_chi(f.y, s, SP.K0) * g)[np.abs(f.y) >= 2 * inner] == 0.0))
    elapsed = time.perf_counter() - t0
    ok = real_ok and parity_ok and recompose_err <= 1e-8 and support_ok and elapsed < 300
    detail = (
        f"q̃≡0={real_ok} max odd mode={odd:.1e} recompose={recompose_err:.1e} "
        f"support exact={support_ok} t={elapsed:.1f}s"
    )
    acceptance_line("invariance_suite", ok, detail)
    assert ok


def test_long_search_summary(trapped_long, acceptance_line):
    res = trapped_long
    p = res.params
    detail = (
        f"s0={SP.s0:g} to {LONG_END:g} (margin {LONG_MARGIN:g}) status={res.status} evals={res.evaluations} "
        f"d0={p.d0:.10g} dt0={p.dt0:.10g} t={res.elapsed:.0f}s"
    )
    acceptance_line("long_trapped_window", res.trapped, detail)
    assert res.trapped
