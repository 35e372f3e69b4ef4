import numpy as np
import pytest

from complex_heat_blowup.decomposition import ShrinkingParams, decompose_pair
from complex_heat_blowup.shooting import (
    EXPANDING,
    ShootParams,
    exit_map,
    initial_data,
    initial_expanding_modes,
    mode_derivatives,
    reduced_ode_residuals,
    run_trajectory,
    sample_exits,
    search,
    truncate,
)
from complex_heat_blowup.solver import SolverConfig, evolve

SP = ShrinkingParams()
CFG = SolverConfig(ymax=100.0)


def test_shoot_params_range():
    with pytest.raises(ValueError):
        ShootParams(d0=2.5)
    p = ShootParams.from_array([0.1, -0.2, 0.3, -0.4])
    np.testing.assert_array_equal(p.as_array(), [0.1, -0.2, 0.3, -0.4])


def test_initial_modes_follow_parameters():
    # χ(2y, s0) = 1 well beyond the Gaussian weight, so the modes are the coefficients
    y = CFG.grid(21.0)
    p = ShootParams(0.3, -0.5, 0.7, 0.2)
    got = initial_expanding_modes(p, SP, y)
    s0 = SP.s0
    want = [SP.A / s0**2 * 0.3, SP.A / s0**2 * -0.5, SP.At / s0**SP.alpha * 0.7, SP.At / s0**SP.alpha * 0.2]
    np.testing.assert_allclose(got, want, rtol=1e-10)
    dq, dqt = decompose_pair(initial_data(p, SP, y), s0, SP.K0)
    assert dqt.r2 == pytest.approx(SP.Bt / s0**2, rel=1e-10)


def test_initial_data_needs_support():
    with pytest.raises(ValueError):
        initial_data(ShootParams(), SP, np.linspace(-10, 10, 11))


def test_initial_data_inside_shrinking_set_for_unit_box():
    rec = run_trajectory(ShootParams(1, -1, 1, -1), SP, 20.05, CFG)
    assert rec.modes[0].member


def test_mode_derivatives_match_time_differences():
    # [DERIVED] d/ds of the projected modes against a fine-step difference
    cfg = SolverConfig(ymax=100.0, ds=0.001, cadence=0.001)
    p = ShootParams(0.4, 0.3, -0.5, 0.2)
    state = initial_data(p, SP, cfg.grid(21.0))
    rec = evolve(state, 20.0, 20.002, config=cfg)
    mid = rec.fields[1]
    dq, dqt = mode_derivatives(mid, 20.001, SP.K0, cfg)
    (a, at), (b, bt) = (decompose_pair(rec.fields[k], rec.s[k], SP.K0) for k in (0, 2))
    np.testing.assert_allclose(dq, (b.modes - a.modes) / 0.002, rtol=1e-4, atol=1e-9)
    np.testing.assert_allclose(dqt, (bt.modes - at.modes) / 0.002, rtol=1e-4, atol=1e-9)


@pytest.mark.parametrize("p, mode", [(ShootParams(d0=1.0), "q0"), (ShootParams(d1=-1.0), "q1")])
def test_exit_through_the_pushed_mode(p, mode):
    rec = run_trajectory(p, SP, 25.0, CFG)
    ev = rec.exit
    assert ev.mode == mode
    assert ev.sign == int(np.sign(p.as_array()[EXPANDING.index(mode)]))
    assert np.sign(ev.crossing_rate) == ev.sign
    assert rec.status == "stopped"


def test_continue_after_exit_records_first_exit():
    rec = run_trajectory(ShootParams(d0=1.0), SP, 21.5, CFG, stop_on_exit=False)
    assert rec.exit.mode == "q0"
    assert rec.s_end == pytest.approx(21.5)
    assert rec.exit.s_exit < 21.5


def test_truncate():
    rec = run_trajectory(ShootParams(d0=1.0), SP, 21.5, CFG, stop_on_exit=False)
    early = truncate(rec, rec.exit.s_exit - 0.1)
    assert early.exit.mode == "none"
    assert early.s_end == pytest.approx(rec.exit.s_exit - 0.1)
    assert len(early.fields) == len(early.s) == len(early.modes)
    assert truncate(rec, 21.5).exit.mode == "q0"


def test_resume_from_state_is_exact():
    p = ShootParams(0.2, 0.0, 0.1, 0.0)
    full = run_trajectory(p, SP, 21.0, CFG)
    half = run_trajectory(p, SP, 20.5, CFG)
    k = len(half.s) - 1
    rest = run_trajectory(p, SP, 21.0, CFG, initial=half.fields[-1], s_start=half.s[-1])
    np.testing.assert_array_equal(rest.fields[-1].q, full.fields[-1].q)
    assert rest.modes[0].q == pytest.approx(full.modes[k].q)
    with pytest.raises(ValueError):
        run_trajectory(p, SP, 21.0, CFG, initial=half.fields[-1])


def test_reduced_residuals_keys():
    rec = run_trajectory(ShootParams(), SP, 20.5, CFG)
    res = reduced_ode_residuals(rec)
    assert set(res) == {"s", "q0", "q1", "qt0", "qt1", "qt2"}
    assert len(res["s"]) == len(rec.modes)
    # parity: odd residuals are pure round-off
    assert np.max(res["q1"]) < 1e-10 and np.max(res["qt1"]) < 1e-10


def test_exit_map_shape():
    v = exit_map(ShootParams(d0=1.0), SP, 22.0, CFG)
    assert v.shape == (4,)
    assert abs(v[0]) >= 1.0


def test_budget_one_is_incomplete():
    res = search(SP, 25.0, budget=1, config=CFG, margin=0.0)
    assert res.status == "budget"
    assert res.evaluations == 1
    assert len(res.log) == 1
    assert set(res.log[0]) == {"eval_id", "d0", "d1", "dt0", "dt1", "s_exit", "exit_mode", "exit_sign"}


def test_search_stays_in_invariant_subspace():
    res = search(SP, 23.0, budget=12, config=CFG, margin=0.0)
    for row in res.log:
        assert row["d1"] == 0.0 and row["dt1"] == 0.0
    assert res.record.exit.s_exit >= res.log[0]["s_exit"]


def test_search_rejects_empty_budget():
    with pytest.raises(ValueError):
        search(SP, 25.0, budget=0)


def test_sample_exits_reproducible_and_confined():
    a = sample_exits(SP, 6, 26.0, seed=3, config=CFG)
    b = sample_exits(SP, 6, 26.0, seed=3, config=CFG)
    assert [x[0] for x in a] == [x[0] for x in b]
    for p, ev in a:
        assert np.all(np.abs(p.as_array()) <= 1.0)
        assert ev.mode in EXPANDING
        assert np.sign(ev.crossing_rate) == ev.sign
