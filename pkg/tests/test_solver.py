import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from complex_heat_blowup import profile
from complex_heat_blowup.hermite import hermite
from complex_heat_blowup.kernel import apply_semigroup
from complex_heat_blowup.solver import (
    Field,
    SolverConfig,
    Stepper,
    apply_L,
    default_ymax,
    evolve,
    extend_field,
    rhs,
    step,
    uniform_grid,
)

FREE = dict(potential=False, nonlinear=False, residual=False)


def _free_error(h, ds, psi=0.5):
    cfg = SolverConfig(ds=ds, h=h, ymax=40.0, cadence=ds, **FREE)
    y = cfg.grid(1.0)
    g = lambda x: np.exp(-x * x / 8)  # noqa: E731
    rec = evolve(Field(y, g(y), np.zeros_like(y)), 1.0, 1.0 + psi, config=cfg)
    ref = apply_semigroup(psi, g, y).values
    inner = np.abs(y) <= 5
    return np.max(np.abs(rec.fields[-1].q - ref)[inner])


def test_free_evolution_matches_mehler_oracle():
    err = _free_error(0.05, 0.01)
    assert err < 1e-4


def test_free_evolution_second_order():
    coarse = _free_error(0.1, 0.02)
    fine = _free_error(0.05, 0.01)
    assert coarse / fine >= 3.5


def test_field_validation():
    with pytest.raises(ValueError):
        Field(np.zeros(3), np.zeros(3), np.zeros(4))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(bc="periodic")
    with pytest.raises(ValueError):
        SolverConfig(advection="weno")
    with pytest.raises(ValueError):
        SolverConfig(ds=0.01, cadence=0.015)
    assert SolverConfig(ds=0.01, cadence=0.1).steps_per_tick == 10


def test_grid_helpers():
    y = uniform_grid(2.0, 0.5)
    np.testing.assert_allclose(y, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2])
    assert default_ymax(20.0) == pytest.approx(30 * np.sqrt(20))
    assert default_ymax(1.0, K0=1.0) == 40.0


@pytest.mark.parametrize("advection", ["central", "upwind"])
def test_L_on_eigenfunctions(advection):
    y = uniform_grid(8.0, 0.05)
    for m in range(2):
        np.testing.assert_allclose(apply_L(hermite(m, y), y, advection), (1 - m / 2) * hermite(m, y), atol=1e-10)
    # quadratics are exact for the central scheme
    if advection == "central":
        np.testing.assert_allclose(apply_L(hermite(2, y), y), 0.0, atol=1e-9)


def test_rhs_with_zero_perturbation_is_residual():
    y = uniform_grid(120.0, 0.05)
    out = rhs(Field(y, np.zeros_like(y), np.zeros_like(y)), 20.0)
    np.testing.assert_allclose(out.q, profile.residual_R(y, 20.0))
    np.testing.assert_array_equal(out.qt, 0.0)


def test_flat_boundary_follows_exact_ode():
    # W' = -W + W² with W(0) = W0 has W = 1/(1 + (1/W0 - 1) e^s)
    y = uniform_grid(40.0, 0.5)
    st_ = Field(y, np.full_like(y, 0.1), np.full_like(y, 0.02))
    stepper = Stepper(y, SolverConfig(ds=0.01, h=0.5))
    stepper.attach_boundary(st_, 5.0)
    W0 = complex(profile.phi(y[-1], 5.0) + 0.1, 0.02)
    W = 1 / (1 + (1 / W0 - 1) * np.exp(1.0))
    bv = stepper.boundary_values(6.0)
    assert bv[1, 0] == pytest.approx(W.real - profile.phi(y[-1], 6.0), abs=1e-14)
    assert bv[1, 1] == pytest.approx(W.imag, abs=1e-14)


def test_step_wrapper_matches_evolve(short_config):
    y = short_config.grid(21.0)
    st_ = Field(y, 1e-3 * np.exp(-y * y / 10), 1e-3 * hermite(2, y) * np.exp(-y * y / 50))
    one = step(st_, 20.0, short_config.ds, short_config)
    rec = evolve(st_, 20.0, 20.0 + short_config.ds, config=short_config.__class__(ymax=100.0, cadence=0.01))
    np.testing.assert_allclose(one.q, rec.fields[-1].q, atol=1e-15)


def test_observer_stop_and_cadence(short_config):
    y = short_config.grid(21.0)
    st_ = Field(y, np.zeros_like(y), np.zeros_like(y))
    seen = []

    def obs(state, s):
        seen.append(s)
        return s >= 20.3 - 1e-9

    rec = evolve(st_, 20.0, 21.0, obs, short_config)
    assert rec.status == "stopped"
    np.testing.assert_allclose(seen, [20.0, 20.1, 20.2, 20.3])


def test_end_time_truncated_to_last_tick(short_config):
    y = short_config.grid(21.0)
    rec = evolve(Field(y, 0 * y, 0 * y), 20.0, 20.25, config=short_config, keep_fields=False)
    assert rec.s_end == pytest.approx(20.2)
    assert rec.fields == []


def test_divergence_is_reported():
    cfg = SolverConfig(ds=0.1, h=0.5, ymax=10.0, cadence=0.1, potential=False, residual=False)
    y = cfg.grid(1.0)
    rec = evolve(Field(y, np.full_like(y, 50.0), 0 * y), 1.0, 5.0, config=cfg)
    assert rec.status == "diverged"
    assert "non-finite" in rec.message


def test_regrid_extends_domain():
    cfg = SolverConfig(ds=0.05, h=0.1, K0=1.0, cadence=0.5, regrid=True, **FREE)
    y = cfg.grid(1.0)
    small = default_ymax(1.0, 1.0)
    rec = evolve(Field(y, np.exp(-y * y), 0 * y), 1.0, 200.0, config=cfg)
    assert small == 40.0
    assert rec.fields[-1].ymax >= default_ymax(200.0, 1.0) - 1e-9


def test_extend_field_pads_with_end_values():
    y = uniform_grid(1.0, 0.5)
    f = Field(y, y.copy(), -y)
    big = extend_field(f, 2.0)
    assert big.y.size == 9
    assert big.q[0] == -1.0 and big.q[-1] == 1.0
    np.testing.assert_array_equal(big.q[2:-2], f.q)


@given(st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3))
def test_real_data_stays_real(a, b):
    cfg = SolverConfig(ymax=100.0)
    y = cfg.grid(20.5)
    st_ = Field(y, (a + b * hermite(2, y)) * np.exp(-y * y / 400), np.zeros_like(y))
    rec = evolve(st_, 20.0, 20.5, config=cfg)
    assert np.all(rec.fields[-1].qt == 0.0)


@given(st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3))
def test_even_data_stays_even(a, b):
    cfg = SolverConfig(ymax=100.0)
    y = cfg.grid(20.5)
    w = np.exp(-y * y / 400)
    st_ = Field(y, a * w, b * hermite(2, y) * w)
    rec = evolve(st_, 20.0, 20.5, config=cfg)
    f = rec.fields[-1]
    np.testing.assert_allclose(f.q, f.q[::-1], atol=1e-15)
    np.testing.assert_allclose(f.qt, f.qt[::-1], atol=1e-15)
