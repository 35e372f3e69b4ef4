"""Finite-difference IMEX stepper for the perturbation system

    q_s  = (L + V) q  + q² - q̃² + R
    q̃_s = (L + V) q̃ + 2 q q̃

with L = ∂²_y - (y/2)∂_y + 1 on a truncated uniform grid. L is taken
implicitly (Crank-Nicolson); V q, the quadratic terms and R explicitly with
a Heun predictor-corrector, which keeps the scheme second order and
one-step (so restarting from a snapshot reproduces the same trajectory).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import profile

log = logging.getLogger(__name__)


class SolverDivergence(RuntimeError):
    """Non-finite values appeared: the rescaled solution blew up numerically."""


@dataclass
class Field:
    y: np.ndarray
    q: np.ndarray
    qt: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.qt = np.asarray(self.qt, dtype=float)
        if not (self.y.shape == self.q.shape == self.qt.shape):
            raise ValueError("y, q and qt must have the same shape")

    @property
    def h(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def ymax(self) -> float:
        return float(self.y[-1])

    def copy(self) -> "Field":
        return Field(self.y.copy(), self.q.copy(), self.qt.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qt)))


def uniform_grid(ymax: float, h: float) -> np.ndarray:
    n = int(np.ceil(ymax / h - 1e-9))
    return h * np.arange(-n, n + 1, dtype=float)


def default_ymax(s_end: float, K0: float = profile.DEFAULT_K0) -> float:
    return max(40.0, 3.0 * K0 * np.sqrt(s_end))


@dataclass(frozen=True)
class SolverConfig:
    ds: float = 0.01
    h: float = 0.05
    ymax: float | None = None  # None: default_ymax(s_end, K0)
    K0: float = profile.DEFAULT_K0
    bc: str = "dirichlet"  # or "neumann"
    advection: str = "central"  # or "upwind"
    cadence: float = 0.1
    regrid: bool = False
    # switches for the oracle comparisons on the bare operator L
    potential: bool = True
    nonlinear: bool = True
    residual: bool = True

    def __post_init__(self):
        if not self.ds > 0 or not self.h > 0:
            raise ValueError("ds and h must be positive")
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.advection not in ("central", "upwind"):
            raise ValueError(f"unknown advection scheme {self.advection!r}")
        ratio = self.cadence / self.ds
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("cadence must be a positive multiple of ds")

    @property
    def steps_per_tick(self) -> int:
        return int(round(self.cadence / self.ds))

    def grid(self, s_end: float) -> np.ndarray:
        ymax = self.ymax if self.ymax is not None else default_ymax(s_end, self.K0)
        return uniform_grid(ymax, self.h)


def _drift_coefficients(y: np.ndarray, h: float, advection: str):
    """Sub/diag/super coefficients of -(y/2)∂_y."""
    a = -0.5 * y
    if advection == "central":
        c = a / (2.0 * h)
        return -c, np.zeros_like(y), c
    # speed y/2 points outward: backward difference for y>0, forward for y<0
    pos = y > 0
    lower = np.where(pos, -a / h, 0.0)
    upper = np.where(pos, 0.0, a / h)
    diag = np.where(pos, a / h, -a / h)
    return lower, diag, upper


def L_tridiagonal(y: np.ndarray, h: float, advection: str = "central"):
    """Interior stencil of L as (lower, diag, upper) arrays indexed by node."""
    lo_d, di_d, up_d = _drift_coefficients(y, h, advection)
    lower = 1.0 / h**2 + lo_d
    diag = -2.0 / h**2 + di_d + 1.0
    upper = 1.0 / h**2 + up_d
    return lower, diag, upper


def apply_L(g: np.ndarray, y: np.ndarray, advection: str = "central") -> np.ndarray:
    """Apply discrete L; second-order one-sided stencils at the two end nodes."""
    g = np.asarray(g, dtype=float)
    h = float(y[1] - y[0])
    lower, diag, upper = L_tridiagonal(y, h, advection)
    out = np.empty_like(g)
    out[1:-1] = lower[1:-1] * g[:-2] + diag[1:-1] * g[1:-1] + upper[1:-1] * g[2:]
    for j, sgn in ((0, 1), (-1, -1)):
        k = [j, j + sgn, j + 2 * sgn, j + 3 * sgn]
        gyy = (2 * g[k[0]] - 5 * g[k[1]] + 4 * g[k[2]] - g[k[3]]) / h**2
        gy = sgn * (-3 * g[k[0]] + 4 * g[k[1]] - g[k[2]]) / (2 * h)
        out[j] = gyy - 0.5 * y[j] * gy + g[j]
    return out


def apply_L_field(g: Field, advection: str = "central") -> Field:
    return Field(g.y, apply_L(g.q, g.y, advection), apply_L(g.qt, g.y, advection))


def rhs(state: Field, s: float, config: SolverConfig | None = None) -> Field:
    """Full right-hand side ((L+V)q + q² - q̃² + R, (L+V)q̃ + 2qq̃)."""
    config = config or SolverConfig()
    Lq = apply_L(state.q, state.y, config.advection)
    Lqt = apply_L(state.qt, state.y, config.advection)
    nq, nqt = _explicit_terms(state.y, state.q, state.qt, s, config)
    out = Field(state.y, Lq + nq, Lqt + nqt)
    if not out.is_finite():
        raise SolverDivergence(f"non-finite right-hand side at s={s}")
    return out


def _explicit_terms(y, q, qt, s, config: SolverConfig):
    nq = np.zeros_like(q)
    nqt = np.zeros_like(qt)
    if config.potential:
        V = profile.potential_V(y, s)
        nq += V * q
        nqt += V * qt
    if config.nonlinear:
        nq += q * q - qt * qt
        nqt += 2.0 * q * qt
    if config.residual:
        nq += profile.residual_R(y, s)
    return nq, nqt


class _FlatState:
    """Exact solution of W' = -W + W² for the spatially constant outer state.

    Used as the Dirichlet value at ±ymax: W = φ + q + i q̃ there, so the
    boundary values of (q, q̃) follow from W(s) - φ(ymax, s).
    """

    def __init__(self, W0: complex, s0: float):
        self.s0 = s0
        self.W0 = W0
        self.C = (1.0 / W0 - 1.0) if W0 != 0 else None

    def __call__(self, s: float) -> complex:
        if self.C is None:
            return 0.0j
        return 1.0 / (1.0 + self.C * np.exp(s - self.s0))


class Stepper:
    """Carries the factor-ready matrices for a fixed grid and step size."""

    def __init__(self, y: np.ndarray, config: SolverConfig):
        self.y = y
        self.config = config
        h = float(y[1] - y[0])
        ds = config.ds
        lower, diag, upper = L_tridiagonal(y, h, config.advection)
        n = y.size
        if config.bc == "neumann":
            # mirrored ghost node; the drift term vanishes at a zero slope
            upper = upper.copy()
            lower = lower.copy()
            diag = diag.copy()
            upper[0] = 2.0 / h**2
            diag[0] = -2.0 / h**2 + 1.0
            lower[-1] = 2.0 / h**2
            diag[-1] = -2.0 / h**2 + 1.0
        self._lower, self._diag, self._upper = lower, diag, upper
        ab = np.zeros((3, n))
        ab[0, 1:] = -0.5 * ds * upper[:-1]
        ab[1, :] = 1.0 - 0.5 * ds * diag
        ab[2, :-1] = -0.5 * ds * lower[1:]
        if config.bc == "dirichlet":
            ab[1, 0] = ab[1, -1] = 1.0
            ab[0, 1] = 0.0
            ab[2, -2] = 0.0
        self._ab = ab
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        self._flat: tuple[_FlatState, _FlatState] | None = None

    def attach_boundary(self, state: Field, s: float) -> None:
        ends = []
        for j in (0, -1):
            W0 = complex(profile.phi(state.y[j], s) + state.q[j], state.qt[j])
            ends.append(_FlatState(W0, s))
        self._flat = (ends[0], ends[1])

    def boundary_values(self, s: float) -> np.ndarray:
        """Dirichlet values [[q_left, qt_left], [q_right, qt_right]] at time s."""
        out = np.empty((2, 2))
        for i, (j, flat) in enumerate(zip((0, -1), self._flat)):
            W = flat(s)
            out[i] = (W.real - profile.phi(self.y[j], s), W.imag)
        return out

    def _coefficients(self, s: float):
        hit = self._cache.get(s)
        if hit is None:
            V = profile.potential_V(self.y, s) if self.config.potential else None
            R = profile.residual_R(self.y, s) if self.config.residual else None
            if len(self._cache) > 4:
                self._cache.clear()
            hit = self._cache[s] = (V, R)
        return hit

    def _explicit(self, u: np.ndarray, s: float) -> np.ndarray:
        V, R = self._coefficients(s)
        q, qt = u[:, 0], u[:, 1]
        out = np.zeros_like(u)
        if V is not None:
            out += V[:, None] * u
        if self.config.nonlinear:
            out[:, 0] += q * q - qt * qt
            out[:, 1] += 2.0 * q * qt
        if R is not None:
            out[:, 0] += R
        return out

    def _apply_plus(self, u: np.ndarray) -> np.ndarray:
        """(I + ds/2 L) u on the stepper's stencil (boundary rows handled by caller)."""
        c = 0.5 * self.config.ds
        out = u + c * self._diag[:, None] * u
        out[1:] += c * self._lower[1:, None] * u[:-1]
        out[:-1] += c * self._upper[:-1, None] * u[1:]
        return out

    def _solve(self, rhs_: np.ndarray, s_new: float) -> np.ndarray:
        if self.config.bc == "dirichlet":
            bv = self.boundary_values(s_new)
            rhs_[0] = bv[0]
            rhs_[-1] = bv[1]
        return solve_banded((1, 1), self._ab, rhs_, check_finite=False)

    def step(self, u: np.ndarray, s: float) -> np.ndarray:
        ds = self.config.ds
        s_new = s + ds
        # overflow is reported as SolverDivergence below, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            base = self._apply_plus(u)
            n0 = self._explicit(u, s)
            pred = self._solve(base + ds * n0, s_new)
            n1 = self._explicit(pred, s_new)
            new = self._solve(base + 0.5 * ds * (n0 + n1), s_new)
        if not np.all(np.isfinite(new)):
            raise SolverDivergence(f"non-finite state after step from s={s:.6f}")
        return new


def step(state: Field, s: float, ds: float, config: SolverConfig | None = None) -> Field:
    """Advance one IMEX step (convenience wrapper; rebuilds the matrices)."""
    config = replace(config or SolverConfig(), ds=ds)
    stepper = Stepper(state.y, config)
    stepper.attach_boundary(state, s)
    u = np.stack([state.q, state.qt], axis=1)
    new = stepper.step(u, s)
    return Field(state.y, new[:, 0].copy(), new[:, 1].copy())


@dataclass
class TrajectoryRecord:
    """Ticks of one evolution; shooting fills in the mode diagnostics."""

    s: list[float] = field(default_factory=list)
    fields: list[Field] = field(default_factory=list)
    modes: list = field(default_factory=list)
    status: str = "ok"  # ok | stopped | diverged
    message: str = ""
    exit: object = None
    params: object = None
    shrinking: object = None

    @property
    def s_end(self) -> float:
        return self.s[-1] if self.s else float("nan")


def extend_field(state: Field, ymax: float) -> Field:
    """Pad a field onto a wider grid with the same spacing, copying end values."""
    y = uniform_grid(ymax, state.h)
    pad = (y.size - state.y.size) // 2
    if pad <= 0:
        return state.copy()
    q = np.pad(state.q, pad, mode="edge")
    qt = np.pad(state.qt, pad, mode="edge")
    return Field(y, q, qt)


Observer = Callable[[Field, float], bool | None]


def evolve(
    initial: Field,
    s0: float,
    s_end: float,
    observer: Observer | None = None,
    config: SolverConfig | None = None,
    *,
    keep_fields: bool = True,
) -> TrajectoryRecord:
    """Step from s0 to s_end, calling ``observer(state, s)`` every cadence.

    The observer may return True to stop the run (recorded as "stopped").
    Step failures end the record with status "diverged".
    """
    if not s_end > s0:
        raise ValueError("s_end must exceed s0")
    config = config or SolverConfig()
    k = config.steps_per_tick
    n_steps = int(round((s_end - s0) / config.ds + 1e-9))
    n_steps -= n_steps % k

    state = initial
    record = TrajectoryRecord()
    stepper = Stepper(state.y, config)
    stepper.attach_boundary(state, s0)
    u = np.stack([state.q, state.qt], axis=1)

    def tick(s: float) -> bool:
        f = Field(stepper.y, u[:, 0].copy(), u[:, 1].copy())
        record.s.append(s)
        if keep_fields:
            record.fields.append(f)
        return bool(observer(f, s)) if observer is not None else False

    if tick(s0):
        record.status = "stopped"
        return record
    for n in range(1, n_steps + 1):
        s_prev = s0 + (n - 1) * config.ds
        try:
            u = stepper.step(u, s_prev)
        except SolverDivergence as exc:
            record.status = "diverged"
            record.message = str(exc)
            log.warning("trajectory diverged: %s", exc)
            return record
        s = s0 + n * config.ds
        if n % k == 0:
            if config.regrid and config.ymax is None:
                need = default_ymax(s, config.K0)
                if need > stepper.y[-1] + 1e-9:
                    grown = extend_field(Field(stepper.y, u[:, 0], u[:, 1]), need)
                    stepper = Stepper(grown.y, config)
                    stepper.attach_boundary(grown, s)
                    u = np.stack([grown.q, grown.qt], axis=1)
            if tick(s):
                record.status = "stopped"
                return record
    return record
