"""Five-component splitting of (q, q̃) and the shrinking-set tests.

    q = q0 h0 + q1 h1 + q2 h2 + q_minus + q_e

with q_e = (1-χ) q, q_m the L²_ρ projection of χq onto h_m (dual function
h_m / ‖h_m‖²), and q_minus = χq - Σ q_m h_m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import e, log

import numpy as np

from .hermite import QuadratureGrid, basis_matrix, hermite_norm_sq
from .profile import cutoff_chi

_NORMS = np.array([hermite_norm_sq(m) for m in range(3)])


@dataclass
class ModeDecomposition:
    r0: float
    r1: float
    r2: float
    r_minus: np.ndarray
    r_e: np.ndarray
    y: np.ndarray = field(repr=False)

    @property
    def modes(self) -> np.ndarray:
        return np.array([self.r0, self.r1, self.r2])

    def __add__(self, other: "ModeDecomposition") -> "ModeDecomposition":
        return ModeDecomposition(
            self.r0 + other.r0,
            self.r1 + other.r1,
            self.r2 + other.r2,
            self.r_minus + other.r_minus,
            self.r_e + other.r_e,
            self.y,
        )


@dataclass(frozen=True)
class ShrinkingParams:
    A: float = 20.0
    At: float = 20.0
    Bt: float = 0.5
    eta: float = 0.05
    alpha: float = 2.025
    K0: float = 10.0
    s0: float = 20.0

    def __post_init__(self):
        if self.A < 1 or self.At < 1:
            raise ValueError("A and At must be >= 1")
        if not 0 < self.eta < 0.1:
            raise ValueError(f"eta must lie in (0, 1/10), got {self.eta}")
        if not 2 < self.alpha < 2 + self.eta:
            raise ValueError(f"alpha must lie in (2, 2+eta), got {self.alpha}")
        if abs(self.Bt) > 1:
            raise ValueError(f"|Bt| must be <= 1, got {self.Bt}")
        if self.K0 < 1:
            raise ValueError("K0 must be >= 1")
        if self.s0 < e:
            raise ValueError("s0 must be >= e")


@dataclass
class MembershipReport:
    member: bool
    usage: dict[str, float]
    worst: str

    @classmethod
    def from_usage(cls, usage: dict[str, float]) -> "MembershipReport":
        worst = max(usage, key=usage.get)
        return cls(member=all(v <= 1.0 for v in usage.values()), usage=usage, worst=worst)


def _projection_rows(y: np.ndarray) -> np.ndarray:
    """Rows k_m = h_m/‖h_m‖² times the quadrature weights, m = 0, 1, 2."""
    grid = QuadratureGrid.from_uniform(y)
    return basis_matrix(y, 2) * grid.weights / _NORMS[:, None]


def _check_extent(y: np.ndarray, s: float, K0: float) -> None:
    need = 2.0 * K0 * np.sqrt(s)
    if y[-1] < need or y[0] > -need:
        raise ValueError(
            f"grid half-width {y[-1]:.3f} does not cover the cutoff support {need:.3f}"
        )


def decompose(g: np.ndarray, y: np.ndarray, s: float, K0: float = 10.0) -> ModeDecomposition:
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_extent(y, s, K0)
    chi = cutoff_chi(y, s, K0)
    gb = chi * g
    r = _projection_rows(y) @ gb
    H = basis_matrix(y, 2)
    r_minus = gb - r @ H
    return ModeDecomposition(
        float(r[0]), float(r[1]), float(r[2]), r_minus, (1.0 - chi) * g, y
    )


def recompose(d: ModeDecomposition) -> np.ndarray:
    return d.modes @ basis_matrix(d.y, 2) + d.r_minus + d.r_e


def decompose_pair(field_, s: float, K0: float = 10.0):
    """Decompose both components of a solver Field."""
    return decompose(field_.q, field_.y, s, K0), decompose(field_.qt, field_.y, s, K0)


def _usage(d: ModeDecomposition, b01: float, b2: float, bminus: float, be: float, prefix: str):
    weight = 1.0 + np.abs(d.y) ** 3
    return {
        f"{prefix}0": abs(d.r0) / b01,
        f"{prefix}1": abs(d.r1) / b01,
        f"{prefix}2": abs(d.r2) / b2,
        f"{prefix}minus": float(np.max(np.abs(d.r_minus) / weight)) / bminus,
        f"{prefix}e": float(np.max(np.abs(d.r_e))) / be,
    }


def bounds_VA(s: float, p: ShrinkingParams) -> tuple[float, float, float, float]:
    """(modes 0/1, mode 2, negative part per (1+|y|³), outer part) for V_A(s)."""
    return p.A / s**2, p.A**2 * log(s) / s**2, p.A / s**2, p.A**2 / np.sqrt(s)


def bounds_VAt(s: float, p: ShrinkingParams) -> tuple[float, float, float, float]:
    return (
        p.At / s**p.alpha,
        p.At**2 * s ** (-2.0 + p.eta),
        p.At / s**p.alpha,
        p.At**2 * s ** (-p.alpha + 1.5),
    )


def check_VA(d: ModeDecomposition, s: float, p: ShrinkingParams) -> MembershipReport:
    return MembershipReport.from_usage(_usage(d, *bounds_VA(s, p), prefix="q"))


def check_VAt(d: ModeDecomposition, s: float, p: ShrinkingParams) -> MembershipReport:
    return MembershipReport.from_usage(_usage(d, *bounds_VAt(s, p), prefix="qt"))


def check_pair(dq, dqt, s: float, p: ShrinkingParams) -> MembershipReport:
    usage = {**check_VA(dq, s, p).usage, **check_VAt(dqt, s, p).usage}
    return MembershipReport.from_usage(usage)


def global_bound(q: np.ndarray, qt: np.ndarray, s: float, p: ShrinkingParams) -> tuple[float, float]:
    """Measured constants in ‖q‖∞ ≤ C A²/√s and ‖q̃‖∞ ≤ C Ã²/s^(α-3/2)."""
    cq = float(np.max(np.abs(q))) * np.sqrt(s) / p.A**2
    cqt = float(np.max(np.abs(qt))) * s ** (p.alpha - 1.5) / p.At**2
    return cq, cqt
