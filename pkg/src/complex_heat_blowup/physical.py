"""Back to physical variables and the blow-up profile checks.

With T = e^{-s0} and blow-up point a = 0,

    u(x, t) = e^s W(x e^{s/2}, s),   s = -log(T - t),   W = φ + q + i q̃.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

from . import profile
from .hermite import hermite
from .solver import TrajectoryRecord


@dataclass
class PhysicalSample:
    x: np.ndarray
    t: np.ndarray
    v: np.ndarray
    vt: np.ndarray


def blowup_time(record: TrajectoryRecord) -> float:
    return float(np.exp(-record.s[0]))


def _W_at(record: TrajectoryRecord, k: int, y: np.ndarray) -> np.ndarray:
    """Complex W at tick k, cubic in y; beyond the grid the flat outer value."""
    f = record.fields[k]
    s = record.s[k]
    w = profile.phi(f.y, s) + f.q
    out = np.empty(np.shape(y), dtype=complex)
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) <= f.y[-1]
    if np.any(inside):
        out[inside] = CubicSpline(f.y, w)(y[inside]) + 1j * CubicSpline(f.y, f.qt)(y[inside])
    left = y < f.y[0]
    right = y > f.y[-1]
    out[left] = w[0] + 1j * f.qt[0]
    out[right] = w[-1] + 1j * f.qt[-1]
    return out


def W_at(record: TrajectoryRecord, s: float, y) -> np.ndarray:
    """W(y, s), linear in s between observer ticks."""
    svals = np.asarray(record.s)
    if not svals[0] - 1e-12 <= s <= svals[-1] + 1e-12:
        raise ValueError(f"s={s} outside the recorded window [{svals[0]}, {svals[-1]}]")
    k = int(np.clip(np.searchsorted(svals, s), 1, len(svals) - 1))
    s_lo, s_hi = svals[k - 1], svals[k]
    theta = (s - s_lo) / (s_hi - s_lo)
    if theta <= 1e-12:
        return _W_at(record, k - 1, y)
    if theta >= 1 - 1e-12:
        return _W_at(record, k, y)
    return (1 - theta) * _W_at(record, k - 1, y) + theta * _W_at(record, k, y)


def to_physical(record: TrajectoryRecord, T: float, x, t) -> PhysicalSample:
    """u(x, t) = e^s W(x e^{s/2}, s) on the grid x × t (t must map into the run)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    gap = T - t
    if np.any(gap <= 0):
        raise ValueError("t must be earlier than the blow-up time")
    s = -np.log(gap)
    lo, hi = record.s[0], record.s[-1]
    if np.any(s < lo - 1e-9) or np.any(s > hi + 1e-9):
        raise ValueError(f"requested t outside e^-{hi} < T - t <= e^-{lo}")
    v = np.empty((t.size, x.size))
    vt = np.empty_like(v)
    for i, si in enumerate(np.clip(s, lo, hi)):
        W = W_at(record, si, x * np.exp(si / 2))
        v[i] = np.exp(si) * W.real
        vt[i] = np.exp(si) * W.imag
    return PhysicalSample(x=x, t=t, v=v, vt=vt)


def profile_error(record: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    """√s · sup_y |W(y,s) - f(y/√s)| at each tick."""
    s = np.asarray(record.s)
    out = np.empty_like(s)
    for k, (sk, f) in enumerate(zip(record.s, record.fields)):
        W = profile.phi(f.y, sk) + f.q + 1j * f.qt
        out[k] = np.sqrt(sk) * np.max(np.abs(W - profile.f_profile(f.y / np.sqrt(sk))))
    return s, out


def _require_trapped(record: TrajectoryRecord) -> None:
    ev = record.exit
    if ev is not None and getattr(ev, "mode", "none") != "none":
        raise ValueError(f"record left the shrinking set at s={ev.s_exit} via {ev.mode}")


def null_mode_series(record: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    s = np.array([m.s for m in record.modes])
    qt2 = np.array([m.qt[2] for m in record.modes])
    return s, s**2 * qt2


def null_mode_limit(record: TrajectoryRecord) -> tuple[float, float]:
    """(l, max |s² q̃2 - l| over the last third) with l the tail average."""
    _require_trapped(record)
    _, series = null_mode_series(record)
    tail = series[len(series) - max(1, len(series) // 3):]
    l = float(np.mean(tail))
    return l, float(np.max(np.abs(tail - l)))


def imaginary_profile_check(
    record: TrajectoryRecord, R: float, l: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """s^α · sup_{|y|≤R} |q̃(y,s) - (l/s²) h2(y)| at each tick."""
    if l is None:
        l, _ = null_mode_limit(record)
    alpha = record.shrinking.alpha
    s = np.asarray(record.s)
    out = np.empty_like(s)
    for k, (sk, f) in enumerate(zip(record.s, record.fields)):
        if R > f.y[-1]:
            raise ValueError("R exceeds the grid")
        m = np.abs(f.y) <= R
        out[k] = sk**alpha * np.max(np.abs(f.qt[m] - l / sk**2 * hermite(2, f.y[m])))
    return s, out


@dataclass
class FinalProfilePoint:
    x0: float
    s_match: float  # -log(T - t0(x0))
    gap: float  # T - t0(x0)
    u_star: float
    reference: float  # 16 |log|x0|| / x0²
    ratio: float
    in_window: bool
    matching_error: float  # |W(K0√s, s) - f(K0)| at the matching time
    imag_scaled: float  # |W̃(K0√s, s)| ~ (T - t0)|ṽ*|


def matching_time(x0: float, K0: float, s_lo: float = 1.5, s_hi: float = 700.0) -> float:
    """s = -log(T - t0) solving |x0| = K0 √((T-t0)|log(T-t0)|)."""
    target = 2.0 * np.log(abs(x0) / K0)
    # log(e^{-s} s) is decreasing for s > 1
    g = lambda s: -s + np.log(s) - target  # noqa: E731
    if g(s_lo) < 0 or g(s_hi) > 0:
        raise ValueError(f"no matching time for x0={x0} in s∈[{s_lo}, {s_hi}]")
    return float(bisect(g, s_lo, s_hi, xtol=1e-13, rtol=4 * np.finfo(float).eps))


def final_profile(record: TrajectoryRecord, x_list, K0: float | None = None) -> list[FinalProfilePoint]:
    """u*(x0) ≈ (T - t0)^{-1} U_K0(1) = 8 / (K0² (T - t0)) against 16|log|x0||/x0².

    T - t0 is measured from the start of the run's own clock (T = e^{-s0}),
    which only shifts t0, not T - t0.
    """
    K0 = K0 if K0 is not None else record.shrinking.K0
    s_lo, s_hi = record.s[0], record.s[-1]
    out = []
    for x0 in x_list:
        s = matching_time(x0, K0)
        gap = float(np.exp(-s))
        u_star = 8.0 / (K0**2 * gap)
        ref = 16.0 * abs(np.log(abs(x0))) / x0**2
        inside = s_lo <= s <= s_hi
        if inside:
            W = complex(W_at(record, s, np.array([K0 * np.sqrt(s)]))[0])
            merr = abs(W.real - profile.f_profile(K0))
            imag = abs(W.imag)
        else:
            merr = imag = float("nan")
        out.append(FinalProfilePoint(x0, s, gap, u_star, ref, u_star / ref, inside, merr, imag))
    return out


def resolvable_x(record: TrajectoryRecord, K0: float, s_values) -> np.ndarray:
    """x0 whose matching time is s, for each s (inverse of matching_time)."""
    s = np.asarray(s_values, dtype=float)
    return K0 * np.sqrt(np.exp(-s) * s)


@dataclass
class PointVerdict:
    x0: float
    sup_series: np.ndarray  # sup_{|x-x0|≤|x0|/2} (T-t)|u| per tick
    bound_series: np.ndarray  # f(z) + 1/(4s) + C/√s with z = (|x0|/2)/√((T-t)|log(T-t)|)
    final: float
    verdict: str  # "blow-up point" | "regular"


def single_point_check(
    record: TrajectoryRecord,
    x_list,
    threshold: float = 0.1,
    C: float | None = None,
    n_sub: int = 64,
) -> list[PointVerdict]:
    """No-blow-up diagnostic below the ODE threshold (T-t)|u| ≤ η0."""
    s = np.asarray(record.s)
    if C is None:
        C = float(np.max(profile_error(record)[1]))
    out = []
    for x0 in x_list:
        sup = np.empty_like(s)
        for k, sk in enumerate(s):
            if x0 == 0:
                ys = np.array([0.0])
            else:
                ys = np.linspace(0.5 * x0, 1.5 * x0, n_sub) * np.exp(sk / 2)
            sup[k] = np.max(np.abs(_W_at(record, k, ys)))
        if x0 == 0:
            bound = np.full_like(s, np.nan)
        else:
            z = 0.5 * abs(x0) * np.exp(s / 2) / np.sqrt(s)
            bound = profile.f_profile(z) + 0.25 / s + C / np.sqrt(s)
        final = float(sup[-1])
        verdict = "blow-up point" if final > threshold else "regular"
        out.append(PointVerdict(float(x0), sup, bound, final, verdict))
    return out


def dominance_series(record: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s, (T-t)|v(0,t)|, (T-t)|ṽ(0,t)| |log(T-t)|²) from the centre node."""
    s = np.asarray(record.s)
    real = np.empty_like(s)
    imag = np.empty_like(s)
    for k in range(len(s)):
        W = complex(_W_at(record, k, np.array([0.0]))[0])
        real[k] = abs(W.real)
        imag[k] = abs(W.imag) * s[k] ** 2
    return s, real, imag
