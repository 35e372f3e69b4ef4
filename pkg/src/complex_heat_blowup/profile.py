"""Closed-form coefficients of the rescaled system around the profile φ."""

from __future__ import annotations

from dataclasses import dataclass
from math import e

import numpy as np

DEFAULT_K0 = 10.0


@dataclass(frozen=True)
class ProfileConfig:
    K0: float = DEFAULT_K0
    s0: float = 20.0

    def __post_init__(self):
        if self.K0 < 1.0:
            raise ValueError(f"K0 must be >= 1, got {self.K0}")
        if self.s0 < e:
            raise ValueError(f"s0 must be >= e, got {self.s0}")


def _out(x):
    return x if np.ndim(x) else float(x)


def f_profile(z):
    z = np.asarray(z, dtype=float)
    return _out(8.0 / (8.0 + z * z))


def f_prime(z):
    z = np.asarray(z, dtype=float)
    return _out(-16.0 * z / (8.0 + z * z) ** 2)


def f_second(z):
    z = np.asarray(z, dtype=float)
    return _out((48.0 * z * z - 128.0) / (8.0 + z * z) ** 3)


def phi(y, s: float):
    """φ(y, s) = f(y/√s) + 1/(4s)."""
    y = np.asarray(y, dtype=float)
    return _out(8.0 * s / (8.0 * s + y * y) + 0.25 / s)


def potential_V(y, s: float):
    return _out(2.0 * (np.asarray(phi(y, s)) - 1.0))


def residual_R(y, s: float):
    """R = φ_yy - (y/2) φ_y - φ + φ² - φ_s.

    The profile ODE -(z/2) f' - f + f² = 0 cancels the O(1) part, leaving
    R = [f'' + z f'/2 + f/2 - 1/4]/s + 5/(16 s²) with z = y/√s.
    """
    y = np.asarray(y, dtype=float)
    z = y / np.sqrt(s)
    d = 8.0 + z * z
    f = 8.0 / d
    fp = -16.0 * z / d**2
    fpp = (48.0 * z * z - 128.0) / d**3
    return _out((fpp + 0.5 * z * fp + 0.5 * f - 0.25) / s + 5.0 / (16.0 * s * s))


def _smooth_exp(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi0(xi):
    """C∞ non-increasing bridge: 1 on [0, 1], 0 on [2, ∞)."""
    xi = np.abs(np.asarray(xi, dtype=float))
    a = _smooth_exp(2.0 - xi)
    b = _smooth_exp(xi - 1.0)
    return _out(a / (a + b))


def cutoff_chi(y, s: float, K0: float = DEFAULT_K0):
    """χ(y, s) = χ₀(|y| / (K₀ √s))."""
    y = np.asarray(y, dtype=float)
    return chi0(np.abs(y) / (K0 * np.sqrt(s)))


def cutoff_chi_ds(y, s: float, K0: float = DEFAULT_K0):
    """∂χ/∂s, needed for exact mode derivatives of χ q."""
    y = np.asarray(y, dtype=float)
    xi = np.abs(y) / (K0 * np.sqrt(s))
    a = _smooth_exp(2.0 - xi)
    b = _smooth_exp(xi - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(a > 0, a / np.square(2.0 - xi), 0.0) * -1.0
        db = np.where(b > 0, b / np.square(xi - 1.0), 0.0)
        dchi = (da * (a + b) - a * (da + db)) / np.square(a + b)
    dchi = np.where((xi > 1.0) & (xi < 2.0), dchi, 0.0)
    # dξ/ds = -ξ / (2s)
    return _out(dchi * (-xi / (2.0 * s)))
