"""Hermite eigenfunctions of L = d²/dy² - (y/2) d/dy + 1 and quadrature for L²_ρ.

The weight is ρ(y) = exp(-y²/4) / sqrt(4π), a normal density with variance 2,
so ∫ρ = 1 and the eigenfunctions h_m are the probabilists' Hermite
polynomials dilated by sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

MAX_DEGREE = 30

_RHO_NORM = 1.0 / np.sqrt(4.0 * np.pi)


def _check_degree(m: int) -> None:
    if m < 0:
        raise ValueError(f"Hermite degree must be non-negative, got {m}")
    if m > MAX_DEGREE:
        raise ValueError(f"Hermite degree {m} exceeds supported cap {MAX_DEGREE}")


def hermite_coefficients(m: int) -> list[int]:
    """Exact integer coefficients of h_m, indexed by power of y."""
    _check_degree(m)
    coeffs = [0] * (m + 1)
    for n in range(m // 2 + 1):
        coeffs[m - 2 * n] = (-1) ** n * factorial(m) // (factorial(n) * factorial(m - 2 * n))
    return coeffs


def hermite(m: int, y):
    """Evaluate h_m(y) = sum_n m!/(n!(m-2n)!) (-1)^n y^(m-2n).

    Works on scalars and arrays. Coefficients are exact integers and only
    converted to float for the Horner evaluation.
    """
    coeffs = hermite_coefficients(m)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for c in reversed(coeffs):
        out = out * y + float(c)
    return out if out.ndim else float(out)


def hermite_norm_sq(m: int) -> float:
    """∫ h_m² ρ dy = 2^m m!."""
    _check_degree(m)
    return float(2**m * factorial(m))


def rho(y):
    y = np.asarray(y, dtype=float)
    out = _RHO_NORM * np.exp(-0.25 * y * y)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights with sum(w * g(nodes)) ≈ ∫ g ρ dy."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def extent(self) -> float:
        return float(np.max(np.abs(self.nodes)))

    @classmethod
    def gauss_hermite(cls, n: int = 128) -> "QuadratureGrid":
        # physicists' rule integrates against exp(-x²); y = 2x maps it onto ρ
        x, w = np.polynomial.hermite.hermgauss(n)
        return cls(nodes=2.0 * x, weights=w / np.sqrt(np.pi))

    @classmethod
    def from_uniform(cls, y: np.ndarray) -> "QuadratureGrid":
        """Trapezoid rule on a uniform grid, times ρ.

        For smooth integrands that decay like ρ the trapezoid rule converges
        spectrally, so this is what the field diagnostics use.
        """
        y = np.asarray(y, dtype=float)
        h = y[1] - y[0]
        w = h * rho(y)
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls(nodes=y, weights=w)


def inner_rho(f, g, grid: QuadratureGrid) -> complex | float:
    """Quadrature for ∫ f conj(g) ρ dy."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != grid.nodes.shape or g.shape != grid.nodes.shape:
        raise ValueError(
            f"samples {f.shape}/{g.shape} do not match grid of {grid.nodes.shape[0]} nodes"
        )
    val = np.sum(grid.weights * f * np.conj(g))
    if np.iscomplexobj(val):
        return complex(val)
    return float(val)


def basis_matrix(nodes: np.ndarray, m_max: int) -> np.ndarray:
    """Rows h_0..h_{m_max} sampled at nodes, via h_{m+1} = y h_m - 2m h_{m-1}."""
    _check_degree(m_max)
    nodes = np.asarray(nodes, dtype=float)
    H = np.empty((m_max + 1, nodes.size))
    H[0] = 1.0
    if m_max >= 1:
        H[1] = nodes
    for m in range(1, m_max):
        H[m + 1] = nodes * H[m] - 2.0 * m * H[m - 1]
    return H
