"""Numerical laboratory for complex-valued blow-up of u_t = Δu + u² in 1-D.

The solution is followed in self-similar variables as a perturbation
(q, q̃) of the profile φ = f(y/√s) + 1/(4s), f(z) = 8/(8+z²), tracked
against the shrinking set V_A(s) × Ṽ_Ã(s) and steered by a four-parameter
search over the expanding modes.
"""

from .config import RunConfig, load_config
from .decomposition import ShrinkingParams, decompose, recompose
from .shooting import ShootParams, run_trajectory, search
from .solver import Field, SolverConfig, evolve

__all__ = [
    "Field",
    "RunConfig",
    "ShootParams",
    "ShrinkingParams",
    "SolverConfig",
    "decompose",
    "evolve",
    "load_config",
    "recompose",
    "run_trajectory",
    "search",
]
