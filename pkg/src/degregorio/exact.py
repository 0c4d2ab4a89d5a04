"""Closed-form reference objects: the explicit steady profile and oracles.

For every alpha in (0, 1] the model has an explicit stretched-coordinate
steady profile with zero scaling correction, together with its transform:

    W(y)  = -2 sin(a*pi/2) y / (y^2 + 2 cos(a*pi/2) y + 1)
    HW(y) =  2 (cos(a*pi/2) y + 1) / (y^2 + 2 cos(a*pi/2) y + 1)

These anchor the linearization base point, the solver at a = 0, and the
evolution oracle for the classical vortex-stretching-only case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .grid import Grid, GridFunction

__all__ = [
    "ExactProfile", "exact_profile", "profile_w", "profile_hw",
    "self_similar_evaluate", "clm_exact_solution",
]


def profile_w(alpha, y):
    """Closed-form stretched profile at nodes y."""
    c, s = np.cos(alpha * np.pi / 2), np.sin(alpha * np.pi / 2)
    return -2.0 * s * y / (y * y + 2.0 * c * y + 1.0)


def profile_hw(alpha, y):
    """Closed-form transform of the stretched profile at nodes y."""
    c = np.cos(alpha * np.pi / 2)
    return 2.0 * (c * y + 1.0) / (y * y + 2.0 * c * y + 1.0)


@dataclass(frozen=True)
class ExactProfile:
    """The explicit steady pair and its scaling correction (zero)."""

    alpha: float
    w: GridFunction
    hw: GridFunction
    lam: float = 0.0


def exact_profile(alpha, grid: Grid) -> ExactProfile:
    """Sample the closed-form pair on a grid with exact origin data.

    The profile vanishes at 0 with slope -2 sin(a*pi/2); its transform
    equals 2 at 0 with slope -2 cos(a*pi/2).
    """
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    c, s = np.cos(alpha * np.pi / 2), np.sin(alpha * np.pi / 2)
    y = grid.nodes
    w = GridFunction(grid, profile_w(alpha, y), 0.0, -2.0 * s,
                     curvature_at_zero=4.0 * s * c)
    hw = GridFunction(grid, profile_hw(alpha, y), 2.0, -2.0 * c,
                      curvature_at_zero=2.0 * (2.0 * c * c - 1.0))
    return ExactProfile(alpha=float(alpha), w=w, hw=hw, lam=0.0)


def self_similar_evaluate(profile: GridFunction, lam, alpha, x, t):
    """Evaluate the self-similar ansatz in the original variable.

    Returns sgn(x) (1-t)^-1 W(|x|^alpha / (1-t)^(1+lam)); the original
    variable therefore rescales with exponent (1+lam)/alpha.
    """
    if t >= 1:
        raise DomainError("ansatz only defined for t < 1")
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.abs(x) ** alpha / (1.0 - t) ** (1.0 + lam)
    vals = _evaluate_with_tail(profile, y)
    out = np.sign(x) * vals / (1.0 - t)
    return float(out[0]) if scalar else out


def _evaluate_with_tail(profile, y):
    """Interpolate, extending past y_max with the 1/y decay model."""
    from .grid import interpolate, tail_coefficients

    y_max = profile.grid.y_max
    inside = y <= y_max
    out = np.empty_like(y)
    if np.any(inside):
        out[inside] = interpolate(profile, y[inside])
    if np.any(~inside):
        a1, a2 = tail_coefficients(profile)
        r = y_max / y[~inside]
        out[~inside] = a1 * r + a2 * r * r
    return out


def clm_exact_solution(x, t):
    """Exact evolution of the built-in datum w0(x) = -2x/(1+x^2) at a = 0.

    Closed form 4 w0 / ((2 - t Hw0)^2 + t^2 w0^2) with Hw0 = 2/(1+x^2);
    algebraically identical to the self-similar ansatz for the alpha = 1
    profile (see tests for the symbolic identity).
    """
    if t >= 1:
        raise DomainError("solution blows up at t = 1")
    x = np.asarray(x, dtype=float)
    w0 = -2.0 * x / (1.0 + x * x)
    hw0 = 2.0 / (1.0 + x * x)
    out = 4.0 * w0 / ((2.0 - t * hw0) ** 2 + t * t * w0 * w0)
    return float(out) if out.ndim == 0 else out
