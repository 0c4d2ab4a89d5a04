"""Hardy-type averaging operator and weighted-inequality ratio checks.

The operator I integrates the doubly-subtracted difference quotient

    If(x) = int_0^x (f(y) - f(0) - y f'(0)) / y^2 dy,

whose integrand tends to f''(0)/2 at the origin.  The ratio checks sample
weighted Sobolev quotients over seeded function families; they verify the
inequalities at desk scale rather than certifying suprema.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ParameterError, PreconditionError
from .grid import (GridFunction, WeightedNormSpec, derivative_chain,
                   differentiate, norm, taylor_at_zero)

__all__ = ["HardyReport", "apply_I", "hardy_ratio", "check_I_bounds",
           "hardy_family"]

# below this radius the subtracted quotient is evaluated from Taylor data
_TAYLOR_RADIUS = 1e-3


@dataclass(frozen=True)
class HardyReport:
    """Measured inequality quotient for one test function."""

    spec: WeightedNormSpec
    ratio: float
    function_id: str
    degenerate: bool = False


def _subtracted_quotient(f):
    """(f(y) - f(0) - y f'(0)) / y^2 on the nodes, Taylor form near 0."""
    grid = f.grid
    y = grid.nodes
    c = taylor_at_zero(f, degree=4)
    vals = np.empty(grid.n)
    near = y < _TAYLOR_RADIUS
    far = ~near
    vals[far] = (f.values[far] - c[0] - c[1] * y[far]) / y[far] ** 2
    yn = y[near]
    vals[near] = c[2] + c[3] * yn + c[4] * yn * yn
    return GridFunction(grid, vals, c[2], c[3]), c


def apply_I(f):
    """Cumulative integral of the subtracted quotient from 0 to x."""
    quotient, c = _subtracted_quotient(f)
    y = f.grid.nodes
    inner = cumulative_trapezoid(quotient.values, y, initial=0.0)
    # first panel [0, y_min] from the integrand's origin value
    first = 0.5 * (c[2] + quotient.values[0]) * y[0]
    return GridFunction(f.grid, inner + first, 0.0, c[2])


def hardy_ratio(f, spec, function_id="f"):
    """Quotient ||x^(gamma-k) f||_p / ||x^gamma f^(k)||_p.

    Requires gamma < (p-1)/p and f flat to order k at the origin (checked
    against the near-zero Taylor coefficients).
    """
    if spec.k < 1:
        raise ParameterError("hardy ratio needs k >= 1")
    if not spec.hardy_admissible:
        raise ParameterError(
            f"gamma must be < (p-1)/p = {(spec.p - 1) / spec.p:g}")
    sup = np.max(np.abs(f.values))
    if sup == 0.0:
        return HardyReport(spec, float("nan"), function_id, degenerate=True)
    c = taylor_at_zero(f, degree=max(2, spec.k - 1))
    for j in range(spec.k):
        if abs(c[j]) > 1e-6 * max(1.0, sup):
            raise PreconditionError(
                f"derivative {j} at 0 is {c[j]:g}; function not flat "
                f"to order {spec.k}")
    g = derivative_chain(f, spec.k)[-1]
    num = norm(f, WeightedNormSpec(0, spec.p, spec.gamma - spec.k))
    den = norm(g, WeightedNormSpec(0, spec.p, spec.gamma))
    return HardyReport(spec, float(num / den), function_id)


def check_I_bounds(f, k, p):
    """Two sampled quotients for the averaging-operator bounds.

    Returns (r1, r2) where r1 compares the derivative of If with f'' and
    r2 compares x If / (1 + x^2) with f' in one lower Sobolev order.
    """
    if k not in (0, 1, 2):
        raise ParameterError("k must be 0, 1 or 2")
    grid = f.grid
    quotient, _ = _subtracted_quotient(f)   # equals (If)'
    spec_k = WeightedNormSpec(k, p, 0.0)
    f2 = differentiate(f, 2)
    num1 = norm(quotient, spec_k)
    den1 = norm(f2, spec_k)
    r1 = HardyReport(spec_k, float(num1 / den1) if den1 > 0 else float("nan"),
                     "If_prime_vs_f2", degenerate=den1 == 0)

    If = apply_I(f)
    y = grid.nodes
    damped = GridFunction(grid, y * If.values / (1.0 + y * y), 0.0, 0.0)
    spec_low = WeightedNormSpec(max(k - 1, 1), p, 0.0)
    f1 = differentiate(f, 1)
    num2 = norm(damped, spec_k)
    den2 = norm(f1, spec_low)
    r2 = HardyReport(spec_k, float(num2 / den2) if den2 > 0 else float("nan"),
                     "xIf_damped_vs_f1", degenerate=den2 == 0)
    return r1, r2


def hardy_family(grid, k, count, seed):
    """Seeded test family: y^k polynomials under Gaussian envelopes."""
    rng = np.random.default_rng(seed)
    out = []
    y = grid.nodes
    for i in range(count):
        width = rng.uniform(0.4, 2.5)
        center = rng.uniform(0.0, 2.0)
        coeffs = rng.normal(size=3)
        env = np.exp(-((y - center) / width) ** 2 / 2.0)
        poly = coeffs[0] + coeffs[1] * y + coeffs[2] * y * y
        vals = y ** k * poly * env
        env0 = np.exp(-(center / width) ** 2 / 2.0)
        v0 = coeffs[0] * env0 if k == 0 else 0.0
        if k == 0:
            s0 = (coeffs[1] + coeffs[0] * center / width ** 2) * env0
        elif k == 1:
            s0 = coeffs[0] * env0
        else:
            s0 = 0.0
        out.append(GridFunction(grid, vals, v0, float(s0)))
    return out
