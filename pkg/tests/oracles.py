"""Slow reference implementations used only to validate the fast paths."""

import numpy as np
from scipy.integrate import quad


def pv_fractional_hilbert(fn, r, x, tail=None):
    """PV quadrature of the half-line transform at one point.

    fn must be callable on scalars and decay fast enough that truncating
    at the tail argument (default 1e4 * max(x, 1)) is harmless.
    """
    upper = tail if tail is not None else 1e4 * max(x, 1.0)

    def smooth_ratio(y):
        # (y^2r - x^2r) / (y - x), stable near y = x
        ly = np.log(y / x)
        if abs(ly) < 1e-8:
            return 2.0 * r * x ** (2.0 * r - 1.0)
        return x ** (2.0 * r) * np.expm1(2.0 * r * ly) / (y - x)

    def phi(y):
        return -(2.0 * r / np.pi) * y ** (2.0 * r - 1.0) * fn(y) \
            / smooth_ratio(y)

    a, b = 0.5 * x, 1.5 * x
    inner, _ = quad(phi, a, b, weight="cauchy", wvar=x, limit=400)

    def outer(y):
        t2r = np.exp(2.0 * r * np.log(y / x))
        return (2.0 * r / np.pi) * y ** (2.0 * r - 1.0) * fn(y) \
            / (x ** (2.0 * r) * (1.0 - t2r))

    total = inner
    lo, _ = quad(outer, 0.0, a, limit=400)
    total += lo
    # split the upper range at decade boundaries: one adaptive pass over a
    # huge linear interval can miss localized mass entirely
    edges = [b]
    while edges[-1] < upper:
        edges.append(min(edges[-1] * 4.0, upper))
    for lo_e, hi_e in zip(edges[:-1], edges[1:]):
        piece, _ = quad(outer, lo_e, hi_e, limit=400)
        total += piece
    return total
