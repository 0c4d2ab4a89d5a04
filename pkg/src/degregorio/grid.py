"""Graded half-line grid, sampled functions, derivatives and weighted norms.

Functions live on a geometric (log-uniform) grid in the stretched radial
coordinate y = |x|**alpha > 0.  Because the grid excludes the origin, every
sampled function carries its value and slope at 0 explicitly; all other
modules rely on that Taylor data instead of extrapolating on demand.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, ParameterError, RangeError

DEFAULT_N = 4096
DEFAULT_Y_MIN = 1e-6
DEFAULT_Y_MAX = 1e3

# Near-zero Taylor coefficients are recovered by least squares over a
# geometrically thinned subsample below this cap; wide enough to average
# quadrature noise, small enough to keep truncation harmless.
TAYLOR_FIT_CAP = 3e-2


class Grid:
    """Strictly increasing geometric nodes on (0, y_max].

    Attributes:
        nodes: node coordinates, ascending, all positive
        log_nodes: natural log of the nodes (uniformly spaced)
        h: log spacing between consecutive nodes
        alpha: coordinate exponent recorded for bookkeeping
    """

    def __init__(self, nodes, y_max, alpha):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 64:
            raise ParameterError(f"grid needs >= 64 nodes, got {nodes.size}")
        if not np.all(np.diff(nodes) > 0) or nodes[0] <= 0:
            raise ParameterError("nodes must be positive and strictly increasing")
        if nodes[0] > 1e-4:
            raise ParameterError(f"smallest node must be <= 1e-4, got {nodes[0]:g}")
        if abs(nodes[-1] - y_max) > 1e-12 * y_max:
            raise ParameterError("largest node must equal y_max")
        self.nodes = nodes
        self.nodes.flags.writeable = False
        self.y_max = float(y_max)
        self.alpha = float(alpha)
        self.log_nodes = np.log(nodes)
        self.log_nodes.flags.writeable = False
        self.h = float((self.log_nodes[-1] - self.log_nodes[0]) / (nodes.size - 1))
        self.n = nodes.size

    def __repr__(self):
        return (f"Grid(n={self.n}, y_min={self.nodes[0]:.3g}, "
                f"y_max={self.y_max:.3g}, alpha={self.alpha:g})")


def make_grid(alpha, n=DEFAULT_N, y_min=DEFAULT_Y_MIN, y_max=DEFAULT_Y_MAX):
    """Build a geometric grid of n nodes from y_min to y_max.

    The node ratio is constant, so the grid is uniform in log y.
    """
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 64:
        raise ParameterError(f"node count must be >= 64, got {n}")
    if not 0 < y_min < 1 < y_max:
        raise ParameterError("bounds must satisfy 0 < y_min < 1 < y_max")
    nodes = np.exp(np.linspace(np.log(y_min), np.log(y_max), n))
    nodes[0] = y_min
    nodes[-1] = y_max
    return Grid(nodes, y_max, alpha)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weighted Sobolev norm parameters: k derivatives, L^p, weight x**gamma."""

    k: int
    p: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError("derivative count k must be >= 0")
        if not 1 < self.p < np.inf:
            raise ParameterError("p must lie in (1, inf)")

    @property
    def hardy_admissible(self):
        return self.gamma < (self.p - 1) / self.p


class GridFunction:
    """Real samples on a Grid plus explicit origin Taylor data.

    value_at_zero and slope_at_zero are always present; curvature_at_zero
    (the quadratic Taylor coefficient) is optional and propagates through
    arithmetic when both operands carry it.  Operators that can supply it
    exactly do so; consumers fall back to a near-zero fit otherwise.
    """

    __slots__ = ("grid", "values", "value_at_zero", "slope_at_zero",
                 "curvature_at_zero", "meta")

    def __init__(self, grid, values, value_at_zero=0.0, slope_at_zero=0.0,
                 curvature_at_zero=None, meta=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.nodes.shape:
            raise ParameterError("values must align with grid nodes")
        if not (np.isfinite(value_at_zero) and np.isfinite(slope_at_zero)):
            raise EvaluationError("value/slope at zero must be finite")
        self.grid = grid
        self.values = values
        self.values.flags.writeable = False
        self.value_at_zero = float(value_at_zero)
        self.slope_at_zero = float(slope_at_zero)
        self.curvature_at_zero = (None if curvature_at_zero is None
                                  else float(curvature_at_zero))
        self.meta = dict(meta) if meta else {}

    @classmethod
    def from_callable(cls, grid, fn, value_at_zero=None, slope_at_zero=None,
                      curvature_at_zero=None):
        """Sample a callable; missing Taylor data is taken by small-y limits."""
        values = np.asarray(fn(grid.nodes), dtype=float)
        if value_at_zero is None:
            value_at_zero = float(fn(np.array([grid.nodes[0] * 1e-6]))[0])
        if slope_at_zero is None:
            eps = grid.nodes[0] * 1e-3
            slope_at_zero = float(
                (fn(np.array([eps]))[0] - value_at_zero) / eps)
        return cls(grid, values, value_at_zero, slope_at_zero,
                   curvature_at_zero)

    def with_values(self, values, value_at_zero=None, slope_at_zero=None,
                    curvature_at_zero=None):
        return GridFunction(
            self.grid, values,
            self.value_at_zero if value_at_zero is None else value_at_zero,
            self.slope_at_zero if slope_at_zero is None else slope_at_zero,
            curvature_at_zero)

    @staticmethod
    def _both(a, b, fn):
        if a is None or b is None:
            return None
        return fn(a, b)

    # Pointwise arithmetic propagates the origin Taylor data exactly.
    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values,
                                self.value_at_zero + other.value_at_zero,
                                self.slope_at_zero + other.slope_at_zero,
                                self._both(self.curvature_at_zero,
                                           other.curvature_at_zero,
                                           lambda a, b: a + b))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values - other.values,
                                self.value_at_zero - other.value_at_zero,
                                self.slope_at_zero - other.slope_at_zero,
                                self._both(self.curvature_at_zero,
                                           other.curvature_at_zero,
                                           lambda a, b: a - b))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            curv = None
            if (self.curvature_at_zero is not None
                    and other.curvature_at_zero is not None):
                curv = (self.value_at_zero * other.curvature_at_zero
                        + self.slope_at_zero * other.slope_at_zero
                        + self.curvature_at_zero * other.value_at_zero)
            return GridFunction(
                self.grid, self.values * other.values,
                self.value_at_zero * other.value_at_zero,
                self.value_at_zero * other.slope_at_zero
                + self.slope_at_zero * other.value_at_zero, curv)
        if np.isscalar(other):
            curv = (None if self.curvature_at_zero is None
                    else self.curvature_at_zero * other)
            return GridFunction(self.grid, self.values * other,
                                self.value_at_zero * other,
                                self.slope_at_zero * other, curv)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def times_y(self):
        """Multiply by the coordinate: shifts the Taylor data one order up."""
        return GridFunction(self.grid, self.grid.nodes * self.values,
                            0.0, self.value_at_zero, self.slope_at_zero)

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return (f"GridFunction(n={self.grid.n}, f(0)={self.value_at_zero:.3g}, "
                f"f'(0)={self.slope_at_zero:.3g})")


def _lagrange_derivative_weights(pts, m, order):
    """Weights of the order-th Lagrange derivative at stencil point m.

    Uses difference-product formulas (no monomial expansion), which stay
    accurate when the points are closely clustered.
    """
    pts = np.asarray(pts, dtype=float)
    k = pts.size
    tm = pts[m]
    w = np.zeros(k)
    others = [j for j in range(k) if j != m]
    recip = np.array([1.0 / (tm - pts[j]) for j in others])
    if order == 1:
        for pos, i in enumerate(others):
            prod = 1.0 / (pts[i] - tm)
            for j in others:
                if j == i:
                    continue
                prod *= (tm - pts[j]) / (pts[i] - pts[j])
            w[i] = prod
        w[m] = recip.sum()
    elif order == 2:
        for pos, i in enumerate(others):
            dprime = 1.0 / (pts[i] - tm)
            ssum = 0.0
            for j in others:
                if j == i:
                    continue
                dprime *= (tm - pts[j]) / (pts[i] - pts[j])
                ssum += 1.0 / (tm - pts[j])
            w[i] = 2.0 * dprime * ssum
        w[m] = recip.sum() ** 2 - (recip ** 2).sum()
    else:
        raise ParameterError("only orders 1 and 2 supported")
    # pin the diagonal so constants are annihilated exactly
    w[m] = -(w.sum() - w[m])
    return w


def _stencil_templates(grid, order):
    """Derivative weights for the 5 target positions of a geometric stencil.

    On a geometric grid every 5-point stencil is a scaled copy of
    exp([0, h, 2h, 3h, 4h]), so one weight row per target position serves
    the whole grid after dividing by the pivot node to the order-th power.
    """
    cache = grid.__dict__.setdefault("_stencil_cache", {})
    if order not in cache:
        rel = np.exp(grid.h * np.arange(5))
        cache[order] = np.array(
            [_lagrange_derivative_weights(rel, m, order) for m in range(5)])
    return cache[order]


def _taylor_fit(f, degree, y_cap, extra_power=None):
    """Least-squares near-zero fit with an optional fractional power.

    Returns (coeffs, frac_coef) where coeffs are the polynomial Taylor
    coefficients [c0 .. c_degree] and frac_coef multiplies y**extra_power.
    Functions produced by the fractional transform carry such a term, and
    fitting it explicitly keeps it out of the polynomial coefficients.
    """
    grid = f.grid
    c0, c1 = f.value_at_zero, f.slope_at_zero
    c2 = f.curvature_at_zero
    mask = grid.nodes <= y_cap
    idx = np.nonzero(mask)[0]
    if idx.size < degree + 3:
        idx = np.arange(min(grid.n, 8 * degree))
    take = np.unique(np.linspace(0, idx.size - 1, 48).astype(int))
    y = grid.nodes[idx[take]]
    resid = f.values[idx[take]] - c0 - c1 * y
    if c2 is not None and degree >= 2:
        resid -= c2 * y * y
    scale = y[-1]
    t = y / scale
    lowest = 2 if c2 is None else 3
    powers = list(range(lowest, degree + 1))
    cols = [t ** j for j in powers]
    use_frac = (extra_power is not None
                and (not powers
                     or min(abs(extra_power - j) for j in powers) > 0.05))
    if use_frac:
        cols.append(t ** extra_power)
    if cols:
        coef, *_ = np.linalg.lstsq(np.vstack(cols).T, resid, rcond=None)
    else:
        coef = np.zeros(0)
    out = np.zeros(degree + 1)
    out[0], out[1] = c0, c1
    if c2 is not None and degree >= 2:
        out[2] = c2
    for pos, j in enumerate(powers):
        out[j] = coef[pos] / scale ** j
    frac = coef[-1] / scale ** extra_power if use_frac else 0.0
    return out, float(frac)


def taylor_at_zero(f, degree=3, y_cap=TAYLOR_FIT_CAP):
    """Taylor coefficients of f at 0: [c0, c1, c2, ..., c_degree].

    c0 and c1 are the stored value/slope; the higher coefficients come from
    a least-squares polynomial fit over a geometrically thinned subsample
    below y_cap, which tolerates quadrature-level noise in the samples.
    """
    if degree <= 1:
        return np.array([f.value_at_zero, f.slope_at_zero][:degree + 1])
    coeffs, _ = _taylor_fit(f, degree, y_cap)
    return coeffs


# Below this radius a 5-point stencil no longer resolves curvature in double
# precision, so second derivatives switch to the near-zero Taylor fit.
SECOND_DERIVATIVE_SWITCH = 1e-2


def differentiate_values(f, order=1, _taylor=None):
    """Derivative node values by sliding 5-point Lagrange stencils."""
    grid = f.grid
    n = grid.n
    templates = _stencil_templates(grid, order)
    lows = np.clip(np.arange(n) - 2, 0, n - 5)
    m = np.arange(n) - lows
    idx = lows[:, None] + np.arange(5)[None, :]
    raw = np.einsum("ij,ij->i", templates[m], f.values[idx])
    out = raw / grid.nodes[lows] ** order
    if order == 2:
        # roundoff in the sampled values swamps stencil curvature at tiny y
        near = grid.nodes < SECOND_DERIVATIVE_SWITCH
        if np.any(near):
            c = taylor_at_zero(f, degree=4) if _taylor is None else _taylor
            yn = grid.nodes[near]
            out[near] = 2.0 * c[2] + 6.0 * c[3] * yn + 12.0 * c[4] * yn * yn
    return out


def differentiate(f, order=1):
    """Derivative by sliding 5-point Lagrange fits on the graded grid.

    Interior stencils are exact for quartics; the returned function's
    Taylor data at 0 comes from the input's stored data and near-zero fit.
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    coeffs = taylor_at_zero(f, degree=4)
    out = differentiate_values(f, order, _taylor=coeffs)
    if order == 1:
        v0, s0 = f.slope_at_zero, 2.0 * coeffs[2]
    else:
        v0, s0 = 2.0 * coeffs[2], 6.0 * coeffs[3]
    return GridFunction(f.grid, out, v0, s0)


def norm(f, spec, bar=False):
    """Discrete weighted Sobolev norm by trapezoid quadrature in y.

    Sum over j = 0..k of the L^p norm of x**gamma * f^(j); with bar=True the
    same sum for the scaled derivative x*f' is added.
    """
    total = _norm_sum(f, spec)
    if bar:
        yfx = differentiate(f, 1).times_y()
        total += _norm_sum(yfx, spec)
    return total


def derivative_chain(f, k):
    """[f, f', .., f^(k)] using direct second-order stencils where possible.

    Chaining first-order stencils twice amplifies node-level jitter; pairs
    of orders are therefore taken with the order-2 operator.
    """
    out = [f]
    for j in range(1, k + 1):
        if j == 1:
            out.append(differentiate(f, 1))
        else:
            out.append(differentiate(out[j - 2], 2))
    return out


def _norm_sum(f, spec):
    grid = f.grid
    y = grid.nodes
    weight = y ** spec.gamma if spec.gamma != 0.0 else np.ones_like(y)
    total = 0.0
    for g in derivative_chain(f, spec.k):
        integrand = np.abs(weight * g.values) ** spec.p
        if not np.all(np.isfinite(integrand)):
            raise EvaluationError("non-finite values in norm integrand")
        piece = np.trapezoid(integrand, y)
        # leading sliver [0, y_min]: linear model, only defined for gamma >= 0
        if spec.gamma >= 0:
            at0 = 0.0 if spec.gamma > 0 else abs(g.value_at_zero) ** spec.p
            piece += 0.5 * (at0 + integrand[0]) * y[0]
        total += piece ** (1.0 / spec.p)
    return total


def interpolate(f, x):
    """Cubic local interpolation; x = 0 returns the stored value at zero.

    Points below the first node use the stored Taylor data; points above
    y_max raise RangeError (callers needing the far field use tail models).
    """
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise RangeError("interpolation point must be >= 0")
    if np.any(x > f.grid.y_max * (1 + 1e-12)):
        raise RangeError("interpolation point beyond y_max")
    out = _interp_values(f, x)
    return float(out[0]) if scalar else out


def _interp_values(f, x):
    grid = f.grid
    y = grid.nodes
    out = np.empty_like(x)
    tiny = x < y[0]
    if np.any(tiny):
        # Hermite-style blend of origin Taylor data with the first node pair
        c = taylor_at_zero(f, degree=2)
        xt = x[tiny]
        out[tiny] = c[0] + c[1] * xt + c[2] * xt * xt
    rest = ~tiny
    if np.any(rest):
        xr = np.minimum(x[rest], y[-1])
        pos = (np.log(xr) - grid.log_nodes[0]) / grid.h
        lo = np.clip(np.floor(pos).astype(int) - 1, 0, grid.n - 4)
        vals = np.zeros(xr.size)
        # 4-point Lagrange in the original coordinate (exact for cubics)
        pts = y[lo[:, None] + np.arange(4)[None, :]]
        fv = f.values[lo[:, None] + np.arange(4)[None, :]]
        for i in range(4):
            li = np.ones(xr.size)
            for j in range(4):
                if j == i:
                    continue
                li *= (xr - pts[:, j]) / (pts[:, i] - pts[:, j])
            vals += li * fv[:, i]
        out[rest] = vals
    return out


def _panel_integral_templates(grid):
    """Cubic-panel integration weights for the geometric grid.

    Template rows integrate the Lagrange cubic through four consecutive
    relative nodes over one panel: row 0 for the first panel (one-sided),
    row 1 for interior panels, row 2 for the last panel.
    """
    cache = grid.__dict__.setdefault("_panel_cache", None)
    if cache is None:
        rel = np.exp(grid.h * np.arange(4))
        spans = {0: (rel[0], rel[1]), 1: (rel[1], rel[2]), 2: (rel[2], rel[3])}
        out = np.zeros((3, 4))
        for row, (a, b) in spans.items():
            # build in panel-centered coordinates: clustered nodes make the
            # monomial basis around 0 catastrophically ill-conditioned
            mid = 0.5 * (a + b)
            t = rel - mid
            for i in range(4):
                poly = np.poly1d([1.0])
                denom = 1.0
                for j in range(4):
                    if j == i:
                        continue
                    poly *= np.poly1d([1.0, -t[j]])
                    denom *= t[i] - t[j]
                anti = poly.integ()
                out[row, i] = (anti(b - mid) - anti(a - mid)) / denom
        cache = out
        grid._panel_cache = cache
    return cache


def cumulative_cubic(grid, values):
    """Cumulative integral from the first node, cubic-accurate per panel."""
    n = grid.n
    tpl = _panel_integral_templates(grid)
    rows = np.ones(n - 1, dtype=int)
    rows[0] = 0
    rows[-1] = 2
    lows = np.clip(np.arange(n - 1) - 1, 0, n - 4)
    idx = lows[:, None] + np.arange(4)[None, :]
    panels = np.einsum("ij,ij->i", tpl[rows], values[idx]) * grid.nodes[lows]
    out = np.empty(n)
    out[0] = 0.0
    np.cumsum(panels, out=out[1:])
    return out


def tail_coefficients(f, spread=2.0):
    """Fit f ~ a1*(y_max/y) + a2*(y_max/y)^2 from two well-separated nodes."""
    grid = f.grid
    k = max(1, int(round(np.log(spread) / grid.h)))
    i1, i0 = grid.n - 1, grid.n - 1 - k
    r = grid.y_max / grid.nodes[i0]
    # a1 + a2 = f[-1];  a1*r + a2*r^2 = f[i0]
    det = r * r - r
    a2 = (f.values[i0] - r * f.values[i1]) / det
    a1 = f.values[i1] - a2
    return a1, a2


def save_gridfunction(f, csv_path):
    """CSV with header y,value plus a JSON sidecar with the origin data."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "value"])
        for yv, fv in zip(f.grid.nodes, f.values):
            writer.writerow([f"{yv:.17g}", f"{fv:.17g}"])
    sidecar = {
        "value_at_zero": f.value_at_zero,
        "slope_at_zero": f.slope_at_zero,
        "alpha": f.grid.alpha,
        "y_max": f.grid.y_max,
    }
    with open(str(csv_path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_gridfunction(csv_path):
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    with open(str(csv_path) + ".json") as fh:
        sidecar = json.load(fh)
    grid = Grid(data[:, 0], sidecar["y_max"], sidecar["alpha"])
    return GridFunction(grid, data[:, 1], sidecar["value_at_zero"],
                        sidecar["slope_at_zero"])
