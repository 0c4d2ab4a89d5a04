"""Fractional Hilbert transform on half-line functions.

The operator

    H(r) f(x) = (1/pi) PV int_0^inf 2 r y^(2r-1) f(y) / (x^2r - y^2r) dy

is scale invariant, so on a geometric grid it becomes a principal-value
convolution in u = log y with kernel 2r / (exp(2rw) - 1).  Each transform
is one FFT convolution plus:

  * an even-bump subtraction that renders the integrand smooth at the
    singular node (the bump's PV integral is known since the kernel's
    symmetric part kappa(w) + kappa(-w) is explicitly integrable),
  * Gregory-corrected trapezoid weights at the padded domain ends,
  * analytic remainders built on a linear model below the grid and a
    three-term 1/y expansion above it.

The same machinery, with modified kernels, evaluates the derivative
transfer forms that move one or two derivatives onto the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ParameterError, PreconditionError, SingularityError
from .grid import (GridFunction, WeightedNormSpec, differentiate,
                   differentiate_values, make_grid, norm, taylor_at_zero)

__all__ = [
    "KernelEval", "NormEstimate", "apply_fractional_hilbert",
    "hilbert_derivative", "kernel_chain", "estimate_l2_norm",
    "hilbert_slope_at_zero", "transform_origin_value",
    "L2_NORM_BOUND_SLOPE",
]

# proof constant for the L2 operator-norm bound: (1 + 20 sqrt(2) / (3 pi)) r
L2_NORM_BOUND_SLOPE = 1.0 + 20.0 * np.sqrt(2.0) / (3.0 * np.pi)

_BUMP_HALF_WIDTH = 0.4      # target half width of the subtraction bump in u
_GREGORY = np.array([-5.0 / 8.0, 1.0 / 6.0, -1.0 / 24.0])
# Slope of noisy outputs is fitted below this radius.  Kept small because
# transforms of smooth inputs carry a fractional y^(2r) term near 0 that a
# cubic fit must not see.
_SLOPE_FIT_CAP = 1e-3


def _kernel_main(r, w):
    """2r / (exp(2rw) - 1), stable for large |w| (limits 0 and -2r)."""
    z = 2.0 * r * w
    out = np.empty_like(z)
    big = z > 700.0
    out[big] = 0.0
    ok = ~big
    with np.errstate(divide="ignore"):
        out[ok] = 2.0 * r / np.expm1(z[ok])
    return out


def _kernel_deriv(r, k, w):
    """Kernel of the k-th derivative transfer: 2r e^{-kw}/(1 - e^{-2rw})."""
    num = np.exp(np.clip(-k * w, -700.0, 700.0))
    out = np.empty_like(w)
    pos = w > 0
    with np.errstate(divide="ignore"):
        out[pos] = 2.0 * r * num[pos] / (-np.expm1(-2.0 * r * w[pos]))
        neg = ~pos
        # multiply through by e^{2rw} to keep magnitudes bounded for w < 0
        out[neg] = 2.0 * r * np.exp(
            np.clip((2.0 * r - k) * w[neg], -700.0, 700.0)) / np.expm1(
                2.0 * r * w[neg])
    return out


class _PVPlan:
    """Precomputed quadrature data for one (grid, kernel) pair."""

    def __init__(self, grid, r, k=0):
        self.grid = grid
        self.r = float(r)
        self.k = int(k)
        h, n = grid.h, grid.n
        self.M = max(4, int(round(_BUMP_HALF_WIDTH / h)))
        self.P = self.M + 4
        self.h = h

        kernel = (lambda w: _kernel_main(r, w)) if k == 0 else (
            lambda w: _kernel_deriv(r, k, w))
        self.kernel = kernel

        D = n - 1 + self.P
        d = np.arange(-D, D + 1, dtype=float)
        tab = kernel(d * h) * h
        tab[D] = 0.0
        self.kernel_table = tab
        self.D = D

        # even part of the kernel against the bump: PV of the subtracted term
        A = self.M * h
        gl_x, gl_w = np.polynomial.legendre.leggauss(64)
        z = 0.5 * A * (gl_x + 1.0)
        pair = kernel(z) + kernel(-z)
        eta = (1.0 - (z / A) ** 2) ** 4
        bump_pv = 0.5 * A * np.sum(gl_w * pair * eta)
        dd = np.arange(1, self.M, dtype=float)
        eta_d = (1.0 - (dd / self.M) ** 2) ** 4
        pair_d = kernel(dd * h) + kernel(-dd * h)
        self.diag_coeff = bump_pv - h * np.sum(eta_d * pair_d)

        # analytic remainders: right tail in (ymax/y)^m, left sliver in y^m
        y = grid.nodes
        glx, glw = np.polynomial.legendre.leggauss(24)
        sig = 0.5 * (glx + 1.0)
        sw = 0.5 * glw
        y_r = grid.y_max * np.exp(self.P * h)
        wmat = np.log(y[:, None] * sig[None, :] / y_r)
        kv = kernel(wmat)
        decay = grid.y_max / y_r
        self.rem_right = [
            (decay ** m) * (kv * (sig ** (m - 1))[None, :]) @ sw
            for m in (1, 2, 3)]
        y_l = y[0] * np.exp(-self.P * h)
        wmat = np.log(y[:, None] / (y_l * sig[None, :]))
        kv = kernel(wmat)
        self.rem_left = [
            (y_l ** m) * (kv * (sig ** (m - 1))[None, :]) @ sw
            for m in (0, 1)]

        # Gregory corrections at the padded ends
        self.end_left_idx = np.arange(3)              # pad array positions
        self.end_right_idx = np.arange(n + 2 * self.P - 1,
                                       n + 2 * self.P - 4, -1)
        # trapezoid weights over the real grid for the x -> 0 limit integral
        wq = np.full(n, h)
        wq[:3] += h * _GREGORY
        wq[-3:] += h * _GREGORY[::-1]
        self.limit_weights = wq

    def pad_values(self, left_coeffs, right_coeffs):
        grid = self.grid
        h, P = self.h, self.P
        y_left = grid.nodes[0] * np.exp(-h * np.arange(P, 0, -1))
        y_right = grid.y_max * np.exp(h * np.arange(1, P + 1))
        c0, c1 = left_coeffs
        left = c0 + c1 * y_left
        t = grid.y_max / y_right
        a1, a2, a3 = right_coeffs
        right = a1 * t + a2 * t * t + a3 * t ** 3
        return left, right

    def convolve(self, g_padded):
        out = fftconvolve(g_padded, self.kernel_table)
        s = self.P + self.D
        return out[s:s + self.grid.n]

    def apply_core(self, g_vals, gu_prime, left_coeffs, right_coeffs):
        """pi times the PV integral at every node."""
        left, right = self.pad_values(left_coeffs, right_coeffs)
        gp = np.concatenate([left, g_vals, right])
        total = self.convolve(gp)
        total += self.diag_coeff * g_vals
        total -= self.h * gu_prime
        # Gregory end corrections (kernel at signed distances to end nodes)
        n, P = self.grid.n, self.P
        i = np.arange(n)
        for k3, delta in enumerate(_GREGORY):
            jl = self.end_left_idx[k3]
            jr = self.end_right_idx[k3]
            dl = (i + P - jl) * self.h
            dr = (i + P - jr) * self.h
            total += delta * self.h * (self.kernel(dl) * gp[jl]
                                       + self.kernel(dr) * gp[jr])
        a1, a2, a3 = right_coeffs
        total += a1 * self.rem_right[0] + a2 * self.rem_right[1] \
            + a3 * self.rem_right[2]
        c0, c1 = left_coeffs
        total += c0 * self.rem_left[0] + c1 * self.rem_left[1]
        return total


def _plan(grid, r, k=0):
    cache = grid.__dict__.setdefault("_pv_plans", {})
    key = (round(float(r), 12), k)
    if key not in cache:
        cache[key] = _PVPlan(grid, r, k)
    return cache[key]


def _tail_fit3(f):
    """Collocate a1 t + a2 t^2 + a3 t^3 (t = ymax/y) at three spread nodes."""
    grid = f.grid
    k = max(1, int(round(np.log(2.0) / grid.h)))
    idx = [grid.n - 1, grid.n - 1 - k, grid.n - 1 - 2 * k]
    t = grid.y_max / grid.nodes[idx]
    V = np.vander(t, 4, increasing=True)[:, 1:]
    return np.linalg.solve(V, f.values[idx])


def _fit_slope_at_zero(grid, values, v0, cap=_SLOPE_FIT_CAP):
    """Least-squares slope of noisy samples near 0, intercept pinned."""
    idx = np.nonzero(grid.nodes <= cap)[0]
    if idx.size < 8:
        idx = np.arange(min(grid.n, 16))
    take = np.unique(np.linspace(0, idx.size - 1, 40).astype(int))
    y = grid.nodes[idx[take]]
    scale = y[-1]
    t = y / scale
    cols = np.vstack([t, t * t, t ** 3]).T
    coef, *_ = np.linalg.lstsq(cols, values[idx[take]] - v0, rcond=None)
    return float(coef[0] / scale)


def transform_origin_value(f, r, tail=None):
    """The x -> 0 limit of H(r) f: -(2r/pi) int_0^inf f(y)/y dy.

    Only converges when f vanishes at 0; the divergent constant part is
    dropped (regularized) otherwise.
    """
    grid = f.grid
    plan = _plan(grid, r, k=0)
    if tail is None:
        tail = _tail_fit3(f)
    core = float(plan.limit_weights @ f.values)
    c = taylor_at_zero(f, degree=2)
    left_piece = f.slope_at_zero * grid.nodes[0] \
        + 0.5 * c[2] * grid.nodes[0] ** 2
    right_piece = tail[0] + tail[1] / 2.0 + tail[2] / 3.0
    return -(2.0 * r / np.pi) * (core + left_piece + right_piece)


def apply_fractional_hilbert(f, r):
    """Apply H(r) to a sampled half-line function.

    The value at 0 is set by the limit quadrature -(2r/pi) int f(y)/y dy,
    which only converges when f vanishes at 0; otherwise it is regularized
    and flagged in the result metadata.  A slowly decaying input (|f(ymax)|
    times ymax large next to sup |f|) gets a tail-model warning attached.
    """
    if r < 1:
        raise ParameterError(f"transform order must be >= 1, got {r}")
    grid = f.grid
    plan = _plan(grid, r, k=0)
    gu_prime = grid.nodes * differentiate_values(f, 1)
    tail = _tail_fit3(f)
    left = (f.value_at_zero, f.slope_at_zero)
    total = plan.apply_core(f.values, gu_prime, left, tail)
    values = total / np.pi

    meta = {}
    sup = max(np.max(np.abs(f.values)), 1e-300)
    if abs(f.values[-1]) * grid.y_max > 20.0 * sup:
        meta["tail_warning"] = "input decays slower than 1/y at the grid end"
    if abs(f.value_at_zero) > 1e-10 * sup:
        meta["origin_warning"] = "f(0) != 0: limit at 0 regularized"

    v0 = transform_origin_value(f, r, tail=tail)
    s0 = _fit_slope_at_zero(grid, values, v0)
    return GridFunction(grid, values, v0, s0, meta=meta)


def transform_difference_ratio(f, r):
    """(H(r)f(x) - H(r)f(0)) / x without the cancelling difference.

    Combining the two kernels gives 2r x^(2r-1) / (x^2r - y^2r) acting on
    f(y)/y, which is the first derivative-transfer kernel; evaluating it
    directly keeps the ratio accurate down to the smallest nodes.
    """
    if r < 1:
        raise ParameterError(f"transform order must be >= 1, got {r}")
    grid = f.grid
    y = grid.nodes
    c = taylor_at_zero(f, degree=2)
    ratio = GridFunction(grid, f.values / y, f.slope_at_zero, float(c[2]))
    plan = _plan(grid, r, k=1)
    gu_prime = y * differentiate_values(ratio, 1)
    tail = _tail_fit3(ratio)
    left = (ratio.value_at_zero, ratio.slope_at_zero)
    total = plan.apply_core(ratio.values, gu_prime, left, tail)
    values = total / np.pi
    v0 = _fit_origin_value(grid, values)
    s0 = _fit_slope_at_zero(grid, values, v0)
    return GridFunction(grid, values, v0, s0)


def _fit_origin_value(grid, values, cap=_SLOPE_FIT_CAP):
    """Extrapolate noisy node values to 0 with a low-order fit."""
    idx = np.nonzero(grid.nodes <= cap)[0]
    if idx.size < 8:
        idx = np.arange(min(grid.n, 16))
    take = np.unique(np.linspace(0, idx.size - 1, 40).astype(int))
    y = grid.nodes[idx[take]]
    scale = y[-1]
    t = y / scale
    cols = np.vstack([np.ones_like(t), t, t * t]).T
    coef, *_ = np.linalg.lstsq(cols, values[idx[take]], rcond=None)
    return float(coef[0])


def hilbert_derivative(f, r, k):
    """Derivative transfer: the k-th derivative of H(r) f computed by
    moving k derivatives onto f (valid when f vanishes at 0)."""
    if k not in (1, 2):
        raise ParameterError("derivative transfer implemented for k = 1, 2")
    if r < 1:
        raise ParameterError(f"transform order must be >= 1, got {r}")
    sup = max(np.max(np.abs(f.values)), 1e-300)
    if abs(f.value_at_zero) > 1e-10 * sup:
        raise PreconditionError("derivative transfer requires f(0) = 0")
    grid = f.grid
    plan = _plan(grid, r, k=k)
    fk = differentiate(f, 1) if k == 1 else differentiate(f, 2)
    g = fk.values
    gu_prime = grid.nodes * differentiate_values(fk, 1)
    gf = GridFunction(grid, g, fk.value_at_zero, fk.slope_at_zero)
    tail = _tail_fit3(gf)
    left = (fk.value_at_zero, fk.slope_at_zero)
    total = plan.apply_core(g, gu_prime, left, tail)
    values = total / np.pi
    v0 = float(values[0])
    s0 = _fit_slope_at_zero(grid, values, v0)
    return GridFunction(grid, values, v0, s0)


@dataclass(frozen=True)
class KernelEval:
    """The four members of the comparison chain at one (r, t) pair."""

    r: float
    t: float
    k1: float
    k2: float
    k3: float
    k4: float
    ordering_ok: bool


def _pow2r(t, r):
    if t == 0.0:
        return 0.0
    return float(np.exp(np.clip(2.0 * r * np.log(t), -745.0, 709.0)))


def kernel_chain(r, t, slack=1e-12):
    """Evaluate the kernel comparison chain at (r, t), t != 1.

    For t in [0, 1) the chain is checked literally; for t > 1 the verdict
    uses the cleared-denominator equivalents (both denominators flip sign).
    """
    if r < 1:
        raise ParameterError(f"chain requires r >= 1, got {r}")
    if t == 1.0:
        raise SingularityError("chain members are singular at t = 1")
    t2r = _pow2r(t, r)
    k1 = 2.0 * r * t2r / t / (1.0 - t2r) if t > 0 else 0.0
    k2 = 2.0 * t / (1.0 - t * t)
    k3 = 2.0 * r * t / (1.0 - t2r)
    k4 = k1 + 2.0 * r
    if t < 1.0:
        scale = max(abs(k1), abs(k2), abs(k3), abs(k4), 1.0)
        ok = (k1 <= k2 + slack * scale and k2 <= k3 + slack * scale
              and k3 <= k4 + slack * scale)
    else:
        # cleared forms: (r-1)t^2r + 1 >= r t^(2r-2);  t^2r + r - 1 >= r t^2;
        # |t - t^(2r-1)| <= |1 - t^2r|
        t2rm2 = t2r / (t * t)
        c1 = (r - 1.0) * t2r + 1.0 >= r * t2rm2 * (1.0 - slack)
        c2 = t2r + r - 1.0 >= r * t * t * (1.0 - slack)
        c3 = abs(t - t2r / t) <= abs(1.0 - t2r) * (1.0 + slack)
        ok = bool(c1 and c2 and c3)
    return KernelEval(float(r), float(t), k1, k2, k3, k4, bool(ok))


@dataclass(frozen=True)
class NormEstimate:
    """Largest observed L2 quotient of H(r) over a probe family."""

    r: float
    estimated_norm: float
    bound: float
    probes: int


_DEFAULT_GRID = None


def _default_grid():
    global _DEFAULT_GRID
    if _DEFAULT_GRID is None:
        _DEFAULT_GRID = make_grid(1.0)
    return _DEFAULT_GRID


def random_probe(grid, rng):
    """Smooth decaying probe: odd polynomial times a Gaussian envelope."""
    width = rng.uniform(0.3, 3.0)
    center = rng.uniform(0.0, 3.0)
    powers = rng.integers(1, 4, size=3)
    coeffs = rng.normal(size=3)
    y = grid.nodes
    env = np.exp(-((y - center) / width) ** 2 / 2.0)
    poly = sum(c * y ** p for c, p in zip(coeffs, powers))
    vals = poly * env
    s0 = sum(c * (p == 1) for c, p in zip(coeffs, powers)) \
        * np.exp(-(center / width) ** 2 / 2.0)
    f = GridFunction(grid, vals, 0.0, float(s0))
    scale = norm(f, WeightedNormSpec(0, 2.0, 0.0))
    return f * (1.0 / scale)


def estimate_l2_norm(r, probe_count=20, seed=0, grid=None):
    """Largest L2 quotient ||H(r) f|| / ||f|| over seeded random probes."""
    if probe_count < 1:
        raise ParameterError("need at least one probe")
    grid = grid or _default_grid()
    rng = np.random.default_rng(seed)
    spec = WeightedNormSpec(0, 2.0, 0.0)
    best = 0.0
    for _ in range(probe_count):
        f = random_probe(grid, rng)
        quotient = norm(apply_fractional_hilbert(f, r), spec) / norm(f, spec)
        best = max(best, quotient)
    return NormEstimate(float(r), float(best),
                        L2_NORM_BOUND_SLOPE * float(r), int(probe_count))


def hilbert_slope_at_zero(f, alpha):
    """Measured slope at 0 of the stretched transform vs the trace rule.

    The predicted value is f'(0) cot(alpha pi / 2); at alpha = 1 the
    cotangent vanishes and the prediction is exactly 0.
    """
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    sup = max(np.max(np.abs(f.values)), 1e-300)
    if abs(f.value_at_zero) > 1e-10 * sup:
        raise PreconditionError("trace rule requires f(0) = 0")
    measured = apply_fractional_hilbert(f, 1.0 / alpha).slope_at_zero
    if alpha == 1.0:
        predicted = 0.0
    else:
        predicted = f.slope_at_zero / np.tan(alpha * np.pi / 2.0)
    return float(measured), float(predicted)
