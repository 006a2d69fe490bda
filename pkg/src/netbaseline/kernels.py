"""Smoothing kernels, weight windows, and the shared quadrature grid.

All smoothing uses compactly supported symmetric kernels on [-1, 1] scaled
by a bandwidth h in hours: K_h(t, s) = K((s - t) / h) / h. Grid smoothing
integrates the kernel exactly over each grid cell (via its CDF) and samples
the smoothed function at the nodes; this reproduces constants and linear
functions to machine precision regardless of where the kernel's slope kinks
fall relative to the grid. Plain integrals over the grid use composite
trapezoid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

KERNEL_SHAPES = ("uniform", "triangular", "epanechnikov")


def _profile(shape: str, u):
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    if shape == "uniform":
        return np.where(a <= 1.0, 0.5, 0.0)
    if shape == "triangular":
        return np.maximum(1.0 - a, 0.0)
    if shape == "epanechnikov":
        return np.where(a <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    raise ValueError(f"unknown kernel shape {shape!r}")


def _cdf(shape: str, u):
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    if shape == "uniform":
        return (u + 1.0) / 2.0
    if shape == "triangular":
        neg = (1.0 + u) ** 2 / 2.0
        pos = 1.0 - (1.0 - u) ** 2 / 2.0
        return np.where(u < 0.0, neg, pos)
    if shape == "epanechnikov":
        return (2.0 + 3.0 * u - u**3) / 4.0
    raise ValueError(f"unknown kernel shape {shape!r}")


@dataclass(frozen=True)
class KernelSpec:
    shape: str = "triangular"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.shape not in KERNEL_SHAPES:
            raise ValueError(
                f"unknown kernel shape {self.shape!r}; choose from {KERNEL_SHAPES}"
            )
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def profile(self, u):
        return _profile(self.shape, u)

    def cdf(self, u):
        return _cdf(self.shape, u)


def kernel_at(kernel: KernelSpec, t, s):
    """K_h(t, s) = K((s - t) / h) / h, vectorised over t or s."""
    h = kernel.bandwidth
    return kernel.profile((np.asarray(s, float) - np.asarray(t, float)) / h) / h


# kink locations of each profile, needed for exact piecewise integration
_KINKS = {
    "uniform": (-1.0, 1.0),
    "triangular": (-1.0, 0.0, 1.0),
    "epanechnikov": (-1.0, 1.0),
}

_GL_NODES_8, _GL_WEIGHTS_8 = np.polynomial.legendre.leggauss(8)
_GL_NODES_48, _GL_WEIGHTS_48 = np.polynomial.legendre.leggauss(48)


def _gl_integral(f, lo: float, hi: float, nodes, weights) -> float:
    if hi <= lo:
        return 0.0
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    return float(half * np.sum(weights * f(mid + half * nodes)))


def _overlap(shape: str, v: float) -> float:
    """int K(u) K(u + v) du, exact via piecewise Gauss-Legendre."""
    lo, hi = max(-1.0, -1.0 - v), min(1.0, 1.0 - v)
    if hi <= lo:
        return 0.0
    cuts = set(_KINKS[shape])
    cuts.update(k - v for k in _KINKS[shape])
    pts = sorted(p for p in cuts if lo < p < hi)
    edges = [lo, *pts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += _gl_integral(
            lambda u: _profile(shape, u) * _profile(shape, u + v),
            a,
            b,
            _GL_NODES_8,
            _GL_WEIGHTS_8,
        )
    return total


@lru_cache(maxsize=None)
def _k2_by_shape(shape: str) -> float:
    # int_0^2 overlap(v)^2 dv; overlap is polynomial on [0,1] and [1,2]
    def sq(v):
        return np.asarray([_overlap(shape, float(x)) ** 2 for x in np.atleast_1d(v)])

    return _gl_integral(sq, 0.0, 1.0, _GL_NODES_48, _GL_WEIGHTS_48) + _gl_integral(
        sq, 1.0, 2.0, _GL_NODES_48, _GL_WEIGHTS_48
    )


def k2_constant(kernel: KernelSpec) -> float:
    """The squared-overlap constant int_0^2 (int K(u) K(u+v) du)^2 dv.

    Depends on the kernel shape only. Uniform: 1/6 exactly.
    """
    return _k2_by_shape(kernel.shape)


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform grid on [0, horizon] shared by every integral of a run."""

    horizon: float
    size: int = 4096

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.size < 8:
            raise ValueError("grid needs at least 8 points")

    @cached_property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.size)

    @property
    def spacing(self) -> float:
        return self.horizon / (self.size - 1)

    def integrate(self, y) -> float:
        """Composite trapezoid of node values over [0, horizon]."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.size,):
            raise ValueError("values are not aligned with this grid")
        return float(np.trapezoid(y, dx=self.spacing))

    def interp(self, t, y) -> np.ndarray:
        """Linear interpolation of grid node values at times t."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.size,):
            raise ValueError("values are not aligned with this grid")
        return np.interp(np.asarray(t, dtype=float), self.points, y)


@dataclass(frozen=True)
class BaselineCurve:
    """A baseline-scale curve sampled on the shared grid."""

    grid: QuadratureGrid
    values: np.ndarray
    kind: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError("curve values are not aligned with the grid")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class WeightFunction:
    """C^1 window: 1 on [inner_left, inner_right], cubic ramps of width
    ``ramp`` down to 0 on both sides, 0 beyond."""

    inner_left: float
    inner_right: float
    ramp: float

    def __post_init__(self):
        if not self.ramp > 0:
            raise ValueError("ramp width must be positive")
        if self.inner_left > self.inner_right:
            raise ValueError("inner_left must not exceed inner_right")

    @property
    def support(self) -> tuple[float, float]:
        return (self.inner_left - self.ramp, self.inner_right + self.ramp)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        up = np.clip((t - (self.inner_left - self.ramp)) / self.ramp, 0.0, 1.0)
        down = np.clip(((self.inner_right + self.ramp) - t) / self.ramp, 0.0, 1.0)
        x = np.minimum(up, down)
        return x * x * (3.0 - 2.0 * x)


def default_weight(horizon: float, bandwidth: float) -> WeightFunction:
    """Full-horizon default: 1 on [2h, T - 2h] with ramps of width 2h."""
    h = bandwidth
    if horizon <= 8 * h:
        raise ValueError("horizon too short for the default weight at this bandwidth")
    return WeightFunction(inner_left=2 * h, inner_right=horizon - 2 * h, ramp=2 * h)


def test_interval_weight(interval: tuple[float, float], bandwidth: float) -> WeightFunction:
    """Weight used under data splitting: support inset one bandwidth inside
    the test interval so every kernel window under the support stays inside
    the interval, 1 on [c + 3h, d - 3h], ramps of width 2h."""
    c, d = interval
    h = bandwidth
    if d - c <= 6 * h:
        raise ValueError(
            f"test interval of length {d - c:g} h is too short for bandwidth "
            f"{h:g} h; need length > 6h"
        )
    return WeightFunction(inner_left=c + 3 * h, inner_right=d - 3 * h, ramp=2 * h)


def smooth_values(values, kernel: KernelSpec, grid: QuadratureGrid) -> np.ndarray:
    """t -> int_0^T K_h(t, s) f(s) ds for node values f on the grid.

    The kernel factor is integrated exactly over each grid cell; f enters
    through its node values. Cells at 0 and T are half-width.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != (grid.size,):
        raise ValueError("values are not aligned with this grid")
    h = kernel.bandwidth
    if h > grid.horizon / 2:
        raise ValueError("bandwidth exceeds half the horizon")
    d = grid.spacing
    m = int(np.ceil(h / d)) + 1
    offsets = np.arange(-m, m + 1)
    taps = kernel.cdf((offsets * d + d / 2) / h) - kernel.cdf((offsets * d - d / 2) / h)
    out = np.convolve(f, taps[::-1], mode="same")
    # the convolution treats the first and last cells as full width; remove
    # the slivers that fall outside [0, T]
    t = grid.points
    sliver_lo = kernel.cdf((0.0 - t) / h) - kernel.cdf((-d / 2 - t) / h)
    sliver_hi = kernel.cdf((grid.horizon + d / 2 - t) / h) - kernel.cdf(
        (grid.horizon - t) / h
    )
    out -= f[0] * sliver_lo + f[-1] * sliver_hi
    return out


def smooth_curve(values, kernel: KernelSpec, grid: QuadratureGrid) -> BaselineCurve:
    """Kernel smoothing of grid node values, returned as a curve."""
    return BaselineCurve(
        grid=grid, values=smooth_values(values, kernel, grid), kind="smoothed"
    )


def fn_weight(kernel: KernelSpec, w: WeightFunction, r: float, s: float,
              grid: QuadratureGrid) -> float:
    """h-scaled kernel coincidence weight int h K_h(t,s) K_h(t,r) w(t) dt.

    Symmetric in (r, s) and zero when |r - s| > 2h.
    """
    h = kernel.bandwidth
    if abs(r - s) > 2 * h:
        return 0.0
    t = grid.points
    integrand = h * kernel_at(kernel, t, s) * kernel_at(kernel, t, r) * w(t)
    return grid.integrate(integrand)


def fn_weight_diagonal(kernel: KernelSpec, w: WeightFunction, r,
                       grid: QuadratureGrid) -> np.ndarray:
    """fn_weight(r, r) for an array of times r, sharing the grid.

    Only grid nodes within one bandwidth of each r contribute; computed in
    blocks to bound memory.
    """
    r = np.asarray(r, dtype=float)
    h = kernel.bandwidth
    t = grid.points
    d = grid.spacing
    out = np.zeros(r.shape)
    wt = w(t)
    block = 256
    for start in range(0, r.size, block):
        rb = r[start : start + block]
        lo = np.searchsorted(t, rb.min() - h)
        hi = np.searchsorted(t, rb.max() + h, side="right")
        if hi <= lo:
            continue
        tb = t[lo:hi]
        prof = kernel.profile((rb[:, None] - tb[None, :]) / h)
        integrand = (prof / h) ** 2 * h * wt[None, lo:hi]
        # trapezoid against the shared grid: interior support makes the
        # half-weight endpoints immaterial except at the domain edges
        edge_w = np.full(tb.size, d)
        if lo == 0:
            edge_w[0] = d / 2
        if hi == t.size:
            edge_w[-1] = d / 2
        out[start : start + block] = integrand @ edge_w
    return out


def kernel_event_sum(kernel: KernelSpec, grid: QuadratureGrid, times,
                     weights) -> np.ndarray:
    """t_i -> sum_e K_h(t_i, s_e) * w_e over sorted event times s_e."""
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    h = kernel.bandwidth
    t = grid.points
    out = np.zeros(grid.size)
    if times.size == 0:
        return out
    block = 512
    for start in range(0, grid.size, block):
        tb = t[start : start + block]
        lo = np.searchsorted(times, tb[0] - h)
        hi = np.searchsorted(times, tb[-1] + h, side="right")
        if hi <= lo:
            continue
        sb = times[lo:hi]
        vb = weights[lo:hi]
        prof = kernel.profile((sb[None, :] - tb[:, None]) / h) / h
        out[start : start + block] = prof @ vb
    return out
