"""Goodness-of-fit test for a parametric baseline against the smoothed
nonparametric one.

The statistic is the weighted L2 distance on the shared grid,

    T_n = int (alpha_hat(t) - alpha_smoothed(theta_hat, t))^2 w(t) dt,

standardised with plug-in estimates of its mean shift A_n and variance B:

    z = (a_hat^2 sqrt(h) T_n - A_n / sqrt(h)) / sqrt(B),

which is compared against the upper tail of the standard normal. The
plug-ins are built from the empirical edge fraction p_hat(t), the mean link
value among connected pairs xbar(t), and the scale constant a_hat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import EmptyRiskRegionError, NumericalError
from .estimators import (
    FitOptions,
    ParametricFit,
    PartialFit,
    fit_mle,
    fit_partial,
    nelson_aalen,
    parametric_baseline_curve,
    smoothed_parametric_baseline,
)
from .kernels import (
    BaselineCurve,
    KernelSpec,
    QuadratureGrid,
    WeightFunction,
    fn_weight_diagonal,
    k2_constant,
    smooth_values,
    test_interval_weight,
)
from .model import ModelSpec, StudyDesign
from .panel import PairPanel, clamp_epsilon
from .riskset import build_risk_data

DEFAULT_LEVELS = (0.10, 0.05, 0.01)


def edge_count_curve(panel: PairPanel, grid: QuadratureGrid) -> np.ndarray:
    """Number of pairs with the edge on, right-continuous on the grid."""
    starts_parts, ends_parts = [], []
    for rec in panel.pairs:
        s, e = rec.edge.on_intervals(0.0, panel.horizon)
        if s.size:
            starts_parts.append(s)
            ends_parts.append(e)
    if not starts_parts:
        return np.zeros(grid.size)
    starts = np.concatenate(starts_parts)
    ends = np.concatenate(ends_parts)
    breaks = np.unique(np.concatenate([[0.0, panel.horizon], starts, ends]))
    pos = np.concatenate([np.searchsorted(breaks, starts), np.searchsorted(breaks, ends)])
    sign = np.concatenate([np.ones(starts.size), -np.ones(ends.size)])
    order = np.lexsort((sign, pos))
    deltas = np.bincount(pos[order], weights=sign[order], minlength=breaks.size)
    step = np.cumsum(deltas)[:-1]
    idx = np.clip(np.searchsorted(breaks, grid.points, side="right") - 1, 0, step.size - 1)
    return step[idx]


def edge_fraction_curve(panel: PairPanel, grid: QuadratureGrid, clamp: bool = True):
    """Empirical edge fraction p_hat on the grid.

    Returns (values, epsilon) where epsilon is the clamp floor actually
    applied, or None when clamping is off.
    """
    frac = edge_count_curve(panel, grid) / panel.r_n
    if not clamp:
        return frac, None
    eps = clamp_epsilon(panel)
    return np.maximum(frac, eps), eps


def default_bandwidth(panel: PairPanel, grid: QuadratureGrid) -> float:
    """Default rule: h = (r_n * mean edge fraction)^(-1/5) * T / 4."""
    raw, _ = edge_fraction_curve(panel, grid, clamp=False)
    scale = panel.r_n * float(np.mean(raw))
    if scale <= 0:
        raise EmptyRiskRegionError("no edges ever on; cannot choose a bandwidth")
    return scale ** (-0.2) * panel.horizon / 4.0


def compute_xbar(panel: PairPanel, beta, grid: QuadratureGrid,
                 p_hat: Optional[np.ndarray] = None, clamp: bool = True) -> np.ndarray:
    """Mean link value among connected pairs: X_n(t; beta) / (r_n p_hat(t)).

    Points where the (possibly clamped) edge fraction vanishes get 0; the
    caller is responsible for checking positivity wherever it matters.
    """
    beta = np.asarray(beta, dtype=float)
    if p_hat is None:
        p_hat, _ = edge_fraction_curve(panel, grid, clamp=clamp)
    risk = build_risk_data(panel, (0.0, panel.horizon))
    xn = risk.risk_on_grid(beta, grid.points)
    denom = panel.r_n * p_hat
    return np.where(denom > 0, xn / np.where(denom > 0, denom, 1.0), 0.0)


def compute_a_n(p_hat, kernel: KernelSpec, w: WeightFunction,
                grid: QuadratureGrid, r_n: int) -> float:
    """Scale constant: (int int K_h(t,s) / (r_n p_hat(s)) w(t) ds dt)^(-1/2)."""
    p_hat = np.asarray(p_hat, dtype=float)
    if np.any(p_hat <= 0):
        raise EmptyRiskRegionError("edge fraction must be positive for a_hat")
    inner = smooth_values(1.0 / (r_n * p_hat), kernel, grid)
    total = grid.integrate(inner * w(grid.points))
    if not total > 0:
        raise NumericalError("nonpositive normalisation integral for a_hat")
    return float(total ** -0.5)


def compute_T_n(curve_np: BaselineCurve, curve_param: BaselineCurve,
                w: WeightFunction, grid: QuadratureGrid) -> float:
    """Weighted L2 distance between the two baseline curves on the grid."""
    if curve_np.grid != grid or curve_param.grid != grid:
        raise ValueError("curves must live on the shared grid")
    diff = curve_np.values - curve_param.values
    return grid.integrate(diff * diff * w(grid.points))


def compute_A_n(panel: PairPanel, interval, xbar, p_hat, a_hat: float,
                kernel: KernelSpec, w: WeightFunction, grid: QuadratureGrid) -> float:
    """Mean-shift plug-in: a_hat^2 sum over interval events of
    f_n(r, r) / (r_n p_hat(r) xbar(r))^2, with the plug-in curves linearly
    interpolated at the event times."""
    risk = build_risk_data(panel, interval)
    if risk.n_events == 0:
        return 0.0
    r = risk.event_times
    support = w.support
    h = kernel.bandwidth
    live = (r > support[0] - h) & (r < support[1] + h)
    if not np.any(live):
        return 0.0
    r = r[live]
    fn_diag = fn_weight_diagonal(kernel, w, r, grid)
    p_r = grid.interp(r, np.asarray(p_hat, dtype=float))
    xbar_r = grid.interp(r, np.asarray(xbar, dtype=float))
    denom = panel.r_n * p_r * xbar_r
    if np.any(denom <= 0):
        raise EmptyRiskRegionError("vanishing risk plug-in at an event time")
    total = float(np.sum(fn_diag / denom**2))
    return a_hat**2 * total


def compute_B(xbar, w: WeightFunction, alpha_param: BaselineCurve, gamma_hat,
              kernel: KernelSpec, grid: QuadratureGrid) -> float:
    """Variance plug-in: 4 K2 int xbar^-2 w^2 alpha^2 gamma dt."""
    if alpha_param.grid != grid:
        raise ValueError("alpha curve must live on the shared grid")
    xbar = np.asarray(xbar, dtype=float)
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    wv = w(grid.points)
    mask = wv > 0
    if np.any(xbar[mask] <= 0):
        raise EmptyRiskRegionError("xbar must be positive on the weight support")
    integrand = np.zeros(grid.size)
    integrand[mask] = (
        xbar[mask] ** -2
        * wv[mask] ** 2
        * alpha_param.values[mask] ** 2
        * gamma_hat[mask]
    )
    return 4.0 * k2_constant(kernel) * grid.integrate(integrand)


def local_alternative_drift(delta_values, kernel: KernelSpec, w: WeightFunction,
                            grid: QuadratureGrid) -> float:
    """int (int K_h(t,s) delta(s) ds)^2 w(t) dt for a drift curve delta."""
    smoothed = smooth_values(np.asarray(delta_values, dtype=float), kernel, grid)
    return grid.integrate(smoothed**2 * w(grid.points))


@dataclass(frozen=True)
class PlugInQuantities:
    grid: QuadratureGrid
    p_hat: np.ndarray
    xbar: np.ndarray
    gamma_hat: np.ndarray
    a_hat: float
    r_n: int
    clamp_epsilon: Optional[float]


def plug_in_quantities(panel: PairPanel, beta, kernel: KernelSpec,
                       w: WeightFunction, grid: QuadratureGrid,
                       clamp: bool = True) -> PlugInQuantities:
    """Edge fraction, mean link value, scale constant, and gamma curve."""
    p_hat, eps = edge_fraction_curve(panel, grid, clamp=clamp)
    wv = w(grid.points)
    if np.any(p_hat[wv > 0] <= 0):
        raise EmptyRiskRegionError("empty risk region inside the weight support")
    xbar = compute_xbar(panel, beta, grid, p_hat=p_hat)
    a_hat = compute_a_n(p_hat, kernel, w, grid, panel.r_n)
    gamma_hat = a_hat**4 / (panel.r_n * p_hat) ** 2
    return PlugInQuantities(
        grid=grid,
        p_hat=p_hat,
        xbar=xbar,
        gamma_hat=gamma_hat,
        a_hat=a_hat,
        r_n=panel.r_n,
        clamp_epsilon=eps,
    )


@dataclass(frozen=True)
class TestOptions:
    bandwidth_hours: Optional[float] = None
    kernel_shape: str = "triangular"
    grid_size: int = 4096
    clamp: bool = True
    levels: tuple[float, ...] = DEFAULT_LEVELS
    min_events: int = 1
    weight: Optional[WeightFunction] = None
    fit_options: FitOptions = field(default_factory=FitOptions)


@dataclass(frozen=True)
class TestReport:
    t_n: float
    a_hat: float
    A_n: float
    B: float
    h_hours: float
    z: float
    p_value: float
    decisions: dict
    fit_interval: tuple[float, float]
    test_interval: tuple[float, float]
    n_events_fit: int
    n_events_test: int
    tie_adjustments: int
    clamp_epsilon: Optional[float]
    kernel_shape: str
    grid_size: int
    weight_window: tuple[float, float, float]
    r_n: int
    n_vertices: int
    directed: bool
    partial_fit: PartialFit
    mle_fit: ParametricFit
    curves: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "t_n": self.t_n,
            "a_hat": self.a_hat,
            "A_n": self.A_n,
            "B": self.B,
            "h_hours": self.h_hours,
            "z": self.z,
            "p_value": self.p_value,
            "decisions": dict(self.decisions),
            "fit_interval": list(self.fit_interval),
            "test_interval": list(self.test_interval),
            "n_events_fit": self.n_events_fit,
            "n_events_test": self.n_events_test,
            "tie_adjustments": self.tie_adjustments,
            "clamp_epsilon": self.clamp_epsilon,
            "kernel": {"shape": self.kernel_shape, "bandwidth_hours": self.h_hours},
            "grid_size": self.grid_size,
            "weight_window": {
                "inner_left": self.weight_window[0],
                "inner_right": self.weight_window[1],
                "ramp": self.weight_window[2],
            },
            "r_n": self.r_n,
            "n_vertices": self.n_vertices,
            "directed": self.directed,
            "partial_fit": self.partial_fit.to_dict(),
            "mle_fit": self.mle_fit.to_dict(),
        }


def count_events(panel: PairPanel, interval) -> int:
    a, b = interval
    return int(
        sum(
            int(np.count_nonzero((rec.events > a) & (rec.events <= b)))
            for rec in panel.pairs
        )
    )


def run_test(panel: PairPanel, design: StudyDesign, model: ModelSpec,
             options: TestOptions = TestOptions()) -> TestReport:
    """Full pipeline: fit on the fit interval, compare baselines on the
    test interval, standardise, and decide."""
    if model.directed != panel.directed:
        raise ValueError("model and panel disagree about directedness")
    grid = QuadratureGrid(horizon=panel.horizon, size=options.grid_size)

    n_fit = count_events(panel, design.fit_interval)
    n_test = count_events(panel, design.test_interval)
    if min(n_fit, n_test) < options.min_events:
        raise NumericalError(
            f"insufficient events: fit {n_fit}, test {n_test}, "
            f"minimum {options.min_events}"
        )

    h = options.bandwidth_hours
    if h is None:
        h = default_bandwidth(panel, grid)
    kernel = KernelSpec(shape=options.kernel_shape, bandwidth=h)
    w = options.weight
    if w is None:
        w = test_interval_weight(design.test_interval, h)

    pfit = fit_partial(panel, model.link, design.fit_interval, options.fit_options)
    mfit = fit_mle(panel, model.baseline, model.link, design.fit_interval,
                   options.fit_options)

    curve_np = nelson_aalen(panel, pfit.beta_tilde, kernel, grid, design.test_interval)
    curve_s = smoothed_parametric_baseline(mfit.theta_hat, model.baseline, kernel, grid)
    curve_raw = parametric_baseline_curve(mfit.theta_hat, model.baseline, grid)

    plug = plug_in_quantities(panel, pfit.beta_tilde, kernel, w, grid,
                              clamp=options.clamp)
    wv = w(grid.points)
    if np.any(plug.xbar[wv > 0] <= 0):
        raise EmptyRiskRegionError("empty risk region inside the weight support")

    t_n = compute_T_n(curve_np, curve_s, w, grid)
    a_n_sq = plug.a_hat**2
    big_a = compute_A_n(panel, design.test_interval, plug.xbar, plug.p_hat,
                        plug.a_hat, kernel, w, grid)
    big_b = compute_B(plug.xbar, w, curve_raw, plug.gamma_hat, kernel, grid)
    if not big_b > 0:
        raise NumericalError("variance plug-in is not positive")

    z = (a_n_sq * np.sqrt(h) * t_n - big_a / np.sqrt(h)) / np.sqrt(big_b)
    p_value = float(stats.norm.sf(z))
    decisions = {
        f"{level:.2f}": bool(z > stats.norm.isf(level)) for level in options.levels
    }

    return TestReport(
        t_n=float(t_n),
        a_hat=float(plug.a_hat),
        A_n=float(big_a),
        B=float(big_b),
        h_hours=float(h),
        z=float(z),
        p_value=p_value,
        decisions=decisions,
        fit_interval=design.fit_interval,
        test_interval=design.test_interval,
        n_events_fit=n_fit,
        n_events_test=n_test,
        tie_adjustments=panel.tie_adjustments,
        clamp_epsilon=plug.clamp_epsilon,
        kernel_shape=options.kernel_shape,
        grid_size=options.grid_size,
        weight_window=(w.inner_left, w.inner_right, w.ramp),
        r_n=panel.r_n,
        n_vertices=panel.n_vertices,
        directed=panel.directed,
        partial_fit=pfit,
        mle_fit=mfit,
        curves={
            "nelson_aalen": curve_np,
            "parametric_smoothed": curve_s,
            "parametric_raw": curve_raw,
        },
    )
