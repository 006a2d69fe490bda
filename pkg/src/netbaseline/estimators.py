"""Estimators: full likelihood, partial likelihood, and baseline curves.

Three estimation routes for the pairwise event model
rate_ij(t) = edge_ij(t) * alpha(theta, t) * psi(x_ij(t); beta):

* ``fit_mle``: joint maximum likelihood for (theta, beta); the integral of
  the intensity is computed exactly over the piecewise-constant risk
  segments with Gauss-Legendre handling of the smooth baseline factor.
* ``fit_partial``: Cox-style partial likelihood for beta alone, free of the
  baseline.
* ``nelson_aalen``: kernel-smoothed increment-over-risk estimate of the
  baseline itself, given a beta (typically the partial estimate).

``smoothed_parametric_baseline`` applies the same kernel smoothing to a
fitted parametric baseline so the two curves are comparable on equal terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLikelihoodError
from .kernels import BaselineCurve, KernelSpec, QuadratureGrid, kernel_event_sum, smooth_values
from .model import BaselineSpec, LinkSpec, evaluate_baseline
from .panel import PairPanel
from .optimize import OptimResult, maximize
from .riskset import build_mle_data, build_risk_data, mle_value_grad, partial_value_grad


@dataclass(frozen=True)
class FitOptions:
    tolerance: float = 1e-8
    max_iterations: int = 200


@dataclass(frozen=True)
class ParametricFit:
    theta_hat: np.ndarray
    beta_hat: np.ndarray
    log_likelihood: float
    gradient_norm: float
    converged: bool
    iterations: int
    flag: str | None = None

    def to_dict(self) -> dict:
        return {
            "theta_hat": [float(v) for v in self.theta_hat],
            "beta_hat": [float(v) for v in self.beta_hat],
            "log_likelihood": self.log_likelihood,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "flag": self.flag,
        }


@dataclass(frozen=True)
class PartialFit:
    beta_tilde: np.ndarray
    partial_log_likelihood: float
    gradient_norm: float
    converged: bool
    iterations: int
    flag: str | None = None

    def to_dict(self) -> dict:
        return {
            "beta_tilde": [float(v) for v in self.beta_tilde],
            "partial_log_likelihood": self.partial_log_likelihood,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "flag": self.flag,
        }


def _check_link(panel: PairPanel, link: LinkSpec):
    if link.dimension != panel.covariate_dim:
        raise ValueError(
            f"link dimension {link.dimension} does not match the panel's "
            f"covariate dimension {panel.covariate_dim}"
        )


def log_likelihood(panel: PairPanel, theta, beta, baseline: BaselineSpec,
                   link: LinkSpec, interval):
    """Log likelihood and its gradient, packed as (value, grad) with the
    gradient ordered (theta, beta)."""
    _check_link(panel, link)
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if theta.shape != (baseline.dimension,):
        raise ValueError("theta does not match the baseline dimension")
    risk = build_risk_data(panel, interval)
    mle = build_mle_data(risk, baseline)
    return mle_value_grad(mle, theta, beta)


def partial_log_likelihood(panel: PairPanel, beta, link: LinkSpec, interval):
    """Partial log likelihood and gradient for beta."""
    _check_link(panel, link)
    beta = np.asarray(beta, dtype=float)
    risk = build_risk_data(panel, interval)
    return partial_value_grad(risk, beta)


def fit_mle(panel: PairPanel, baseline: BaselineSpec, link: LinkSpec, interval,
            options: FitOptions = FitOptions()) -> ParametricFit:
    """Joint maximum likelihood estimate of (theta, beta), started at 0."""
    _check_link(panel, link)
    risk = build_risk_data(panel, interval)
    if risk.n_events == 0:
        raise DegenerateLikelihoodError(
            "degenerate likelihood: no events in the fit interval"
        )
    mle = build_mle_data(risk, baseline)
    d = baseline.dimension

    def fun_grad(z):
        return mle_value_grad(mle, z[:d], z[d:])

    res: OptimResult = maximize(
        fun_grad,
        np.zeros(d + link.dimension),
        tol=options.tolerance,
        max_iter=options.max_iterations,
    )
    return ParametricFit(
        theta_hat=res.x[:d],
        beta_hat=res.x[d:],
        log_likelihood=res.value,
        gradient_norm=res.gradient_norm,
        converged=res.converged,
        iterations=res.iterations,
        flag=res.flag,
    )


def fit_partial(panel: PairPanel, link: LinkSpec, interval,
                options: FitOptions = FitOptions()) -> PartialFit:
    """Partial likelihood estimate of beta, started at 0.

    With no covariates (dimension 0) the estimate is the empty vector and
    the fit is flagged degenerate-but-converged.
    """
    _check_link(panel, link)
    risk = build_risk_data(panel, interval)
    if risk.n_events == 0:
        raise DegenerateLikelihoodError(
            "degenerate likelihood: no events in the fit interval"
        )

    def fun_grad(b):
        return partial_value_grad(risk, b)

    res: OptimResult = maximize(
        fun_grad,
        np.zeros(link.dimension),
        tol=options.tolerance,
        max_iter=options.max_iterations,
    )
    return PartialFit(
        beta_tilde=res.x,
        partial_log_likelihood=res.value,
        gradient_norm=res.gradient_norm,
        converged=res.converged,
        iterations=res.iterations,
        flag=res.flag,
    )


def nelson_aalen(panel: PairPanel, beta, kernel: KernelSpec, grid: QuadratureGrid,
                 interval) -> BaselineCurve:
    """Kernel-smoothed baseline estimate from events in the interval.

    alpha_hat(t) = sum_events K_h(t, s_e) / X_n(s_e-; beta), with the
    convention 0/0 = 0 (events with an empty risk set contribute nothing,
    which cannot happen on a valid panel).
    """
    beta = np.asarray(beta, dtype=float)
    risk = build_risk_data(panel, interval)
    if risk.n_events == 0:
        return BaselineCurve(grid=grid, values=np.zeros(grid.size), kind="nelson_aalen")
    xn = risk.risk_at_events(beta)
    weights = np.where(xn > 0, 1.0 / np.where(xn > 0, xn, 1.0), 0.0)
    values = kernel_event_sum(kernel, grid, risk.event_times, weights)
    return BaselineCurve(grid=grid, values=values, kind="nelson_aalen")


def parametric_baseline_curve(theta, baseline: BaselineSpec,
                              grid: QuadratureGrid) -> BaselineCurve:
    """alpha(theta, .) sampled on the grid, unsmoothed."""
    values = evaluate_baseline(theta, grid.points, baseline, horizon=grid.horizon)
    return BaselineCurve(grid=grid, values=values, kind="parametric_raw")


def smoothed_parametric_baseline(theta, baseline: BaselineSpec, kernel: KernelSpec,
                                 grid: QuadratureGrid) -> BaselineCurve:
    """Kernel smoothing of the parametric baseline over [0, T].

    Uses the same kernel and grid as the nonparametric curve so that both
    sides of a comparison carry identical smoothing bias.
    """
    raw = parametric_baseline_curve(theta, baseline, grid)
    return BaselineCurve(
        grid=grid,
        values=smooth_values(raw.values, kernel, grid),
        kind="parametric_smoothed",
    )
