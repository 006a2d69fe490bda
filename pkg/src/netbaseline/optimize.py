"""Smooth concave maximisation used by both likelihood fits.

Thin wrapper over scipy's L-BFGS-B driven by exact gradients. Convergence
is declared on the sup-norm of the gradient. ``fun_grad`` may return
``-inf`` to reject a point (overflow regions); the line search then
backtracks. Deterministic given inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sopt


@dataclass
class OptimResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    gradient_norm: float
    converged: bool
    iterations: int
    flag: str | None = None


def maximize(fun_grad, x0, tol: float = 1e-8, max_iter: int = 200) -> OptimResult:
    """Maximise a smooth concave function given its value-and-gradient map.

    ``fun_grad(x) -> (value, grad)``; starts at ``x0``. ``tol`` bounds the
    gradient sup-norm relative to the objective magnitude: once the value
    sits around 1e4, absolute gradient norms below ~1e-12 are not resolvable
    in double precision, so the effective threshold is tol * max(1, |f|).
    """
    x0 = np.asarray(x0, dtype=float).copy()
    n = x0.size
    f0, g0 = fun_grad(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")
    g0 = np.asarray(g0, dtype=float)
    scale = max(1.0, abs(f0))
    gnorm0 = float(np.max(np.abs(g0))) if n else 0.0
    if gnorm0 <= tol * scale:
        return OptimResult(
            x=x0,
            value=f0,
            gradient=g0,
            gradient_norm=gnorm0,
            converged=True,
            iterations=0,
            flag="gradient_zero_at_start",
        )

    def negated(z):
        value, grad = fun_grad(z)
        if not np.isfinite(value):
            # reject: +inf objective makes the line search shrink the step
            return np.inf, np.zeros(n)
        return -value, -np.asarray(grad, dtype=float)

    res = _sopt.minimize(
        negated,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={
            "gtol": tol * scale,
            "ftol": 0.0,  # stop on the gradient, not on value stalls
            "maxiter": max_iter,
            "maxls": 60,
        },
    )
    f, g = fun_grad(res.x)
    g = np.asarray(g, dtype=float)
    gnorm = float(np.max(np.abs(g)))
    # the smallest gradient norm resolvable through objective differences is
    # about |f| * sqrt(2 eps); below ~3x that, a line-search stall is simply
    # the machine-precision optimum
    floor = 3.0 * np.sqrt(np.finfo(float).eps)
    converged = bool(gnorm <= max(tol, floor) * max(1.0, abs(f)))
    if converged:
        flag = None
    elif res.status == 1:
        flag = "iteration_cap"
    else:
        flag = "line_search_stalled"
    return OptimResult(
        x=np.asarray(res.x, dtype=float),
        value=float(f),
        gradient=g,
        gradient_norm=gnorm,
        converged=converged,
        iterations=int(res.nit),
        flag=flag,
    )
