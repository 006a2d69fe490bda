"""Precomputed structures for fast, order-canonical likelihood evaluation.

Each pair's edge-on covariate history over an interval is flattened into a
table of constant segments (start, end, covariate row). The total risk
X_n(t; beta) = sum_pairs edge * psi(x; beta) is then a step function whose
jumps live at segment boundaries, obtained by a sweep: +psi at each segment
start, -psi at each end, cumulative-summed over the sorted breakpoints.

Every reduction over pairs or segments is accumulated in a canonical order
(lexicographic in time and covariate values), so results are bitwise
invariant under vertex relabelling; reductions over events are in pooled
time order, which relabelling does not change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLikelihoodError
from .model import BaselineSpec
from .panel import PairPanel

GL_ORDER = 8
MAX_CELL_HOURS = 1.0


def _check_interval(interval, horizon: float) -> tuple[float, float]:
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 <= a < b <= horizon):
        raise ValueError(f"interval ({a}, {b}) not inside [0, {horizon}]")
    return a, b


@dataclass
class RiskData:
    """Segment table and event arrays for one panel restricted to [a, b]."""

    interval: tuple[float, float]
    covariate_dim: int
    r_n: int
    # pooled events with time s in (a, b], sorted by time
    event_times: np.ndarray  # (E,)
    event_cov: np.ndarray  # (E, p) covariates at left limits
    # edge-on constant segments, canonically sorted
    seg_start: np.ndarray  # (S,)
    seg_end: np.ndarray  # (S,)
    seg_cov: np.ndarray  # (S, p)
    # sweep structures
    breaks: np.ndarray  # (P,) includes a and b
    seg_lo: np.ndarray  # (S,) index of seg_start in breaks
    seg_hi: np.ndarray  # (S,) index of seg_end in breaks
    delta_pos: np.ndarray  # (2S,) canonical order
    delta_sign: np.ndarray  # (2S,)
    delta_cov: np.ndarray  # (2S, p)
    event_break_idx: np.ndarray  # (E,) interval index holding each s_e left limit

    @property
    def n_events(self) -> int:
        return int(self.event_times.size)

    def psi_deltas(self, beta: np.ndarray) -> np.ndarray:
        """Signed psi jumps in canonical order; may contain inf on overflow."""
        with np.errstate(over="ignore"):
            psi = np.exp(self.delta_cov @ beta)
        return self.delta_sign * psi

    def risk_step(self, beta: np.ndarray) -> np.ndarray:
        """X_n(t; beta) on each [breaks[k], breaks[k+1]); shape (P-1,)."""
        deltas = np.bincount(
            self.delta_pos, weights=self.psi_deltas(beta), minlength=self.breaks.size
        )
        return np.cumsum(deltas)[:-1]

    def weighted_step(self, beta: np.ndarray, column: int) -> np.ndarray:
        """sum_pairs edge * psi * x[column] as a step function; shape (P-1,)."""
        with np.errstate(over="ignore"):
            w = self.delta_sign * np.exp(self.delta_cov @ beta) * self.delta_cov[:, column]
        deltas = np.bincount(self.delta_pos, weights=w, minlength=self.breaks.size)
        return np.cumsum(deltas)[:-1]

    def risk_at_events(self, beta: np.ndarray) -> np.ndarray:
        """X_n(s_e-; beta) at the pooled event times."""
        step = self.risk_step(beta)
        if step.size == 0:
            return np.zeros(self.event_times.shape)
        return step[self.event_break_idx]

    def risk_on_grid(self, beta: np.ndarray, t: np.ndarray) -> np.ndarray:
        """X_n(t; beta), right-continuous; 0 outside [a, b)."""
        t = np.asarray(t, dtype=float)
        a, b = self.interval
        out = np.zeros(t.shape)
        step = self.risk_step(beta)
        if step.size == 0:
            return out
        inside = (t >= a) & (t < b)
        idx = np.searchsorted(self.breaks, t[inside], side="right") - 1
        idx = np.clip(idx, 0, step.size - 1)
        out[inside] = step[idx]
        # value at exactly b: left limit of the final segment
        at_b = t == b
        out[at_b] = step[-1]
        return out


def build_risk_data(panel: PairPanel, interval) -> RiskData:
    a, b = _check_interval(interval, panel.horizon)
    p = panel.covariate_dim

    seg_start_parts, seg_end_parts, seg_cov_parts = [], [], []
    ev_time_parts, ev_cov_parts = [], []
    for rec in panel.pairs:
        on_s, on_e = rec.edge.on_intervals(a, b)
        for s, e in zip(on_s, on_e):
            if e <= s:
                continue
            cs, ce, cv = rec.covariates.segments(s, e)
            seg_start_parts.append(cs)
            seg_end_parts.append(ce)
            seg_cov_parts.append(cv)
        ev = rec.events[(rec.events > a) & (rec.events <= b)]
        if ev.size:
            ev_time_parts.append(ev)
            ev_cov_parts.append(np.asarray(rec.covariates.at(ev, left=True)))

    if seg_start_parts:
        seg_start = np.concatenate(seg_start_parts)
        seg_end = np.concatenate(seg_end_parts)
        seg_cov = np.vstack(seg_cov_parts)
    else:
        seg_start = np.empty(0)
        seg_end = np.empty(0)
        seg_cov = np.empty((0, p))

    # canonical segment order: label-free
    order = np.lexsort(tuple(seg_cov[:, c] for c in range(p - 1, -1, -1)) + (seg_end, seg_start))
    seg_start, seg_end, seg_cov = seg_start[order], seg_end[order], seg_cov[order]

    if ev_time_parts:
        ev_times = np.concatenate(ev_time_parts)
        ev_cov = np.vstack(ev_cov_parts)
        ev_order = np.argsort(ev_times, kind="stable")
        ev_times, ev_cov = ev_times[ev_order], ev_cov[ev_order]
    else:
        ev_times = np.empty(0)
        ev_cov = np.empty((0, p))

    breaks = np.unique(np.concatenate([np.array([a, b]), seg_start, seg_end]))
    seg_lo = np.searchsorted(breaks, seg_start)
    seg_hi = np.searchsorted(breaks, seg_end)

    delta_pos = np.concatenate([seg_lo, seg_hi])
    delta_sign = np.concatenate([np.ones(seg_lo.size), -np.ones(seg_hi.size)])
    delta_cov = np.vstack([seg_cov, seg_cov])
    d_order = np.lexsort(
        tuple(delta_cov[:, c] for c in range(p - 1, -1, -1)) + (delta_sign, delta_pos)
    )
    delta_pos = delta_pos[d_order]
    delta_sign = delta_sign[d_order]
    delta_cov = delta_cov[d_order]

    ev_break_idx = np.searchsorted(breaks, ev_times, side="left") - 1
    ev_break_idx = np.clip(ev_break_idx, 0, max(breaks.size - 2, 0))

    return RiskData(
        interval=(a, b),
        covariate_dim=p,
        r_n=panel.r_n,
        event_times=ev_times,
        event_cov=ev_cov,
        seg_start=seg_start,
        seg_end=seg_end,
        seg_cov=seg_cov,
        breaks=breaks,
        seg_lo=seg_lo,
        seg_hi=seg_hi,
        delta_pos=delta_pos.astype(np.intp),
        delta_sign=delta_sign,
        delta_cov=delta_cov,
        event_break_idx=ev_break_idx.astype(np.intp),
    )


def partial_value_grad(risk: RiskData, beta: np.ndarray):
    """Cox-style partial log likelihood and gradient over the interval."""
    if risk.n_events == 0:
        raise DegenerateLikelihoodError(
            "degenerate likelihood: no events in the interval"
        )
    p = risk.covariate_dim
    with np.errstate(over="ignore", invalid="ignore"):
        xn = risk.risk_at_events(beta)
        if not np.all(np.isfinite(xn)) or np.any(xn <= 0):
            return -np.inf, np.zeros(p)
        lin = risk.event_cov @ beta
        value = float(np.sum(lin) - np.sum(np.log(xn)))
        grad = risk.event_cov.sum(axis=0)
        for c in range(p):
            sx = risk.weighted_step(beta, c)[risk.event_break_idx]
            grad[c] -= float(np.sum(sx / xn))
    if not np.isfinite(value):
        return -np.inf, np.zeros(p)
    return value, grad


@dataclass
class MleData:
    """RiskData plus an integration mesh for the parametric compensator."""

    risk: RiskData
    event_feat_sum: np.ndarray  # (d,)
    event_cov_sum: np.ndarray  # (p,)
    cell_bounds: np.ndarray  # (M+1,)
    node_weights: np.ndarray  # (M*Q,)
    node_feat: np.ndarray  # (M*Q, d)
    seg_lo_cell: np.ndarray  # (S,)
    seg_hi_cell: np.ndarray  # (S,)
    n_cells: int
    gl_order: int


def build_mle_data(
    panel_risk: RiskData,
    baseline: BaselineSpec,
    gl_order: int = GL_ORDER,
    max_cell_hours: float = MAX_CELL_HOURS,
) -> MleData:
    a, b = panel_risk.interval
    fb = baseline.feature_breakpoints(a, b)
    bounds = np.unique(np.concatenate([panel_risk.breaks, fb]))

    # split long cells so fixed-order Gauss-Legendre resolves the smooth
    # harmonic features
    lengths = np.diff(bounds)
    pieces = [bounds[:1]]
    for left, length in zip(bounds[:-1], lengths):
        n_sub = int(np.ceil(length / max_cell_hours))
        if n_sub > 1:
            pieces.append(left + length * np.arange(1, n_sub) / n_sub)
        pieces.append(np.array([left + length]))
    cell_bounds = np.concatenate(pieces)

    xi, wq = np.polynomial.legendre.leggauss(gl_order)
    mid = (cell_bounds[:-1] + cell_bounds[1:]) / 2.0
    half = (cell_bounds[1:] - cell_bounds[:-1]) / 2.0
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    node_weights = (half[:, None] * wq[None, :]).ravel()
    node_feat = baseline.features(nodes)

    if panel_risk.n_events:
        event_feat = baseline.features(panel_risk.event_times, left=True)
        event_feat_sum = event_feat.sum(axis=0)
    else:
        event_feat_sum = np.zeros(baseline.dimension)
    event_cov_sum = panel_risk.event_cov.sum(axis=0)

    return MleData(
        risk=panel_risk,
        event_feat_sum=event_feat_sum,
        event_cov_sum=event_cov_sum,
        cell_bounds=cell_bounds,
        node_weights=node_weights,
        node_feat=node_feat,
        seg_lo_cell=np.searchsorted(cell_bounds, panel_risk.seg_start).astype(np.intp),
        seg_hi_cell=np.searchsorted(cell_bounds, panel_risk.seg_end).astype(np.intp),
        n_cells=cell_bounds.size - 1,
        gl_order=gl_order,
    )


def mle_value_grad(mle: MleData, theta: np.ndarray, beta: np.ndarray):
    """Full log likelihood: event terms minus the integrated intensity."""
    risk = mle.risk
    if risk.n_events == 0:
        raise DegenerateLikelihoodError(
            "degenerate likelihood: no events in the interval"
        )
    d = mle.node_feat.shape[1]
    p = risk.covariate_dim
    q = mle.node_weights.size // mle.n_cells

    with np.errstate(over="ignore", invalid="ignore"):
        alpha_nodes = np.exp(mle.node_feat @ theta)
        psi = np.exp(risk.seg_cov @ beta)
        if not (np.all(np.isfinite(alpha_nodes)) and np.all(np.isfinite(psi))):
            return -np.inf, np.zeros(d + p)

        wa = mle.node_weights * alpha_nodes
        cell_alpha = wa.reshape(mle.n_cells, q).sum(axis=1)
        i_alpha = np.concatenate([[0.0], np.cumsum(cell_alpha)])
        cell_phi = np.einsum(
            "mq,mqd->md",
            wa.reshape(mle.n_cells, q),
            mle.node_feat.reshape(mle.n_cells, q, d),
        )
        i_phi = np.vstack([np.zeros(d), np.cumsum(cell_phi, axis=0)])

        dia = i_alpha[mle.seg_hi_cell] - i_alpha[mle.seg_lo_cell]
        integral = float(np.sum(psi * dia))
        value = (
            float(mle.event_feat_sum @ theta)
            + float(mle.event_cov_sum @ beta)
            - integral
        )
        grad_theta = mle.event_feat_sum - (
            psi[:, None] * (i_phi[mle.seg_hi_cell] - i_phi[mle.seg_lo_cell])
        ).sum(axis=0)
        grad_beta = mle.event_cov_sum - ((psi * dia)[:, None] * risk.seg_cov).sum(axis=0)

    if not np.isfinite(value):
        return -np.inf, np.zeros(d + p)
    return value, np.concatenate([grad_theta, grad_beta])
