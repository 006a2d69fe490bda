"""Interaction panels: per-pair edge paths, covariate paths, and event times.

A panel observes every pair of n vertices over [0, horizon]. Undirected
panels store each pair once with i < j; directed panels keep ordered keys.
Event times are globally unique across pairs (ties are broken at build time
by a deterministic nudge, see ``resolve_ties``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import LinkSpec, evaluate_link
from .paths import PiecewisePath

TIE_NUDGE_HOURS = 1e-9


class PairKey(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class PairRecord:
    """One pair's history: when the edge was present, what the covariates
    were, and when events happened."""

    key: PairKey
    edge: PiecewisePath
    covariates: PiecewisePath
    events: np.ndarray

    def __post_init__(self):
        events = np.asarray(self.events, dtype=float)
        if events.ndim != 1:
            raise ValueError("events must be a 1-d array of times")
        object.__setattr__(self, "events", events)
        if self.edge.values.ndim != 1:
            raise ValueError("edge path must be scalar-valued")
        if self.covariates.values.ndim != 2:
            raise ValueError("covariate path must be vector-valued")


@dataclass(frozen=True)
class PairPanel:
    n_vertices: int
    directed: bool
    horizon: float
    pairs: tuple[PairRecord, ...]
    tie_adjustments: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.n_vertices < 2:
            raise ValueError("need at least two vertices")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def r_n(self) -> int:
        """Number of observable pairs."""
        n = self.n_vertices
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    @property
    def covariate_dim(self) -> int:
        if not self.pairs:
            return 0
        return self.pairs[0].covariates.values.shape[1]

    @property
    def n_events(self) -> int:
        return int(sum(p.events.size for p in self.pairs))


def canonical_key(i: int, j: int, directed: bool) -> PairKey:
    if i == j:
        raise ValueError(f"self-pair ({i}, {i}) not allowed")
    if not directed and i > j:
        i, j = j, i
    return PairKey(int(i), int(j))


def resolve_ties(times: np.ndarray) -> tuple[np.ndarray, int]:
    """Make a sorted time array strictly increasing.

    Duplicates are nudged forward by k * 1e-9 hours, k counting duplicates
    seen so far at that timestamp, in input order. Returns the adjusted
    array and the number of adjusted entries. Input must be sorted.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return times.copy(), 0
    adjusted = times.copy()
    n_adjusted = 0
    # repeat until strictly increasing; a nudge can in principle collide
    # with the next timestamp, so sweep again (bounded, ties are rare)
    for _ in range(100):
        dup = np.flatnonzero(np.diff(adjusted) <= 0)
        if dup.size == 0:
            return adjusted, n_adjusted
        k = 1
        for pos in range(1, adjusted.size):
            if adjusted[pos] > adjusted[pos - 1]:
                k = 1
                continue
            adjusted[pos] = adjusted[pos - 1] + k * TIE_NUDGE_HOURS
            k += 1
            n_adjusted += 1
    raise ValueError("could not separate tied event times")


def build_panel(
    records,
    n_vertices: int,
    directed: bool,
    horizon: float,
    adjust_ties: bool = True,
) -> PairPanel:
    """Assemble a panel from records: canonicalise keys, sort by key, and
    break event-time ties deterministically."""
    fixed: dict[PairKey, PairRecord] = {}
    for rec in records:
        key = canonical_key(rec.key[0], rec.key[1], directed)
        if key in fixed:
            raise ValueError(f"duplicate pair {key}")
        if key != tuple(rec.key):
            rec = PairRecord(
                key=key, edge=rec.edge, covariates=rec.covariates, events=rec.events
            )
        fixed[key] = rec
    ordered = [fixed[k] for k in sorted(fixed)]

    n_adjusted = 0
    if adjust_ties:
        times = np.concatenate([r.events for r in ordered]) if ordered else np.empty(0)
        owners = np.concatenate(
            [np.full(r.events.size, idx) for idx, r in enumerate(ordered)]
        ) if ordered else np.empty(0, dtype=int)
        if times.size:
            order = np.argsort(times, kind="stable")
            new_times, n_adjusted = resolve_ties(times[order])
            if n_adjusted:
                per_pair: dict[int, list] = {}
                for t, owner in zip(new_times, owners[order]):
                    per_pair.setdefault(int(owner), []).append(t)
                ordered = [
                    PairRecord(
                        key=r.key,
                        edge=r.edge,
                        covariates=r.covariates,
                        events=np.asarray(per_pair.get(idx, []), dtype=float),
                    )
                    for idx, r in enumerate(ordered)
                ]
    return PairPanel(
        n_vertices=n_vertices,
        directed=directed,
        horizon=horizon,
        pairs=tuple(ordered),
        tie_adjustments=n_adjusted,
    )


def pooled_event_times(panel: PairPanel) -> list[tuple[float, PairKey]]:
    """All events merged and sorted by time.

    Panels built through ``build_panel`` are already tie-free; if duplicates
    are present anyway they are nudged here and a warning is emitted.
    """
    pairs = panel.pairs
    times = np.concatenate([r.events for r in pairs]) if pairs else np.empty(0)
    keys = [r.key for r in pairs for _ in range(r.events.size)]
    order = np.argsort(times, kind="stable")
    sorted_times = times[order]
    adjusted, n_adjusted = resolve_ties(sorted_times)
    if n_adjusted:
        warnings.warn(
            f"adjusted {n_adjusted} tied event times while pooling", stacklevel=2
        )
    return [(float(t), keys[o]) for t, o in zip(adjusted, order)]


def aggregate_risk(panel: PairPanel, t: float, beta, link: LinkSpec) -> float:
    """Total link-weighted risk sum_pairs edge(t) * psi(x(t); beta).

    Reference implementation looping over pairs; the estimators use an
    equivalent sweep that is checked against this in tests.
    """
    beta = np.asarray(beta, dtype=float)
    total = 0.0
    for rec in panel.pairs:
        on = float(rec.edge.at(t))
        if on == 0.0:
            continue
        psi = float(evaluate_link(rec.covariates.at(t), beta, link))
        total += on * psi
    return total


def clamp_epsilon(panel: PairPanel) -> float:
    """Lower clamp for the empirical edge fraction: half of one edge."""
    return 1.0 / (2.0 * panel.r_n)


def empirical_edge_fraction(panel: PairPanel, t: float, clamp: bool = True) -> float:
    """Fraction of observable pairs whose edge is on at t.

    With ``clamp`` the value is floored at 1/(2 r_n) so that downstream
    reciprocals stay finite; pass ``clamp=False`` for the raw fraction.
    """
    count = sum(float(rec.edge.at(t)) for rec in panel.pairs)
    frac = count / panel.r_n
    if clamp:
        frac = max(frac, clamp_epsilon(panel))
    return frac


@dataclass
class PanelValidation:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str):
        self.violations.append((code, message))


def validate_panel(panel: PairPanel) -> PanelValidation:
    """Structural checks; returns a report instead of raising."""
    report = PanelValidation()
    seen: set[PairKey] = set()
    all_events: list[float] = []
    cov_dim = None
    for rec in panel.pairs:
        key = rec.key
        label = f"pair {tuple(key)}"
        if key.i == key.j:
            report.add("self_pair", f"{label}: self-pair")
        if key.i >= panel.n_vertices or key.j >= panel.n_vertices or min(key) < 0:
            report.add("vertex_range", f"{label}: vertex id out of range")
        if not panel.directed and key.i > key.j:
            report.add("key_order", f"{label}: undirected key not stored as i < j")
        if key in seen:
            report.add("duplicate_pair", f"{label}: duplicate key")
        seen.add(key)

        if not np.all(np.isin(rec.edge.values, (0.0, 1.0))):
            report.add("edge_values", f"{label}: edge path values outside {{0, 1}}")
        if rec.edge.breaks[-1] > panel.horizon or rec.covariates.breaks[-1] > panel.horizon:
            report.add("path_horizon", f"{label}: path break beyond the horizon")

        if cov_dim is None:
            cov_dim = rec.covariates.values.shape[1]
        elif rec.covariates.values.shape[1] != cov_dim:
            report.add("covariate_dim", f"{label}: inconsistent covariate dimension")

        ev = rec.events
        if ev.size:
            if np.any(np.diff(ev) <= 0):
                report.add("event_order", f"{label}: events not strictly increasing")
            if ev[0] < 0 or ev[-1] > panel.horizon:
                report.add("event_horizon", f"{label}: event outside [0, horizon]")
            on_left = rec.edge.at(ev, left=True)
            if np.any(np.asarray(on_left) != 1.0):
                report.add(
                    "event_off_edge",
                    f"{label}: event while the edge was off (left limit)",
                )
            all_events.extend(ev.tolist())
    if all_events:
        arr = np.sort(np.asarray(all_events))
        if np.any(np.diff(arr) <= 0):
            report.add("global_ties", "event times are not globally unique")
    return report
