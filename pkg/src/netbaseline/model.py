"""Model specification: link function, baseline feature maps, study design.

The conditional event rate of a pair at time t factors as

    rate(t) = edge(t) * alpha(theta, t) * psi(x(t); beta)

with a multiplicative link psi normalised so psi(0; beta) = 1 and a
log-linear baseline alpha(theta, t) = exp(theta' phi(t)). The feature map
phi is assembled from small term objects so it can be evaluated on arrays,
report its own discontinuity locations and value bounds (needed for exact
likelihood integration and for simulation intensity bounds), and survive a
round trip through JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .paths import PiecewisePath

HOURS_PER_DAY = 24.0
HOURS_PER_WEEK = 168.0


@dataclass(frozen=True)
class LinkSpec:
    """Multiplicative covariate effect. Only "exp_linear" is implemented:
    psi(x; beta) = exp(beta' x)."""

    kind: str = "exp_linear"
    dimension: int = 0

    def __post_init__(self):
        if self.kind != "exp_linear":
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.dimension < 0:
            raise ValueError("link dimension must be >= 0")

    def describe(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension}

    @classmethod
    def from_dict(cls, d: dict) -> "LinkSpec":
        return cls(kind=d["kind"], dimension=int(d["dimension"]))


def evaluate_link(x, beta, link: LinkSpec):
    """psi(x; beta) for covariate rows x of shape (..., p)."""
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (link.dimension,):
        raise ValueError(
            f"beta has shape {beta.shape}, link dimension is {link.dimension}"
        )
    if x.shape[-1] != link.dimension and link.dimension > 0:
        raise ValueError(
            f"covariate rows have length {x.shape[-1]}, expected {link.dimension}"
        )
    if link.dimension == 0:
        return np.ones(x.shape[:-1], dtype=float)
    return np.exp(x @ beta)


@dataclass(frozen=True)
class SystemCovariates:
    """Shared time-varying inputs to the baseline (weather and the like)."""

    path: PiecewisePath
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.names and len(self.names) != self.path.dimension:
            raise ValueError("one name per covariate component required")

    @property
    def dimension(self) -> int:
        return self.path.dimension


def weekend_indicator(t, origin_weekday: int):
    """1.0 where t falls on a Saturday or Sunday.

    Days are 24 h blocks counted from t = 0; origin_weekday is the weekday
    of the block containing 0 (Monday = 0 ... Sunday = 6).
    """
    t = np.asarray(t, dtype=float)
    day = (origin_weekday + np.floor(t / HOURS_PER_DAY).astype(int)) % 7
    return (day >= 5).astype(float)


@dataclass(frozen=True)
class ConstantTerm:
    name: str = "const"

    def values(self, t, system, left=False):
        t = np.asarray(t, dtype=float)
        return np.ones(t.shape, dtype=float)

    def breakpoints(self, lo, hi, system):
        return np.empty(0)

    def bounds(self, lo, hi, system):
        return 1.0, 1.0

    def describe(self) -> dict:
        return {"kind": "constant"}


@dataclass(frozen=True)
class HarmonicTerm:
    """sin or cos of the daily clock, optionally gated to weekends."""

    fn: str
    cycles: int
    period: float = HOURS_PER_DAY
    weekend_only: bool = False
    origin_weekday: int = 0

    def __post_init__(self):
        if self.fn not in ("sin", "cos"):
            raise ValueError("fn must be 'sin' or 'cos'")
        if self.cycles < 1 or self.period <= 0:
            raise ValueError("need cycles >= 1 and period > 0")

    @property
    def name(self) -> str:
        base = f"{self.fn}{self.cycles}"
        return f"wkd_{base}" if self.weekend_only else base

    def values(self, t, system, left=False):
        t = np.asarray(t, dtype=float)
        angle = 2.0 * np.pi * self.cycles * t / self.period
        out = np.sin(angle) if self.fn == "sin" else np.cos(angle)
        if self.weekend_only:
            out = out * weekend_indicator(t, self.origin_weekday)
        return out

    def breakpoints(self, lo, hi, system):
        if not self.weekend_only:
            return np.empty(0)
        first = np.ceil(lo / HOURS_PER_DAY)
        last = np.floor(hi / HOURS_PER_DAY)
        if last < first:
            return np.empty(0)
        return np.arange(first, last + 1) * HOURS_PER_DAY

    def bounds(self, lo, hi, system):
        return -1.0, 1.0

    def describe(self) -> dict:
        return {
            "kind": "harmonic",
            "fn": self.fn,
            "cycles": self.cycles,
            "period": self.period,
            "weekend_only": self.weekend_only,
            "origin_weekday": self.origin_weekday,
        }


@dataclass(frozen=True)
class SystemCovariateTerm:
    """A component of the shared covariate path, raised to an integer power."""

    index: int
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be >= 1")

    @property
    def name(self) -> str:
        suffix = "" if self.power == 1 else f"^{self.power}"
        return f"z{self.index}{suffix}"

    def _component(self, t, system, left):
        if system is None:
            raise ValueError("term needs system covariates but none were given")
        if not 0 <= self.index < system.dimension:
            raise ValueError(f"system covariate index {self.index} out of range")
        vals = system.path.at(t, left=left)
        return np.asarray(vals)[..., self.index]

    def values(self, t, system, left=False):
        return self._component(t, system, left) ** self.power

    def breakpoints(self, lo, hi, system):
        if system is None:
            raise ValueError("term needs system covariates but none were given")
        b = system.path.breaks
        return b[(b > lo) & (b < hi)]

    def bounds(self, lo, hi, system):
        if system is None:
            raise ValueError("term needs system covariates but none were given")
        starts, ends, vals = system.path.segments(lo, hi)
        comp = np.asarray(vals)[:, self.index]
        powered = comp**self.power
        return float(powered.min()), float(powered.max())

    def describe(self) -> dict:
        return {"kind": "system", "index": self.index, "power": self.power}


_TERM_KINDS = {
    "constant": ConstantTerm,
    "harmonic": HarmonicTerm,
    "system": SystemCovariateTerm,
}


def term_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "constant":
        return ConstantTerm()
    if kind == "harmonic":
        return HarmonicTerm(
            fn=d["fn"],
            cycles=int(d["cycles"]),
            period=float(d.get("period", HOURS_PER_DAY)),
            weekend_only=bool(d.get("weekend_only", False)),
            origin_weekday=int(d.get("origin_weekday", 0)),
        )
    if kind == "system":
        return SystemCovariateTerm(index=int(d["index"]), power=int(d.get("power", 1)))
    raise ValueError(f"unknown feature term kind {kind!r}")


@dataclass(frozen=True)
class BaselineSpec:
    """Log-linear baseline alpha(theta, t) = exp(theta' phi(t))."""

    terms: tuple = ()
    system: Optional[SystemCovariates] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("baseline needs at least one feature term")

    @property
    def dimension(self) -> int:
        return len(self.terms)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(term.name for term in self.terms)

    def features(self, t, left: bool = False) -> np.ndarray:
        """Feature matrix phi(t) with shape (len(t), d).

        ``left=True`` evaluates step-path-based terms at their left limits,
        which is the predictable version used at event times.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cols = [term.values(t, self.system, left=left) for term in self.terms]
        return np.column_stack(cols)

    def feature_breakpoints(self, lo: float, hi: float) -> np.ndarray:
        """Discontinuity locations of phi strictly inside (lo, hi)."""
        pieces = [term.breakpoints(lo, hi, self.system) for term in self.terms]
        if not pieces:
            return np.empty(0)
        merged = np.unique(np.concatenate([np.asarray(p, float) for p in pieces]))
        return merged[(merged > lo) & (merged < hi)]

    def feature_bounds(self, lo: float, hi: float):
        """Componentwise (low, high) bounds of phi over [lo, hi]."""
        los, his = [], []
        for term in self.terms:
            a, b = term.bounds(lo, hi, self.system)
            los.append(a)
            his.append(b)
        return np.asarray(los), np.asarray(his)

    def describe(self) -> dict:
        return {"terms": [term.describe() for term in self.terms]}

    @classmethod
    def from_dict(cls, d: dict, system: Optional[SystemCovariates] = None):
        return cls(
            terms=tuple(term_from_dict(td) for td in d["terms"]), system=system
        )


def evaluate_baseline(theta, t, spec: BaselineSpec, horizon: float | None = None):
    """alpha(theta, t) = exp(theta' phi(t)); scalar in, scalar out."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.dimension,):
        raise ValueError(
            f"theta has shape {theta.shape}, baseline dimension is {spec.dimension}"
        )
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("baseline evaluated at negative time")
    if horizon is not None and np.any(t_arr > horizon):
        raise ValueError("baseline evaluated beyond the horizon")
    out = np.exp(spec.features(t_arr) @ theta)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(out[0])
    return out


def constant_baseline() -> BaselineSpec:
    return BaselineSpec(terms=(ConstantTerm(),))


def clock_baseline(n_harmonics: int = 1, period: float = HOURS_PER_DAY) -> BaselineSpec:
    """Intercept plus paired sin/cos daily-clock terms."""
    terms: list = [ConstantTerm()]
    for k in range(1, n_harmonics + 1):
        terms.append(HarmonicTerm(fn="sin", cycles=k, period=period))
        terms.append(HarmonicTerm(fn="cos", cycles=k, period=period))
    return BaselineSpec(terms=tuple(terms))


def weather_clock_baseline(
    system: SystemCovariates, origin_weekday: int
) -> BaselineSpec:
    """17-feature map: intercept, weather polynomials, daily harmonics, and
    weekend-gated copies of the harmonics.

    Expects ``system`` component 0 to be log temperature and component 1 to
    be precipitation. Order: [1, z0, z0^2, z1, z1^2, sin1..sin3, cos1..cos3,
    weekend*sin1..3, weekend*cos1..3].
    """
    if system.dimension != 2:
        raise ValueError("expected two system covariates (log temp, precipitation)")
    terms: list = [ConstantTerm()]
    terms += [SystemCovariateTerm(0, 1), SystemCovariateTerm(0, 2)]
    terms += [SystemCovariateTerm(1, 1), SystemCovariateTerm(1, 2)]
    for fn in ("sin", "cos"):
        for k in (1, 2, 3):
            terms.append(HarmonicTerm(fn=fn, cycles=k))
    for fn in ("sin", "cos"):
        for k in (1, 2, 3):
            terms.append(
                HarmonicTerm(
                    fn=fn, cycles=k, weekend_only=True, origin_weekday=origin_weekday
                )
            )
    return BaselineSpec(terms=tuple(terms), system=system)


@dataclass(frozen=True)
class ModelSpec:
    """Everything the estimators need to know about the model family."""

    link: LinkSpec
    baseline: BaselineSpec
    directed: bool = False

    def describe(self) -> dict:
        return {
            "link": self.link.describe(),
            "baseline": self.baseline.describe(),
            "directed": self.directed,
        }

    @classmethod
    def from_dict(cls, d: dict, system: Optional[SystemCovariates] = None):
        return cls(
            link=LinkSpec.from_dict(d["link"]),
            baseline=BaselineSpec.from_dict(d["baseline"], system=system),
            directed=bool(d.get("directed", False)),
        )


@dataclass(frozen=True)
class StudyDesign:
    """Data-splitting layout: fit on one interval, test on a disjoint one."""

    fit_interval: tuple[float, float]
    test_interval: tuple[float, float]

    def __post_init__(self):
        a, b = self.fit_interval
        c, d = self.test_interval
        if not (a < b and c < d):
            raise ValueError("intervals must have positive length")
        if max(a, c) < min(b, d):
            raise ValueError("fit and test intervals must not overlap")
        object.__setattr__(self, "fit_interval", (float(a), float(b)))
        object.__setattr__(self, "test_interval", (float(c), float(d)))
