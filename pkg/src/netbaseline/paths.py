"""Right-continuous step paths on the nonnegative time axis.

Times are in hours. A path holds one value per segment; the value on
``[breaks[k], breaks[k+1])`` is ``values[k]`` and the final segment extends to
any queried time. Scalar paths store ``values`` with shape ``(m,)``; vector
paths (covariates) with shape ``(m, p)``, where ``p`` may be zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PiecewisePath:
    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if breaks.ndim != 1 or breaks.size == 0:
            raise ValueError("breaks must be a nonempty 1-d array")
        if breaks[0] != 0.0:
            raise ValueError("paths must start at time 0")
        if breaks.size > 1 and not np.all(np.diff(breaks) > 0):
            raise ValueError("breaks must be strictly increasing")
        if not np.all(np.isfinite(breaks)):
            raise ValueError("breaks must be finite")
        if values.ndim not in (1, 2):
            raise ValueError("values must be 1-d or 2-d")
        if values.shape[0] != breaks.shape[0]:
            raise ValueError("need exactly one value row per segment")
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value) -> "PiecewisePath":
        value = np.asarray(value, dtype=float)
        if value.ndim == 0:
            return cls(np.zeros(1), value.reshape(1))
        return cls(np.zeros(1), value.reshape(1, -1))

    @classmethod
    def from_intervals(cls, starts, ends, horizon: float) -> "PiecewisePath":
        """Indicator path that is 1 on each [start, end) and 0 elsewhere.

        Intervals must be sorted, disjoint, and inside [0, horizon].
        """
        starts = np.asarray(starts, dtype=float)
        ends = np.asarray(ends, dtype=float)
        if starts.shape != ends.shape or starts.ndim != 1:
            raise ValueError("starts and ends must be matching 1-d arrays")
        if starts.size == 0:
            return cls(np.zeros(1), np.zeros(1))
        if np.any(ends <= starts):
            raise ValueError("each interval needs start < end")
        if np.any(starts[1:] < ends[:-1]):
            raise ValueError("intervals must be sorted and disjoint")
        if starts[0] < 0 or ends[-1] > horizon:
            raise ValueError("intervals must lie inside [0, horizon]")
        breaks = [0.0]
        values = [0.0]
        for s, e in zip(starts, ends):
            if s == breaks[-1]:
                values[-1] = 1.0
            else:
                breaks.append(s)
                values.append(1.0)
            if e < horizon:
                breaks.append(e)
                values.append(0.0)
        return cls(np.asarray(breaks), np.asarray(values))

    @property
    def dimension(self) -> int:
        """Number of components; 0 for an empty vector path."""
        if self.values.ndim == 1:
            return 1
        return self.values.shape[1]

    def at(self, t, left: bool = False):
        """Path value at time(s) t; ``left=True`` gives the left limit.

        The left limit at 0 is defined as the value at 0.
        """
        t = np.asarray(t, dtype=float)
        side = "left" if left else "right"
        idx = np.searchsorted(self.breaks, t, side=side) - 1
        idx = np.clip(idx, 0, self.breaks.size - 1)
        return self.values[idx]

    def segments(self, lo: float, hi: float):
        """Constant pieces of the path restricted to [lo, hi].

        Returns (starts, ends, values) with starts[0] == lo and
        ends[-1] == hi. Requires lo < hi.
        """
        if not lo < hi:
            raise ValueError("need lo < hi")
        k0 = max(int(np.searchsorted(self.breaks, lo, side="right")) - 1, 0)
        k1 = max(int(np.searchsorted(self.breaks, hi, side="left")) - 1, k0)
        idx = np.arange(k0, k1 + 1)
        starts = self.breaks[idx].copy()
        starts[0] = lo
        ends = np.empty_like(starts)
        ends[:-1] = self.breaks[idx[:-1] + 1]
        ends[-1] = hi
        return starts, ends, self.values[idx]

    def on_intervals(self, lo: float, hi: float):
        """Maximal intervals inside [lo, hi] where a scalar path equals 1.

        Adjacent segments with equal values are merged, so the result is
        canonical regardless of how the path was segmented.
        """
        if self.values.ndim != 1:
            raise ValueError("on_intervals needs a scalar path")
        starts, ends, vals = self.segments(lo, hi)
        out_s, out_e = [], []
        for s, e, v in zip(starts, ends, vals):
            if v != 1.0:
                continue
            if out_e and out_e[-1] == s:
                out_e[-1] = e
            else:
                out_s.append(s)
                out_e.append(e)
        return np.asarray(out_s), np.asarray(out_e)
