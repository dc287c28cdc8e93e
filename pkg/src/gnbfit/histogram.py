"""Empirical histograms under the two binning rules the objectives consume:
one unit-width bin per integer value for count data, and Freedman-Diaconis
width bins for continuous positive data.

Heights are normalized so that bar areas sum to one; for unit-width integer
bins that makes heights plain count ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateDataError

__all__ = ["BinRule", "Histogram", "bin_integer", "bin_fd"]


class BinRule(Enum):
    INTEGER = "integer"
    FREEDMAN_DIACONIS = "freedman_diaconis"


@dataclass(frozen=True)
class Histogram:
    """Bin edges, bar heights, the rule that produced them, and sample size.

    Bins are right-open, [edge_i, edge_{i+1}), with the last bin closed.
    Immutable; the arrays are locked against writes.
    """

    edges: np.ndarray
    heights: np.ndarray
    rule: BinRule
    n: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        heights = np.asarray(self.heights, dtype=float)
        if edges.ndim != 1 or heights.ndim != 1 or len(edges) != len(heights) + 1:
            raise ValueError("need len(edges) == len(heights) + 1")
        if len(heights) < 1:
            raise ValueError("histogram needs at least one bin")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be strictly increasing")
        if np.any(heights < 0):
            raise ValueError("heights must be nonnegative")
        if self.n < 1:
            raise ValueError("sample size must be >= 1")
        area = float(np.sum(heights * np.diff(edges)))
        if abs(area - 1.0) > 1e-12:
            raise ValueError(f"bar areas must sum to 1, got {area!r}")
        edges.setflags(write=False)
        heights.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "heights", heights)

    @property
    def n_bins(self) -> int:
        return len(self.heights)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_csv(self) -> str:
        """Serialize as ``edge_left,edge_right,height`` rows (with header)."""
        lines = ["edge_left,edge_right,height"]
        for lo, hi, h in zip(self.edges[:-1], self.edges[1:], self.heights):
            lines.append(f"{lo:.15g},{hi:.15g},{h:.15g}")
        return "\n".join(lines) + "\n"


def bin_integer(data) -> Histogram:
    """One unit-width bin per integer value from 0 to max(data).

    Edges sit at half-integers, so bin k is [k - 0.5, k + 0.5); bins for
    unobserved intermediate values are present with height zero, and the
    range always starts at 0 so that bin index equals count value.
    """
    arr = np.asarray(data)
    if arr.size == 0:
        raise ValueError("cannot bin an empty sample")
    vals = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals < 0) or np.any(vals != np.floor(vals)):
        raise ValueError("integer binning requires nonnegative integer values")
    counts = np.bincount(vals.astype(np.int64))
    n = int(arr.size)
    heights = counts / n
    edges = np.arange(len(counts) + 1, dtype=float) - 0.5
    return Histogram(edges=edges, heights=heights, rule=BinRule.INTEGER, n=n)


def bin_fd(data) -> Histogram:
    """Freedman-Diaconis binning: width 2 * IQR / n^(1/3), anchored at min(data).

    Quantiles use linear interpolation between order statistics (position
    1 + (n-1) q), so the width is reproducible bit for bit.  Heights are
    count / (n * width), making bar areas sum to one.
    """
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot bin an empty sample")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("continuous binning requires finite positive values")
    n = int(arr.size)
    q25, q75 = np.quantile(arr, [0.25, 0.75])
    iqr = float(q75 - q25)
    if iqr <= 0:
        raise DegenerateDataError(
            f"interquartile range is zero (q25 = {q25!r}, q75 = {q75!r}); "
            "data too concentrated for Freedman-Diaconis binning"
        )
    width = 2.0 * iqr / n ** (1.0 / 3.0)
    lo = float(arr.min())
    hi = float(arr.max())
    m = max(1, int(math.ceil((hi - lo) / width)))
    edges = lo + width * np.arange(m + 1, dtype=float)
    idx = np.searchsorted(edges, arr, side="right") - 1
    idx = np.clip(idx, 0, m - 1)  # fold the maximum into the final closed bin
    counts = np.bincount(idx, minlength=m)
    heights = counts / (n * width)
    return Histogram(edges=edges, heights=heights, rule=BinRule.FREEDMAN_DIACONIS, n=n)
