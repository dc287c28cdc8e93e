"""The six target functions: discrete l1/l2/linf distances between model pmf
bars and integer-histogram heights, and continuous L1/L2/Linf metrics between
a model density and Freedman-Diaconis histogram bars via per-bin integrals.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Callable

import numpy as np

from . import numerics
from .distributions import GammaParams, GGParams, NBParams, gamma_pdf, gg_pdf, gnb_pmf_batch, nb_pmf
from .errors import QuadratureError
from .histogram import BinRule, Histogram

__all__ = [
    "MetricKind",
    "ModelFamily",
    "discrete_deviation",
    "discrete_objective",
    "bin_deviation_integrals",
    "continuous_objective",
]

# pmf accuracy inside objectives: relative 1e-10 with an absolute floor well
# below histogram-height resolution, so negligible bars are not refined to
# pointless relative precision
_PMF_REL_TOL = 1e-10
_PMF_ABS_FLOOR = 1e-13
_BIN_REL_TOL = 1e-8


class MetricKind(Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


class ModelFamily(Enum):
    NB = "nb"
    GNB = "gnb"
    GAMMA = "gamma"
    GG = "gg"

    @property
    def is_discrete(self) -> bool:
        return self in (ModelFamily.NB, ModelFamily.GNB)

    @property
    def is_generalized(self) -> bool:
        return self in (ModelFamily.GNB, ModelFamily.GG)


def discrete_deviation(model: np.ndarray, heights: np.ndarray, metric: MetricKind) -> float:
    """l1/l2/linf distance between two bar vectors of equal length."""
    m = np.asarray(model, dtype=float)
    h = np.asarray(heights, dtype=float)
    if m.shape != h.shape:
        raise ValueError("bar vectors must have equal length")
    dev = np.abs(m - h)
    if metric is MetricKind.L1:
        return float(np.sum(dev))
    if metric is MetricKind.L2:
        return float(math.sqrt(np.sum(dev * dev)))
    return float(np.max(dev))


def _model_pmf(params, k_max: int) -> np.ndarray:
    if isinstance(params, NBParams):
        return nb_pmf(np.arange(k_max + 1), params)
    if isinstance(params, GGParams):
        return gnb_pmf_batch(params, k_max, rel_tol=_PMF_REL_TOL, abs_floor=_PMF_ABS_FLOOR)
    raise TypeError(f"discrete objectives need NBParams or GGParams, got {type(params).__name__}")


def discrete_objective(params, hist: Histogram, metric: MetricKind,
                       *, include_zero_bin: bool = True) -> float:
    """Distance between the model pmf and the integer-histogram bar heights.

    The model is NB for :class:`NBParams` and GNB for :class:`GGParams`; bins
    are indexed by their integer value starting at 0 and model mass beyond
    the histogram range is not penalized.  ``include_zero_bin=False`` drops
    the k = 0 bar from the sums, for strict 1-based bookkeeping.
    """
    if hist.rule is not BinRule.INTEGER:
        raise ValueError("discrete objectives require an integer-rule histogram")
    model = _model_pmf(params, hist.n_bins - 1)
    heights = hist.heights
    if not include_zero_bin:
        model = model[1:]
        heights = heights[1:]
        if len(heights) == 0:
            raise ValueError("no bins left after dropping the zero bar")
    return discrete_deviation(model, heights, metric)


def bin_deviation_integrals(pdf: Callable[[np.ndarray], np.ndarray], hist: Histogram,
                            *, squared: bool = False, rel_tol: float = _BIN_REL_TOL) -> np.ndarray:
    """Per-bin integrals of |pdf - height| (or its square) over each bin.

    All bins are integrated by one batched adaptive run sharing vectorized
    density evaluations; quadrature failures carry the offending bin index.
    """
    return numerics.integrate_bins_deviation(
        pdf, hist.edges, hist.heights, squared=squared, rel_tol=rel_tol
    )


def _model_pdf(params) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(params, GammaParams):
        return lambda x: gamma_pdf(x, params)
    if isinstance(params, GGParams):
        return lambda x: gg_pdf(x, params)
    raise TypeError(f"continuous objectives need GammaParams or GGParams, got {type(params).__name__}")


def continuous_objective(params, hist: Histogram, metric: MetricKind,
                         *, rel_tol: float = _BIN_REL_TOL) -> float:
    """L1/L2/Linf metric between the model density and the histogram bars.

    Per-bin integrals run through the adaptive quadrature; the Linf value is
    by construction the maximum of the per-bin L1 contributions.  Bins are
    accumulated in order, so values are bit-reproducible.
    """
    if hist.rule is not BinRule.FREEDMAN_DIACONIS:
        raise ValueError("continuous objectives require a Freedman-Diaconis histogram")
    if hist.edges[0] < 0:
        raise ValueError("continuous objectives require nonnegative bin edges")
    pdf = _model_pdf(params)
    if metric is MetricKind.L2:
        contrib = bin_deviation_integrals(pdf, hist, squared=True, rel_tol=rel_tol)
        return float(math.sqrt(np.sum(contrib)))
    contrib = bin_deviation_integrals(pdf, hist, squared=False, rel_tol=rel_tol)
    if metric is MetricKind.L1:
        return float(np.sum(contrib))
    return float(np.max(contrib))
