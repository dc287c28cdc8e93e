"""Derivative-free simplex search (Nelder-Mead) with deterministic behavior,
multi-start support, and bijective transforms between constrained natural
parameter spaces and the unconstrained space the simplex walks.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import EstimationError

__all__ = [
    "SimplexOptions",
    "OptimResult",
    "Domain",
    "minimize",
    "minimize_multistart",
    "make_transform",
]


@dataclass(frozen=True)
class SimplexOptions:
    """Simplex-move coefficients, stopping rules, and restart budget.

    ``restarts`` is the number of times the search is re-seeded with a fresh
    simplex at the incumbent best point after converging, which polishes
    minima that a collapsed simplex would otherwise miss.
    """

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    x_tol: float = 1e-8
    f_tol: float = 1e-10
    max_iters: int = 2000
    restarts: int = 5

    def __post_init__(self):
        if not self.reflection > 0:
            raise ValueError("reflection coefficient must be > 0")
        if not self.expansion > 1:
            raise ValueError("expansion coefficient must be > 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction coefficient must be in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink coefficient must be in (0, 1)")


@dataclass(frozen=True)
class OptimResult:
    x_min: np.ndarray
    f_min: float
    iterations: int
    converged: bool
    restart_index: int


def _initial_simplex(x0: np.ndarray, scale: float) -> list[np.ndarray]:
    # per-coordinate steps of `scale` times the coordinate, `scale` at zero
    verts = [x0.copy()]
    for i in range(len(x0)):
        v = x0.copy()
        v[i] += scale * abs(v[i]) if v[i] != 0.0 else scale
        verts.append(v)
    return verts


def _nelder_mead_round(f, x0, opts, budget, scale):
    """One full Nelder-Mead run from x0; returns (x, fx, iterations, converged)."""
    verts = _initial_simplex(x0, scale)
    fvals = [f(v) for v in verts]
    n = len(x0)
    iterations = 0
    converged = False
    while iterations < budget:
        order = sorted(range(n + 1), key=lambda i: fvals[i])
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]
        diameter = max(float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
        if diameter <= opts.x_tol and fvals[-1] - fvals[0] <= opts.f_tol:
            converged = True
            break
        iterations += 1
        centroid = np.mean(verts[:-1], axis=0)
        worst = verts[-1]
        xr = centroid + opts.reflection * (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + opts.expansion * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + opts.contraction * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                verts[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid - opts.contraction * (centroid - worst)
            fc = f(xc)
            if fc < fvals[-1]:
                verts[-1], fvals[-1] = xc, fc
                continue
        # shrink toward the best vertex
        for i in range(1, n + 1):
            verts[i] = verts[0] + opts.shrink * (verts[i] - verts[0])
            fvals[i] = f(verts[i])
    best = int(np.argmin(fvals))
    return verts[best], fvals[best], iterations, converged


def minimize(f: Callable[[np.ndarray], float], x0, opts: SimplexOptions | None = None) -> OptimResult:
    """Nelder-Mead minimization from a single start.

    Deterministic given ``x0`` and ``opts``; non-finite objective values
    during the search are treated as +inf (rejected points), but a non-finite
    value at ``x0`` itself is a domain error.  The returned minimum never
    exceeds ``f(x0)``.
    """
    opts = opts or SimplexOptions()
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.ndim != 1 or len(x0) < 1:
        raise ValueError("x0 must be a 1-D point of dimension >= 1")
    f0 = float(f(x0))
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at the start point (f = {f0!r})")

    def fw(x):
        v = float(f(x))
        return v if math.isfinite(v) else math.inf

    best_x, best_f = x0, f0
    iterations = 0
    converged = False
    scale = 0.05
    for round_idx in range(opts.restarts + 1):
        remaining = opts.max_iters - iterations
        if remaining <= 0:
            break
        prev = best_f
        x, fx, iters, conv = _nelder_mead_round(fw, best_x, opts, remaining, scale)
        iterations += iters
        improved = fx < best_f
        if improved:
            best_x, best_f = x, fx
        if conv:
            converged = True
        elif improved:
            # the incumbent moved inside a round that never settled
            converged = False
        # restarts only polish; stop once they yield less than the larger of
        # the absolute f tolerance and a 1e-4 relative improvement
        if conv and round_idx > 0 and prev - best_f <= max(opts.f_tol, 1e-4 * abs(best_f)):
            break
        # re-seed with a sharply smaller simplex: local polish, not a re-search
        scale = max(0.05 * scale, 100.0 * opts.x_tol)
    return OptimResult(x_min=best_x, f_min=best_f, iterations=iterations,
                       converged=converged, restart_index=0)


def minimize_multistart(f, starts: Sequence, opts: SimplexOptions | None = None) -> OptimResult:
    """Best :func:`minimize` result over the given starts, ties to the lowest index.

    Starts failing outright (non-finite objective) are skipped; if every
    start fails an :class:`~gnbfit.errors.EstimationError` aggregates the causes.
    """
    starts = list(starts)
    if not starts:
        raise ValueError("need at least one start point")
    best = None
    failures = []
    for i, x0 in enumerate(starts):
        try:
            res = replace(minimize(f, x0, opts), restart_index=i)
        except ValueError as exc:
            failures.append(f"start {i}: {exc}")
            continue
        if best is None or res.f_min < best.f_min:
            best = res
    if best is None:
        raise EstimationError("all optimizer starts failed: " + "; ".join(failures))
    return best


class Domain(Enum):
    POSITIVE = "positive"
    NONZERO_SIGNED = "nonzero_signed"
    UNBOUNDED = "unbounded"


_SIGNED_FLOOR = 1e-3


def make_transform(spec: Sequence[Domain]):
    """Bijection pair (to_internal, to_natural) for a per-coordinate domain spec.

    POSITIVE coordinates are log-transformed (with the inverse floored at the
    smallest positive normal so internal underflow never yields 0);
    NONZERO_SIGNED uses a sign-preserving log of the magnitude with the
    magnitude floored at 1e-3; UNBOUNDED is the identity.
    """
    spec = tuple(spec)
    if not spec:
        raise ValueError("transform spec must be non-empty")

    def to_internal(natural):
        nat = np.asarray(natural, dtype=float)
        if nat.shape != (len(spec),):
            raise ValueError(f"expected {len(spec)} coordinates, got {nat.shape}")
        out = np.empty_like(nat)
        for i, dom in enumerate(spec):
            v = float(nat[i])
            if dom is Domain.POSITIVE:
                if not v > 0:
                    raise ValueError(f"coordinate {i} must be positive, got {v!r}")
                out[i] = math.log(v)
            elif dom is Domain.NONZERO_SIGNED:
                if abs(v) < _SIGNED_FLOOR:
                    raise ValueError(
                        f"coordinate {i} must have magnitude >= {_SIGNED_FLOOR}, got {v!r}"
                    )
                out[i] = math.copysign(math.log(abs(v) / _SIGNED_FLOOR), v)
            else:
                out[i] = v
        return out

    def to_natural(internal):
        intern = np.asarray(internal, dtype=float)
        if intern.shape != (len(spec),):
            raise ValueError(f"expected {len(spec)} coordinates, got {intern.shape}")
        out = np.empty_like(intern)
        for i, dom in enumerate(spec):
            u = float(intern[i])
            if dom is Domain.POSITIVE:
                out[i] = max(math.exp(min(u, 709.0)), sys.float_info.min)
            elif dom is Domain.NONZERO_SIGNED:
                mag = _SIGNED_FLOOR * math.exp(min(abs(u), 700.0))
                out[i] = math.copysign(mag, u)
            else:
                out[i] = u
        return out

    return to_internal, to_natural
