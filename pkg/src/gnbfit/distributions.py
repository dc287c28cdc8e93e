"""The four model families: gamma, generalized gamma, negative binomial, and
the generalized negative binomial (GG-mixed Poisson) law.

Density and pmf evaluation is done in log space throughout; the GNB pmf is a
semi-infinite integral evaluated after substituting the GG mixing variable
into a unit-scale gamma weight, which removes the parameter-dependent decay
scale exactly (and the ``|gamma|`` prefactor with it).  Parameter objects are
immutable; samplers own their generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import numerics
from .errors import QuadratureError

__all__ = [
    "GammaParams",
    "GGParams",
    "NBParams",
    "GAMMA_EXP_MIN",
    "gamma_pdf",
    "gg_pdf",
    "gg_log_pdf",
    "gg_mean",
    "gg_power_identity_check",
    "nb_pmf",
    "gnb_pmf",
    "gnb_log_pmf",
    "gnb_pmf_batch",
    "gnb_truncation_k",
    "gnb_recurrence_residual",
    "sample_gamma",
    "sample_gg",
    "sample_gnb",
]

# the power exponent must stay away from 0, where the GG density is undefined
GAMMA_EXP_MIN = 1e-3


@dataclass(frozen=True)
class GammaParams:
    """Gamma law with shape ``r`` and rate-like scale ``mu`` (density has e^{-mu x})."""

    r: float
    mu: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"shape r must be positive and finite, got {self.r!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"scale mu must be positive and finite, got {self.mu!r}")


@dataclass(frozen=True)
class GGParams:
    """Generalized gamma law (r, gamma_exp, mu); also the GNB mixing law."""

    r: float
    gamma_exp: float
    mu: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"shape r must be positive and finite, got {self.r!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"scale mu must be positive and finite, got {self.mu!r}")
        if not (abs(self.gamma_exp) >= GAMMA_EXP_MIN and math.isfinite(self.gamma_exp)):
            raise ValueError(
                f"power exponent must satisfy |gamma_exp| >= {GAMMA_EXP_MIN}, got {self.gamma_exp!r}"
            )


@dataclass(frozen=True)
class NBParams:
    """Negative binomial law with shape ``r`` and success probability ``p``."""

    r: float
    p: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"shape r must be positive and finite, got {self.r!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"success probability must lie in (0, 1), got {self.p!r}")


def _log_density_positive(x, r, gamma_exp, mu):
    """Log GG density on strictly positive ``x`` (scalar or array).

    Never forms x^(gamma*r - 1) directly; everything stays in log space
    except the exponential argument mu * x^gamma, which is well scaled.
    """
    lx = np.log(x)
    const = math.log(abs(gamma_exp)) + r * math.log(mu) - math.lgamma(r)
    return const + (gamma_exp * r - 1.0) * lx - mu * np.power(x, gamma_exp)


def _density_at_zero(r, gamma_exp, mu, log: bool):
    # limit of the density as x -> 0+; +inf is the distinguished signal for
    # an integrable power singularity at the origin
    if gamma_exp < 0:
        return -math.inf if log else 0.0
    a = gamma_exp * r - 1.0
    if a < 0:
        return math.inf
    if a == 0:
        logc = math.log(abs(gamma_exp)) + r * math.log(mu) - math.lgamma(r)
        return logc if log else math.exp(logc)
    return -math.inf if log else 0.0


def _gg_eval(x, r, gamma_exp, mu, log: bool):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("density arguments must be finite and >= 0")
    out = np.empty_like(arr)
    pos = arr > 0
    if pos.any():
        with np.errstate(over="ignore", under="ignore"):
            ld = _log_density_positive(arr[pos], r, gamma_exp, mu)
            out[pos] = ld if log else np.exp(ld)
    if (~pos).any():
        out[~pos] = _density_at_zero(r, gamma_exp, mu, log)
    return float(out[0]) if scalar else out


def gg_pdf(x, params: GGParams):
    """Generalized gamma density; accepts a scalar or an array of x >= 0.

    For parameter sets whose density diverges at the origin the value at
    x = 0 is ``inf`` (a signal, not an overflow); for negative exponents the
    density vanishes there and 0 is returned.
    """
    return _gg_eval(x, params.r, params.gamma_exp, params.mu, log=False)


def gg_log_pdf(x, params: GGParams):
    """Natural log of :func:`gg_pdf`, computed without forming x^(gamma r - 1)."""
    return _gg_eval(x, params.r, params.gamma_exp, params.mu, log=True)


def gamma_pdf(x, params: GammaParams):
    """Gamma density; shares the generalized-gamma code path at exponent 1.

    The shared path makes ``gamma_pdf(x, (r, mu))`` bitwise identical to
    ``gg_pdf(x, (r, 1, mu))``.
    """
    return _gg_eval(x, params.r, 1.0, params.mu, log=False)


def gg_mean(params: GGParams) -> float:
    """First moment Gamma(r + 1/gamma) / (Gamma(r) mu^(1/gamma)); inf when it diverges."""
    a = params.r + 1.0 / params.gamma_exp
    if a <= 0:
        return math.inf
    return math.exp(
        float(gammaln(a)) - math.lgamma(params.r) - math.log(params.mu) / params.gamma_exp
    )


def gg_power_identity_check(params: GGParams, probe_xs) -> float:
    """Max residual of the power-transform identity between the GG density
    and the gamma density of the underlying power, over the probe points.

    Both sides describe the same law (the GG variable is the 1/gamma power of
    a gamma variable), so the residual is floating-point noise; the contract
    is <= 1e-12 for well-scaled parameters.
    """
    xs = np.asarray(probe_xs, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("probe points must be strictly positive")
    g = params.gamma_exp
    left = gg_pdf(xs, params)
    t = np.power(xs, g)
    right = abs(g) * np.power(xs, g - 1.0) * gamma_pdf(t, GammaParams(params.r, params.mu))
    return float(np.max(np.abs(left - right)))


def _check_counts(k):
    ks = np.asarray(k, dtype=float)
    if np.any(ks < 0) or np.any(ks != np.floor(ks)) or not np.all(np.isfinite(ks)):
        raise ValueError("counts must be nonnegative integers")
    return ks


def nb_pmf(k, params: NBParams):
    """Negative binomial pmf, computed in log space; scalar or array ``k``."""
    ks = _check_counts(k)
    scalar = ks.ndim == 0
    ks = np.atleast_1d(ks)
    r, p = params.r, params.p
    logp = (
        gammaln(r + ks) - gammaln(ks + 1.0) - math.lgamma(r)
        + r * math.log(p) + ks * math.log1p(-p)
    )
    out = np.exp(logp)
    return float(out[0]) if scalar else out


def _gnb_log_pmf_many(params: GGParams, ks, rel_tol, abs_floor=0.0):
    """Log pmf of the GNB law at the integer points ``ks`` (shared nodes).

    Uses the substitution t = mu * z^gamma, which turns the mixture integral
    into a Gamma(r, 1)-weighted Poisson factor; all accumulation happens in
    log space so factorial scales never overflow.
    """
    ks = np.atleast_1d(_check_counts(ks))
    r, g, mu = params.r, params.gamma_exp, params.mu
    lgr = math.lgamma(r)
    lnmu = math.log(mu)
    invg = 1.0 / g
    kcol = ks[:, None]
    lgk = gammaln(ks + 1.0)[:, None]

    def logf(t):
        lnt = np.log(t)
        lnz = invg * (lnt - lnmu)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            z = np.exp(lnz)
            base = (r - 1.0) * lnt - t - lgr
            out = base[None, :] + kcol * lnz[None, :] - z[None, :] - lgk
        return np.where(np.isnan(out), -np.inf, out)

    try:
        log_vals, _, _ = numerics.integrate_semiinfinite_log_many(
            logf, len(ks), rel_tol=rel_tol, abs_floor=abs_floor
        )
    except QuadratureError as exc:
        raise QuadratureError(
            f"GNB pmf quadrature failed for r={r}, gamma={g}, mu={mu}, "
            f"k in [{int(ks.min())}, {int(ks.max())}]: {exc}",
            value=exc.value,
            abs_error_estimate=exc.abs_error_estimate,
            evaluations=exc.evaluations,
        ) from exc
    return log_vals


def gnb_log_pmf(k, params: GGParams, rel_tol: float = 1e-10) -> float:
    """Log of the generalized negative binomial pmf at a single point."""
    return float(_gnb_log_pmf_many(params, [k], rel_tol)[0])


def gnb_pmf(k, params: GGParams, rel_tol: float = 1e-10) -> float:
    """Generalized negative binomial pmf P(N = k) by adaptive quadrature."""
    return math.exp(gnb_log_pmf(k, params, rel_tol))


_BATCH_CHUNK = 2048


def gnb_pmf_batch(params: GGParams, k_max: int, rel_tol: float = 1e-10,
                  abs_floor: float = 0.0) -> np.ndarray:
    """Pmf values for k = 0 .. k_max, sharing quadrature nodes across k.

    ``abs_floor`` optionally relaxes the per-k relative criterion to an
    absolute one, which callers that only need absolute accuracy (objective
    sums) can use to skip refining negligible tail probabilities.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    parts = []
    for lo in range(0, k_max + 1, _BATCH_CHUNK):
        hi = min(lo + _BATCH_CHUNK - 1, k_max)
        parts.append(_gnb_log_pmf_many(params, np.arange(lo, hi + 1), rel_tol, abs_floor))
    return np.exp(np.concatenate(parts))


def gnb_truncation_k(params: GGParams, mass_tol: float = 1e-10,
                     rel_tol: float = 1e-10) -> int:
    """Smallest K whose cumulative GNB mass reaches 1 - mass_tol.

    Capped at max(10 * mean, 10^4); the cap alone is returned when the mean
    diverges (heavy-tailed mixing with gamma_exp < 0).
    """
    mean = gg_mean(params)
    cap = 10_000 if not math.isfinite(mean) else max(10_000, int(math.ceil(10.0 * mean)))
    target = 1.0 - mass_tol
    total = 0.0
    lo = 0
    block = 512
    while lo <= cap:
        hi = min(lo + block - 1, cap)
        pm = np.exp(_gnb_log_pmf_many(params, np.arange(lo, hi + 1), rel_tol))
        csum = total + np.cumsum(pm)
        idx = np.nonzero(csum >= target)[0]
        if idx.size:
            return lo + int(idx[0])
        total = float(csum[-1])
        lo = hi + 1
    return cap


def gnb_recurrence_residual(k: int, params: GGParams, rel_tol: float = 1e-10) -> float:
    """Residual of the three-term pmf recurrence at k, each pmf by quadrature.

    The identity (from integration by parts on the mixture integral, with the
    boundary term vanishing) is

        (gamma r + k) P_r(k) = (k+1) P_r(k+1) + |gamma| r P_{r+1}(k),

    where P_{r+1} is the pmf with the shape raised by one.  Contractually
    small (|residual| <= 1e-6) for positive exponents; for negative exponents
    the value is reported but carries no guarantee.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    r, g, mu = params.r, params.gamma_exp, params.mu
    p_k, p_k1 = np.exp(_gnb_log_pmf_many(params, [k, k + 1], rel_tol))
    p_up = gnb_pmf(k, GGParams(r + 1.0, g, mu), rel_tol)
    predicted = (g * r + k) / (k + 1.0) * p_k - abs(g) * r / (k + 1.0) * p_up
    return float(p_k1 - predicted)


def _gg_draws(rng: np.random.Generator, params: GGParams, n: int) -> np.ndarray:
    return rng.gamma(params.r, 1.0 / params.mu, size=n) ** (1.0 / params.gamma_exp)


def _check_n(n):
    if not n >= 1:
        raise ValueError("sample size must be >= 1")
    return int(n)


def sample_gamma(params: GammaParams, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. gamma draws; deterministic for a given seed."""
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    return rng.gamma(params.r, 1.0 / params.mu, size=n)


def sample_gg(params: GGParams, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. generalized-gamma draws via the power transform of gamma draws."""
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    return _gg_draws(rng, params, n)


def sample_gnb(params: GGParams, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. GNB draws: a GG rate per draw, then a Poisson count."""
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    lam = _gg_draws(rng, params, n)
    if not np.all(np.isfinite(lam)):
        raise ValueError("mixing draws overflowed; parameters are too extreme to sample")
    return rng.poisson(lam)
