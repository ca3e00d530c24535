"""Proper scores and reliability diagnostics.

Ignorance is the negative base-2 log of the forecast density at the
observation, so differences are in bits.  CRPS is the integrated
squared difference between the forecast cdf and the observation's step
function; closed forms are used for Normals and Normal mixtures, and
adaptive quadrature for the t distribution (and as an independent
cross-check of the closed forms).  PIT is the forecast cdf at the
observation; reliable forecasts give uniform PIT values and a flat
20-bin histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .distributions import Normal, NonStandardizedT, NormalMixture, PredictiveDist
from .errors import InputError, NumericError, UndefinedScoreError

__all__ = [
    "VerificationRecord",
    "PitHistogram",
    "ignorance",
    "crps",
    "crps_quadrature",
    "crpss",
    "pit",
    "pit_histogram",
    "interval_coverage",
    "score",
]

_LN2 = math.log(2.0)
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class VerificationRecord:
    """Per-forecast verification triple."""

    pit: float
    ignorance_bits: float
    crps: float


@dataclass(frozen=True)
class PitHistogram:
    """Occupation counts of the 20 five-percent PIT intervals."""

    bin_edges: tuple  # 21 edges, 0.0 to 1.0 in steps of 0.05
    counts: tuple     # 20 non-negative integers
    n_total: int


def ignorance(d: PredictiveDist, y: float) -> float:
    """Negative base-2 log forecast density at the observation, in bits."""
    if not math.isfinite(y):
        raise InputError(f"observation must be finite, got {y}")
    log_pdf = d.log_pdf(y)
    if log_pdf == -math.inf:
        # genuinely zero density (not an overflow): infinite score
        return math.inf
    return -log_pdf / _LN2


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _crps_normal(mu: float, sigma2: float, y: float) -> float:
    sigma = math.sqrt(sigma2)
    z = (y - mu) / sigma
    return sigma * (z * (2.0 * special.ndtr(z) - 1.0) + 2.0 * _phi(z) - 1.0 / _SQRT_PI)


def _a_func(mu, sigma2):
    """Expected absolute value of a Normal(mu, sigma2) variable."""
    sigma = np.sqrt(sigma2)
    z = mu / sigma
    return 2.0 * sigma * _phi(z) + mu * (2.0 * special.ndtr(z) - 1.0)


def _crps_mixture(d: NormalMixture, y: float) -> float:
    w, mu, s2 = d.weights, d.mus, d.sigma2s
    first = float(np.dot(w, _a_func(y - mu, s2)))
    cross = _a_func(mu[:, None] - mu[None, :], s2[:, None] + s2[None, :])
    second = 0.5 * float(w @ cross @ w)
    return first - second


def crps_quadrature(d: PredictiveDist, y: float, rel_tol: float = 1e-8) -> float:
    """CRPS by adaptive quadrature of [F(x) - H(x - y)]^2.

    Integration runs over the 1e-9 .. 1-1e-9 quantile range, extended to
    include y, split at y where the integrand has a kink.  This is the
    universal route: it applies to every distribution family and serves
    as the independent cross-check of the closed forms.
    """
    lo = min(d.quantile(1e-9), y)
    hi = max(d.quantile(1.0 - 1e-9), y)
    cdf = d.cdf
    total = 0.0
    for a, b, integrand in (
        (lo, y, lambda x: cdf(x) ** 2),
        (y, hi, lambda x: (1.0 - cdf(x)) ** 2),
    ):
        if b <= a:
            continue
        val, abserr = integrate.quad(
            integrand, a, b, epsabs=1e-13, epsrel=rel_tol, limit=200
        )
        if not math.isfinite(val):
            raise NumericError(f"CRPS quadrature failed on [{a}, {b}] (got {val})")
        total += val
    return total


def crps(d: PredictiveDist, y: float) -> float:
    """CRPS in the units of the forecast variable."""
    if not math.isfinite(y):
        raise InputError(f"observation must be finite, got {y}")
    if isinstance(d, Normal):
        return _crps_normal(d.mu, d.sigma2, y)
    if isinstance(d, NormalMixture):
        return _crps_mixture(d, y)
    if isinstance(d, NonStandardizedT):
        if d.nu <= 1.0:
            raise UndefinedScoreError(
                f"CRPS undefined for t with nu <= 1 (infinite mean), got nu={d.nu}"
            )
        return crps_quadrature(d, y)
    raise TypeError(f"not a predictive distribution: {type(d)!r}")


def crpss(mean_crps_ref: float, mean_crps_new: float) -> float:
    """Skill of the new system relative to the reference:
    (ref - new) / ref.  Positive means improvement; bounded above by 1."""
    if mean_crps_ref <= 0.0:
        raise InputError(
            f"reference mean CRPS must be positive, got {mean_crps_ref}"
        )
    return (mean_crps_ref - mean_crps_new) / mean_crps_ref


def pit(d: PredictiveDist, y: float) -> float:
    """Probability integral transform: forecast cdf at the observation."""
    return d.cdf(y)


def pit_histogram(pits) -> PitHistogram:
    """20 equal-width bins over [0, 1]; a value exactly on an interior
    edge is assigned to the lower bin."""
    values = np.asarray(list(pits), dtype=float)
    if values.size and (np.any(values < 0.0) or np.any(values > 1.0) or
                        not np.all(np.isfinite(values))):
        raise InputError("PIT values must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, 21)
    # side='left' puts values equal to an interior edge into the lower bin
    idx = np.searchsorted(edges[1:-1], values, side="left")
    counts = np.bincount(idx, minlength=20)
    return PitHistogram(
        bin_edges=tuple(edges.tolist()),
        counts=tuple(int(c) for c in counts),
        n_total=int(values.size),
    )


def interval_coverage(dists, ys, level: float) -> float:
    """Fraction of observations inside the central ``level`` interval of
    their own forecasts.  Endpoints count as covered."""
    dists = list(dists)
    ys = list(ys)
    if len(dists) == 0 or len(dists) != len(ys):
        raise InputError("need equal-length, non-empty forecast and observation lists")
    if not (0.0 < level < 1.0):
        raise InputError(f"level must lie in (0, 1), got {level}")
    p_lo = (1.0 - level) / 2.0
    p_hi = (1.0 + level) / 2.0
    covered = 0
    for d, y in zip(dists, ys):
        if d.quantile(p_lo) <= y <= d.quantile(p_hi):
            covered += 1
    return covered / len(dists)


def score(d: PredictiveDist, y: float) -> VerificationRecord:
    """PIT, Ignorance and CRPS of one forecast--observation pair."""
    return VerificationRecord(
        pit=pit(d, y), ignorance_bits=ignorance(d, y), crps=crps(d, y)
    )
