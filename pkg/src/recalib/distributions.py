"""Probability primitives used by every other module.

Three families are supported: the Normal distribution, the
non-standardized Student-t (a location/scale generalization of the
central t), and finite mixtures of Normals.  All are parameterised by
*variance* (``sigma2``), not standard deviation, so that ``t(nu, mu,
sigma2)`` reads the same way as the variance-inflation formulas that
produce it.  A zero-variance Normal is rejected outright: downstream
scoring divides by sigma.

Every type is an immutable value object; sampling takes an explicit
``numpy.random.Generator`` so there is no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import optimize, special

from .errors import ParameterError

__all__ = [
    "Normal",
    "NonStandardizedT",
    "NormalMixture",
    "PredictiveDist",
    "shifted",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Normal:
    """Normal distribution with mean ``mu`` and variance ``sigma2``."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0.0) or not math.isfinite(self.sigma2):
            raise ParameterError(f"Normal requires sigma2 > 0, got {self.sigma2}")
        if not math.isfinite(self.mu):
            raise ParameterError(f"Normal requires finite mu, got {self.mu}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def mean(self) -> float:
        return self.mu

    def variance(self) -> float:
        return self.sigma2

    def log_pdf(self, x: float) -> float:
        z = (x - self.mu) / self.sigma
        return -0.5 * (_LOG_2PI + math.log(self.sigma2) + z * z)

    def pdf(self, x: float) -> float:
        return math.exp(self.log_pdf(x))

    def cdf(self, x: float) -> float:
        return float(special.ndtr((x - self.mu) / self.sigma))

    def quantile(self, p: float) -> float:
        _check_prob(p)
        return self.mu + self.sigma * float(special.ndtri(p))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return self.mu + self.sigma * rng.standard_normal(k)


@dataclass(frozen=True)
class NonStandardizedT:
    """Student-t with ``nu`` degrees of freedom, location ``mu`` and
    squared scale ``sigma2``.

    If Z is central-t with nu degrees of freedom, then
    mu + sigma * Z follows this distribution.
    """

    nu: float
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (self.nu > 0.0) or not math.isfinite(self.nu):
            raise ParameterError(f"NonStandardizedT requires nu > 0, got {self.nu}")
        if not (self.sigma2 > 0.0) or not math.isfinite(self.sigma2):
            raise ParameterError(
                f"NonStandardizedT requires sigma2 > 0, got {self.sigma2}"
            )
        if not math.isfinite(self.mu):
            raise ParameterError(f"NonStandardizedT requires finite mu, got {self.mu}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def mean(self) -> float:
        # undefined for nu <= 1; by symmetry the location is still mu
        return self.mu

    def variance(self) -> float:
        if self.nu <= 2.0:
            return math.inf
        return self.sigma2 * self.nu / (self.nu - 2.0)

    def log_pdf(self, x: float) -> float:
        nu = self.nu
        z2 = (x - self.mu) ** 2 / self.sigma2
        return (
            math.lgamma((nu + 1.0) / 2.0)
            - math.lgamma(nu / 2.0)
            - 0.5 * math.log(math.pi * nu * self.sigma2)
            - (nu + 1.0) / 2.0 * math.log1p(z2 / nu)
        )

    def pdf(self, x: float) -> float:
        return math.exp(self.log_pdf(x))

    def cdf(self, x: float) -> float:
        # central-t cdf of the standardized residual, via the
        # regularized incomplete beta function (scipy.special.stdtr)
        return float(special.stdtr(self.nu, (x - self.mu) / self.sigma))

    def quantile(self, p: float) -> float:
        _check_prob(p)
        return self.mu + self.sigma * float(special.stdtrit(self.nu, p))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return self.mu + self.sigma * rng.standard_t(self.nu, size=k)


@dataclass(frozen=True)
class NormalMixture:
    """Finite mixture of Normals with weights summing to one."""

    components: tuple  # of (weight, mu, sigma2) triples
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    mus: np.ndarray = field(init=False, repr=False, compare=False)
    sigma2s: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple((float(w), float(m), float(s2)) for w, m, s2 in self.components)
        if len(comps) == 0:
            raise ParameterError("NormalMixture requires at least one component")
        w = np.array([c[0] for c in comps])
        mu = np.array([c[1] for c in comps])
        s2 = np.array([c[2] for c in comps])
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ParameterError(
                "mixture weights must be non-negative and sum to 1 within 1e-12"
            )
        if np.any(s2 <= 0.0) or not np.all(np.isfinite(s2)) or not np.all(np.isfinite(mu)):
            raise ParameterError("mixture components require finite mu and sigma2 > 0")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mus", mu)
        object.__setattr__(self, "sigma2s", s2)

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(self.sigma2s)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.mus))

    def variance(self) -> float:
        # law of total variance
        mbar = self.mean()
        return float(
            np.dot(self.weights, self.sigma2s)
            + np.dot(self.weights, (self.mus - mbar) ** 2)
        )

    def log_pdf(self, x: float) -> float:
        z2 = (x - self.mus) ** 2 / self.sigma2s
        logs = -0.5 * (_LOG_2PI + np.log(self.sigma2s) + z2)
        with np.errstate(divide="ignore"):
            return float(special.logsumexp(logs, b=self.weights))

    def pdf(self, x: float) -> float:
        return math.exp(self.log_pdf(x))

    def cdf(self, x: float) -> float:
        return float(np.dot(self.weights, special.ndtr((x - self.mus) / self.sigmas)))

    def quantile(self, p: float) -> float:
        _check_prob(p)
        sig_max = float(np.max(self.sigmas))
        lo = float(np.min(self.mus)) - 20.0 * sig_max
        hi = float(np.max(self.mus)) + 20.0 * sig_max
        # widen if p is extreme enough to fall outside the bracket
        while self.cdf(lo) > p:
            lo -= 20.0 * sig_max
        while self.cdf(hi) < p:
            hi += 20.0 * sig_max
        return float(optimize.brentq(lambda x: self.cdf(x) - p, lo, hi, xtol=1e-12))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        idx = rng.choice(len(self.components), size=k, p=self.weights)
        return self.mus[idx] + self.sigmas[idx] * rng.standard_normal(k)


PredictiveDist = Union[Normal, NonStandardizedT, NormalMixture]


def shifted(d: PredictiveDist, delta: float) -> PredictiveDist:
    """Translate a distribution by ``delta`` (location shift only)."""
    if isinstance(d, Normal):
        return Normal(d.mu + delta, d.sigma2)
    if isinstance(d, NonStandardizedT):
        return NonStandardizedT(d.nu, d.mu + delta, d.sigma2)
    if isinstance(d, NormalMixture):
        return NormalMixture(tuple((w, m + delta, s2) for w, m, s2 in d.components))
    raise TypeError(f"not a predictive distribution: {type(d)!r}")


def _check_prob(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise ParameterError(f"probability must lie strictly in (0, 1), got {p}")
