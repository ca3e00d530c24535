"""MOS recalibration: Normal linear regression of observations on the
ensemble mean.

Fitting is closed form.  Two predictive distributions are available for
a new ensemble mean m*: the plug-in Normal, which treats the fitted
parameters as known, and a non-standardized t whose variance is
inflated by the parameter-estimation uncertainty,

    t_{n-2}( a + b m*,  c2 * [1 + 1/n + (m* - m_bar)^2 / ss_m] ).

The location is identical for both; only spread and tail weight differ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TrainingSet
from .distributions import Normal, NonStandardizedT
from .errors import (
    DegenerateDesignError,
    DegenerateVarianceError,
    InsufficientDataError,
)

__all__ = ["MosFit", "fit_mos", "mos_predict_plugin", "mos_predict_t"]


@dataclass(frozen=True)
class MosFit:
    """Fitted MOS parameters plus the training statistics that enter the
    predictive-uncertainty formula."""

    a_hat: float     # intercept
    b_hat: float     # slope
    c2_hat: float    # residual variance, n-2 divisor
    n: int
    m_bar: float     # training mean of the ensemble means
    ss_m: float      # sum of squares of (m_t - m_bar)

    def __post_init__(self):
        if self.n < 3:
            raise InsufficientDataError(f"MosFit requires n >= 3, got n={self.n}")
        if not self.ss_m > 0.0:
            raise DegenerateDesignError("MosFit requires ss_m > 0")
        if self.c2_hat < 0.0:
            raise DegenerateVarianceError("MosFit requires c2_hat >= 0")

    def inflation_factor(self, m_star: float) -> float:
        """Variance-inflation multiplier for a forecast at m_star.

        Always >= 1 + 1/n, with equality exactly at m_star = m_bar.
        """
        return 1.0 + 1.0 / self.n + (m_star - self.m_bar) ** 2 / self.ss_m


def fit_mos(train: TrainingSet) -> MosFit:
    """Closed-form MOS fit.

    The slope is the ratio of the sample covariance between ensemble
    means and observations to the sample variance of the ensemble means
    (n-1 divisors in both; the ratio is divisor-independent).  The
    residual variance uses the unbiased n-2 divisor, since two mean
    parameters were estimated.
    """
    n = train.n
    if n < 3:
        raise InsufficientDataError(f"MOS fitting requires n >= 3, got n={n}")
    m, y = train.m, train.y
    m_bar = float(np.mean(m))
    y_bar = float(np.mean(y))
    dm = m - m_bar
    ss_m = float(np.dot(dm, dm))
    if ss_m <= 0.0:
        raise DegenerateDesignError("all ensemble means identical; slope undefined")
    s_my = float(np.dot(dm, y - y_bar))  # (n-1) divisors cancel in the ratio
    b_hat = s_my / ss_m
    a_hat = y_bar - b_hat * m_bar
    resid = y - a_hat - b_hat * m
    c2_hat = float(np.dot(resid, resid)) / (n - 2)
    return MosFit(a_hat=a_hat, b_hat=b_hat, c2_hat=c2_hat, n=n, m_bar=m_bar, ss_m=ss_m)


def mos_predict_plugin(fit: MosFit, m_star: float) -> Normal:
    """Plug-in predictive: Normal(a + b m*, c2), parameter uncertainty
    ignored."""
    if fit.c2_hat <= 0.0:
        raise DegenerateVarianceError(
            "plug-in prediction undefined for a perfect fit (c2_hat = 0)"
        )
    return Normal(fit.a_hat + fit.b_hat * m_star, fit.c2_hat)


def mos_predict_t(fit: MosFit, m_star: float) -> NonStandardizedT:
    """Predictive accounting for parameter uncertainty: a t distribution
    with n-2 degrees of freedom and inflated variance.  Same location as
    the plug-in forecast."""
    if fit.c2_hat <= 0.0:
        raise DegenerateVarianceError(
            "t prediction undefined for a perfect fit (c2_hat = 0)"
        )
    scale2 = fit.c2_hat * fit.inflation_factor(m_star)
    return NonStandardizedT(nu=float(fit.n - 2), mu=fit.a_hat + fit.b_hat * m_star,
                            sigma2=scale2)
