"""Non-homogeneous Gaussian Regression (NGR).

The observation is modelled as Normal with mean a + b*m and variance
c + d*v, where m and v are the ensemble mean and variance.  With d
fixed at zero this reduces to MOS.  No closed-form estimators exist, so
the parameters are fitted by maximising the exact Gaussian
log-likelihood with a derivative-free simplex (Nelder-Mead) search.
Positivity of the spread slope is enforced by optimising over delta
with d = delta**2; positivity of the offset by a hard floor eps_c.

The simplex core is JIT-compiled (numba) because the cross-validation
harness and the bootstrap refit it tens of thousands of times.  After
the simplex converges, the fit is polished by alternating the exact
weighted-least-squares solution for (a, b) given the variance
parameters with a Newton solve for c given the rest; both sub-steps are
accepted only if they do not decrease the likelihood, so the optimizer
trace stays monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import TrainingSet
from .distributions import Normal
from .errors import (
    DegenerateDesignError,
    DegenerateVarianceError,
    InsufficientDataError,
    ParameterError,
)
from .mos import fit_mos

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

__all__ = [
    "NgrParams",
    "NgrFit",
    "OptimizerSettings",
    "ngr_log_likelihood",
    "ngr_exact_log_likelihood",
    "fit_ngr",
    "ngr_predict_plugin",
    "predict_normal",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NgrParams:
    """NGR parameters: mean a + b*m, variance c + d*v."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.d < 0.0:
            raise ParameterError(f"NgrParams requires d >= 0, got d={self.d}")
        for name in ("a", "b", "c", "d"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"NgrParams requires finite {name}")

    def predictive_variance(self, v: float) -> float:
        return self.c + self.d * v


@dataclass(frozen=True)
class NgrFit:
    params: NgrParams
    log_likelihood: float  # exact Gaussian log-likelihood at the optimum
    converged: bool
    iterations: int        # total objective evaluations


@dataclass(frozen=True)
class OptimizerSettings:
    """Simplex-search settings.

    Convergence is declared when the spread of objective values across
    the simplex drops below ``tol * (1 + |objective|)``; hitting
    ``max_evals`` first reports converged=False.
    """

    max_evals: int = 10_000
    tol: float = 1e-10
    restarts: int = 1


def _variances(params: NgrParams, v: np.ndarray) -> np.ndarray:
    s2 = params.c + params.d * v
    if np.any(s2 <= 0.0):
        raise ParameterError(
            f"nonpositive predictive variance c + d*v for params {params}"
        )
    return s2


def ngr_log_likelihood(params: NgrParams, train: TrainingSet) -> float:
    """Proportional log-likelihood: -sum[log(c+d*v) + resid^2/(c+d*v)].

    This is the exact Gaussian log-likelihood with the additive
    n/2*log(2*pi) constant dropped and the overall 1/2 factor removed;
    both leave the argmax unchanged.  See
    :func:`ngr_exact_log_likelihood` for the un-dropped version.
    """
    s2 = _variances(params, train.v)
    resid = train.y - params.a - params.b * train.m
    return float(-np.sum(np.log(s2) + resid**2 / s2))


def ngr_exact_log_likelihood(params: NgrParams, train: TrainingSet) -> float:
    """Exact Gaussian log-likelihood, constants included."""
    return 0.5 * ngr_log_likelihood(params, train) - 0.5 * train.n * _LOG_2PI


@njit(cache=True)
def _neg_ll(x, m, v, y, eps_c):
    """Negative exact log-likelihood at x = (a, b, c, delta); c floored."""
    a, b, c, delta = x[0], x[1], x[2], x[3]
    if c < eps_c:
        c = eps_c
    d = delta * delta
    n = m.shape[0]
    acc = 0.0
    for t in range(n):
        s2 = c + d * v[t]
        r = y[t] - a - b * m[t]
        acc += math.log(s2) + r * r / s2
    return 0.5 * acc + 0.5 * n * _LOG_2PI


@njit(cache=True)
def _nelder_mead(x0, steps, m, v, y, eps_c, ftol, max_evals):
    """Minimise the NGR objective from x0.

    Returns (x_best, f_best, n_evals, converged, trace, trace_len) where
    trace holds the best objective value after every accepted iteration.
    """
    ndim = x0.shape[0]
    npts = ndim + 1
    sim = np.empty((npts, ndim))
    fs = np.empty(npts)
    sim[0] = x0
    fs[0] = _neg_ll(x0, m, v, y, eps_c)
    nfev = 1
    for i in range(ndim):
        sim[i + 1] = x0
        sim[i + 1, i] = x0[i] + steps[i]
        fs[i + 1] = _neg_ll(sim[i + 1], m, v, y, eps_c)
        nfev += 1

    trace = np.empty(max_evals + 1)
    trace_len = 0
    converged = False

    # one iteration needs at most 6 evaluations (reflect + contract + shrink)
    while nfev + 6 <= max_evals:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        trace[trace_len] = fs[0]
        trace_len += 1
        if fs[npts - 1] - fs[0] < ftol * (1.0 + abs(fs[0])):
            converged = True
            break

        centroid = np.zeros(ndim)
        for i in range(ndim):
            for j in range(ndim):
                centroid[j] += sim[i, j]
        centroid /= ndim

        xr = centroid + (centroid - sim[npts - 1])          # reflection
        fr = _neg_ll(xr, m, v, y, eps_c)
        nfev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[npts - 1])  # expansion
            fe = _neg_ll(xe, m, v, y, eps_c)
            nfev += 1
            if fe < fr:
                sim[npts - 1] = xe
                fs[npts - 1] = fe
            else:
                sim[npts - 1] = xr
                fs[npts - 1] = fr
        elif fr < fs[npts - 2]:
            sim[npts - 1] = xr
            fs[npts - 1] = fr
        else:
            if fr < fs[npts - 1]:                            # outside contraction
                xc = centroid + 0.5 * (xr - centroid)
            else:                                            # inside contraction
                xc = centroid + 0.5 * (sim[npts - 1] - centroid)
            fc = _neg_ll(xc, m, v, y, eps_c)
            nfev += 1
            if fc < min(fr, fs[npts - 1]):
                sim[npts - 1] = xc
                fs[npts - 1] = fc
            else:                                            # shrink toward best
                for i in range(1, npts):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fs[i] = _neg_ll(sim[i], m, v, y, eps_c)
                    nfev += 1

    order = np.argsort(fs)
    best = order[0]
    trace[trace_len] = fs[best]
    trace_len += 1
    return sim[best].copy(), fs[best], nfev, converged, trace, trace_len


def _wls_ab(c: float, d: float, m, v, y):
    """Exact (a, b) maximising the likelihood for fixed variance params."""
    w = 1.0 / (c + d * v)
    wsum = w.sum()
    m_w = float(np.dot(w, m)) / wsum
    y_w = float(np.dot(w, y)) / wsum
    dm = m - m_w
    denom = float(np.dot(w, dm * dm))
    if denom <= 0.0:
        return None
    b = float(np.dot(w, dm * (y - y_w))) / denom
    a = y_w - b * m_w
    return a, b


def _newton_c(a: float, b: float, c: float, d: float, eps_c: float, m, v, y) -> float:
    """Solve d(loglik)/dc = 0 for c with the other parameters fixed."""
    e2 = (y - a - b * m) ** 2
    for _ in range(50):
        s2 = c + d * v
        g = float(np.sum((e2 - s2) / s2**2))
        gp = float(np.sum(-1.0 / s2**2 - 2.0 * (e2 - s2) / s2**3))
        if gp == 0.0:
            break
        step = g / gp
        c_new = c - step
        if c_new < eps_c:
            c_new = eps_c
        if abs(c_new - c) < 1e-14 * (1.0 + abs(c)):
            c = c_new
            break
        c = c_new
    return max(c, eps_c)


def fit_ngr(
    train: TrainingSet,
    opts: OptimizerSettings = OptimizerSettings(),
    return_trace: bool = False,
):
    """Maximum-likelihood NGR fit.

    The records are canonically sorted before any arithmetic, so
    permuting the training set cannot change the result.  Initial values
    come from the MOS fit: (a, b) directly, c from the MOS residual
    variance rescaled to the likelihood-maximising /n divisor, and
    delta = 1e-3.  After the simplex run (plus ``opts.restarts``
    restarts from a +-10%-perturbed optimum, keeping the better), the
    alternating polish described in the module docstring is applied.
    """
    n = train.n
    if n < 4:
        raise InsufficientDataError(f"NGR fitting requires n >= 4, got n={n}")
    if train.n_distinct_m() < 2:
        raise DegenerateDesignError("all ensemble means identical; slope undefined")

    order = np.lexsort((train.y, train.v, train.m))
    m = np.ascontiguousarray(train.m[order])
    v = np.ascontiguousarray(train.v[order])
    y = np.ascontiguousarray(train.y[order])
    sorted_train = TrainingSet(m, v, y)

    var_y = float(np.var(y))
    eps_c = 1e-8 * var_y if var_y > 0.0 else 1e-16

    mos = fit_mos(sorted_train)
    c0 = max(mos.c2_hat * (n - 2) / n, eps_c)
    v_bar = float(np.mean(v))
    delta0 = 1e-3
    x0 = np.array([mos.a_hat, mos.b_hat, c0, delta0])
    steps = np.array([
        0.1 * (1.0 + abs(mos.a_hat)),
        0.1 * (1.0 + abs(mos.b_hat)),
        0.5 * c0,
        0.5 * math.sqrt(c0 / (v_bar + 1e-12) + 1e-12),
    ])

    budget = opts.max_evals
    best_x, best_f, nfev, converged, trace_arr, tlen = _nelder_mead(
        x0, steps, m, v, y, eps_c, opts.tol, budget
    )
    traces = [trace_arr[:tlen].copy()]
    for _ in range(opts.restarts):
        remaining = budget - nfev
        if remaining <= 10:
            break
        # deterministic +-10% perturbation, alternating sign per coordinate
        xp = best_x.copy()
        for i in range(xp.shape[0]):
            factor = 1.1 if i % 2 == 0 else 0.9
            if abs(xp[i]) > 1e-12:
                xp[i] *= factor
            else:
                xp[i] += 0.1 * steps[i]
        rx, rf, rfev, rconv, rtrace, rtlen = _nelder_mead(
            xp, steps, m, v, y, eps_c, opts.tol, remaining
        )
        nfev += rfev
        if rf <= best_f:
            best_x, best_f, converged = rx, rf, rconv
            traces = [rtrace[:rtlen].copy()]  # trace of the kept run only

    a, b = float(best_x[0]), float(best_x[1])
    c = max(float(best_x[2]), eps_c)
    d = float(best_x[3]) ** 2
    f_cur = best_f
    polish_trace = []
    for _ in range(3):
        ab = _wls_ab(c, d, m, v, y)
        if ab is not None:
            f_try = _neg_ll(np.array([ab[0], ab[1], c, math.sqrt(d)]), m, v, y, eps_c)
            if f_try <= f_cur:
                a, b = ab
                f_cur = f_try
                polish_trace.append(f_cur)
        c_try = _newton_c(a, b, c, d, eps_c, m, v, y)
        f_try = _neg_ll(np.array([a, b, c_try, math.sqrt(d)]), m, v, y, eps_c)
        if f_try <= f_cur:
            c = c_try
            f_cur = f_try
            polish_trace.append(f_cur)

    params = NgrParams(a=float(a), b=float(b), c=float(c), d=float(d))
    fit = NgrFit(
        params=params,
        log_likelihood=-f_cur,
        converged=bool(converged),
        iterations=int(nfev),
    )
    if return_trace:
        full = np.concatenate(traces + [np.array(polish_trace)])
        return fit, -full  # log-likelihood trace, monotone non-decreasing
    return fit


def predict_normal(params: NgrParams, m_star: float, v_star: float) -> Normal:
    """Plug-in Normal predictive from explicit NGR parameters."""
    if v_star < 0.0:
        raise ParameterError(f"ensemble variance must be >= 0, got {v_star}")
    s2 = params.predictive_variance(v_star)
    if s2 <= 0.0:
        raise DegenerateVarianceError(
            f"nonpositive predictive variance {s2} at v*={v_star}"
        )
    return Normal(params.a + params.b * m_star, s2)


def ngr_predict_plugin(fit: NgrFit, m_star: float, v_star: float) -> Normal:
    """Plug-in predictive: Normal(a + b m*, c + d v*)."""
    return predict_normal(fit.params, m_star, v_star)
