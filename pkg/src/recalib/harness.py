"""Experiment engine: synthetic data, detrending, cross-validation and
score aggregation.

Two cross-validation modes are supported.  Rolling-window mode predicts
each index from the immediately preceding ``window`` records, so every
training index is strictly in the past.  Leave-one-out mode predicts
every index from all remaining records.  Either way no observation ever
appears in its own training fold.

When detrending is enabled, ordinary-least-squares trends in the time
index are fitted on the training fold only, removed from both the
ensemble means and the observations, and the observation trend
extrapolated to the forecast time is added back to the predictive
location.  This keeps the evaluation strictly out-of-sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import bootstrap_fit, bootstrap_predict
from .data import TrainingSet
from .distributions import PredictiveDist, shifted
from .errors import InputError, RecalibError
from .mos import fit_mos, mos_predict_plugin, mos_predict_t
from .ngr import OptimizerSettings, fit_ngr, ngr_predict_plugin
from .verification import (
    PitHistogram,
    VerificationRecord,
    interval_coverage,
    pit_histogram,
    score,
)

__all__ = [
    "RECALIBRATORS",
    "SyntheticSpec",
    "generate_synthetic",
    "detrend_linear",
    "CvPlan",
    "FoldResult",
    "CvResult",
    "run_cv",
    "paired_folds",
    "Summary",
    "aggregate",
]

# minimum training size per recalibrator: MOS fitting needs n >= 3, the
# t predictive needs n >= 4 for a finite CRPS (nu = n - 2 > 1), NGR has
# four parameters
RECALIBRATORS = {
    "mos-plugin": 3,
    "mos-t": 4,
    "ngr-plugin": 4,
    "ngr-bootstrap": 4,
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic forecast--observation archive.

    ``generator`` is "mos" with params (a, b, c), where y = a + b*m +
    c*eps and eps is standard Normal (so c multiplies the *standard
    deviation*), or "ngr" with params (a, b, c, d), where y is Normal
    with mean a + b*m and variance c + d*v.  Ensemble means are Normal
    (m_mean, m_var); ensemble variances are offset-shifted Gamma draws,
    guaranteed positive for v_offset > 0.
    """

    generator: str
    params: tuple
    n: int
    seed: int
    m_mean: float = 0.0
    m_var: float = 1.0
    v_offset: float = 0.1
    v_shape: float = 2.0
    v_scale: float = 0.5

    def __post_init__(self):
        if self.generator not in ("mos", "ngr"):
            raise InputError(f"unknown generator {self.generator!r}")
        want = 3 if self.generator == "mos" else 4
        if len(self.params) != want:
            raise InputError(
                f"{self.generator} generator takes {want} parameters, "
                f"got {len(self.params)}"
            )
        if self.n < 1:
            raise InputError("n must be positive")
        if self.m_var < 0 or self.v_offset < 0 or self.v_shape <= 0 or self.v_scale <= 0:
            raise InputError("invalid m/v process parameters")
        if self.generator == "mos" and not self.params[2] > 0:
            raise InputError("mos generator requires c > 0")
        if self.generator == "ngr":
            a, b, c, d = self.params
            if d < 0 or c + d * self.v_offset <= 0:
                raise InputError("ngr generator requires d >= 0 and c + d*v > 0")


def generate_synthetic(spec: SyntheticSpec) -> TrainingSet:
    """Draw a TrainingSet from the generating process in ``spec``."""
    rng = np.random.default_rng(spec.seed)
    m = spec.m_mean + math.sqrt(spec.m_var) * rng.standard_normal(spec.n)
    v = spec.v_offset + rng.gamma(spec.v_shape, spec.v_scale, size=spec.n)
    eps = rng.standard_normal(spec.n)
    if spec.generator == "mos":
        a, b, c = spec.params
        y = a + b * m + c * eps
    else:
        a, b, c, d = spec.params
        y = a + b * m + np.sqrt(c + d * v) * eps
    return TrainingSet(m, v, y)


def detrend_linear(series):
    """Remove an ordinary-least-squares line in t from the series.

    ``series`` is a sequence of (t, x) pairs.  Returns (residuals,
    (intercept, slope)).
    """
    pts = list(series)
    if len(pts) < 3:
        raise InputError("detrending requires at least 3 points")
    t = np.array([p[0] for p in pts], dtype=float)
    x = np.array([p[1] for p in pts], dtype=float)
    t_bar = t.mean()
    dt = t - t_bar
    ss_t = float(np.dot(dt, dt))
    if ss_t <= 0.0:
        raise InputError("detrending requires at least 2 distinct t values")
    slope = float(np.dot(dt, x - x.mean())) / ss_t
    intercept = float(x.mean() - slope * t_bar)
    residuals = x - intercept - slope * t
    return residuals, (intercept, slope)


@dataclass(frozen=True)
class CvPlan:
    """Cross-validation schedule and recalibrator choice."""

    mode: str                    # "rolling" or "leave-one-out"
    recalibrator: str
    base_seed: int
    window: int = 0              # rolling mode only
    K: int = 50                  # bootstrap replicates (ngr-bootstrap only)
    detrend: bool = False
    opts: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self):
        if self.recalibrator not in RECALIBRATORS:
            raise InputError(f"unknown recalibrator {self.recalibrator!r}")
        if self.mode not in ("rolling", "leave-one-out"):
            raise InputError(f"unknown cv mode {self.mode!r}")
        min_n = RECALIBRATORS[self.recalibrator]
        if self.mode == "rolling" and self.window < min_n:
            raise InputError(
                f"rolling window {self.window} below minimum training size "
                f"{min_n} for {self.recalibrator}"
            )
        if self.K < 1:
            raise InputError("K must be >= 1")
        if self.base_seed < 0:
            raise InputError("base_seed must be non-negative")


@dataclass(frozen=True)
class FoldResult:
    index: int                   # time index of the evaluated forecast
    forecast: PredictiveDist
    y: float
    record: VerificationRecord


@dataclass(frozen=True)
class CvResult:
    folds: tuple                 # of FoldResult, in index order
    failed_indices: tuple        # folds skipped because the fit failed

    @property
    def fold_count(self) -> int:
        return len(self.folds)

    @property
    def failure_count(self) -> int:
        return len(self.failed_indices)


def _fold_seed(base_seed: int, fold_index: int) -> int:
    state = np.random.SeedSequence([base_seed, fold_index]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def _run_fold(data: TrainingSet, plan: CvPlan, fold_index: int, train_idx: np.ndarray):
    m_tr = data.m[train_idx]
    v_tr = data.v[train_idx]
    y_tr = data.y[train_idx]
    m_star = float(data.m[fold_index])
    v_star = float(data.v[fold_index])
    y_star = float(data.y[fold_index])
    y_trend_at_star = 0.0
    if plan.detrend:
        m_tr, (im, sm) = detrend_linear(zip(train_idx, m_tr))
        y_tr, (iy, sy) = detrend_linear(zip(train_idx, y_tr))
        m_star -= im + sm * fold_index
        y_trend_at_star = iy + sy * fold_index
    train = TrainingSet(m_tr, v_tr, y_tr)

    try:
        if plan.recalibrator == "mos-plugin":
            dist = mos_predict_plugin(fit_mos(train), m_star)
        elif plan.recalibrator == "mos-t":
            dist = mos_predict_t(fit_mos(train), m_star)
        elif plan.recalibrator == "ngr-plugin":
            dist = ngr_predict_plugin(fit_ngr(train, plan.opts), m_star, v_star)
        else:
            ens = bootstrap_fit(
                train, plan.K, _fold_seed(plan.base_seed, fold_index), plan.opts
            )
            dist = bootstrap_predict(ens, m_star, v_star)
        if plan.detrend:
            dist = shifted(dist, y_trend_at_star)
        return FoldResult(
            index=fold_index, forecast=dist, y=y_star, record=score(dist, y_star)
        )
    except RecalibError:
        return fold_index  # failure marker


def _fold_indices(n: int, plan: CvPlan):
    if plan.mode == "rolling":
        w = plan.window
        if n < w + 1:
            raise InputError(
                f"rolling cv needs at least window+1 = {w + 1} records, got {n}"
            )
        return [(i, np.arange(i - w, i)) for i in range(w, n)]
    min_n = RECALIBRATORS[plan.recalibrator]
    if n < min_n + 1:
        raise InputError(f"leave-one-out cv needs at least {min_n + 1} records")
    return [
        (i, np.concatenate([np.arange(0, i), np.arange(i + 1, n)]))
        for i in range(n)
    ]


def run_cv(data: TrainingSet, plan: CvPlan, jobs: int = 1) -> CvResult:
    """Evaluate every fold of the plan out-of-sample.

    Folds are independent given the per-fold derived seeds, so the
    result is identical for any ``jobs`` setting.
    """
    schedule = _fold_indices(data.n, plan)
    if jobs == 1:
        raw = [_run_fold(data, plan, i, idx) for i, idx in schedule]
    else:
        from joblib import Parallel, delayed

        raw = Parallel(n_jobs=jobs)(
            delayed(_run_fold)(data, plan, i, idx) for i, idx in schedule
        )
    folds = tuple(r for r in raw if isinstance(r, FoldResult))
    failed = tuple(r for r in raw if not isinstance(r, FoldResult))
    return CvResult(folds=folds, failed_indices=failed)


def paired_folds(a: CvResult, b: CvResult):
    """Restrict two runs to their common fold indices, keeping the
    comparison exactly paired."""
    by_index_b = {f.index: f for f in b.folds}
    pairs = [(f, by_index_b[f.index]) for f in a.folds if f.index in by_index_b]
    return pairs


@dataclass(frozen=True)
class Summary:
    mean_ignorance: float
    mean_crps: float
    pit_hist: PitHistogram
    coverage: tuple             # of (level, coverage) pairs
    fold_count: int
    failure_count: int


def aggregate(result: CvResult, levels=(0.5, 0.9)) -> Summary:
    """Arithmetic score means, PIT histogram and interval coverage."""
    if result.fold_count == 0:
        raise InputError("no successful folds to aggregate")
    records = [f.record for f in result.folds]
    dists = [f.forecast for f in result.folds]
    ys = [f.y for f in result.folds]
    cov = tuple(
        (level, interval_coverage(dists, ys, level)) for level in levels
    )
    return Summary(
        mean_ignorance=float(np.mean([r.ignorance_bits for r in records])),
        mean_crps=float(np.mean([r.crps for r in records])),
        pit_hist=pit_histogram([r.pit for r in records]),
        coverage=cov,
        fold_count=result.fold_count,
        failure_count=result.failure_count,
    )
