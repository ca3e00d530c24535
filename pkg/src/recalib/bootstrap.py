"""Predictive bootstrap for NGR.

Resample the training triples with replacement, refit NGR on every
resample, and combine the resulting plug-in Normals into an equally
weighted Normal mixture.  The mixture has larger variance and heavier
tails than the single plug-in Normal, reflecting parameter uncertainty.

Replicate k draws from a random stream derived only from
(base_seed, k), never from K or from other replicates, so replicates
can be fitted in any order (or concurrently) with identical results.
Resamples that are degenerate (fewer than two distinct ensemble means)
or fail to converge are redrawn from the same stream, up to 100
attempts per replicate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TrainingSet
from .distributions import NormalMixture
from .errors import BootstrapFailureError, DegenerateVarianceError, RecalibError
from .ngr import NgrParams, OptimizerSettings, fit_ngr, predict_normal

__all__ = ["BootstrapEnsemble", "bootstrap_fit", "bootstrap_predict"]

_MAX_DRAWS_PER_REPLICATE = 100


@dataclass(frozen=True)
class BootstrapEnsemble:
    replicates: tuple  # of NgrParams, length K
    failed_draws: int
    base_seed: int


def _replicate_stream(base_seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([base_seed, k]))


def bootstrap_fit(
    train: TrainingSet,
    K: int,
    base_seed: int,
    opts: OptimizerSettings = OptimizerSettings(),
) -> BootstrapEnsemble:
    """Fit K bootstrap replicates of the NGR parameters."""
    if K < 1:
        raise RecalibError(f"bootstrap requires K >= 1, got {K}")
    if base_seed < 0:
        raise RecalibError(f"base_seed must be non-negative, got {base_seed}")
    n = train.n
    replicates = []
    failed = 0
    for k in range(K):
        stream = _replicate_stream(base_seed, k)
        params = None
        for _ in range(_MAX_DRAWS_PER_REPLICATE):
            idx = stream.integers(0, n, size=n)
            resample = train.subset(idx)
            if resample.n_distinct_m() < 2:
                failed += 1
                continue
            try:
                fit = fit_ngr(resample, opts)
            except RecalibError:
                failed += 1
                continue
            if not fit.converged:
                failed += 1
                continue
            params = fit.params
            break
        if params is None:
            raise BootstrapFailureError(
                f"replicate {k}: no usable resample in "
                f"{_MAX_DRAWS_PER_REPLICATE} draws (training data too "
                f"small or degenerate)"
            )
        replicates.append(params)
    return BootstrapEnsemble(
        replicates=tuple(replicates), failed_draws=failed, base_seed=base_seed
    )


def bootstrap_predict(
    ens: BootstrapEnsemble, m_star: float, v_star: float
) -> NormalMixture:
    """Equally weighted mixture of the per-replicate plug-in Normals."""
    K = len(ens.replicates)
    w = 1.0 / K
    comps = []
    for k, params in enumerate(ens.replicates):
        try:
            normal = predict_normal(params, m_star, v_star)
        except DegenerateVarianceError as err:
            raise DegenerateVarianceError(f"replicate {k}: {err}") from err
        comps.append((w, normal.mu, normal.sigma2))
    return NormalMixture(tuple(comps))
