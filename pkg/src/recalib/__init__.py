"""Statistical recalibration of ensemble forecasts with parameter
uncertainty, plus proper-score verification and cross-validation
tooling."""

from .bootstrap import BootstrapEnsemble, bootstrap_fit, bootstrap_predict
from .data import TrainingSet
from .distributions import (
    Normal,
    NonStandardizedT,
    NormalMixture,
    PredictiveDist,
    shifted,
)
from .errors import (
    BootstrapFailureError,
    DegenerateDesignError,
    DegenerateVarianceError,
    InputError,
    InsufficientDataError,
    NumericError,
    ParameterError,
    RecalibError,
    UndefinedScoreError,
)
from .harness import (
    CvPlan,
    CvResult,
    FoldResult,
    Summary,
    SyntheticSpec,
    aggregate,
    detrend_linear,
    generate_synthetic,
    paired_folds,
    run_cv,
)
from .mos import MosFit, fit_mos, mos_predict_plugin, mos_predict_t
from .ngr import (
    NgrFit,
    NgrParams,
    OptimizerSettings,
    fit_ngr,
    ngr_exact_log_likelihood,
    ngr_log_likelihood,
    ngr_predict_plugin,
)
from .verification import (
    PitHistogram,
    VerificationRecord,
    crps,
    crps_quadrature,
    crpss,
    ignorance,
    interval_coverage,
    pit,
    pit_histogram,
    score,
)

__version__ = "0.1.0"
