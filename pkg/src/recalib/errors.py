"""Exception hierarchy shared across the package.

Two broad categories matter for the CLI exit codes: problems with the
inputs (bad files, bad parameters, not enough data) and numerical
problems encountered while computing (non-convergence, degenerate
variances, undefined scores).
"""


class RecalibError(Exception):
    """Base class for all package-specific errors."""


class InputError(RecalibError):
    """Malformed or inconsistent user input (files, configs, arguments)."""


class ParameterError(InputError):
    """Distribution or model parameters outside their valid domain."""


class InsufficientDataError(InputError):
    """Training set too small for the requested fit."""


class DegenerateDesignError(InputError):
    """Design matrix is singular, e.g. all ensemble means identical."""


class NumericError(RecalibError):
    """Numerical failure: non-convergence, overflow, failed quadrature."""


class DegenerateVarianceError(NumericError):
    """A predictive variance collapsed to zero or went negative."""


class UndefinedScoreError(NumericError):
    """The requested score does not exist for this distribution."""


class BootstrapFailureError(NumericError):
    """Bootstrap redraw cap exhausted on a pathological training set."""
