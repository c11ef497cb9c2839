"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: PanelError -> 3 (data), everything
else -> 4 (numeric failure). Usage errors are argparse's own exit code 2.
"""


class BasisRiskError(Exception):
    """Base class for all package errors."""


class PanelError(BasisRiskError, ValueError):
    """A panel file or array failed validation."""


class MetricError(BasisRiskError, ValueError):
    """A metric is undefined for the given input (degenerate index, non-psd
    covariance, value outside [0, 1] by more than tolerance)."""


class QuadratureError(BasisRiskError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SimulationError(BasisRiskError, RuntimeError):
    """A Monte Carlo experiment aborted (replication failure rate > 1%)."""
