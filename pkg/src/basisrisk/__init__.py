"""basisrisk: index-insurance basis-risk metrics on yield panels and tools
for quantifying the small-T, large-N bias of eigenvalue-share estimates."""

from ._kernels import BACKEND as kernel_backend
from .asymptotics import (
    AsymptoticResult,
    asymptotic_bias,
    bias_curve,
    limit_distribution,
    worst_case_bound,
)
from .harness import (
    McExperiment,
    McSummary,
    population_values,
    run_calibrated,
    run_experiment,
    spiked_grid,
)
from .metrics import (
    BasisRiskReport,
    IndexWeights,
    compute_report,
    lambda_share_from_cov,
    lambda_share_from_panel,
    optimal_index,
    total_r2_matrix,
    total_r2_regression,
)
from .panel import SampleMoments, YieldPanel, load_panel, make_panel, sample_moments
from .quantreg import QuantileFit, fit_quantile_const, fit_quantile_line, total_quantile_r2
from .sampler import SampleSpec, sample_dense, sample_panel, sample_spiked
from .spiked import (
    SpikedModel,
    SpikeRegime,
    constant_spike_from_target,
    haar_orthogonal,
    materialize_covariance,
    population_lambda_share,
)

__version__ = "0.1.0"
