"""Multivariate-normal panel samplers for dense and spiked covariances.

Dense covariances are factored through their eigendecomposition rather than
Cholesky because calibrated covariances estimated from T_orig periods have
rank <= T_orig - 1 and Cholesky would fail; eigenvalues in
[-1e-8 * lambda_max, 0) are treated as roundoff and clamped to zero, anything
below that is rejected as genuinely indefinite. Spiked models are sampled in
O(N) per row through the rank-one identity, never materializing the
covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .panel import YieldPanel, make_panel
from .rng import stream
from .spiked import SpikedModel

EIG_CLAMP_REL = 1e-8


def covariance_factor(cov) -> np.ndarray:
    """Square-root factor A (N x N) with A A' = cov, tolerant of rank
    deficiency. Raises MetricError if cov has an eigenvalue below
    -1e-8 * lambda_max; eigenvalues within matrix-rank round-off of zero
    (either sign) are treated as exact zeros so rank-deficient covariances
    sample on their true support."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    eigs, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    lam_max = float(eigs.max(initial=0.0))
    floor = -EIG_CLAMP_REL * max(lam_max, 0.0)
    if eigs.min(initial=0.0) < floor:
        raise MetricError(
            f"covariance is not psd: eigenvalue {eigs.min()} below {floor}"
        )
    rank_tol = n * np.finfo(float).eps * max(lam_max, 0.0)
    eigs = np.where(eigs <= rank_tol, 0.0, eigs)
    return vecs * np.sqrt(eigs)


def sample_dense(cov, t: int, rng: np.random.Generator, mean=None) -> np.ndarray:
    """T iid rows from N(mean, cov)."""
    factor = covariance_factor(cov)
    return _rows(factor, t, rng, mean)


def sample_dense_factored(factor: np.ndarray, t: int, rng: np.random.Generator, mean=None) -> np.ndarray:
    """As :func:`sample_dense` but with the factor already computed."""
    return _rows(factor, t, rng, mean)


def _rows(factor: np.ndarray, t: int, rng: np.random.Generator, mean) -> np.ndarray:
    n = factor.shape[0]
    z = rng.standard_normal((t, n))
    out = z @ factor.T
    if mean is not None:
        out += np.asarray(mean, dtype=float)
    return out


def sample_spiked(model: SpikedModel, t: int, rng: np.random.Generator, mean=None) -> np.ndarray:
    """T iid rows from the spiked model, O(N) per row.

    Each row is sqrt(b)*eps + (sqrt(spike) - sqrt(b)) * q1 (q1'eps) with
    eps ~ N(0, I); its covariance is exactly b*I + (spike - b) q1 q1', the
    same law as sampling the materialized covariance densely.
    """
    q1 = model.q1()
    eps = rng.standard_normal((t, model.n))
    scale = np.sqrt(model.spike) - np.sqrt(model.b)
    out = np.sqrt(model.b) * eps + scale * np.outer(eps @ q1, q1)
    if mean is not None:
        out += np.asarray(mean, dtype=float)
    return out


@dataclass(frozen=True)
class SampleSpec:
    """A reproducible panel-sampling plan.

    ``source`` is either a dense covariance matrix or a SpikedModel. Each
    replication r draws from the independent stream (seed, r); re-running
    the same spec and replication is bit-identical.
    """

    t: int
    source: object
    seed: int = 0
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.t < 2:
            raise ValueError(f"need at least 2 periods, got {self.t}")
        if self.dimension < 2:
            raise ValueError("source dimension must be at least 2")

    @property
    def dimension(self) -> int:
        if isinstance(self.source, SpikedModel):
            return self.source.n
        return np.asarray(self.source).shape[0]


def sample_panel(spec: SampleSpec, replication: int = 0) -> YieldPanel:
    """Draw the panel for one replication of the sampling plan."""
    rng = stream(spec.seed, replication)
    if isinstance(spec.source, SpikedModel):
        values = sample_spiked(spec.source, spec.t, rng, spec.mean)
    else:
        values = sample_dense(spec.source, spec.t, rng, spec.mean)
    return make_panel(values)
