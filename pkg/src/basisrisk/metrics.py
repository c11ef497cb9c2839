"""Linear basis-risk metrics.

Three equivalent views of index quality live here:

* the regression path -- per-field OLS of yields on an index, aggregated as
  total R2 = 1 - sum_i SSR_i / sum_i SST_i;
* the matrix path -- tr(S w (w'Sw)^-1 w'S) / tr(S) for weights w, which for
  the panel's own sample covariance and f = Yw is numerically identical to
  the regression path;
* the spectral path -- the maximum of the matrix form over all w is attained
  at the leading eigenvector and equals lambda_1 / sum(lambda), the share of
  the first eigenvalue.

All three are scale invariant and invariant to the covariance divisor
convention. Per-field sums use numpy's pairwise summation in a fixed order,
so results are deterministic regardless of how callers parallelize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .panel import YieldPanel, sample_moments

_UNIT_TOL = 1e-10


@dataclass(frozen=True)
class IndexWeights:
    """Field weights defining an index f_t = sum_i w_i y_it."""

    w: np.ndarray
    kind: str  # "area-yield" | "first-pc" | "custom"

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or not np.any(w != 0.0):
            raise MetricError("weights must be a non-zero 1-D vector")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


def area_yield_weights(n: int) -> IndexWeights:
    return IndexWeights(np.full(n, 1.0 / n), kind="area-yield")


def _clamp_unit(x: float, what: str) -> float:
    if -_UNIT_TOL <= x <= 1.0 + _UNIT_TOL:
        return min(max(x, 0.0), 1.0)
    raise MetricError(f"{what} = {x} outside [0, 1] beyond tolerance; "
                      "input covariance is likely not psd")


def total_r2_matrix(cov, w) -> float:
    """Total R2 of the index with weights w, from a covariance matrix.

    Evaluates tr(S w (w'Sw)^-1 w'S) / tr(S) = |Sw|^2 / (w'Sw * tr S).
    """
    cov = np.asarray(cov, dtype=float)
    wv = w.w if isinstance(w, IndexWeights) else np.asarray(w, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise MetricError("covariance must be square")
    if wv.shape != (cov.shape[0],):
        raise MetricError("weights length does not match covariance")
    sw = cov @ wv
    index_var = float(wv @ sw)
    if index_var <= 0.0:
        raise MetricError("index has zero variance under this covariance")
    trace = float(np.trace(cov))
    if trace <= 0.0:
        raise MetricError("covariance has non-positive trace")
    return _clamp_unit(float(sw @ sw) / (index_var * trace), "total R2")


def total_r2_regression(panel_or_values, index):
    """Per-field OLS of each field on (1, index), aggregated.

    Returns ``(total_r2, per_field_r2)``. Fields with zero variance
    contribute nothing to either sum and get NaN in the per-field vector.
    """
    values = getattr(panel_or_values, "values", panel_or_values)
    values = np.asarray(values, dtype=float)
    f = np.asarray(index, dtype=float)
    t, n = values.shape
    if f.shape != (t,):
        raise MetricError(f"index must have length {t}")
    fc = f - f.mean()
    f_ss = float(fc @ fc)
    if f_ss <= 0.0:
        raise MetricError("index has zero variance over the panel periods")

    centered = values - values.mean(axis=0)
    cross = centered.T @ fc
    sst = np.sum(centered * centered, axis=0)
    explained = cross * cross / f_ss
    ssr = sst - explained

    varying = sst > 0.0
    if not varying.any():
        raise MetricError("every field is constant: total R2 undefined")
    per_field = np.full(n, np.nan)
    per_field[varying] = 1.0 - ssr[varying] / sst[varying]

    total = 1.0 - float(np.sum(ssr[varying])) / float(np.sum(sst[varying]))
    return _clamp_unit(total, "total R2"), per_field


def _share_from_eigs(eigs: np.ndarray) -> float:
    top = float(eigs.max())
    total = float(eigs.sum())
    if top <= 0.0 or total <= 0.0:
        raise MetricError("covariance has no positive eigenvalue")
    return _clamp_unit(top / total, "eigenvalue share")


def _fix_sign(w: np.ndarray) -> np.ndarray:
    return -w if float(w.sum()) < 0.0 else w


def optimal_index(cov_or_panel):
    """Leading principal component and the share of the first eigenvalue.

    For a panel with T <= N the eigenvalues come from the dual T x T matrix
    X X' / (T-1), which shares its nonzero spectrum (and trace) with the
    N x N sample covariance; the dual eigenvector u maps back to the field
    weights as w ~ X'u. The N x N covariance is never formed when N > T.
    Under eigenvalue ties the returned vector is whichever the decomposition
    produced (the share is still unique); its sign is fixed so sum(w) >= 0.
    """
    if isinstance(cov_or_panel, YieldPanel):
        panel = cov_or_panel
        x = panel.values - panel.values.mean(axis=0)
        t, n = x.shape
        if t <= n:
            dual = x @ x.T / (t - 1)
            eigs, vecs = np.linalg.eigh(dual)
            share = _share_from_eigs(eigs)
            u = vecs[:, -1]
            w = x.T @ u
            norm = float(np.linalg.norm(w))
            if norm <= 0.0:
                raise MetricError("panel has zero sample covariance")
            w = _fix_sign(w / norm)
            return IndexWeights(w, kind="first-pc"), share
        cov = sample_moments(panel).covariance
    else:
        cov = np.asarray(cov_or_panel, dtype=float)
    eigs, vecs = np.linalg.eigh(cov)
    share = _share_from_eigs(eigs)
    w = _fix_sign(vecs[:, -1])
    return IndexWeights(w, kind="first-pc"), share


def lambda_share_from_panel(panel: YieldPanel, method: str = "auto") -> float:
    """Share of the first eigenvalue of the panel's sample covariance.

    This is the estimator whose small-T bias the asymptotics module
    describes. ``method`` forces the "dual" (T x T) or "primal" (N x N)
    eigenvalue route; "auto" picks the dual whenever T <= N.
    """
    x = panel.values - panel.values.mean(axis=0)
    t, n = x.shape
    if method not in ("auto", "dual", "primal"):
        raise ValueError(f"unknown method {method!r}")
    use_dual = method == "dual" or (method == "auto" and t <= n)
    if use_dual:
        eigs = np.linalg.eigvalsh(x @ x.T / (t - 1))
    else:
        eigs = np.linalg.eigvalsh(x.T @ x / (t - 1))
    return _share_from_eigs(eigs)


def lambda_share_from_cov(cov) -> float:
    """Share of the first eigenvalue of a population covariance."""
    cov = np.asarray(cov, dtype=float)
    return _share_from_eigs(np.linalg.eigvalsh(cov))


@dataclass(frozen=True)
class BasisRiskReport:
    """Per-zone bundle of basis-risk metrics.

    ``r2_area`` is the area-yield (equal weights) total R2, ``r2_optimal``
    the best achievable by any linear index (identical to ``lambda_share``),
    ``r2_index`` the total R2 of the index actually evaluated (equal to
    ``r2_area`` for the default mean index), ``r2_quantile`` the quantile
    pseudo R2 at ``tau`` for that same index.
    """

    r2_area: float
    r2_optimal: float
    lambda_share: float
    r2_quantile: float
    tau: float
    per_field_r2: np.ndarray
    index: str = "mean"
    r2_index: float = float("nan")

    def __post_init__(self):
        if self.r2_optimal < self.r2_area - 1e-10:
            raise MetricError(
                f"optimal-index R2 {self.r2_optimal} below area-yield R2 {self.r2_area}"
            )
        if abs(self.r2_optimal - self.lambda_share) > 1e-10:
            raise MetricError("r2_optimal and lambda_share disagree")

    def as_dict(self) -> dict:
        per_field = [None if np.isnan(v) else float(v) for v in self.per_field_r2]
        return {
            "r2_area": float(self.r2_area),
            "r2_optimal": float(self.r2_optimal),
            "lambda_share": float(self.lambda_share),
            "r2_quantile": float(self.r2_quantile),
            "tau": float(self.tau),
            "per_field_r2": per_field,
            "index": self.index,
            "r2_index": float(self.r2_index),
        }


def compute_report(panel: YieldPanel, tau: float = 0.3, index="mean") -> BasisRiskReport:
    """All basis-risk measures for one panel.

    ``index`` selects the index used for the regression and quantile metrics:
    "mean" (row means), "optimal" (the panel's own leading PC), or an
    explicit weight vector / IndexWeights. r2_area and r2_optimal are always
    reported for reference.
    """
    from .quantreg import total_quantile_r2

    values = panel.values
    mean_index = values.mean(axis=1)
    r2_area, per_field_mean = total_r2_regression(values, mean_index)
    weights, share = optimal_index(panel)

    if isinstance(index, str) and index == "mean":
        f, kind = mean_index, "mean"
        r2_index, per_field = r2_area, per_field_mean
    elif isinstance(index, str) and index == "optimal":
        f, kind = values @ weights.w, "optimal"
        r2_index, per_field = total_r2_regression(values, f)
    else:
        wv = index.w if isinstance(index, IndexWeights) else np.asarray(index, dtype=float)
        if wv.shape != (panel.n,):
            raise MetricError(f"custom weights must have length {panel.n}")
        f, kind = values @ wv, "custom"
        r2_index, per_field = total_r2_regression(values, f)

    r2_q = total_quantile_r2(values, f, tau)
    return BasisRiskReport(
        r2_area=r2_area,
        r2_optimal=share,
        lambda_share=share,
        r2_quantile=r2_q,
        tau=tau,
        per_field_r2=per_field,
        index=kind,
        r2_index=r2_index,
    )
