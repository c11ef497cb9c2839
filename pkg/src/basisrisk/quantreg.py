"""Quantile-regression machinery for the total quantile pseudo R-squared.

Two-parameter fits (intercept + one index) are solved exactly: an optimal
quantile-regression line interpolates at least two observations, so
enumerating the O(T^2) candidate lines through pairs of points -- plus the T
horizontal lines for degenerate cases -- and picking the minimal pinball
loss is a global minimizer. Above ``PAIR_ENUM_LIMIT`` observations the
enumeration is infeasible and the fit switches to the quantile-regression
dual LP (two equality rows, box bounds), whose vertex solution interpolates
the same >= 2 points; coefficients are recovered from the interpolated
observations and the loss re-evaluated exactly.

Tie conventions (shared by every path, including the population oracle):
constant fits return the smallest optimal intercept; line fits return the
first candidate in enumeration order attaining the minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from ._kernels import BACKEND, impl
from .errors import MetricError

# Beyond this many observations, pair enumeration (O(T^3)) gives way to the
# dual LP. All designed experiments have T <= 100; only the 25000-observation
# population oracle crosses the line.
PAIR_ENUM_LIMIT = 500


@dataclass(frozen=True)
class QuantileFit:
    """A fitted quantile line y = intercept + slope * f.

    ``v_value`` is the pinball loss sum_t rho_tau(residual_t) at the returned
    coefficients, rho_tau(u) = u * (tau - 1{u < 0}).
    """

    intercept: float
    slope: float
    v_value: float
    tau: float


def backend() -> str:
    """Name of the selected line-fit kernel ('cython' or 'numpy')."""
    return BACKEND


def pinball_loss(residuals, tau: float) -> float:
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(r * (tau - (r < 0.0))))


def _check_tau(tau: float):
    if not 0.0 < tau < 1.0:
        raise MetricError(f"tau must be in (0, 1), got {tau}")


def fit_quantile_const(y, tau: float) -> QuantileFit:
    """Best constant fit: the tau-quantile of y among order statistics.

    The pinball loss in c is piecewise linear with slope m - tau*T after m
    observations; the minimum is attained at the order statistic where that
    slope first turns non-negative, and when tau*T is an integer the optimum
    is flat between two order statistics -- the smaller one is returned.
    """
    _check_tau(tau)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise MetricError("y must be a non-empty 1-D array")
    t = y.size
    ys = np.sort(y)
    m = tau * t
    k = int(round(m)) if abs(m - round(m)) < 1e-9 else int(np.ceil(m))
    k = min(max(k, 1), t)
    c = float(ys[k - 1])
    return QuantileFit(intercept=c, slope=0.0, v_value=pinball_loss(y - c, tau), tau=tau)


def _fit_line_lp(y: np.ndarray, f: np.ndarray, tau: float) -> QuantileFit:
    t = y.size
    a_eq = sparse.csr_matrix(np.vstack([np.ones(t), f]))
    res = optimize.linprog(
        -y, A_eq=a_eq, b_eq=np.zeros(2), bounds=[(tau - 1.0, tau)] * t, method="highs"
    )
    if res.status != 0:
        raise MetricError(f"quantile LP failed: {res.message}")
    dual_v = -float(res.fun)

    # Interior dual coordinates mark interpolated observations; rank them by
    # distance from the box and take the two most interior with distinct f.
    interior = np.minimum(res.x - (tau - 1.0), tau - res.x)
    order = np.argsort(-interior)
    best = None
    for i in order[:16]:
        for j in order[:16]:
            if j <= i or f[i] == f[j]:
                continue
            b = (y[i] - y[j]) / (f[i] - f[j])
            c = y[i] - b * f[i]
            v = pinball_loss(y - c - b * f, tau)
            if best is None or v < best[2]:
                best = (c, b, v)
    const = fit_quantile_const(y, tau)
    if best is None or const.v_value < best[2]:
        best = (const.intercept, 0.0, const.v_value)
    c, b, v = best
    if not v <= dual_v + 1e-6 * max(1.0, abs(dual_v)):
        raise MetricError(
            f"quantile LP coefficient recovery failed (primal {v}, dual {dual_v})"
        )
    return QuantileFit(intercept=float(c), slope=float(b), v_value=float(v), tau=tau)


def fit_quantile_line(y, f, tau: float, method: str = "auto") -> QuantileFit:
    """Globally minimize the pinball loss of y = c + b*f over (c, b).

    ``method`` is "auto" (enumeration up to PAIR_ENUM_LIMIT observations,
    LP beyond), "exact" or "lp".
    """
    _check_tau(tau)
    y = np.ascontiguousarray(y, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    if y.shape != f.shape or y.ndim != 1:
        raise MetricError("y and f must be 1-D arrays of equal length")
    if y.size < 2:
        raise MetricError("need at least 2 observations")
    if np.all(f == f[0]):
        raise MetricError("index is constant: quantile line fit undefined")
    if method not in ("auto", "exact", "lp"):
        raise ValueError(f"unknown method {method!r}")
    if method == "lp" or (method == "auto" and y.size > PAIR_ENUM_LIMIT):
        return _fit_line_lp(y, f, tau)
    c, b, v = impl.fit_line(y, f, tau)
    return QuantileFit(intercept=c, slope=b, v_value=v, tau=tau)


def _panel_values(panel_or_values) -> np.ndarray:
    values = getattr(panel_or_values, "values", panel_or_values)
    return np.ascontiguousarray(values, dtype=float)


def total_quantile_r2(panel_or_values, index, tau: float = 0.3) -> float:
    """Total quantile pseudo R-squared: 1 - sum_i V_i(f) / sum_i V_i(const).

    Accepts a YieldPanel or a raw T x N array. Constant fields contribute
    zero to both sums; if every field is constant the ratio is undefined and
    a MetricError is raised. Because the line search space contains every
    horizontal line through an observation, V_i(f) <= V_i(const) holds
    exactly and the result is never below -1e-10.
    """
    _check_tau(tau)
    values = _panel_values(panel_or_values)
    f = np.ascontiguousarray(index, dtype=float)
    t, n = values.shape
    if f.shape != (t,):
        raise MetricError(f"index must have length {t}")
    if np.all(f == f[0]):
        raise MetricError("index is constant: quantile R2 undefined")

    m = tau * t
    k = int(round(m)) if abs(m - round(m)) < 1e-9 else int(np.ceil(m))
    k = min(max(k, 1), t)
    consts = np.sort(values, axis=0)[k - 1]
    resid = values - consts
    v_const = np.sum(resid * (tau - (resid < 0.0)), axis=0)

    if t <= PAIR_ENUM_LIMIT:
        v_line = impl.panel_line_v(values, f, tau)
    else:
        v_line = np.array(
            [_fit_line_lp(values[:, i], f, tau).v_value for i in range(n)]
        )

    denom = float(np.sum(v_const))
    if denom <= 0.0:
        raise MetricError("all fields constant: quantile R2 undefined")
    r2 = 1.0 - float(np.sum(v_line)) / denom
    if r2 < -1e-10:
        raise MetricError(f"quantile R2 {r2} below nested-model bound")
    return r2
