"""NumPy implementation of the exact pinball-loss line fit.

Candidate enumeration (identical, in the same order, in the compiled
kernel): first the T horizontal lines through each observation, then the
lines through each pair (s < t) in lexicographic order, skipping pairs with
equal index values. The first candidate attaining the minimal loss wins, so
both backends resolve exact ties identically.
"""

from __future__ import annotations

import numpy as np

# fields per chunk are sized so the candidates x chunk x T residual tensor
# stays near this many elements
_CHUNK_BUDGET = 4_000_000


def _candidates(y: np.ndarray, f: np.ndarray):
    t = y.shape[0]
    s, u = np.triu_indices(t, k=1)
    df = f[s] - f[u]
    ok = df != 0.0
    slope = np.zeros(t + int(ok.sum()))
    inter = np.empty_like(slope)
    inter[:t] = y
    slope[t:] = (y[s] - y[u])[ok] / df[ok]
    inter[t:] = y[s][ok] - slope[t:] * f[s][ok]
    return inter, slope


def fit_line(y: np.ndarray, f: np.ndarray, tau: float):
    """Exact minimizer of sum_t rho_tau(y_t - c - b f_t) over (c, b).

    Returns (intercept, slope, loss).
    """
    y = np.ascontiguousarray(y, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    inter, slope = _candidates(y, f)
    r = y[None, :] - inter[:, None] - slope[:, None] * f[None, :]
    v = np.sum(r * (tau - (r < 0.0)), axis=1)
    i = int(np.argmin(v))
    return float(inter[i]), float(slope[i]), float(v[i])


def panel_line_v(values: np.ndarray, f: np.ndarray, tau: float) -> np.ndarray:
    """Per-field minimal line losses for a T x N panel against one index.

    The pair set (s < t over periods) is shared across fields; slopes and
    intercepts broadcast per field. Fields are processed in chunks to bound
    the residual tensor.
    """
    values = np.ascontiguousarray(values, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    t, n = values.shape
    s, u = np.triu_indices(t, k=1)
    df = f[s] - f[u]
    ok = df != 0.0
    s, u, df = s[ok], u[ok], df[ok]

    ncand = t + s.shape[0]
    chunk = max(1, _CHUNK_BUDGET // max(1, ncand * t))
    out = np.empty(n)
    for lo in range(0, n, chunk):
        block = values[:, lo : lo + chunk]  # (t, m)
        slope = np.concatenate(
            [np.zeros((t, block.shape[1])), (block[s] - block[u]) / df[:, None]]
        )  # (ncand, m)
        inter = np.concatenate([block, block[s] - slope[t:] * f[s][:, None]])
        r = block.T[:, None, :] - inter.T[:, :, None] - slope.T[:, :, None] * f
        v = np.sum(r * (tau - (r < 0.0)), axis=2)  # (m, ncand)
        out[lo : lo + chunk] = v.min(axis=1)
    return out
