"""Independent oracles and small utilities shared across the test suite.

Everything here is deliberately written the slow, obvious way (element loops,
dense grids) and never calls the code paths it is used to check.
"""

from __future__ import annotations

import numpy as np


def pinball(residuals, tau):
    total = 0.0
    for u in np.asarray(residuals, dtype=float):
        total += u * (tau - 1.0) if u < 0 else u * tau
    return total


def naive_fit_line(y, f, tau):
    """Plain-Python pair enumeration, same candidate order as the kernels."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    t = y.size
    best = None
    for i in range(t):
        v = pinball(y - y[i], tau)
        if best is None or v < best[2]:
            best = (y[i], 0.0, v)
    for s in range(t - 1):
        for u in range(s + 1, t):
            if f[s] == f[u]:
                continue
            b = (y[s] - y[u]) / (f[s] - f[u])
            c = y[s] - b * f[s]
            v = pinball(y - c - b * f, tau)
            if v < best[2]:
                best = (c, b, v)
    return best


def grid_fit_line(y, f, tau, size=400, span=3.0):
    """Dense grid search over (intercept, slope); returns the best loss."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    y_span = y.max() - y.min()
    f_span = f.max() - f.min()
    y_span = y_span if y_span > 0 else 1.0
    f_span = f_span if f_span > 0 else 1.0
    mid = 0.5 * (y.max() + y.min())
    cs = np.linspace(mid - span * y_span / 2 - y_span, mid + span * y_span / 2 + y_span, size)
    b0 = y_span / f_span
    bs = np.linspace(-span * b0, span * b0, size)
    r = y[None, None, :] - cs[:, None, None] - bs[None, :, None] * f[None, None, :]
    v = np.sum(r * (tau - (r < 0.0)), axis=2)
    i, j = np.unravel_index(np.argmin(v), v.shape)
    c_step = cs[1] - cs[0]
    b_step = bs[1] - bs[0]
    return float(v[i, j]), float(c_step), float(b_step)


def brute_covariance(values, divisor):
    """Element-wise loop covariance: sum_t (y_t - ybar)(y_t - ybar)' / d."""
    values = np.asarray(values, dtype=float)
    t, n = values.shape
    d = t if divisor == "t" else t - 1
    mean = [sum(values[:, j]) / t for j in range(n)]
    cov = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(t):
                acc += (values[k, i] - mean[i]) * (values[k, j] - mean[j])
            cov[i, j] = acc / d
    return cov


def random_spd(rng, n, jitter=0.05):
    a = rng.standard_normal((n, n))
    return a @ a.T / n + jitter * np.eye(n)


def panel_with_exact_cov(rng, t, cov):
    """T x N data whose sample covariance (T-1 divisor) is exactly cov."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    assert t > n, "need t > n to force an SPD sample covariance"
    z = rng.standard_normal((t, n))
    zc = z - z.mean(axis=0)
    s = zc.T @ zc / (t - 1)
    ls = np.linalg.cholesky(s)
    lc = np.linalg.cholesky(cov)
    return zc @ np.linalg.inv(ls.T) @ lc.T


def ks_critical(n, m, alpha=0.01):
    """Smirnov large-sample two-sample critical value."""
    c = np.sqrt(-np.log(alpha / 2.0) / 2.0)
    return c * np.sqrt((n + m) / (n * m))


def write_panel_csv(path, values, field_ids=None, period_ids=None, period_col=True):
    values = np.asarray(values)
    t, n = values.shape
    field_ids = field_ids or [f"f{j + 1}" for j in range(n)]
    period_ids = period_ids or [str(i + 1) for i in range(t)]
    lines = []
    if period_col:
        lines.append(",".join(["period"] + list(field_ids)))
        for pid, row in zip(period_ids, values):
            lines.append(",".join([str(pid)] + [_fmt(v) for v in row]))
    else:
        lines.append(",".join(field_ids))
        for row in values:
            lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _fmt(v):
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return repr(float(v))
