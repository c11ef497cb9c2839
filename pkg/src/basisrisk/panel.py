"""Yield-panel ingestion, validation and sample moments.

A panel is a T x N matrix of field yields: rows are periods (years), columns
are fields. The CSV layout mirrors that: one header row of field names
(optionally preceded by a ``period`` column), one data row per period,
UTF-8, comma separated, ``.`` decimal. An empty cell or ``nan`` is missing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import PanelError

_MISSING_TOKENS = {"", "nan", "na"}


@dataclass(frozen=True)
class YieldPanel:
    """Validated T x N yield panel.

    ``values`` is read-only; all downstream operations are pure functions of
    it, so panels are safe to share across threads.
    """

    values: np.ndarray
    field_ids: tuple[str, ...]
    period_ids: tuple[str, ...]
    dropped_fields: tuple[str, ...] = ()
    constant_fields: tuple[str, ...] = ()

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise PanelError(f"panel values must be 2-D, got shape {arr.shape}")
        t, n = arr.shape
        if t < 2:
            raise PanelError(f"panel needs at least 2 periods, got {t}")
        if n < 2:
            raise PanelError(f"panel needs at least 2 usable fields, got {n}")
        if np.isnan(arr).any():
            raise PanelError("panel contains missing values after validation")
        if len(self.field_ids) != n:
            raise PanelError("field_ids length does not match panel width")
        if len(self.period_ids) != t:
            raise PanelError("period_ids length does not match panel height")
        if len(set(self.field_ids)) != n:
            raise PanelError("duplicate field identifiers")
        if len(set(self.period_ids)) != t:
            raise PanelError("duplicate period identifiers")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "field_ids", tuple(self.field_ids))
        object.__setattr__(self, "period_ids", tuple(self.period_ids))

    @property
    def t(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SampleMoments:
    """Column means and sample covariance of a panel.

    ``divisor_convention`` is ``"t"`` or ``"t-1"``; every share-of-eigenvalue
    and R-squared ratio downstream is invariant to the choice, so it only
    matters when the covariance itself is reported.
    """

    mean: np.ndarray
    covariance: np.ndarray
    divisor_convention: str

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        scale = max(1.0, float(np.abs(cov).max()) if cov.size else 1.0)
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise PanelError("covariance is not symmetric within tolerance")


def make_panel(values, field_ids=None, period_ids=None, **extra) -> YieldPanel:
    """Wrap an in-memory array as a validated panel, generating labels."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise PanelError(f"panel values must be 2-D, got shape {arr.shape}")
    t, n = arr.shape
    if field_ids is None:
        field_ids = tuple(f"f{i + 1}" for i in range(n))
    if period_ids is None:
        period_ids = tuple(str(i + 1) for i in range(t))
    return YieldPanel(arr, tuple(field_ids), tuple(period_ids), **extra)


def _parse_cell(token: str, where: str) -> float:
    token = token.strip()
    if token.lower() in _MISSING_TOKENS:
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise PanelError(f"malformed numeric value {token!r} at {where}") from None


def load_panel(path, *, drop_missing: bool = True) -> YieldPanel:
    """Read and validate a CSV yield panel.

    Fields containing any missing value are dropped when ``drop_missing`` is
    true (the default) and recorded in ``dropped_fields``; otherwise they
    raise. Constant (zero-variance) fields are kept but flagged in
    ``constant_fields`` -- the metrics layer decides how to treat them.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise PanelError(f"{path}: need a header row and at least one data row")

    header = [h.strip() for h in rows[0]]
    has_period_col = bool(header) and header[0].lower() == "period"
    start = 1 if has_period_col else 0
    field_ids = header[start:]
    if len(field_ids) < 2:
        raise PanelError(f"{path}: fewer than 2 field columns")
    if len(set(field_ids)) != len(field_ids):
        raise PanelError(f"{path}: duplicate field identifiers in header")

    period_ids = []
    data = []
    for ridx, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise PanelError(
                f"{path}: row {ridx} has {len(row)} cells, expected {len(header)}"
            )
        period_ids.append(row[0].strip() if has_period_col else str(ridx - 1))
        data.append(
            [_parse_cell(c, f"{path}:{ridx}") for c in row[start:]]
        )
    if len(set(period_ids)) != len(period_ids):
        raise PanelError(f"{path}: duplicate period identifiers")

    values = np.asarray(data, dtype=float)
    if values.shape[0] < 2:
        raise PanelError(f"{path}: fewer than 2 periods")

    missing_mask = np.isnan(values).any(axis=0)
    dropped = tuple(f for f, m in zip(field_ids, missing_mask) if m)
    if dropped and not drop_missing:
        raise PanelError(f"{path}: missing values in fields {list(dropped)}")
    keep = ~missing_mask
    values = values[:, keep]
    kept_ids = tuple(f for f, m in zip(field_ids, keep) if m)
    if values.shape[1] < 2:
        raise PanelError(f"{path}: fewer than 2 usable fields after dropping missing")

    spans = values.max(axis=0) - values.min(axis=0)
    constant = tuple(f for f, s in zip(kept_ids, spans) if s == 0.0)

    return YieldPanel(
        values,
        kept_ids,
        tuple(period_ids),
        dropped_fields=dropped,
        constant_fields=constant,
    )


def sample_moments(panel: YieldPanel, divisor: str = "t-1") -> SampleMoments:
    """Column means and covariance of the panel.

    The covariance is the centered cross-product divided by T ("t") or T-1
    ("t-1", default). The result is explicitly symmetrized so the
    SampleMoments invariant holds to machine precision.
    """
    if divisor not in ("t", "t-1"):
        raise ValueError(f"divisor must be 't' or 't-1', got {divisor!r}")
    x = panel.values
    t = x.shape[0]
    d = t if divisor == "t" else t - 1
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / d
    cov = (cov + cov.T) / 2.0
    return SampleMoments(mean=mean, covariance=cov, divisor_convention=divisor)
