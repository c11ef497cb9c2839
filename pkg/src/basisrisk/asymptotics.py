"""Large-N, fixed-T behavior of the first-eigenvalue share estimator.

For a constant spike with population share r = a/(a+b), the estimator
converges in distribution to

    g(C2) = (r*C2 + (1-r)) / (r*C2 + (1-r)*(T-1)),   C2 ~ chi-square(T-1)

(the a,b form divided through by a+b). g is strictly increasing in C2 for
T >= 3, so the cdf/quantile of the limit follow by transforming chi-square
ones; the support is (1/(T-1), 1). The asymptotic bias is

    E[ (1-r) * (r*C2 + 1 - r*(T-1)) / (r*C2 + (1-r)*(T-1)) ]  =  E[g(C2)] - r,

evaluated by adaptive quadrature against the chi-square density. The
vanishing spike gives a point mass at 1/(T-1) (with the population share
itself vanishing, so the bias equals 1/(T-1)); the expanding spike a point
mass at 1 with zero bias. The worst case over r is 1/(T-1), approached as
r -> 0.

T = 2 is formally covered but statistically vacuous: the centered data have
rank one, the estimator is identically 1, and the limit is a point mass at 1
(flagged ``degenerate``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import chi2

from .errors import QuadratureError
from .spiked import SpikeRegime

_QUAD_ABS_TOL = 1e-9


def _check_t(t: int):
    if t < 2:
        raise ValueError(f"need t >= 2, got {t}")


def _check_r(r: float):
    if not 0.0 < r < 1.0:
        raise ValueError(f"constant-spike share r must be in (0, 1), got {r}")


def reduce_to_share(a: float, b: float) -> float:
    """The limit law depends on (a, b) only through r = a / (a + b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    return a / (a + b)


@dataclass(frozen=True)
class PointMassLimit:
    """Degenerate limit distribution concentrated at one value."""

    location: float
    degenerate: bool = False  # True when T=2 makes the law vacuous

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x == self.location, np.inf, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.location).astype(float)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p > 1.0)):
            raise ValueError("quantile levels must be in [0, 1]")
        return np.full_like(p, self.location, dtype=float)

    def sample(self, size, rng=None):
        return np.full(size, self.location)

    def mean(self) -> float:
        return self.location


@dataclass(frozen=True)
class ConstantSpikeLimit:
    """Limit law of the share estimator under a constant spike."""

    t: int
    r: float
    support: tuple[float, float] = field(init=False)

    def __post_init__(self):
        _check_t(self.t)
        _check_r(self.r)
        if self.t == 2:
            raise ValueError("T=2 limit is a point mass; use limit_distribution")
        object.__setattr__(self, "support", (1.0 / (self.t - 1), 1.0))

    @property
    def _df(self) -> int:
        return self.t - 1

    def _g(self, x):
        x = np.asarray(x, dtype=float)
        s = 1.0 - self.r
        with np.errstate(invalid="ignore"):
            out = (self.r * x + s) / (self.r * x + s * (self.t - 1))
        return np.where(np.isinf(x), 1.0, out)

    def _g_inv(self, v):
        s = 1.0 - self.r
        return s * ((self.t - 1) * v - 1.0) / (self.r * (1.0 - v))

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x)
        xv = x[inside]
        s = 1.0 - self.r
        jac = s * (self.t - 2) / (self.r * (1.0 - xv) ** 2)
        out[inside] = chi2.pdf(self._g_inv(xv), self._df) * jac
        return out if out.size > 1 else float(out[0])

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        out = np.empty_like(x)
        out[x <= lo] = 0.0
        out[x >= hi] = 1.0
        inside = (x > lo) & (x < hi)
        out[inside] = chi2.cdf(self._g_inv(x[inside]), self._df)
        return out if out.size > 1 else float(out[0])

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p > 1.0)):
            raise ValueError("quantile levels must be in [0, 1]")
        out = self._g(chi2.ppf(p, self._df))
        return out if out.size > 1 else float(np.atleast_1d(out)[0])

    def sample(self, size, rng=None):
        rng = np.random.default_rng() if rng is None else rng
        return self._g(rng.chisquare(self._df, size))

    def mean(self) -> float:
        """E[g(C2)] by quadrature (equals r + asymptotic bias)."""
        return _expect(lambda x: self._g(x), self._df)

    def sd(self) -> float:
        m = self.mean()
        second = _expect(lambda x: self._g(x) ** 2, self._df)
        return float(np.sqrt(max(second - m * m, 0.0)))


def _expect(fn, df: int) -> float:
    val, err = integrate.quad(
        lambda x: fn(x) * chi2.pdf(x, df), 0.0, np.inf,
        epsabs=1e-12, epsrel=1e-12, limit=200,
    )
    if err > _QUAD_ABS_TOL:
        raise QuadratureError(f"quadrature error {err} above {_QUAD_ABS_TOL}")
    return float(val)


def limit_distribution(regime: SpikeRegime, t: int, r: float | None = None):
    """Distribution handle for the limit of the share estimator."""
    _check_t(t)
    if regime is SpikeRegime.VANISHING:
        return PointMassLimit(1.0 / (t - 1))
    if regime is SpikeRegime.EXPANDING:
        return PointMassLimit(1.0)
    if r is None:
        raise ValueError("constant-spike limit needs the population share r")
    _check_r(r)
    if t == 2:
        return PointMassLimit(1.0, degenerate=True)
    return ConstantSpikeLimit(t=t, r=r)


def asymptotic_bias(regime: SpikeRegime, t: int, r: float | None = None) -> float:
    """Large-N bias of the share estimator at sample size t."""
    _check_t(t)
    if regime is SpikeRegime.VANISHING:
        return 1.0 / (t - 1)
    if regime is SpikeRegime.EXPANDING:
        return 0.0
    if r is None:
        raise ValueError("constant-spike bias needs the population share r")
    _check_r(r)
    s = 1.0 - r
    tm1 = t - 1

    def integrand(x):
        return s * (r * x + 1.0 - r * tm1) / (r * x + s * tm1)

    return _expect(integrand, tm1)


def worst_case_bound(t: int) -> float:
    """Upper bound on the asymptotic bias over all shares: 1/(T-1)."""
    _check_t(t)
    return 1.0 / (t - 1)


@dataclass(frozen=True)
class AsymptoticResult:
    """Bundle of the limit behavior at one (regime, T, r)."""

    regime: SpikeRegime
    t: int
    r: float | None
    bias: float
    worst_bound: float
    distribution: object
    limit_point: float | None = None  # probability limit in the degenerate regimes

    @classmethod
    def evaluate(cls, regime: SpikeRegime, t: int, r: float | None = None):
        dist = limit_distribution(regime, t, r)
        bias = asymptotic_bias(regime, t, r)
        point = dist.location if isinstance(dist, PointMassLimit) else None
        return cls(
            regime=regime,
            t=t,
            r=r,
            bias=bias,
            worst_bound=worst_case_bound(t),
            distribution=dist,
            limit_point=point,
        )


def bias_curve(t: int, r_grid) -> list[dict]:
    """Asymptotic bias over a grid of population shares, as table rows."""
    rows = []
    bound = worst_case_bound(t)
    for r in np.asarray(r_grid, dtype=float):
        rows.append(
            {
                "t": t,
                "r": float(r),
                "bias": asymptotic_bias(SpikeRegime.CONSTANT, t, float(r)),
                "bound": bound,
            }
        )
    return rows
