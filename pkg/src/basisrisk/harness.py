"""Monte Carlo bias experiments.

The protocol mirrors how an insurer would proceed: treat a covariance (either
estimated from data, or a parametric spiked model) as the true population,
simulate T-period panels from it, re-estimate each basis-risk metric on every
simulated sample with the sample's own index -- the population index never
leaks into a replication -- and compare the replication average against the
population value.

Reproducibility contract: replication r at panel length t draws from the
stream (base_seed, REPLICATION, t, r); the quantile population oracle owns
the stream (base_seed, ORACLE). Aggregation reduces over a replication-index-
ordered array, so summaries are bit-identical at any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .errors import MetricError, SimulationError
from .metrics import lambda_share_from_cov, total_r2_matrix, total_r2_regression
from .panel import YieldPanel, sample_moments
from .quantreg import total_quantile_r2
from .rng import derive_seed, stream
from .sampler import covariance_factor, sample_dense_factored, sample_spiked
from .spiked import SpikedModel, SpikeRegime, constant_spike_from_target, population_lambda_share
from .asymptotics import asymptotic_bias, worst_case_bound
from .errors import QuadratureError

METRIC_NAMES = ("r2_area", "lambda_share", "r2_quantile")
FAILURE_ABORT_RATE = 0.01


@dataclass(frozen=True)
class McExperiment:
    """Replication plan for one data-generating process."""

    dgp: object  # dense covariance matrix or SpikedModel
    t_grid: tuple[int, ...] = (4, 10, 20)
    n_reps: int = 500
    base_seed: int = 0
    metrics: tuple[str, ...] = METRIC_NAMES
    tau: float = 0.3
    population_oracle_size: int = 25000
    quantile_index: str = "mean"  # index inside replications: "mean" or "optimal"
    threads: int = 1

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if any(t < 2 for t in self.t_grid) or not self.t_grid:
            raise ValueError("t_grid values must all be >= 2")
        unknown = set(self.metrics) - set(METRIC_NAMES)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}")
        if self.quantile_index not in ("mean", "optimal"):
            raise ValueError("quantile_index must be 'mean' or 'optimal'")
        object.__setattr__(self, "t_grid", tuple(int(t) for t in self.t_grid))
        object.__setattr__(self, "metrics", tuple(self.metrics))

    def to_dict(self) -> dict:
        if isinstance(self.dgp, SpikedModel):
            dgp = {"kind": "spiked", **self.dgp.to_dict()}
        else:
            dgp = {"kind": "dense", "covariance": np.asarray(self.dgp).tolist()}
        return {
            "dgp": dgp,
            "t_grid": list(self.t_grid),
            "n_reps": self.n_reps,
            "base_seed": self.base_seed,
            "metrics": list(self.metrics),
            "tau": self.tau,
            "population_oracle_size": self.population_oracle_size,
            "quantile_index": self.quantile_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "McExperiment":
        dgp_spec = d["dgp"]
        if dgp_spec["kind"] == "spiked":
            dgp = SpikedModel.from_dict(dgp_spec)
        else:
            dgp = np.asarray(dgp_spec["covariance"], dtype=float)
        return cls(
            dgp=dgp,
            t_grid=tuple(d.get("t_grid", (4, 10, 20))),
            n_reps=int(d.get("n_reps", 500)),
            base_seed=int(d.get("base_seed", 0)),
            metrics=tuple(d.get("metrics", METRIC_NAMES)),
            tau=float(d.get("tau", 0.3)),
            population_oracle_size=int(d.get("population_oracle_size", 25000)),
            quantile_index=d.get("quantile_index", "mean"),
        )


@dataclass(frozen=True)
class McCell:
    """Aggregated result for one (metric, T) pair."""

    metric: str
    t: int
    population_value: float
    mean_estimate: float
    bias: float
    mc_standard_error: float
    n_reps: int
    n_failures: int = 0


@dataclass(frozen=True)
class McSummary:
    cells: tuple[McCell, ...]

    HEADER = (
        "metric", "t", "population_value", "mean_estimate",
        "bias", "mc_standard_error", "n_reps", "n_failures",
    )

    def rows(self) -> list[dict]:
        return [
            {name: getattr(c, name) for name in self.HEADER} for c in self.cells
        ]

    def cell(self, metric: str, t: int) -> McCell:
        for c in self.cells:
            if c.metric == metric and c.t == t:
                return c
        raise KeyError((metric, t))


def _dgp_machinery(dgp):
    """Precompute the per-replication sampler and population covariance ops."""
    if isinstance(dgp, SpikedModel):
        q1 = dgp.q1()
        root_b = np.sqrt(dgp.b)
        scale = np.sqrt(dgp.spike) - root_b
        n = dgp.n

        def draw(t, gen):
            eps = gen.standard_normal((t, n))
            return root_b * eps + scale * np.outer(eps @ q1, q1)

        def cov_apply(w):
            return dgp.b * w + (dgp.spike - dgp.b) * q1 * (q1 @ w)

        trace = dgp.spike + (n - 1) * dgp.b
        return draw, cov_apply, trace, n
    cov = np.asarray(dgp, dtype=float)
    factor = covariance_factor(cov)
    n = cov.shape[0]

    def draw(t, gen):
        return sample_dense_factored(factor, t, gen)

    def cov_apply(w):
        return cov @ w

    return draw, cov_apply, float(np.trace(cov)), n


def _population_linear(dgp, metric: str) -> float:
    if metric == "lambda_share":
        if isinstance(dgp, SpikedModel):
            return population_lambda_share(dgp)
        return lambda_share_from_cov(np.asarray(dgp, dtype=float))
    if metric == "r2_area":
        _, cov_apply, trace, n = _dgp_machinery(dgp)
        w = np.full(n, 1.0 / n)
        sw = cov_apply(w)
        index_var = float(w @ sw)
        if index_var <= 0.0:
            raise MetricError("area-yield index has zero population variance")
        return float(sw @ sw) / (index_var * trace)
    raise ValueError(f"not a linear metric: {metric}")


def _population_pc1(dgp) -> np.ndarray:
    if isinstance(dgp, SpikedModel):
        return dgp.q1()
    cov = np.asarray(dgp, dtype=float)
    eigs, vecs = np.linalg.eigh(cov)
    w = vecs[:, -1]
    return -w if w.sum() < 0.0 else w


def population_values(
    dgp,
    metrics=METRIC_NAMES,
    tau: float = 0.3,
    oracle_size: int = 25000,
    seed: int = 0,
    quantile_index: str = "mean",
) -> dict:
    """Population metric values for a DGP.

    Linear metrics come straight from the covariance; the quantile pseudo R2
    has no covariance formula and is measured once on a simulated panel of
    ``oracle_size`` periods drawn from the reserved oracle stream.
    """
    out = {}
    for metric in metrics:
        if metric in ("r2_area", "lambda_share"):
            out[metric] = _population_linear(dgp, metric)
        elif metric == "r2_quantile":
            draw, _, _, n = _dgp_machinery(dgp)
            values = draw(oracle_size, stream(seed, rng_mod.ORACLE))
            if quantile_index == "optimal":
                f = values @ _population_pc1(dgp)
            else:
                f = values.mean(axis=1)
            out[metric] = total_quantile_r2(values, f, tau)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return out


def _replication_estimates(values: np.ndarray, metrics, tau: float, quantile_index: str) -> dict:
    """Metric estimates on one simulated panel, using within-sample indexes."""
    out = {}
    mean_index = values.mean(axis=1)
    x = values - values.mean(axis=0)
    t = values.shape[0]
    for metric in metrics:
        if metric == "r2_area":
            out[metric], _ = total_r2_regression(values, mean_index)
        elif metric == "lambda_share":
            eigs = np.linalg.eigvalsh(x @ x.T / (t - 1))
            top, tot = float(eigs.max()), float(eigs.sum())
            if top <= 0.0 or tot <= 0.0:
                raise MetricError("replication panel has zero covariance")
            out[metric] = top / tot
        elif metric == "r2_quantile":
            if quantile_index == "optimal":
                dual = x @ x.T / (t - 1)
                _, vecs = np.linalg.eigh(dual)
                w = x.T @ vecs[:, -1]
                norm = float(np.linalg.norm(w))
                if norm <= 0.0:
                    raise MetricError("replication panel has zero covariance")
                f = values @ (w / norm)
            else:
                f = mean_index
            out[metric] = total_quantile_r2(values, f, tau)
    return out


def run_experiment(exp: McExperiment) -> McSummary:
    """Run the full replication plan and aggregate into a summary.

    Per-replication failures are recorded as NaN and counted; a failure rate
    above 1% for any (metric, T) aborts the experiment -- silently dropping
    failed replications would itself bias the bias estimates.
    """
    population = population_values(
        exp.dgp,
        exp.metrics,
        tau=exp.tau,
        oracle_size=exp.population_oracle_size,
        seed=exp.base_seed,
        quantile_index=exp.quantile_index,
    )
    draw, _, _, _ = _dgp_machinery(exp.dgp)

    cells = []
    for t in exp.t_grid:
        estimates = {m: np.full(exp.n_reps, np.nan) for m in exp.metrics}

        def one(rep, t=t):
            gen = stream(exp.base_seed, rng_mod.REPLICATION, t, rep)
            values = draw(t, gen)
            try:
                return _replication_estimates(values, exp.metrics, exp.tau, exp.quantile_index)
            except (MetricError, np.linalg.LinAlgError):
                return None

        if exp.threads > 1:
            with ThreadPoolExecutor(max_workers=exp.threads) as pool:
                results = list(pool.map(one, range(exp.n_reps)))
        else:
            results = [one(rep) for rep in range(exp.n_reps)]

        for rep, res in enumerate(results):
            if res is None:
                continue
            for m in exp.metrics:
                estimates[m][rep] = res[m]

        for m in exp.metrics:
            vals = estimates[m]
            ok = ~np.isnan(vals)
            n_fail = int((~ok).sum())
            if n_fail > FAILURE_ABORT_RATE * exp.n_reps:
                raise SimulationError(
                    f"{n_fail}/{exp.n_reps} replications failed for {m} at T={t}"
                )
            used = vals[ok]
            mean_est = float(used.mean())
            se = float(used.std(ddof=1) / np.sqrt(used.size)) if used.size > 1 else float("nan")
            cells.append(
                McCell(
                    metric=m,
                    t=t,
                    population_value=float(population[m]),
                    mean_estimate=mean_est,
                    bias=mean_est - float(population[m]),
                    mc_standard_error=se,
                    n_reps=int(used.size),
                    n_failures=n_fail,
                )
            )
    return McSummary(cells=tuple(cells))


def run_calibrated(
    panel: YieldPanel,
    t_grid=(4, 10, 20),
    n_reps: int = 500,
    base_seed: int = 0,
    tau: float = 0.3,
    metrics=METRIC_NAMES,
    oracle_size: int = 25000,
    quantile_index: str = "mean",
    threads: int = 1,
) -> McSummary:
    """Calibrated Monte Carlo: the panel's sample covariance becomes the
    pseudo-true population. Covariances estimated from few periods are rank
    deficient; the eigenvalue-based sampler handles them as-is."""
    cov = sample_moments(panel).covariance
    exp = McExperiment(
        dgp=cov,
        t_grid=tuple(t_grid),
        n_reps=n_reps,
        base_seed=base_seed,
        metrics=tuple(metrics),
        tau=tau,
        population_oracle_size=oracle_size,
        quantile_index=quantile_index,
        threads=threads,
    )
    return run_experiment(exp)


GRID_HEADER = (
    "t", "n", "lambda_tilde", "population_value", "mean_estimate",
    "empirical_bias", "theoretical_bias", "worst_bound",
    "mc_standard_error", "n_reps",
)


def spiked_grid(
    t_grid=(4, 20, 100),
    n_grid=(50, 200, 500, 1000),
    lambda_grid=(0.1, 0.3, 0.5, 0.7, 0.9),
    n_reps: int = 500,
    base_seed: int = 0,
    exact_target: bool = True,
    threads: int = 1,
) -> list[dict]:
    """Full factorial spiked-model bias experiment.

    Emits one row per (T, N, lambda_tilde) with the empirical bias of the
    share estimator, the theoretical bias at the model's limit share
    r = a/(a+b), and the worst-case bound 1/(T-1). Each (N, lambda) cell gets
    its own rotation and replication seeds derived from base_seed, so any
    sub-grid of a larger run reproduces the same numbers.
    """
    if not (t_grid and n_grid and lambda_grid):
        raise ValueError("t_grid, n_grid and lambda_grid must be non-empty")
    rows = []
    for i_n, n in enumerate(n_grid):
        for i_l, lam in enumerate(lambda_grid):
            model = constant_spike_from_target(
                float(lam),
                int(n),
                rotation_seed=derive_seed(base_seed, rng_mod.ROTATION, i_n, i_l),
                exact_target=exact_target,
            )
            exp = McExperiment(
                dgp=model,
                t_grid=tuple(t_grid),
                n_reps=n_reps,
                base_seed=derive_seed(base_seed, rng_mod.GRID, i_n, i_l),
                metrics=("lambda_share",),
                threads=threads,
            )
            summary = run_experiment(exp)
            r_limit = model.a / (model.a + model.b)
            for t in exp.t_grid:
                cell = summary.cell("lambda_share", t)
                try:
                    theo = asymptotic_bias(SpikeRegime.CONSTANT, t, r_limit)
                except QuadratureError:
                    theo = float("nan")
                rows.append(
                    {
                        "t": t,
                        "n": int(n),
                        "lambda_tilde": float(lam),
                        "population_value": cell.population_value,
                        "mean_estimate": cell.mean_estimate,
                        "empirical_bias": cell.bias,
                        "theoretical_bias": theo,
                        "worst_bound": worst_case_bound(t),
                        "mc_standard_error": cell.mc_standard_error,
                        "n_reps": cell.n_reps,
                    }
                )
    return rows
