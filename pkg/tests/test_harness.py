import numpy as np
import pytest

import basisrisk.harness as harness
from basisrisk.asymptotics import asymptotic_bias
from basisrisk.errors import SimulationError
from basisrisk.harness import (
    McExperiment,
    population_values,
    run_calibrated,
    run_experiment,
    spiked_grid,
)
from basisrisk.panel import make_panel
from basisrisk.rng import REPLICATION, stream
from basisrisk.spiked import SpikeRegime, constant_spike_from_target


def test_population_values_spiked_share_is_exact():
    model = constant_spike_from_target(0.6, 40, rotation_seed=2)
    pop = population_values(model, metrics=("lambda_share",))
    assert pop["lambda_share"] == pytest.approx(0.6, abs=1e-12)


def test_population_r2_area_identity():
    pop = population_values(np.eye(25), metrics=("r2_area",))
    assert pop["r2_area"] == pytest.approx(1.0 / 25.0, abs=1e-12)


def test_population_r2_area_spiked_matches_dense():
    from basisrisk.spiked import materialize_covariance

    model = constant_spike_from_target(0.4, 30, rotation_seed=6)
    fast = population_values(model, metrics=("r2_area",))["r2_area"]
    dense = population_values(materialize_covariance(model), metrics=("r2_area",))["r2_area"]
    assert fast == pytest.approx(dense, abs=1e-12)


def test_quantile_oracle_stable_across_seeds():
    model = constant_spike_from_target(0.6, 200, rotation_seed=3)
    values = [
        population_values(
            model, metrics=("r2_quantile",), oracle_size=25000, seed=seed
        )["r2_quantile"]
        for seed in (0, 1)
    ]
    assert abs(values[0] - values[1]) < 0.01


def test_run_experiment_vanishing_spike_mini():
    # finite-N gap to the 1/(T-1) limit shrinks like 1/sqrt(N); at N=500 it
    # is ~0.03, so this mini version uses a looser band than the N=2000
    # acceptance criterion
    exp = McExperiment(
        dgp=np.eye(500),
        t_grid=(4,),
        n_reps=150,
        base_seed=7,
        metrics=("lambda_share",),
    )
    cell = run_experiment(exp).cell("lambda_share", 4)
    assert abs(cell.mean_estimate - 1.0 / 3.0) < 0.05
    assert cell.population_value == pytest.approx(1.0 / 500.0, abs=1e-12)


def test_run_experiment_constant_spike_tracks_theory():
    model = constant_spike_from_target(0.5, 1000, rotation_seed=4)
    exp = McExperiment(
        dgp=model, t_grid=(4,), n_reps=200, base_seed=8, metrics=("lambda_share",)
    )
    cell = run_experiment(exp).cell("lambda_share", 4)
    theo = asymptotic_bias(SpikeRegime.CONSTANT, 4, model.a / (model.a + model.b))
    assert abs(cell.bias - theo) < 0.025


def test_bias_identity_and_single_rep():
    exp = McExperiment(
        dgp=np.eye(10), t_grid=(3,), n_reps=1, base_seed=9, metrics=("lambda_share",)
    )
    cell = run_experiment(exp).cell("lambda_share", 3)
    assert cell.bias + cell.population_value == pytest.approx(cell.mean_estimate, abs=0)
    assert np.isnan(cell.mc_standard_error)
    assert cell.n_reps == 1


def test_t2_estimator_is_always_one():
    exp = McExperiment(
        dgp=np.eye(30), t_grid=(2,), n_reps=50, base_seed=10, metrics=("lambda_share",)
    )
    cell = run_experiment(exp).cell("lambda_share", 2)
    assert cell.mean_estimate == pytest.approx(1.0, abs=1e-12)
    assert np.isclose(cell.mc_standard_error, 0.0, atol=1e-12)


def test_summary_deterministic_and_thread_invariant():
    model = constant_spike_from_target(0.4, 60, rotation_seed=5)
    base = McExperiment(dgp=model, t_grid=(3, 5), n_reps=40, base_seed=11,
                        metrics=("r2_area", "lambda_share"))
    again = run_experiment(base)
    threaded = run_experiment(
        McExperiment(dgp=model, t_grid=(3, 5), n_reps=40, base_seed=11,
                     metrics=("r2_area", "lambda_share"), threads=4)
    )
    assert run_experiment(base) == again
    assert threaded == again


def test_replication_streams_never_collide():
    seen = set()
    for t in (2, 4, 10, 20, 100):
        for rep in range(50):
            first = tuple(stream(12, REPLICATION, t, rep).integers(2**63, size=2))
            assert first not in seen
            seen.add(first)


def test_run_calibrated_rank_deficient_dgp():
    rng = stream(13, 0)
    panel = make_panel(rng.standard_normal((4, 25)))  # covariance rank <= 3
    summary = run_calibrated(
        panel, t_grid=(4,), n_reps=60, base_seed=13,
        metrics=("r2_area", "lambda_share"),
    )
    cell = summary.cell("lambda_share", 4)
    assert 0.0 < cell.mean_estimate <= 1.0


def test_run_calibrated_high_correlation_bias_near_zero_or_negative():
    rng = stream(14, 0)
    factor = rng.standard_normal(8)
    values = np.outer(factor, np.ones(40)) + 0.01 * rng.standard_normal((8, 40))
    panel = make_panel(values)
    summary = run_calibrated(
        panel, t_grid=(4, 10), n_reps=150, base_seed=14, metrics=("lambda_share",)
    )
    for t in (4, 10):
        cell = summary.cell("lambda_share", t)
        assert cell.population_value > 0.99
        assert cell.bias < 0.01


def test_run_calibrated_low_correlation_quantile_bias_exceeds_100_percent():
    rng = stream(15, 0)
    panel = make_panel(rng.standard_normal((6, 50)))
    summary = run_calibrated(
        panel, t_grid=(4,), n_reps=150, base_seed=15,
        metrics=("r2_quantile",), oracle_size=4000,
    )
    cell = summary.cell("r2_quantile", 4)
    assert cell.population_value > 0.0
    relative_bias = cell.bias / cell.population_value
    assert relative_bias > 1.0


def test_failure_rate_above_threshold_aborts(monkeypatch):
    real = harness._replication_estimates
    calls = {"n": 0}

    def flaky(values, metrics, tau, quantile_index):
        calls["n"] += 1
        if calls["n"] % 10 == 0:  # 10% failure rate
            from basisrisk.errors import MetricError

            raise MetricError("synthetic failure")
        return real(values, metrics, tau, quantile_index)

    monkeypatch.setattr(harness, "_replication_estimates", flaky)
    exp = McExperiment(dgp=np.eye(10), t_grid=(4,), n_reps=100, base_seed=16,
                       metrics=("lambda_share",))
    with pytest.raises(SimulationError, match="failed"):
        run_experiment(exp)


def test_failures_below_threshold_reported(monkeypatch):
    real = harness._replication_estimates
    calls = {"n": 0}

    def once_flaky(values, metrics, tau, quantile_index):
        calls["n"] += 1
        if calls["n"] == 5:
            from basisrisk.errors import MetricError

            raise MetricError("synthetic failure")
        return real(values, metrics, tau, quantile_index)

    monkeypatch.setattr(harness, "_replication_estimates", once_flaky)
    exp = McExperiment(dgp=np.eye(10), t_grid=(4,), n_reps=200, base_seed=17,
                       metrics=("lambda_share",))
    cell = run_experiment(exp).cell("lambda_share", 4)
    assert cell.n_failures == 1
    assert cell.n_reps == 199


def test_spiked_grid_layout_and_columns():
    rows = spiked_grid(
        t_grid=(4,), n_grid=(50, 200), lambda_grid=(0.3, 0.7),
        n_reps=120, base_seed=18,
    )
    assert len(rows) == 4
    assert set(rows[0]) == set(harness.GRID_HEADER)
    for row in rows:
        assert row["population_value"] == pytest.approx(row["lambda_tilde"], abs=1e-12)
        assert row["worst_bound"] == pytest.approx(1.0 / 3.0)
        assert abs(row["empirical_bias"] - row["theoretical_bias"]) < 0.08


def test_spiked_grid_t100_bias_negligible():
    rows = spiked_grid(
        t_grid=(100,), n_grid=(50, 200), lambda_grid=(0.3, 0.7),
        n_reps=100, base_seed=24,
    )
    for row in rows:
        assert row["empirical_bias"] <= 1.0 / 99.0 + 3.0 * row["mc_standard_error"]
        assert abs(row["theoretical_bias"]) <= 1.0 / 99.0 + 1e-9


def test_spiked_grid_matches_direct_experiment():
    from basisrisk.rng import GRID, ROTATION, derive_seed

    rows = spiked_grid(
        t_grid=(4,), n_grid=(40,), lambda_grid=(0.5,), n_reps=50, base_seed=19
    )
    model = constant_spike_from_target(
        0.5, 40, rotation_seed=derive_seed(19, ROTATION, 0, 0)
    )
    exp = McExperiment(
        dgp=model, t_grid=(4,), n_reps=50,
        base_seed=derive_seed(19, GRID, 0, 0), metrics=("lambda_share",),
    )
    cell = run_experiment(exp).cell("lambda_share", 4)
    assert rows[0]["mean_estimate"] == cell.mean_estimate
    assert rows[0]["empirical_bias"] == cell.bias


def test_experiment_json_round_trip():
    model = constant_spike_from_target(0.3, 15, rotation_seed=20)
    exp = McExperiment(dgp=model, t_grid=(4, 10), n_reps=7, base_seed=21)
    again = McExperiment.from_dict(exp.to_dict())
    assert again.dgp == model
    assert (again.t_grid, again.n_reps, again.base_seed) == ((4, 10), 7, 21)
    dense = McExperiment(dgp=np.eye(3), t_grid=(2,), n_reps=1)
    back = McExperiment.from_dict(dense.to_dict())
    assert np.array_equal(back.dgp, np.eye(3))


def test_experiment_validation():
    with pytest.raises(ValueError):
        McExperiment(dgp=np.eye(3), t_grid=(1,))
    with pytest.raises(ValueError):
        McExperiment(dgp=np.eye(3), n_reps=0)
    with pytest.raises(ValueError):
        McExperiment(dgp=np.eye(3), metrics=("nope",))
    with pytest.raises(ValueError):
        McExperiment(dgp=np.eye(3), quantile_index="middle")


def test_quantile_index_optional_route():
    model = constant_spike_from_target(0.7, 25, rotation_seed=22)
    exp = McExperiment(
        dgp=model, t_grid=(5,), n_reps=30, base_seed=23,
        metrics=("r2_quantile",), population_oracle_size=2000,
        quantile_index="optimal",
    )
    cell = run_experiment(exp).cell("r2_quantile", 5)
    assert -1e-10 <= cell.mean_estimate <= 1.0
