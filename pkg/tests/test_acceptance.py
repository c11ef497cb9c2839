"""Acceptance suite.

Each test implements one acceptance criterion at its stated tolerance and
runtime budget and prints a single pass/fail line (run with ``pytest -s`` to
see them live; they are also shown in captured output).
"""

import time

import numpy as np
import pytest
from scipy import optimize
from scipy.stats import ks_2samp

from basisrisk.asymptotics import asymptotic_bias, limit_distribution, worst_case_bound
from basisrisk.cli import main
from basisrisk.harness import McExperiment, run_experiment, spiked_grid
from basisrisk.metrics import (
    area_yield_weights,
    lambda_share_from_panel,
    optimal_index,
    total_r2_matrix,
    total_r2_regression,
)
from basisrisk.panel import make_panel, sample_moments
from basisrisk.quantreg import fit_quantile_line
from basisrisk.rng import stream
from basisrisk.sampler import sample_spiked
from basisrisk.spiked import SpikeRegime, constant_spike_from_target

from helpers import grid_fit_line, ks_critical, random_spd, write_panel_csv

CONSTANT = SpikeRegime.CONSTANT


def _report(cid, name, ok, detail, elapsed, limit):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"[acceptance] {cid} {name}: {status} ({detail}; {elapsed:.1f}s / limit {limit}s)")
    assert ok, f"{cid} {name}: {detail}"
    assert elapsed < limit, f"{cid} runtime {elapsed:.1f}s exceeds {limit}s"


def test_c01_matrix_regression_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        t = int(rng.integers(3, 13))
        n = int(rng.integers(3, 41))
        panel = make_panel(rng.normal(rng.uniform(-2, 2), 1.5, size=(t, n)))
        s = sample_moments(panel).covariance
        reg, _ = total_r2_regression(panel, panel.values.mean(axis=1))
        mat = total_r2_matrix(s, area_yield_weights(n))
        worst = max(worst, abs(reg - mat))
    _report("C1", "matrix/regression equivalence", worst <= 1e-10,
            f"max diff {worst:.2e} over 100 panels", time.perf_counter() - t0, 10)


def test_c02_optimal_index_identity_and_dominance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst_identity = 0.0
    worst_excess = -np.inf
    for _ in range(100):
        n = int(rng.integers(3, 25))
        cov = random_spd(rng, n)
        eigs = np.linalg.eigvalsh(cov)
        share_direct = eigs.max() / eigs.sum()
        weights, share = optimal_index(cov)
        worst_identity = max(worst_identity, abs(total_r2_matrix(cov, weights) - share_direct))
        for _ in range(50):
            w = rng.standard_normal(n)
            worst_excess = max(worst_excess, total_r2_matrix(cov, w) - share)
    ok = worst_identity <= 1e-10 and worst_excess <= 1e-10
    _report("C2", "optimal-index identity + dominance", ok,
            f"identity diff {worst_identity:.2e}, max excess {worst_excess:.2e}",
            time.perf_counter() - t0, 10)


def test_c03_dual_primal_equivalence_and_speed():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for n in (50, 150, 300):
        for t in (4, 10, 20):
            panel = make_panel(rng.standard_normal((t, n)))
            dual = lambda_share_from_panel(panel, method="dual")
            primal = lambda_share_from_panel(panel, method="primal")
            worst = max(worst, abs(dual - primal))
    per_panel = []
    for _ in range(5):
        panel = make_panel(rng.standard_normal((20, 2000)))
        t1 = time.perf_counter()
        lambda_share_from_panel(panel, method="dual")
        per_panel.append(time.perf_counter() - t1)
    ok = worst <= 1e-9 and max(per_panel) < 1.0
    _report("C3", "dual-trick equivalence", ok,
            f"max diff {worst:.2e}, slowest N=2000 dual {max(per_panel)*1000:.0f}ms",
            time.perf_counter() - t0, 60)


def test_c04_vanishing_spike_limit():
    t0 = time.perf_counter()
    exp = McExperiment(dgp=np.eye(2000), t_grid=(4,), n_reps=500, base_seed=104,
                       metrics=("lambda_share",))
    cell = run_experiment(exp).cell("lambda_share", 4)
    ok = abs(cell.mean_estimate - 1.0 / 3.0) <= 0.02
    _report("C4", "vanishing-spike limit of the share estimator", ok,
            f"mean share {cell.mean_estimate:.4f} vs 1/3", time.perf_counter() - t0, 120)


def test_c05_constant_spike_bias_agreement():
    t0 = time.perf_counter()
    rows = spiked_grid(t_grid=(4,), n_grid=(50, 1000),
                       lambda_grid=(0.1, 0.3, 0.5, 0.7, 0.9),
                       n_reps=500, base_seed=105)
    disc = {50: [], 1000: []}
    for row in rows:
        disc[row["n"]].append(abs(row["empirical_bias"] - row["theoretical_bias"]))
    max_1000 = max(disc[1000])
    max_50 = max(disc[50])
    ok = max_1000 <= 0.02 and max_50 <= 0.06 and max_50 > max_1000
    _report("C5", "constant-spike bias agreement + N-improves-accuracy", ok,
            f"max |emp-theo|: N=1000 {max_1000:.4f}, N=50 {max_50:.4f}",
            time.perf_counter() - t0, 900)


def test_c06_worst_case_bound():
    t0 = time.perf_counter()
    ok = True
    details = []
    for t in (4, 10, 20, 100):
        bound = worst_case_bound(t)
        biases = [asymptotic_bias(CONSTANT, t, float(r)) for r in np.linspace(0.01, 0.99, 99)]
        ok &= max(biases) <= bound + 1e-9
        edge = asymptotic_bias(CONSTANT, t, 1e-6)
        ok &= abs(edge - bound) <= 1e-4
        details.append(f"T={t} max {max(biases):.4f} <= {bound:.4f}")
    _report("C6", "1/(T-1) worst-case bound", ok, "; ".join(details[:2]) + "...",
            time.perf_counter() - t0, 60)


def test_c07_sign_reversal_near_one():
    # KNOWN RED. The criterion pins the sign change of the T=4 bias curve to
    # the interval (0.9, 1), but the bias formula's only zero crossing is at
    # r ~ 0.8193 and the curve is strictly negative on (0.9, 1) -- confirmed
    # both by quadrature and by direct simulation (N=1000, the empirical bias
    # at share 0.95 is -0.018). The reversal property itself is real and is
    # verified with root bracketing over the full share range in
    # test_asymptotics.py::test_sign_reversal_located_by_root_bracketing.
    t0 = time.perf_counter()
    grid = np.linspace(0.9, 0.9999, 60)
    biases = np.array([asymptotic_bias(CONSTANT, 4, float(r)) for r in grid])
    signs = np.sign(biases)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    ok = flips.size >= 1
    root = float("nan")
    if ok:
        lo, hi = grid[flips[0]], grid[flips[0] + 1]
        root = optimize.brentq(lambda r: asymptotic_bias(CONSTANT, 4, r), lo, hi, xtol=1e-10)
        ok = 0.9 < root < 1.0
    true_root = optimize.brentq(
        lambda r: asymptotic_bias(CONSTANT, 4, r), 0.5, 0.9999, xtol=1e-10
    )
    _report("C7", "bias sign reversal on (0.9, 1)", ok,
            f"no crossing inside (0.9, 1): curve crosses zero at r = {true_root:.6f} "
            f"and is negative throughout (0.9, 1)",
            time.perf_counter() - t0, 60)


def test_c08_quantile_solver_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(108)
    worst = -np.inf
    for i in range(200):
        t = int(rng.integers(3, 31))
        tau = (0.1, 0.3, 0.5, 0.7)[i % 4]
        f = rng.standard_normal(t)
        y = rng.uniform(-1, 1) * f + rng.standard_normal(t)
        fit = fit_quantile_line(y, f, tau)
        grid_v, _, _ = grid_fit_line(y, f, tau)
        worst = max(worst, fit.v_value - grid_v)
    _report("C8", "exact solver beats 400x400 grid", worst <= 1e-9,
            f"max (exact - grid) = {worst:.2e}", time.perf_counter() - t0, 60)


def test_c09_limit_distribution_ks_check():
    t0 = time.perf_counter()
    model = constant_spike_from_target(0.5, 1000, rotation_seed=109)
    reps = 2000
    empirical = np.empty(reps)
    for rep in range(reps):
        values = sample_spiked(model, 4, stream(109, rep))
        x = values - values.mean(axis=0)
        eigs = np.linalg.eigvalsh(x @ x.T / 3.0)
        empirical[rep] = eigs.max() / eigs.sum()
    r_limit = model.a / (model.a + model.b)
    theoretical = limit_distribution(CONSTANT, 4, r_limit).sample(reps, rng=stream(110, 0))
    stat = ks_2samp(empirical, theoretical).statistic
    crit = ks_critical(reps, reps, alpha=0.01)
    _report("C9", "limit-distribution KS check", stat < crit,
            f"KS stat {stat:.4f} < 1% critical {crit:.4f}", time.perf_counter() - t0, 600)


def test_c10_byte_identical_simulation_outputs(tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(110)
    panel_path = write_panel_csv(tmp_path / "panel.csv", rng.normal(5, 1, (6, 10)))
    checks = []

    spiked_args = ["simulate-spiked", "--t-grid", "3,4", "--n-grid", "25",
                   "--lambda-grid", "0.3,0.6", "--reps", "30", "--seed", "11"]
    calib_args = ["simulate-calibrated", str(panel_path), "--t-grid", "3,4",
                  "--reps", "30", "--seed", "12", "--metrics", "r2_area,lambda_share"]
    sample_args = ["sample", "--t", "6", "--n", "15", "--lambda-tilde", "0.5",
                   "--seed", "13"]
    for label, args in (("spiked", spiked_args), ("calibrated", calib_args),
                        ("sample", sample_args)):
        blobs = []
        for run, threads in (("x", None), ("y", None), ("z", 4)):
            out = tmp_path / f"{label}_{run}.out"
            extra = ["--threads", str(threads)] if threads and label != "sample" else []
            assert main(args + ["--out", str(out)] + extra) == 0
            blobs.append(out.read_bytes())
        checks.append(blobs[0] == blobs[1] == blobs[2])
    _report("C10", "byte-identical reruns at any --threads", all(checks),
            f"subcommands checked: spiked/calibrated/sample -> {checks}",
            time.perf_counter() - t0, 120)
