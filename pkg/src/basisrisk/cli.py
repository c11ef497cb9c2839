"""Command-line surface.

Subcommands: ``metrics`` (basis-risk report for a CSV panel),
``simulate-calibrated`` (Monte Carlo with the panel's covariance as
pseudo-truth), ``simulate-spiked`` (factorial spiked-model bias grid),
``asymptotics`` (limit-law bias/distribution tables) and ``sample`` (dump a
simulated panel as CSV).

Parameter precedence is defaults < --config JSON < explicit flags. Every
output is deterministic under a fixed seed: re-running a command with the
same flags yields byte-identical files at any --threads setting.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import asymptotics as asym
from . import harness, io, metrics, panel, quantreg
from .errors import MetricError, PanelError, QuadratureError, SimulationError
from .rng import derive_seed, stream
from .sampler import sample_dense, sample_spiked
from .spiked import SpikeRegime, constant_spike_from_target

DEFAULTS = {
    "metrics": {"tau": 0.3, "index": "mean", "format": "json", "out": None,
                "drop_missing": True},
    "simulate-spiked": {"t_grid": "4,20,100", "n_grid": "50,200,500,1000",
                        "lambda_grid": "0.1,0.3,0.5,0.7,0.9", "reps": 500,
                        "seed": 0, "threads": 1, "exact_target": True,
                        "format": "csv", "out": None},
    "simulate-calibrated": {"t_grid": "4,10,20", "reps": 500, "seed": 0,
                            "tau": 0.3, "metrics": "r2_area,lambda_share,r2_quantile",
                            "oracle_size": 25000, "quantile_index": "mean",
                            "threads": 1, "format": "csv", "out": None,
                            "drop_missing": True},
    "asymptotics": {"r_grid": "auto", "format": "csv", "out": None},
    "sample": {"n": 100, "lambda_tilde": None, "cov": None, "seed": 0, "out": None},
}


def _int_grid(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in str(text).split(",") if tok.strip())


def _float_grid(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _resolve(args: argparse.Namespace, command: str) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key in merged:
                merged[key] = value
    for key in merged:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _add_common(p: argparse.ArgumentParser, command: str, *names: str):
    d = DEFAULTS[command]
    if "config" not in names:
        p.add_argument("--config", help="optional JSON config file (flags override it)")
    for name in names:
        flag = "--" + name.replace("_", "-")
        if name in ("t_grid", "n_grid", "lambda_grid", "metrics", "r_grid"):
            p.add_argument(flag, default=None, help=f"comma list (default: {d[name]})")
        elif name == "format":
            p.add_argument("--format", choices=("csv", "json"), default=None,
                           help=f"output format (default: {d['format']})")
        elif name == "out":
            p.add_argument("--out", default=None, help="output path (default: stdout)")
        elif name == "threads":
            p.add_argument("--threads", type=int, default=None,
                           help="parallel replication cap; results are independent of it (default: 1)")
        elif name in ("reps", "seed", "oracle_size"):
            p.add_argument(flag, type=int, default=None, help=f"(default: {d[name]})")
        elif name == "tau":
            p.add_argument("--tau", type=float, default=None,
                           help=f"quantile level (default: {d['tau']})")
        elif name == "quantile_index":
            p.add_argument("--quantile-index", choices=("mean", "optimal"), default=None,
                           help="index used inside replications for the quantile metric (default: mean)")
        elif name == "drop_missing":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--drop-missing", dest="drop_missing", action="store_true",
                           default=None, help="drop fields with missing values (default)")
            g.add_argument("--fail-missing", dest="drop_missing", action="store_false",
                           default=None, help="error on missing values instead")
        elif name == "exact_target":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--exact-target", dest="exact_target", action="store_true",
                           default=None,
                           help="calibrate the spike so the finite-N share equals the target (default)")
            g.add_argument("--paper-recipe", dest="exact_target", action="store_false",
                           default=None,
                           help="use the large-N recipe a = l/(1-l) instead")
        else:
            raise AssertionError(name)


def _emit_rows(header, rows, fmt: str, out):
    if fmt == "json":
        io.emit(io.dumps_json(rows), out)
    else:
        io.emit(io.rows_to_csv(list(header), rows), out)


def cmd_metrics(args) -> int:
    opt = _resolve(args, "metrics")
    pnl = panel.load_panel(args.panel, drop_missing=opt["drop_missing"])
    index = opt["index"]
    if index not in ("mean", "optimal"):
        index = np.loadtxt(index, dtype=float, ndmin=1)  # weights file: one per line
    report = metrics.compute_report(pnl, tau=opt["tau"], index=index)
    d = report.as_dict()
    if opt["format"] == "json":
        io.emit(io.dumps_json(d), opt["out"])
    else:
        rows = [{"key": k, "value": d[k]} for k in
                ("r2_area", "r2_optimal", "lambda_share", "r2_quantile", "tau", "index", "r2_index")]
        rows += [{"key": f"per_field_r2.{fid}", "value": v}
                 for fid, v in zip(pnl.field_ids, d["per_field_r2"])]
        _emit_rows(("key", "value"), rows, "csv", opt["out"])
    return 0


def cmd_simulate_spiked(args) -> int:
    opt = _resolve(args, "simulate-spiked")
    rows = harness.spiked_grid(
        t_grid=_int_grid(opt["t_grid"]),
        n_grid=_int_grid(opt["n_grid"]),
        lambda_grid=_float_grid(opt["lambda_grid"]),
        n_reps=opt["reps"],
        base_seed=opt["seed"],
        exact_target=opt["exact_target"],
        threads=opt["threads"],
    )
    _emit_rows(harness.GRID_HEADER, rows, opt["format"], opt["out"])
    return 0


def cmd_simulate_calibrated(args) -> int:
    opt = _resolve(args, "simulate-calibrated")
    pnl = panel.load_panel(args.panel, drop_missing=opt["drop_missing"])
    summary = harness.run_calibrated(
        pnl,
        t_grid=_int_grid(opt["t_grid"]),
        n_reps=opt["reps"],
        base_seed=opt["seed"],
        tau=opt["tau"],
        metrics=tuple(str(opt["metrics"]).split(",")),
        oracle_size=opt["oracle_size"],
        quantile_index=opt["quantile_index"],
        threads=opt["threads"],
    )
    _emit_rows(harness.McSummary.HEADER, summary.rows(), opt["format"], opt["out"])
    return 0


def cmd_asymptotics(args) -> int:
    opt = _resolve(args, "asymptotics")
    t = args.t
    if opt["r_grid"] == "auto":
        r_grid = np.round(np.linspace(0.01, 0.99, 99), 10)
    else:
        r_grid = _float_grid(opt["r_grid"])
    header = ("t", "r", "bias", "bound", "mean", "sd", "q01", "q05", "q50", "q95", "q99")
    rows = []
    for r in r_grid:
        res = asym.AsymptoticResult.evaluate(SpikeRegime.CONSTANT, t, float(r))
        dist = res.distribution
        if isinstance(dist, asym.ConstantSpikeLimit):
            mean, sd = dist.mean(), dist.sd()
        else:
            mean, sd = dist.mean(), 0.0
        q = dist.quantile(np.array([0.01, 0.05, 0.5, 0.95, 0.99]))
        q = np.atleast_1d(q)
        rows.append({
            "t": t, "r": float(r), "bias": res.bias, "bound": res.worst_bound,
            "mean": mean, "sd": sd,
            "q01": float(q[0]), "q05": float(q[1]), "q50": float(q[2]),
            "q95": float(q[3]), "q99": float(q[4]),
        })
    _emit_rows(header, rows, opt["format"], opt["out"])
    return 0


def cmd_sample(args) -> int:
    opt = _resolve(args, "sample")
    t, n, seed = args.t, opt["n"], opt["seed"]
    gen = stream(seed, 0)
    if opt["cov"] is not None:
        cov = np.loadtxt(opt["cov"], delimiter=",", dtype=float, ndmin=2)
        values = sample_dense(cov, t, gen)
    elif opt["lambda_tilde"] is not None:
        model = constant_spike_from_target(
            float(opt["lambda_tilde"]), int(n), rotation_seed=derive_seed(seed, 1)
        )
        values = sample_spiked(model, t, gen)
    else:
        values = gen.standard_normal((t, int(n)))  # identity covariance
    pnl = panel.make_panel(values)
    header = ("period",) + pnl.field_ids
    rows = [
        {"period": pid, **{fid: float(v) for fid, v in zip(pnl.field_ids, row)}}
        for pid, row in zip(pnl.period_ids, pnl.values)
    ]
    _emit_rows(header, rows, "csv", opt["out"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basisrisk",
        description="Basis-risk metrics, small-T bias simulations and limit-law tables",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("metrics", help="basis-risk report for a CSV yield panel")
    p.add_argument("panel", help="panel CSV path")
    p.add_argument("--index", default=None,
                   help="'mean', 'optimal', or a weights file with one value per line (default: mean)")
    _add_common(p, "metrics", "tau", "format", "out", "drop_missing")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate-spiked", help="factorial spiked-model bias grid")
    _add_common(p, "simulate-spiked", "t_grid", "n_grid", "lambda_grid", "reps",
                "seed", "threads", "exact_target", "format", "out")
    p.set_defaults(func=cmd_simulate_spiked)

    p = sub.add_parser("simulate-calibrated",
                       help="Monte Carlo with a panel's covariance as pseudo-truth")
    p.add_argument("panel", help="panel CSV path")
    _add_common(p, "simulate-calibrated", "t_grid", "reps", "seed", "tau", "metrics",
                "oracle_size", "quantile_index", "threads", "format", "out",
                "drop_missing")
    p.set_defaults(func=cmd_simulate_calibrated)

    p = sub.add_parser("asymptotics", help="limit-law bias and distribution table")
    p.add_argument("--t", type=int, required=True, help="panel length T (>= 2)")
    _add_common(p, "asymptotics", "r_grid", "format", "out")
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("sample", help="dump one simulated panel as CSV")
    p.add_argument("--t", type=int, required=True, help="number of periods")
    p.add_argument("--n", type=int, default=None, help="number of fields (default: 100)")
    p.add_argument("--lambda-tilde", type=float, default=None,
                   help="constant-spike target share; omit for identity covariance")
    p.add_argument("--cov", default=None, help="CSV file with a dense covariance matrix")
    _add_common(p, "sample", "seed", "out")
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (PanelError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (MetricError, QuadratureError, SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
