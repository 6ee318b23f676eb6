"""Command-line interface.

Subcommands: generate, fit, predict, experiment rates, experiment
distributed, check.  Exit codes: 0 on success, 1 when a numerical
invariant check fails, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import sys

from . import io
from .config import (
    DEFAULTS,
    base_spec_from,
    embed_spec_from,
    load_config,
    penalty_from,
    seed_list_from,
    synthetic_config_from,
)
from .errors import DistRegError, NumericalInconsistencyError
from .experiments import (
    machines_path_for,
    run_checks,
    run_distributed_experiment,
    run_rate_experiment,
)
from .solver import estimate_cV, fit, predict_batch, schedule_params
from .synthetic import generate_synthetic

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_INVALID = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distreg",
        description="two-stage distribution regression on bags of points",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="draw a synthetic dataset")
    gen.add_argument("--config", required=True, help="key=value config file")
    gen.add_argument("--seed", type=int, default=None, help="override config seed")
    gen.add_argument("--out", required=True, help="points CSV path")

    fit_p = sub.add_parser("fit", help="fit a model to a dataset on disk")
    fit_p.add_argument("--config", required=True)
    fit_p.add_argument("--data", required=True, help="points CSV path")
    fit_p.add_argument("--labels", default=None, help="labels CSV (default: derived)")
    fit_p.add_argument("--lambda1", type=float, default=None)
    fit_p.add_argument("--lambda2", type=float, default=None)
    fit_p.add_argument("--out", required=True, help="model file path")

    pred = sub.add_parser("predict", help="evaluate a model at bags on disk")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True, help="points CSV path")
    pred.add_argument("--out", required=True, help="predictions CSV path")

    exp = sub.add_parser("experiment", help="run a multi-fit experiment")
    exp_sub = exp.add_subparsers(dest="experiment", required=True)

    rates = exp_sub.add_parser("rates", help="excess error against sample size")
    rates.add_argument("--config", required=True)
    rates.add_argument("--seed", type=int, default=None)
    rates.add_argument("--out", required=True)

    dist = exp_sub.add_parser("distributed", help="error against machine count")
    dist.add_argument("--config", required=True)
    dist.add_argument("--seed", type=int, default=None)
    dist.add_argument("--machines", default=None, help="comma-separated counts")
    dist.add_argument(
        "--partition-strategy",
        choices=("contiguous", "shuffled"),
        default=None,
    )
    dist.add_argument("--out", required=True)

    chk = sub.add_parser("check", help="run the operator-fact batteries")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--out", default=None, help="optional checks CSV path")
    return parser


def _cmd_generate(args) -> int:
    cfg = load_config(args.config)
    scfg = synthetic_config_from(cfg, seed=args.seed)
    ds, _ = generate_synthetic(scfg)
    io.write_dataset(args.out, ds)
    print(f"wrote {ds.n} bags of size {scfg.d} to {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    cfg = load_config(args.config)
    ds = io.read_dataset(
        args.data,
        base_spec_from(cfg),
        embed_spec_from(cfg),
        labels_path=args.labels,
    )
    penalty = penalty_from(cfg)
    lam1 = args.lambda1 if args.lambda1 is not None else cfg.get("lambda1")
    lam2 = args.lambda2 if args.lambda2 is not None else cfg.get("lambda2")
    if lam1 is None:
        beta = cfg["beta"]
        if beta == "auto":
            raise ValueError(
                "fit needs lambda1 (flag or config) or a numeric beta "
                "for the schedule"
            )
        sched = schedule_params(
            ds.n, cfg["r"], beta, cfg["alpha"], estimate_cV(ds, penalty)
        )
        lam1 = sched.lambda1
        lam2 = sched.lambda2 if lam2 is None else lam2
    elif lam2 is None:
        lam2 = 0.0
    model = fit(ds, lam1, lam2, penalty)
    io.write_model(args.out, model)
    print(
        f"fit n={model.n} lambda1={lam1:g} lambda2={lam2:g} "
        f"residual_inf={model.residual_inf:.3e}; wrote {args.out}"
    )
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = io.read_model(args.model)
    bags = io.read_points(args.data)
    preds = predict_batch(model, bags)
    io.write_predictions(args.out, preds)
    print(f"wrote {len(preds)} predictions to {args.out}")
    return EXIT_OK


def _cmd_rates(args) -> int:
    cfg = load_config(args.config)
    result = run_rate_experiment(
        synthetic_config_from(cfg, seed=args.seed),
        sizes=cfg["sizes"],
        r=cfg["r"],
        beta=cfg["beta"],
        alpha=cfg["alpha"],
        seeds=seed_list_from(cfg, seed=args.seed),
        d_max=cfg["d_max"],
        penalty=penalty_from(cfg),
        test_count=cfg["test_count"],
        test_bag_size=cfg["test_bag_size"],
        out_path=args.out,
    )
    print(
        f"rates: slope_measured={result.summary['slope_measured']:.4f} "
        f"slope_theory={result.summary['slope_theory']:.4f}; wrote {args.out}"
    )
    return EXIT_OK


def _cmd_distributed(args) -> int:
    cfg = load_config(args.config)
    machines = (
        [int(t) for t in args.machines.split(",") if t.strip()]
        if args.machines
        else cfg["machine_counts"]
    )
    strategy = args.partition_strategy or cfg["partition_strategy"]
    result = run_distributed_experiment(
        synthetic_config_from(cfg, seed=args.seed),
        n=cfg["n"],
        machine_counts=machines,
        r=cfg["r"],
        beta=cfg["beta"],
        alpha=cfg["alpha"],
        seeds=seed_list_from(cfg, seed=args.seed),
        d_max=cfg["d_max"],
        strategy=strategy,
        penalty=penalty_from(cfg),
        test_count=cfg["test_count"],
        test_bag_size=cfg["test_bag_size"],
        out_path=args.out,
    )
    print(
        f"distributed: m_budget={result.summary['m_budget']} "
        f"error_m1={result.summary['error_m1']:.4f}; "
        f"wrote {args.out} and {machines_path_for(args.out)}"
    )
    return EXIT_OK


def _cmd_check(args) -> int:
    rows, ok = run_checks(seed=args.seed, out_path=args.out)
    for row in rows:
        status = "pass" if row["passed"] else "FAIL"
        print(
            f"{row['check']}: max={row['max_value']:.3e} "
            f"threshold={row['threshold']:.3e} [{status}]"
        )
    return EXIT_OK if ok else EXIT_INVARIANT


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "experiment":
            handler = _cmd_rates if args.experiment == "rates" else _cmd_distributed
        else:
            handler = _COMMANDS[args.command]
        return handler(args)
    except NumericalInconsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DistRegError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
