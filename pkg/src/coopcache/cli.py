"""Command line entry point.

Subcommands: run, sweep, oracle, predict, la-bench. Every run writes
delimited CSV outputs plus rendered PNG figures into --out.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from . import automata, baselines, demand, harness, plots, predictor
from .agents import CacheEnv
from .baselines import EnumerationTooLargeError
from .harness import ConfigError, ExperimentConfig

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _load_config(args) -> ExperimentConfig:
    config = harness.load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "methods", None):
        overrides["methods"] = tuple(args.methods.split(","))
    return replace(config, **overrides) if overrides else config


def cmd_run(args) -> int:
    config = _load_config(args)
    records = harness.run_pipeline(config)
    paths = harness.emit_outputs(records, args.out, config)
    figures = plots.render_all(args.out)
    print(f"wrote {len(records)} records to {paths['runs']}")
    for p in figures:
        print(f"rendered {p}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    values = [float(v) for v in args.values.split(",")]
    records = harness.sweep(config, args.axis, values)
    paths = harness.emit_outputs(records, args.out, config)
    figures = plots.render_all(args.out)
    print(f"wrote {len(records)} records to {paths['runs']}")
    for p in figures:
        print(f"rendered {p}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = _load_config(args)
    rng = np.random.default_rng(config.seeds[0])
    users = harness._random_users(config, rng)
    scenario = harness.build_scenario(config, users)
    pop = demand.zipf_popularity(config.num_contents, config.zipf_exponent)
    env = CacheEnv(scenario, pop, config.qoe())
    placement, score = baselines.optimal_exhaustive(env, cap=config.oracle_cap)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "oracle.csv")
    with open(path, "w", newline="") as fh:
        fh.write("bs,slot,content,sum_mos\n")
        for m in range(placement.shape[0]):
            for s in range(placement.shape[1]):
                fh.write(f"{m},{s},{placement.entries[m, s] + 1},{score!r}\n")
    print(f"optimal sum MOS = {score:.6f} over {env.eval_count} evaluated placements")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    config = _load_config(args)
    seed = config.seeds[0]
    rng = np.random.default_rng(seed)
    if args.gps_csv:
        traj = demand.load_gps_csv(args.gps_csv)[0]
    else:
        side = config.region_side_m
        bounds = (0.0, 0.0, side, side)
        traj = demand.synthetic_trajectory(
            (side / 2, side / 2), config.history_steps * 4,
            config.mobility_sigma_m, bounds, rng)

    window = config.mobility_window
    positions = traj.positions()
    split = int(0.8 * len(positions))
    stats = demand.minmax_stats(positions[:split])
    train_ds = demand.windowize(positions[:split], window, 1, stats=stats)
    test_ds = demand.windowize(positions[split - window:], window, 1, stats=stats)

    net = predictor.init([2 * window, 16, 16, 2], seed)
    report = predictor.train(net, train_ds, predictor.TrainConfig(
        learning_rate=config.predictor_lr, epochs=config.predictor_epochs,
        rng_seed=seed))
    test_rmse = predictor.evaluate(net, test_ds)

    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "training_curve.csv")
    with open(curve_path, "w", newline="") as fh:
        fh.write("epoch,rmse\n")
        for epoch, e in enumerate(report.epoch_rmse):
            fh.write(f"{epoch},{e!r}\n")
    _render_training_curve(curve_path, os.path.join(args.out, "training_curve.png"))
    predictor.save_snapshot(net, os.path.join(args.out, "mobility_net.txt"))
    print(f"final training RMSE {report.epoch_rmse[-1]:.6f}, test RMSE {test_rmse:.6f}")
    print(f"wrote {curve_path}")
    return EXIT_OK


def _render_training_curve(csv_path, out_path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs, errs = [], []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            epochs.append(int(row["epoch"]))
            errs.append(float(row["rmse"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, errs)
    ax.set_xlabel("epoch")
    ax.set_ylabel("RMSE")
    ax.set_title("Predictor training curve")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def cmd_la_bench(args) -> int:
    """Pursuit-automaton benchmark in a stationary Bernoulli environment."""
    reward_probs = [float(v) for v in args.reward_probs.split(",")]
    best = int(np.argmax(reward_probs))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "la_bench.csv")
    wins = 0
    with open(path, "w", newline="") as fh:
        fh.write("run,final_p_best,converged\n")
        for run in range(args.runs):
            rng = np.random.default_rng(args.seed + run)
            la = automata.new(len(reward_probs), args.kappa)
            for _ in range(args.steps):
                a = automata.select(la, rng)
                r = 0 if rng.random() < reward_probs[a] else 1
                automata.update(la, a, r)
            p_best = float(la.probs[best])
            hit = p_best > 0.95
            wins += hit
            fh.write(f"{run},{p_best!r},{int(hit)}\n")
    print(f"{wins}/{args.runs} runs converged to the best action (p > 0.95)")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopcache",
        description="Cooperative content-placement simulator and optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key-value config file")
        p.add_argument("--seed", type=int, help="override the config's seed list")
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="full predict-then-place pipeline")
    common(p_run)
    p_run.add_argument("--methods", help="comma list, e.g. laql,random")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid sweep over one axis")
    common(p_sweep)
    p_sweep.add_argument("--methods")
    p_sweep.add_argument("--axis", required=True,
                         choices=sorted(harness.SWEEP_AXES))
    p_sweep.add_argument("--values", required=True, help="comma list of values")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="exhaustive optimal placement")
    common(p_oracle)
    p_oracle.set_defaults(fn=cmd_oracle)

    p_pred = sub.add_parser("predict", help="train the mobility predictor")
    common(p_pred)
    p_pred.add_argument("--gps-csv", help="timestamp,latitude,longitude CSV")
    p_pred.set_defaults(fn=cmd_predict)

    p_la = sub.add_parser("la-bench", help="pursuit automaton convergence benchmark")
    p_la.add_argument("--out", default="out")
    p_la.add_argument("--seed", type=int, default=0)
    p_la.add_argument("--runs", type=int, default=100)
    p_la.add_argument("--steps", type=int, default=10000)
    p_la.add_argument("--kappa", type=int, default=10)
    p_la.add_argument("--reward-probs", default="0.8,0.2")
    p_la.set_defaults(fn=cmd_la_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
