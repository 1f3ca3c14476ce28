"""Command line entry point for the experiment harness.

Examples:

    hypersent run cutoff --data synth:instances=60,k=2-6,noise=0.8 \
        --out runs/cutoff --seeds 0,1,2
    hypersent run train --data synth:instances=300,k=2-5 --out runs/train \
        --train-epochs 50
    hypersent run baselines --data synth:instances=40,k=2-6,noise=0.8 \
        --out runs/base --dump-hyperedges
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .cutoff import CutoffConfig
from .harness import DEFAULT_STRATEGIES, ExperimentSpec, run_experiment
from .training import TrainConfig

EXPERIMENTS = ("cutoff", "linkage", "baselines", "sensitivity", "timing", "train")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypersent")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--data", required=True,
                     help="dataset path or synth:<key=value,...> recipe")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seeds", type=_ints, default=(0,), help="comma-separated seeds")
    run.add_argument("--rho", type=float, default=0.3)
    run.add_argument("--lambda", dest="lam", type=float, default=1.0)
    run.add_argument("--epsilon", type=float, default=1e-8)
    run.add_argument("--linkage", default="ward",
                     choices=("single", "complete", "average", "ward"))
    run.add_argument("--metric", default="euclidean", choices=("euclidean", "cosine"))
    run.add_argument("--strategy", action="append", default=None,
                     help="cutoff strategy (repeatable): dynamic | fallback | "
                          "accel:RHO | accel-min:RHO")
    run.add_argument("--lambda-grid", type=_floats, default=None)
    run.add_argument("--rho-grid", type=_floats, default=None)
    run.add_argument("--timing-sizes", type=_ints, default=None)
    run.add_argument("--timing-dim", type=int, default=64)
    run.add_argument("--timing-instances", type=int, default=20)
    run.add_argument("--train-epochs", type=int, default=0)
    run.add_argument("--lr", type=float, default=1e-2)
    run.add_argument("--batch-size", type=int, default=16)
    run.add_argument("--beta", type=float, default=2e-5)
    run.add_argument("--dropout", type=float, default=0.2)
    run.add_argument("--heads", type=int, default=4)
    run.add_argument("--loss-reduction", choices=("mean", "sum"), default="mean")
    run.add_argument("--dump-hyperedges", action="store_true")
    return parser


def spec_from_args(args) -> ExperimentSpec:
    cutoff = CutoffConfig(rho=args.rho, lam=args.lam, epsilon=args.epsilon)
    train_cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, l2_beta=args.beta,
        epochs=max(args.train_epochs, 1), dropout_rate=args.dropout,
        heads=args.heads, loss_reduction=args.loss_reduction,
    )
    spec = ExperimentSpec(
        data=args.data, out_dir=args.out, seeds=args.seeds, cutoff=cutoff,
        strategies=tuple(args.strategy) if args.strategy else DEFAULT_STRATEGIES,
        linkage=args.linkage, metric=args.metric,
        train_epochs=args.train_epochs, train=train_cfg,
        dump_hyperedges=args.dump_hyperedges,
        timing_dim=args.timing_dim, timing_instances=args.timing_instances,
    )
    if args.lambda_grid:
        spec = replace(spec, lambda_grid=args.lambda_grid)
    if args.rho_grid:
        spec = replace(spec, rho_grid=args.rho_grid)
    if args.timing_sizes:
        spec = replace(spec, timing_sizes=args.timing_sizes)
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = spec_from_args(args)
    out = run_experiment(args.experiment, spec)
    print(f"wrote {args.experiment} artifacts to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
