"""Command-line experiment runner.

Subcommands: ``synth`` (fixed-size trial ensemble), ``sweep`` (training-set
size sweep), ``vessel`` (3D volume classification), ``plotdata``
(regenerate figure panels from a results directory) and ``selftest``
(gradient and orthogonalization oracle suites).

Configuration precedence, lowest to highest: per-protocol defaults, a
``--config`` file, dedicated flags, then repeated ``--set key=value``
overrides.  The ``LSRTGLM_OUT`` environment variable overrides the output
directory when ``--out`` is absent.  Exit codes: 0 success, 1 configuration
error, 2 data error, 3 every trial of a solver diverged.
"""

import argparse
import os
import sys

from .experiments import (
    AllTrialsDivergedError,
    ConfigError,
    DataError,
    apply_overrides,
    default_config,
    emit_plot_data,
    load_config_file,
    run_sample_sweep,
    run_synthetic,
    run_vessel,
)
from .selftest import run_selftest

OUT_ENV_VAR = "LSRTGLM_OUT"


def _add_common(sp):
    sp.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    sp.add_argument("--out", metavar="DIR", help="output directory")
    sp.add_argument("--seed", type=int, help="base seed of the trial ensemble")
    sp.add_argument("--trials", type=int, metavar="N", help="number of independent trials")
    sp.add_argument(
        "--algo", choices=("lsrtr", "lsrtr-m", "both"), help="which solver(s) to run"
    )
    sp.add_argument("--timing", action="store_true", help="record wall-clock columns")
    sp.add_argument("--workers", type=int, metavar="N", help="parallel trial workers")
    sp.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override any configuration field (repeatable)",
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="lsrtglm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="fixed-size synthetic comparison")
    sp.add_argument("--family", choices=("linear", "logistic", "poisson"), default="linear")
    _add_common(sp)

    sp = sub.add_parser("sweep", help="training-set size sweep")
    sp.add_argument("--family", choices=("linear", "logistic", "poisson"), default="linear")
    sp.add_argument("--n-values", metavar="N1,N2,...", help="training sizes to sweep")
    _add_common(sp)

    sp = sub.add_parser("vessel", help="3D vessel volume classification")
    sp.add_argument("--data", metavar="PATH", help="path to the volume archive")
    sp.add_argument(
        "--unbalanced", action="store_true",
        help="use the full (unbalanced) split instead of the balanced subsample",
    )
    _add_common(sp)

    sp = sub.add_parser("plotdata", help="regenerate plot panels from a results directory")
    sp.add_argument("--out", metavar="DIR", required=True, help="results directory to scan")

    sub.add_parser("selftest", help="run the gradient and orthogonalization oracle suites")
    return parser


def _resolve_config(args, kind):
    family = getattr(args, "family", "logistic")
    balanced = not getattr(args, "unbalanced", False)
    if args.config:
        cfg = load_config_file(args.config)
        if cfg.kind != kind:
            raise ConfigError(
                f"config file is for kind {cfg.kind!r} but the subcommand expects {kind!r}"
            )
    else:
        cfg = default_config(kind, family=family, balanced=balanced)

    direct = []
    if getattr(args, "family", None) and not args.config:
        pass  # already folded into the defaults
    elif getattr(args, "family", None):
        direct.append(f"family={args.family}")
    if getattr(args, "n_values", None):
        direct.append(f"n_values={args.n_values}")
    if getattr(args, "data", None):
        direct.append(f"dataset={args.data}")
    if args.seed is not None:
        direct.append(f"seed={args.seed}")
    if args.trials is not None:
        direct.append(f"n_trials={args.trials}")
    if args.workers is not None:
        direct.append(f"workers={args.workers}")
    if args.timing:
        direct.append("timing=true")
    if args.algo:
        algos = "lsrtr,lsrtr-m" if args.algo == "both" else args.algo
        direct.append(f"algorithms={algos}")
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if out:
        direct.append(f"out_dir={out}")
    cfg = apply_overrides(cfg, direct + list(args.overrides))
    if cfg.kind != kind:
        raise ConfigError("the experiment kind cannot be overridden on a subcommand")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            cfg = _resolve_config(args, "synthetic")
            _, paths = run_synthetic(cfg)
        elif args.command == "sweep":
            cfg = _resolve_config(args, "sample_sweep")
            _, paths = run_sample_sweep(cfg)
        elif args.command == "vessel":
            cfg = _resolve_config(args, "vessel")
            rows, paths = run_vessel(cfg)
            for row in rows:
                print(
                    f"{row[0]}: accuracy {row[5]:.4f}  auc {row[4]:.4f}  "
                    f"runtime {row[6]:.2f}s  checkpoint iter {row[7]}"
                )
        elif args.command == "plotdata":
            paths = emit_plot_data(args.out)
            if not paths:
                raise DataError(f"no aggregate tables found in {args.out}")
        else:  # selftest
            return 0 if run_selftest() else 1
        for path in paths:
            print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except AllTrialsDivergedError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
