"""
Learning-to-Rank Generalization Workbench
App module - command-line harness: verify, gap-vs-m, rate-vs-n, bounds,
train and parse, emitting CSV on stdout or --out

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or input error.
"""

import argparse
import logging
import sys

import pandas as pd

from src.app.config import apply_config, read_config
from src.app.console import setup_logging
from src.app.experiments import Criteria, ExperimentSettings, Trainer, fit, run_gap_vs_m, run_rate_vs_n
from src.core.bounds import BoundInputs, bound_report
from src.core.errors import (
    ConfigError,
    EmptyDatasetError,
    LetorFormatError,
    WorkbenchError,
)
from src.core.losses import LossKind, make_loss
from src.core.ranking import ClassSpec, NormKind, input_radius, mean_ndcg_at_k
from src.data.letor import read_letor, serialize_letor
from src.data.synthetic import LabelMode, SynthConfig, generate
from src.lab.suites import VerificationSuite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def int_list(text):
    """'5,25,125' as given, or 'a:b' as the doubling sequence a, 2a, ... up to b"""
    try:
        if ":" in text:
            start, stop = (int(part) for part in text.split(":", 1))
            if start < 1 or stop < start:
                raise ValueError
            values = []
            while start <= stop:
                values.append(start)
                start *= 2
            return values
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like 5,25,125 or a range like 2:64, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"list entries must be positive integers, got {text!r}")
    return values


def write_csv(rows, out=None):
    frame = pd.DataFrame(rows)
    frame.to_csv(out if out else sys.stdout, index=False, na_rep="NA", float_format="%.10g")


# =============================================================================
# App Module: Parser
# =============================================================================

def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override its values")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="count", default=0)
    return common


def _loss_options(parser):
    parser.add_argument("--loss", choices=[k.value for k in LossKind], default=LossKind.LISTNET.value)
    parser.add_argument("--sigma", type=float, default=None, help="smoothing temperature (sdcg only)")
    parser.add_argument("--ymax", type=int, default=4, help="largest relevance grade")


def _experiment_options(parser):
    parser.add_argument("--d", type=int, default=10)
    parser.add_argument("--W", type=float, default=1.0, help="l2 weight radius")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--label-mode", choices=[k.value for k in LabelMode], default="noisy")
    parser.add_argument("--flip-prob", type=float, default=0.1)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--delta", type=float, default=0.05)
    parser.add_argument("--workers", type=int, default=1)


def build_parser():
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="ltr-workbench",
        description="Generalization bounds for learning to rank: checks, bounds and experiments",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    verify = commands.add_parser("verify", parents=[common], help="run the constant and inequality checks")
    _loss_options(verify)
    verify.add_argument("--trials", type=int, default=10000)
    verify.add_argument("--sweep-m", type=int_list, default=[2, 4, 8, 16])
    verify.add_argument("--score-scale", type=float, default=50.0)
    subparsers["verify"] = verify

    gap = commands.add_parser("gap-vs-m", parents=[common], help="generalization gap across list lengths")
    _loss_options(gap)
    _experiment_options(gap)
    gap.add_argument("--trainer", choices=["ogd", "rerm", "erm"], default="rerm")
    gap.add_argument("--m", type=int_list, default=[5, 25, 125])
    gap.add_argument("--n", type=int, default=200)
    gap.add_argument("--min-gap-ratio", type=float, default=None, help="fail (exit 1) below this mean gap ratio")
    gap.add_argument("--max-gap-ratio", type=float, default=None, help="fail (exit 1) above this mean gap ratio")
    gap.add_argument("--max-gap-ratio-ci", type=float, default=None,
                     help="fail (exit 1) when the upper CI bound of the gap ratio exceeds this")
    subparsers["gap-vs-m"] = gap

    rate = commands.add_parser("rate-vs-n", parents=[common], help="excess risk across sample sizes")
    _loss_options(rate)
    _experiment_options(rate)
    rate.add_argument("--trainer", choices=[t.value for t in Trainer], default="rerm")
    rate.add_argument("--n", type=int_list, default=[100, 200, 400, 800, 1600])
    rate.add_argument("--m", type=int, default=10)
    rate.add_argument("--mode", choices=["realizable", "noisy"], default=None,
                      help="shorthand for --label-mode")
    rate.add_argument("--min-slope", type=float, default=None, help="fail (exit 1) below this log-log slope")
    rate.add_argument("--max-slope", type=float, default=None, help="fail (exit 1) above this log-log slope")
    subparsers["rate-vs-n"] = rate

    bounds = commands.add_parser("bounds", parents=[common], help="evaluate every bound formula")
    bounds.add_argument("--loss", choices=[k.value for k in LossKind], default=None,
                        help="take G, G-l2, H and B from this loss")
    bounds.add_argument("--sigma", type=float, default=None)
    bounds.add_argument("--ymax", type=int, default=4)
    bounds.add_argument("--G", type=float, default=None, help="l-inf Lipschitz constant")
    bounds.add_argument("--G-l2", type=float, default=None, help="l2 Lipschitz constant")
    bounds.add_argument("--H", type=float, default=None, help="l-inf smoothness constant")
    bounds.add_argument("--B", type=float, default=None, help="uniform loss bound")
    bounds.add_argument("--W", type=float, default=1.0)
    bounds.add_argument("--R", type=float, default=1.0)
    bounds.add_argument("--norm", choices=[k.value for k in NormKind], default="L2")
    bounds.add_argument("--m", type=int_list, default=[10])
    bounds.add_argument("--n", type=int, default=100)
    bounds.add_argument("--d", type=int, default=10)
    bounds.add_argument("--delta", type=float, default=0.05)
    bounds.add_argument("--L-star", type=float, default=None)
    subparsers["bounds"] = bounds

    train = commands.add_parser("train", parents=[common], help="fit one model")
    _loss_options(train)
    train.add_argument("--input", help="LETOR file (default: synthetic data)")
    train.add_argument("--trainer", choices=["ogd", "rerm", "erm"], default="rerm")
    train.add_argument("--m", type=int, default=10)
    train.add_argument("--n", type=int, default=100)
    train.add_argument("--d", type=int, default=10)
    train.add_argument("--W", type=float, default=1.0)
    train.add_argument("--epochs", type=int, default=50)
    train.add_argument("--lam", type=float, default=None)
    subparsers["train"] = train

    parse = commands.add_parser("parse", parents=[common], help="read a LETOR file and write it back")
    parse.add_argument("--input", help="LETOR file to read")
    subparsers["parse"] = parse

    return parser, subparsers


def parse_arguments(argv):
    """Parse flags, then re-parse with any --config file installed as defaults"""
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        apply_config(subparsers[args.command], read_config(args.config))
        args = parser.parse_args(argv)
    return args


# =============================================================================
# App Module: Commands
# =============================================================================

def _loss_from(args):
    sigma = args.sigma if args.loss == LossKind.SMOOTH_DCG1.value else None
    if sigma is None and args.sigma is not None:
        raise ConfigError(f"--sigma applies only to sdcg, not {args.loss}")
    return make_loss(args.loss, sigma=sigma, y_max=args.ymax)


def cmd_verify(args):
    suite = VerificationSuite(_loss_from(args), m_values=args.sweep_m, trials=args.trials,
                              seed=args.seed, score_scale=args.score_scale)
    results = suite.run()
    write_csv([r.to_row() for r in results], args.out)
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.error("check %s failed at m=%d: observed %.6g, bound %.6g", r.check, r.m, r.observed, r.bound)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _settings(args, label_mode=None):
    return ExperimentSettings(
        loss=_loss_from(args),
        trainer=args.trainer,
        d=args.d,
        weight_radius=args.W,
        label_mode=label_mode or args.label_mode,
        flip_prob=args.flip_prob,
        y_max=args.ymax,
        epochs=args.epochs,
        delta=args.delta,
        seed=args.seed,
        workers=args.workers,
    )


def _report_summary(summary):
    print(summary.to_text(), file=sys.stderr)
    failed = [name for name, ok in summary.checks.items() if not ok]
    for name in failed:
        logger.error("experiment check failed: %s", name)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_gap_vs_m(args):
    criteria = Criteria(minimum=args.min_gap_ratio, maximum=args.max_gap_ratio, maximum_ci=args.max_gap_ratio_ci)
    results, summary = run_gap_vs_m(_settings(args), args.m, args.n, args.trials, criteria)
    write_csv([r.to_row() for r in results], args.out)
    return _report_summary(summary)


def cmd_rate_vs_n(args):
    criteria = Criteria(minimum=args.min_slope, maximum=args.max_slope)
    results, summary = run_rate_vs_n(_settings(args, label_mode=args.mode), args.n, args.m, args.trials, criteria)
    write_csv([r.to_row() for r in results], args.out)
    return _report_summary(summary)


def cmd_bounds(args):
    spec = ClassSpec(args.norm, args.W, args.R)
    rows = []
    for m in args.m:
        constants = {"G": args.G, "G_l2": args.G_l2, "H": args.H, "B": args.B}
        if args.loss is not None:
            analytic = _loss_from(args).constants(spec, m)
            derived = {"G": analytic.lipschitz_inf, "G_l2": analytic.lipschitz_l2,
                       "H": analytic.smoothness_inf, "B": analytic.uniform_bound}
            constants = {key: derived[key] if value is None else value for key, value in constants.items()}
        for key in ("G", "G_l2", "B"):
            if constants[key] is None:
                raise ConfigError(f"missing required constant {key} (pass --{key.replace('_', '-')} or --loss)")
        inputs = BoundInputs(
            G_inf=constants["G"], G_l2=constants["G_l2"], H_inf=constants["H"], B=constants["B"],
            spec=spec, m=m, n=args.n, d=args.d, delta=args.delta, L_star=args.L_star,
        )
        row = {"m": m, "n": args.n, "d": args.d, "delta": args.delta, "norm": spec.norm_kind.value}
        row.update(constants)
        row.update(bound_report(inputs).to_row())
        rows.append({key: ("NA" if value is None else value) for key, value in row.items()})
    write_csv(rows, args.out)
    return EXIT_OK


def cmd_train(args):
    loss = _loss_from(args)
    if args.input:
        dataset = read_letor(args.input).dataset
        radius = input_radius(dataset, NormKind.L2)
    else:
        dataset = generate(SynthConfig(m=args.m, d=args.d, n=args.n, y_max=args.ymax, seed=args.seed))
        radius = 1.0
    settings = ExperimentSettings(loss=loss, trainer=args.trainer, d=dataset.d, weight_radius=args.W,
                                  input_radius=radius, epochs=args.epochs, seed=args.seed)
    model = fit(args.trainer, dataset, settings, lam=args.lam)
    write_csv([{
        "trainer": args.trainer,
        "loss": loss.name,
        "n": len(dataset),
        "d": dataset.d,
        "train_loss": model.train_loss,
        "ndcg_at_1": mean_ndcg_at_k(model.weights, dataset, k=1),
        "converged": model.converged,
        "heuristic": model.heuristic,
        "weights": " ".join(f"{w:.9g}" for w in model.weights.w),
    }], args.out)
    return EXIT_OK


def cmd_parse(args):
    if not args.input:
        raise ConfigError("parse needs --input")
    corpus = read_letor(args.input)
    text = serialize_letor(corpus.dataset, corpus.query_ids)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    logger.info("%d queries, d=%d", len(corpus.dataset), corpus.dataset.d)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "gap-vs-m": cmd_gap_vs_m,
    "rate-vs-n": cmd_rate_vs_n,
    "bounds": cmd_bounds,
    "train": cmd_train,
    "parse": cmd_parse,
}


def main(argv=None):
    try:
        args = parse_arguments(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, LetorFormatError, EmptyDatasetError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except WorkbenchError as exc:
        logger.error("%s", exc)
        return EXIT_CHECK_FAILED
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
