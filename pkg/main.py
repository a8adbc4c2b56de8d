import argparse
import logging
import sys

from probesizer.bounds import BoundAdapter
from probesizer.cli import CLI
from probesizer.config import DEFAULT_HIDDEN_UNITS, ExperimentConfig
from probesizer.exceptions import CollapsedComparisonError, ProbeSizerError
from probesizer.lab import CaseStudyKind

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_COLLAPSED = 3

# flag dest -> ExperimentConfig field
CONFIG_FLAGS = {
    "delta": "delta",
    "eta": "eta",
    "alpha": "alpha",
    "num_sims": "num_sims",
    "bits": "bits_per_param",
    "metric_range": "metric_range",
    "gap_divisor": "gap_divisor",
    "prequential_c": "prequential_c",
    "t1_fraction": "t1_fraction",
    "threshold": "collapsed_below",
    "not_collapsed_at": "not_collapsed_at",
    "num_trials": "num_trials",
    "num_folds": "num_folds",
    "num_seeds": "num_seeds",
    "seed": "rng_seed",
    "predictions": "predictions_path",
    "gaps": "gaps_path",
}

ADAPTERS = [adapter.value for adapter in BoundAdapter]
MODELS = ["logreg", "mlp"]


def common_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON file of ExperimentConfig settings, flags override it")
    parent.add_argument("--seed", type=int, help="base RNG seed, default 0")
    parent.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    parent.add_argument("--delta", type=float, help="confidence parameter of the bound, default 1e-8")
    parent.add_argument("--eta", type=float, help="train to dev/test ratio, default 4")
    parent.add_argument("--alpha", type=float, help="significance level, default 0.05")
    parent.add_argument("--num-sims", dest="num_sims", type=int, help="simulations per seed, default 1000")
    parent.add_argument("--bits", type=int, help="bits per parameter, default 32")
    parent.add_argument("--metric-range", dest="metric_range", type=float, help="metric range B, default 1 for accuracies, required by the MDL adapters")
    parent.add_argument("--gap-divisor", dest="gap_divisor", type=float, help="epsilon = gap / divisor, default 2")
    parent.add_argument("--prequential-c", dest="prequential_c", type=float)
    parent.add_argument("--t1-fraction", dest="t1_fraction", type=float)
    parent.add_argument("--threshold", type=float, help="collapsed when fewer trials than this are significant, default 0.2")
    parent.add_argument("--not-collapsed-at", dest="not_collapsed_at", type=float)
    parent.add_argument("--num-trials", dest="num_trials", type=int)
    parent.add_argument("--num-seeds", dest="num_seeds", type=int)
    return parent


def build_parser():
    parent = common_options()
    argp = argparse.ArgumentParser(
        prog="probesizer",
        description="Sizes probing datasets: generalization margins, data recommendations from a pilot study, "
        "McNemar power curves, collapse detection and simulated case studies",
    )
    commands = argp.add_subparsers(dest="command", required=True)

    bound = commands.add_parser("bound", parents=[parent], help="margin of the generalization bound")
    bound.add_argument("--n", type=int, required=True, help="number of training samples")
    bound.add_argument("--dim", type=int, required=True, help="representation dimension D")
    bound.add_argument("--model", choices=MODELS, default="logreg")
    bound.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN_UNITS)
    bound.add_argument("--classes", type=int, default=2)
    bound.add_argument("--adapter", choices=ADAPTERS, default="plain")

    rec = commands.add_parser("recommend", parents=[parent], help="data requirement from a pilot study")
    rec.add_argument("--predictions", help="paired predictions CSV (item_id,seed,correct_a,correct_b)")
    rec.add_argument("--gaps", help="CSV with r1,r2 columns or a gap column")
    rec.add_argument("--r1", type=float, nargs="+", help="pilot performances of configuration A")
    rec.add_argument("--r2", type=float, nargs="+", help="pilot performances of configuration B")
    rec.add_argument("--model-a", dest="model_a", choices=MODELS, default="logreg")
    rec.add_argument("--model-b", dest="model_b", choices=MODELS, default="logreg")
    rec.add_argument("--dim-a", dest="dim_a", type=int, required=True)
    rec.add_argument("--dim-b", dest="dim_b", type=int, help="defaults to --dim-a")
    rec.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN_UNITS)
    rec.add_argument("--classes", type=int, default=2)
    rec.add_argument("--adapter", choices=ADAPTERS, default="plain")
    rec.add_argument("--gap-of-means", dest="gap_of_means", action="store_true", help="|mean r1 - mean r2| instead of the mean per-seed gap")
    rec.add_argument("--out", help="also write the JSON report here")

    power = commands.add_parser("power", parents=[parent], help="McNemar power curve from paired predictions")
    power.add_argument("--predictions", help="paired predictions CSV")
    power.add_argument("--sizes", type=int, nargs="+", help="test sizes, default doubling grid up to the pool")
    power.add_argument("--bootstrap", action="store_true", help="draw with replacement at every size")
    power.add_argument("--out", help="also write the CSV here")

    collapse = commands.add_parser("collapse", parents=[parent], help="collapsed comparison detection")
    collapse.add_argument("--predictions", help="paired predictions CSV")
    collapse.add_argument("--fold-predictions", dest="fold_predictions", nargs="+", help="one predictions CSV per fold run")
    collapse.add_argument("--trial-size", dest="trial_size", type=int, help="default half the pool")
    collapse.add_argument("--folds", dest="num_folds", type=int, help="print the cross-validation fold plan")
    collapse.add_argument("--out", help="also write the JSON report here")

    simulate = commands.add_parser("simulate", parents=[parent], help="simulated case study on synthetic data")
    simulate.add_argument("kind", choices=[kind.value for kind in CaseStudyKind])
    simulate.add_argument("--out", help="output directory, default runs/<kind>-seed<seed>")
    simulate.add_argument("--plot", action="store_true", help="also write SVG figures")
    simulate.add_argument("--identical", action="store_true", help="classifier-comparison between two identical probes")
    simulate.add_argument("--quick", action="store_true", help="reduced grids")
    return argp


def configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def resolve_config(options):
    config = ExperimentConfig.from_file(options.config) if options.config else ExperimentConfig()
    overrides = {
        field: getattr(options, dest, None) for dest, field in CONFIG_FLAGS.items()
    }
    return config.with_overrides(**overrides)


def main(argv=None):
    options = build_parser().parse_args(argv)
    configure_logging(options.verbose)
    try:
        cli = CLI(resolve_config(options))
        return getattr(cli, f"cmd_{options.command}")(options)
    except CollapsedComparisonError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_COLLAPSED
    except ProbeSizerError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
