import logging
import os
import sys

from probesizer.bounds import BoundAdapter, BoundQuery, evaluate, function_class
from probesizer.collapse import detect_collapse, fold_plan, fold_trials, subsample_trials
from probesizer.config import DEFAULT_HIDDEN_UNITS, ExperimentConfig
from probesizer.core import (
    ClassifierKind,
    ClassifierSpec,
    ComparisonProblem,
    MetricKind,
    PerformancePair,
    ProbingConfiguration,
)
from probesizer.exceptions import DomainError
from probesizer.lab import CaseStudyKind, CaseStudyParams, run_case_study
from probesizer.plots import write_figures
from probesizer.sizer import recommend, recommendation_table
from probesizer.stats import power_curve, seed_tests
from probesizer.utils import (
    dumps_json,
    ensure_dir,
    read_gaps_csv,
    read_predictions_csv,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

TASK_ID = "task"

# what the pilot performances measure under each bound adapter
ADAPTER_METRICS = {
    BoundAdapter.PLAIN: MetricKind.ACCURACY,
    BoundAdapter.CONTROL_TASK: MetricKind.CONTROL_TASK_GAP,
    BoundAdapter.VARIATIONAL_MDL: MetricKind.VARIATIONAL_MDL,
    BoundAdapter.PREQUENTIAL: MetricKind.PREQUENTIAL_MDL,
}


def classifier_spec(model, dim, hidden=DEFAULT_HIDDEN_UNITS, classes=2, activation="sigmoid"):
    if dim is None:
        raise DomainError(f"--dim is required to describe the {model} probe")
    if ClassifierKind(model) is ClassifierKind.LOGREG:
        return ClassifierSpec.logreg(dim, classes)
    return ClassifierSpec.mlp(dim, hidden, classes, activation)


class CLI:
    """One method per subcommand; each prints its report and returns an exit code"""

    def __init__(self, config=None, stdout=None):
        self.config = config or ExperimentConfig()
        self.stdout = stdout or sys.stdout

    def _emit(self, report):
        report = dict(report, config=self.config.to_dict())
        self.stdout.write(dumps_json(report))
        return report

    def _predictions(self, args):
        path = getattr(args, "predictions", None) or self.config.predictions_path
        if not path:
            raise DomainError("a predictions file is required (--predictions FILE)")
        return read_predictions_csv(path)

    def _problem(self, args):
        dim_a = args.dim_a
        dim_b = args.dim_b if args.dim_b is not None else dim_a
        spec_a = classifier_spec(args.model_a, dim_a, args.hidden, args.classes)
        spec_b = classifier_spec(args.model_b, dim_b, args.hidden, args.classes)
        return ComparisonProblem(
            ProbingConfiguration(TASK_ID, "a", spec_a),
            ProbingConfiguration(TASK_ID, "b", spec_b),
        )

    def _sizer_options(self, args):
        return dict(
            metric_range=self.config.metric_range,
            bits_per_param=self.config.bits_per_param,
            gap_divisor=self.config.gap_divisor,
            adapter=BoundAdapter(args.adapter),
            prequential_c=self.config.prequential_c,
            t1_fraction=self.config.t1_fraction,
        )

    def cmd_bound(self, args):
        spec = classifier_spec(args.model, args.dim, args.hidden, args.classes)
        class_spec = function_class(spec, self.config.bits_per_param)
        query = BoundQuery(
            n=args.n,
            class_spec=class_spec,
            delta=self.config.delta,
            metric_range=self.config.metric_range,
            adapter=args.adapter,
            prequential_c=self.config.prequential_c,
            t1_fraction=self.config.t1_fraction,
        )
        result = evaluate(query)
        self._emit(
            {
                "n": args.n,
                "classifier": spec.describe(),
                "class_spec": class_spec,
                "bound": result,
            }
        )
        return 0

    def cmd_recommend(self, args):
        problem = self._problem(args)
        options = self._sizer_options(args)
        delta, eta = self.config.delta, self.config.eta
        per_seed = not args.gap_of_means
        gaps_path = args.gaps or self.config.gaps_path
        metric_kind = ADAPTER_METRICS[options["adapter"]]
        report = {}

        if args.r1 is not None or args.r2 is not None:
            if args.r1 is None or args.r2 is None or len(args.r1) != len(args.r2):
                raise DomainError("--r1 and --r2 should list the same number of performances")
            pilot = [
                PerformancePair(r1, r2, metric_kind, self.config.metric_range)
                for r1, r2 in zip(args.r1, args.r2)
            ]
            report["recommendation"] = recommend(
                pilot, problem, delta, eta, per_seed=per_seed, **options
            )
        elif args.predictions or self.config.predictions_path:
            pred = self._predictions(args)
            # pilot-sized repeats of the test, half the pool each
            trials = subsample_trials(
                pred,
                max(1, pred.num_items // 2),
                self.config.num_trials,
                self.config.alpha,
                self.config.rng_seed,
            )
            collapse = detect_collapse(
                trials, self.config.alpha, self.config.collapsed_below, self.config.not_collapsed_at
            )
            report["collapse"] = collapse
            report["recommendation"] = recommend(
                pred.accuracies(),
                problem,
                delta,
                eta,
                collapse_report=collapse,
                per_seed=per_seed,
                **options,
            )
        elif gaps_path:
            kind, rows = read_gaps_csv(gaps_path, metric_kind, self.config.metric_range)
            if kind == "pairs":
                report["recommendation"] = recommend(
                    rows, problem, delta, eta, per_seed=per_seed, **options
                )
            else:
                report["table"] = recommendation_table(rows, problem, delta, eta, **options)
        else:
            raise DomainError("recommend needs --predictions, --gaps or --r1/--r2")

        emitted = self._emit(report)
        if args.out:
            write_json(emitted, args.out)
        return 0

    def cmd_power(self, args):
        pred = self._predictions(args)
        curve = power_curve(
            pred,
            sizes=args.sizes,
            num_sims_per_seed=self.config.num_sims,
            alpha=self.config.alpha,
            rng_seed=self.config.rng_seed,
            replace=True if args.bootstrap else None,
        )
        frame = curve.to_frame()
        if args.out:
            write_csv(frame, args.out)
        write_csv(frame, self.stdout)
        return 0

    def cmd_collapse(self, args):
        report = {}
        if args.num_folds is not None:
            plan = fold_plan(self.config.num_folds)
            if not (args.predictions or args.fold_predictions or self.config.predictions_path):
                self.stdout.write(plan.format_table() + "\n")
                return 0
            report["plan"] = plan

        alpha = self.config.alpha
        if args.fold_predictions:
            fold_predictions = [read_predictions_csv(path) for path in args.fold_predictions]
            trials = fold_trials(fold_predictions, alpha)
            report["tests"] = [
                dict(fold_run=run, **row)
                for run, pred in enumerate(fold_predictions)
                for row in seed_tests(pred, alpha)
            ]
        else:
            pred = self._predictions(args)
            report["tests"] = seed_tests(pred, alpha)
            trial_size = args.trial_size or max(1, pred.num_items // 2)
            trials = subsample_trials(
                pred,
                trial_size,
                self.config.num_trials,
                self.config.alpha,
                self.config.rng_seed,
            )
        report["collapse"] = detect_collapse(
            trials, alpha, self.config.collapsed_below, self.config.not_collapsed_at
        )
        emitted = self._emit(report)
        if args.out:
            write_json(emitted, args.out)
        return 0

    def cmd_simulate(self, args):
        kind = CaseStudyKind(args.kind)
        params = CaseStudyParams.from_config(
            self.config, quick=args.quick, identical=args.identical
        )
        out_dir = args.out or os.path.join(
            self.config.output_dir or "runs", f"{kind.value}-seed{self.config.rng_seed}"
        )
        # reports echo the counts that actually ran
        self.config = self.config.with_overrides(num_seeds=params.num_seeds, num_sims=params.num_sims)
        report = run_case_study(kind, params, self.config.rng_seed)
        ensure_dir(out_dir)
        paths = report.write(out_dir, extra={"config": self.config.to_dict()})
        if args.plot:
            paths.extend(write_figures(report, out_dir))
        logger.info("wrote %d files to %s", len(paths), out_dir)
        self._emit(
            {
                "kind": kind.value,
                "out_dir": out_dir,
                "files": sorted(os.path.basename(path) for path in paths),
                "summary": report.summary,
            }
        )
        return 0
