"""Simulated case studies on synthetic representations.

Each study trains probes on stratified subsets of growing size, several seeds
per subset, and reports what the statistical machinery makes of the results:
power of the paired test per subset, data recommendations from the observed
gaps, a collapse verdict, or how accuracies spread against the bound margin.
"""
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np
import pandas as pd
from probesizer.bounds import finite_class_margin, function_class
from probesizer.collapse import detect_collapse, subsample_trials
from probesizer.config import (
    CLOSED_LOOP_CAP,
    DEFAULT_ALPHA,
    DEFAULT_BITS_PER_PARAM,
    DEFAULT_COLLAPSED_BELOW,
    DEFAULT_DELTA,
    DEFAULT_ETA,
    DEFAULT_HIDDEN_UNITS,
    DEFAULT_NOT_COLLAPSED_AT,
    DEFAULT_NUM_SEEDS,
    DEFAULT_NUM_SIMS,
    DEFAULT_NUM_TRIALS,
    MAX_EPOCHS,
    NOISE_GRID,
    POWER_THRESHOLD,
    SUBSET_GRID,
    SYNTHETIC_NOTE,
)
from probesizer.core import (
    ClassifierSpec,
    ComparisonProblem,
    PairedPredictions,
    ProbingConfiguration,
    SplitSpec,
)
from probesizer.datasets import (
    SyntheticDatasetSpec,
    add_gaussian_noise,
    corrupt_dataset,
    generate_dataset,
    stratified_subsample,
)
from probesizer.exceptions import CollapsedComparisonError, DomainError
from probesizer.sizer import recommend
from probesizer.stats import PowerCurve, estimate_power, minimum_adequate_size, suboptimality_gap
from probesizer.trainers import TrainerConfig, train_probe
from probesizer.utils import ensure_dir, parallel_map, predictions_frame, write_csv, write_json

logger = logging.getLogger(__name__)

TASK_ID = "synthetic"


class CaseStudyKind(Enum):
    GAUSSIAN_NOISE = "gaussian-noise"
    CORRUPTED_ENCODER = "corrupted-encoder"
    ENCODER_COMPARISON = "encoder-comparison"
    CLASSIFIER_COMPARISON = "classifier-comparison"
    BOUND_CHECK = "bound-check"
    CLOSED_LOOP = "closed-loop"


@dataclass(frozen=True)
class CaseStudyParams:
    num_classes: int = 2
    dim: int = 16
    class_separation: float = 3.0
    noise_floor: float = 1.0
    subset_grid: tuple = SUBSET_GRID
    noise_grid: tuple = NOISE_GRID
    num_seeds: int = DEFAULT_NUM_SEEDS
    eta: float = DEFAULT_ETA
    delta: float = DEFAULT_DELTA
    alpha: float = DEFAULT_ALPHA
    num_sims: int = DEFAULT_NUM_SIMS
    bits_per_param: int = DEFAULT_BITS_PER_PARAM
    hidden_units: int = DEFAULT_HIDDEN_UNITS
    activation: str = "sigmoid"
    identical: bool = False
    learning_rates: tuple = (1e-2,)
    batch_sizes: tuple = (64,)
    max_epochs: int = MAX_EPOCHS
    corruption_scale: float = 0.6
    corruption_sigma2: float = 0.5
    encoder_b_dim: int = 8
    encoder_b_separation: float = 2.0
    pilot_per_class: int = 128
    closed_loop_separation_b: float = 1.93
    closed_loop_cap: int = CLOSED_LOOP_CAP
    num_trials: int = DEFAULT_NUM_TRIALS
    collapsed_below: float = DEFAULT_COLLAPSED_BELOW
    not_collapsed_at: float = DEFAULT_NOT_COLLAPSED_AT

    def __post_init__(self):
        object.__setattr__(self, "subset_grid", tuple(sorted(set(self.subset_grid))))
        object.__setattr__(self, "noise_grid", tuple(self.noise_grid))
        object.__setattr__(self, "learning_rates", tuple(self.learning_rates))
        object.__setattr__(self, "batch_sizes", tuple(self.batch_sizes))
        if not self.subset_grid:
            raise DomainError("subset_grid should name at least one per-class train size")
        split = SplitSpec(self.eta)
        for per_class_train in self.subset_grid + (self.pilot_per_class,):
            split.split_sizes(per_class_train)
        if any(sigma2 < 0 for sigma2 in self.noise_grid):
            raise DomainError("noise_grid variances should be non-negative")
        if self.num_seeds < 1:
            raise DomainError("num_seeds should be at least 1")
        if self.num_sims < 1:
            raise DomainError("num_sims should be at least 1")

    @classmethod
    def quick(cls, **overrides):
        """Small grids that finish in seconds"""
        values = dict(
            subset_grid=(2 ** 5, 2 ** 7, 2 ** 9),
            noise_grid=(0.1, 1.0, 3.0),
            num_seeds=3,
            num_sims=200,
            max_epochs=20,
            pilot_per_class=64,
            closed_loop_cap=2 ** 12,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_config(cls, config, quick=False, **overrides):
        """Takes the shared statistical settings from an ExperimentConfig.

        With `quick`, seed and simulation counts the config left at their defaults
        come from the quick grid; counts set by a file or a flag are kept.
        """
        values = dict(
            eta=config.eta,
            delta=config.delta,
            alpha=config.alpha,
            num_sims=config.num_sims,
            bits_per_param=config.bits_per_param,
            num_seeds=config.num_seeds,
            num_trials=config.num_trials,
            collapsed_below=config.collapsed_below,
            not_collapsed_at=config.not_collapsed_at,
        )
        values.update(overrides)
        if quick:
            defaults = cls.quick()
            for name in ("num_seeds", "num_sims"):
                if name not in config.explicit and name not in overrides:
                    values[name] = getattr(defaults, name)
            return replace(defaults, **values)
        return cls(**values)

    def logreg(self, dim=None):
        return ClassifierSpec.logreg(dim or self.dim, self.num_classes)

    def mlp(self, dim=None):
        return ClassifierSpec.mlp(
            dim or self.dim, self.hidden_units, self.num_classes, self.activation
        )

    def trainer_config(self, model):
        return TrainerConfig.reduced(model, self.learning_rates, self.batch_sizes, self.max_epochs)

    def pool_spec(self, largest_per_class, rng_seed, dim=None, separation=None):
        train, val, test = SplitSpec(self.eta).split_sizes(largest_per_class)
        return SyntheticDatasetSpec(
            num_classes=self.num_classes,
            dim=dim or self.dim,
            samples_per_class=train + val + test,
            class_separation=self.class_separation if separation is None else separation,
            noise_floor=self.noise_floor,
            rng_seed=rng_seed,
            eta=self.eta,
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SeedRuns:
    """One probe trained on one subset once per seed"""

    per_class_train: int
    subset: object = field(repr=False)
    probes: tuple = field(repr=False)

    @property
    def n_train(self):
        return int((self.subset.splits == "train").sum())

    @property
    def n_test(self):
        return int((self.subset.splits == "test").sum())

    @property
    def accuracies(self):
        return [probe.test_accuracy for probe in self.probes]

    @property
    def num_degenerate(self):
        return sum(probe.degenerate for probe in self.probes)


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    label: str
    runs_a: tuple
    runs_b: tuple
    predictions: tuple
    curve: PowerCurve
    recommendations: tuple
    collapse: object

    def summary(self):
        return {
            "label": self.label,
            "min_adequate_test_size": minimum_adequate_size(self.curve),
            "collapse": self.collapse.to_dict(),
            "degenerate_runs": sum(runs.num_degenerate for runs in self.runs_a + self.runs_b),
        }


@dataclass(frozen=True, eq=False)
class CaseStudyReport:
    kind: CaseStudyKind
    params: CaseStudyParams
    rng_seed: int
    summary: dict
    tables: dict = field(repr=False)
    curves: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "rng_seed": self.rng_seed,
            "params": self.params.to_dict(),
            "note": SYNTHETIC_NOTE,
            "summary": self.summary,
            "power_curves": {label: curve.to_dict() for label, curve in self.curves.items()},
        }

    def write(self, out_dir, extra=None):
        """report.json plus one CSV per table; returns the written paths"""
        ensure_dir(out_dir)
        report = self.to_dict()
        report.update(extra or {})
        paths = [write_json(report, os.path.join(out_dir, "report.json"))]
        for name, frame in sorted(self.tables.items()):
            paths.append(write_csv(frame, os.path.join(out_dir, f"{name}.csv")))
        return paths


def margin_coverage(cells, margins):
    """Share of per-seed accuracies within mean +- margin of their subset"""
    inside = total = 0
    for accuracies, margin in zip(cells, margins):
        accuracies = np.asarray(accuracies, dtype=float)
        if accuracies.size == 0:
            continue
        spread = np.abs(accuracies - accuracies.mean())
        inside += int(np.sum(spread <= margin))
        total += accuracies.size
    if total == 0:
        raise DomainError("margin coverage needs at least one accuracy")
    return inside / total


def train_seeds(ds, model, per_class_train, params, rng_seed):
    subset = stratified_subsample(ds, per_class_train, params.eta, rng_seed)
    cfg = params.trainer_config(model)

    def train(seed):
        return train_probe(subset, cfg, rng_seed, stream=(per_class_train, seed))

    probes = parallel_map(train, range(params.num_seeds))
    logger.info(
        "%s on %d train rows: mean test accuracy %.4f",
        model.describe(),
        len(subset.split("train")[1]),
        float(np.mean([probe.test_accuracy for probe in probes])),
    )
    return SeedRuns(per_class_train, subset, tuple(probes))


def pair_runs(runs_a, runs_b):
    ids_a = runs_a.subset.split_row_ids("test")
    ids_b = runs_b.subset.split_row_ids("test")
    if not np.array_equal(ids_a, ids_b):
        raise DomainError("paired runs should be evaluated on the same test items")
    return PairedPredictions(
        tuple(int(item) for item in ids_a),
        tuple(range(len(runs_a.probes))),
        [probe.test_correct for probe in runs_a.probes],
        [probe.test_correct for probe in runs_b.probes],
    )


def _problem(encoder_a, model_a, encoder_b, model_b):
    return ComparisonProblem(
        ProbingConfiguration(TASK_ID, encoder_a, model_a),
        ProbingConfiguration(TASK_ID, encoder_b, model_b),
    )


def _compare(label, all_runs_a, all_runs_b, problem, params, rng_seed):
    predictions = tuple(pair_runs(a, b) for a, b in zip(all_runs_a, all_runs_b))

    # power of each subset's full test set, which is what a reader of that result gets
    points = [
        (pred.num_items, estimate_power(pred, pred.num_items, params.num_sims, params.alpha, rng_seed))
        for pred in predictions
    ]
    curve = PowerCurve(tuple(points))

    trials = subsample_trials(
        predictions[-1],
        predictions[0].num_items,
        params.num_trials,
        params.alpha,
        rng_seed,
    )
    collapse = detect_collapse(trials, params.alpha, params.collapsed_below, params.not_collapsed_at)

    recommendations = []
    for pred in predictions:
        row = {"label": label, "n_test": pred.num_items}
        try:
            rec = recommend(
                pred.accuracies(),
                problem,
                params.delta,
                params.eta,
                collapse_report=collapse,
                bits_per_param=params.bits_per_param,
            )
            row.update(gap=rec.gap, n_train=rec.n_train, n_total=rec.n_total)
        except CollapsedComparisonError:
            row.update(gap=0.0, n_train=None, n_total=None)
        recommendations.append(row)

    return ComparisonResult(
        label, tuple(all_runs_a), tuple(all_runs_b), predictions, curve, tuple(recommendations), collapse
    )


def _comparison_tables(results):
    accuracy_rows, power_rows, recommendation_rows = [], [], []
    tables = {}
    for result in results:
        for runs_a, runs_b in zip(result.runs_a, result.runs_b):
            _, subopt_a = suboptimality_gap(runs_a.accuracies)
            _, subopt_b = suboptimality_gap(runs_b.accuracies)
            for seed, (acc_a, acc_b) in enumerate(zip(runs_a.accuracies, runs_b.accuracies)):
                accuracy_rows.append(
                    {
                        "label": result.label,
                        "per_class_train": runs_a.per_class_train,
                        "n_train": runs_a.n_train,
                        "n_test": runs_a.n_test,
                        "seed": seed,
                        "acc_a": acc_a,
                        "acc_b": acc_b,
                        "subopt_a": subopt_a[seed],
                        "subopt_b": subopt_b[seed],
                    }
                )
        frame = result.curve.to_frame()
        frame.insert(0, "label", result.label)
        power_rows.append(frame)
        recommendation_rows.extend(result.recommendations)
        # the largest subset's pairs, ready for `probesizer power --predictions`
        tables[f"predictions-{result.label}"] = predictions_frame(result.predictions[-1])
    tables.update(
        accuracies=pd.DataFrame(accuracy_rows),
        power=pd.concat(power_rows, ignore_index=True),
        recommendations=pd.DataFrame(
            recommendation_rows, columns=["label", "n_test", "gap", "n_train", "n_total"]
        ),
    )
    return tables


def _comparison_report(kind, params, rng_seed, results, extra_summary=None):
    summary = {"comparisons": [result.summary() for result in results]}
    summary.update(extra_summary or {})
    return CaseStudyReport(
        kind,
        params,
        rng_seed,
        summary,
        _comparison_tables(results),
        {result.label: result.curve for result in results},
    )


def _base_pool(params, rng_seed):
    return generate_dataset(params.pool_spec(params.subset_grid[-1], rng_seed))


def gaussian_noise_study(params, rng_seed):
    """Original representations against copies with added noise of each variance"""
    base = _base_pool(params, rng_seed)
    model = params.logreg()
    base_runs = [train_seeds(base, model, t, params, rng_seed) for t in params.subset_grid]

    results = []
    for sigma2 in params.noise_grid:
        noisy = add_gaussian_noise(base, sigma2, rng_seed)
        noisy_runs = [train_seeds(noisy, model, t, params, rng_seed) for t in params.subset_grid]
        problem = _problem("original", model, f"noise-{sigma2:g}", model)
        results.append(
            _compare(f"sigma2={sigma2:g}", base_runs, noisy_runs, problem, params, rng_seed)
        )

    adequate = {result.label: minimum_adequate_size(result.curve) for result in results}
    return _comparison_report(
        CaseStudyKind.GAUSSIAN_NOISE, params, rng_seed, results, {"min_adequate_test_size": adequate}
    )


def corrupted_encoder_study(params, rng_seed):
    base = _base_pool(params, rng_seed)
    corrupted = corrupt_dataset(base, params.corruption_scale, params.corruption_sigma2, rng_seed)
    model = params.logreg()
    runs_a = [train_seeds(base, model, t, params, rng_seed) for t in params.subset_grid]
    runs_b = [train_seeds(corrupted, model, t, params, rng_seed) for t in params.subset_grid]
    problem = _problem("original", model, "corrupted", model)
    result = _compare("corrupted", runs_a, runs_b, problem, params, rng_seed)
    return _comparison_report(
        CaseStudyKind.CORRUPTED_ENCODER,
        params,
        rng_seed,
        [result],
        {
            "corruption": {
                "separation_scale": params.corruption_scale,
                "sigma2": params.corruption_sigma2,
                "note": "stands in for a finetuned and degraded encoder",
            }
        },
    )


def encoder_comparison_study(params, rng_seed):
    """Two encoders of different width and quality, one probe architecture"""
    largest = params.subset_grid[-1]
    pool_a = generate_dataset(params.pool_spec(largest, rng_seed))
    pool_b = generate_dataset(
        params.pool_spec(
            largest, rng_seed + 1, dim=params.encoder_b_dim, separation=params.encoder_b_separation
        )
    )
    model_a = params.logreg()
    model_b = params.logreg(params.encoder_b_dim)
    runs_a = [train_seeds(pool_a, model_a, t, params, rng_seed) for t in params.subset_grid]
    runs_b = [train_seeds(pool_b, model_b, t, params, rng_seed) for t in params.subset_grid]
    problem = _problem("encoder-a", model_a, "encoder-b", model_b)
    result = _compare("encoders", runs_a, runs_b, problem, params, rng_seed)
    return _comparison_report(CaseStudyKind.ENCODER_COMPARISON, params, rng_seed, [result])


def classifier_comparison_study(params, rng_seed):
    """LogReg against MLP on one encoder; `identical` pits a probe against itself"""
    base = _base_pool(params, rng_seed)
    model_a = params.logreg()
    model_b = model_a if params.identical else params.mlp()
    runs_a = [train_seeds(base, model_a, t, params, rng_seed) for t in params.subset_grid]
    runs_b = (
        runs_a
        if params.identical
        else [train_seeds(base, model_b, t, params, rng_seed) for t in params.subset_grid]
    )
    problem = _problem("base", model_a, "base", model_b)
    result = _compare("classifiers", runs_a, runs_b, problem, params, rng_seed)
    return _comparison_report(
        CaseStudyKind.CLASSIFIER_COMPARISON,
        params,
        rng_seed,
        [result],
        {"identical": params.identical, "verdict": result.collapse.verdict.value},
    )


def bound_check_study(params, rng_seed):
    """Spread of per-seed accuracies against the generalization margin"""
    base = _base_pool(params, rng_seed)
    model = params.logreg()
    class_spec = function_class(model, params.bits_per_param)

    rows, cells, margins = [], [], []
    for per_class_train in params.subset_grid:
        runs = train_seeds(base, model, per_class_train, params, rng_seed)
        margin = finite_class_margin(runs.n_train, params.delta, 1.0, class_spec)
        accuracies = runs.accuracies
        # the best seed stands in for the empirical optimum
        best, _ = suboptimality_gap(accuracies)
        cells.append(accuracies)
        margins.append(margin)
        rows.append(
            {
                "per_class_train": per_class_train,
                "n_train": runs.n_train,
                "n_test": runs.n_test,
                "mean": float(np.mean(accuracies)),
                "stdev": float(np.std(accuracies, ddof=1)) if len(accuracies) > 1 else 0.0,
                "margin": margin,
                "min": float(np.min(accuracies)),
                "max": float(np.max(accuracies)),
                "best": best,
            }
        )
    coverage = margin_coverage(cells, margins)
    logger.info("margin coverage %.3f over %d cells", coverage, sum(len(cell) for cell in cells))
    accuracy_rows = [
        {
            "per_class_train": row["per_class_train"],
            "seed": seed,
            "accuracy": accuracy,
            "suboptimality": row["best"] - accuracy,
        }
        for row, cell in zip(rows, cells)
        for seed, accuracy in enumerate(cell)
    ]
    return CaseStudyReport(
        CaseStudyKind.BOUND_CHECK,
        params,
        rng_seed,
        {"margin_coverage": coverage, "classifier": model.describe(), "cells": rows},
        {"margins": pd.DataFrame(rows), "accuracies": pd.DataFrame(accuracy_rows)},
    )


def _closed_loop_per_class(n_train, params):
    # per-class train size has to be a multiple of eta's numerator for whole val/test splits
    step = Fraction(params.eta).limit_denominator(1000).numerator
    per_class = n_train // params.num_classes // step * step
    return max(step, per_class)


def closed_loop_study(params, rng_seed):
    """Pilot, recommend, regenerate at the recommended size, then check the power"""
    model = params.logreg()
    problem = _problem("encoder-a", model, "encoder-b", model)

    def pools(per_class_train):
        return (
            generate_dataset(params.pool_spec(per_class_train, rng_seed)),
            generate_dataset(
                params.pool_spec(
                    per_class_train, rng_seed + 1, separation=params.closed_loop_separation_b
                )
            ),
        )

    pilot_a, pilot_b = pools(params.pilot_per_class)
    runs_a = train_seeds(pilot_a, model, params.pilot_per_class, params, rng_seed)
    runs_b = train_seeds(pilot_b, model, params.pilot_per_class, params, rng_seed)
    pilot = pair_runs(runs_a, runs_b)
    summary = {
        "pilot_per_class_train": params.pilot_per_class,
        "pilot_accuracies": [[pair.r1, pair.r2] for pair in pilot.accuracies()],
    }
    try:
        rec = recommend(
            pilot.accuracies(), problem, params.delta, params.eta, bits_per_param=params.bits_per_param
        )
    except CollapsedComparisonError as error:
        summary.update(collapsed=True, message=str(error))
        return CaseStudyReport(CaseStudyKind.CLOSED_LOOP, params, rng_seed, summary, {})

    capped = min(rec.n_train, params.closed_loop_cap)
    per_class = _closed_loop_per_class(capped, params)
    full_a, full_b = pools(per_class)
    final = pair_runs(
        train_seeds(full_a, model, per_class, params, rng_seed),
        train_seeds(full_b, model, per_class, params, rng_seed),
    )
    estimate = estimate_power(final, final.num_items, params.num_sims, params.alpha, rng_seed)
    summary.update(
        collapsed=False,
        recommendation=rec.to_dict(),
        n_train_used=per_class * params.num_classes,
        capped=rec.n_train > params.closed_loop_cap,
        n_test=final.num_items,
        final_accuracies=[[pair.r1, pair.r2] for pair in final.accuracies()],
        power=estimate.power,
        passed=estimate.power >= POWER_THRESHOLD,
    )
    logger.info(
        "closed loop: recommended %d, trained on %d, power %.3f at %d test items",
        rec.n_train,
        per_class * params.num_classes,
        estimate.power,
        final.num_items,
    )
    return CaseStudyReport(
        CaseStudyKind.CLOSED_LOOP,
        params,
        rng_seed,
        summary,
        {"power": pd.DataFrame([estimate.to_dict()])},
        {"closed-loop": PowerCurve(((final.num_items, estimate),))},
    )


STUDIES = {
    CaseStudyKind.GAUSSIAN_NOISE: gaussian_noise_study,
    CaseStudyKind.CORRUPTED_ENCODER: corrupted_encoder_study,
    CaseStudyKind.ENCODER_COMPARISON: encoder_comparison_study,
    CaseStudyKind.CLASSIFIER_COMPARISON: classifier_comparison_study,
    CaseStudyKind.BOUND_CHECK: bound_check_study,
    CaseStudyKind.CLOSED_LOOP: closed_loop_study,
}


def run_case_study(kind, params=None, rng_seed=0):
    kind = CaseStudyKind(kind)
    params = params or CaseStudyParams()
    if rng_seed is None or rng_seed < 0:
        raise DomainError(f"rng_seed should be a non-negative integer, got {rng_seed}")
    logger.info("running %s with seed %d", kind.value, rng_seed)
    return STUDIES[kind](params, rng_seed)
