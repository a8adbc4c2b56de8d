"""Collapsed comparison detection.

A comparison collapses when its two configurations cannot be told apart: no
amount of extra data will produce a meaningful recommendation for it. Evidence
comes from repeated pilot-sized subsamples, or from a rotation over
cross-validation folds.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from probesizer.config import (
    DEFAULT_ALPHA,
    DEFAULT_COLLAPSED_BELOW,
    DEFAULT_NOT_COLLAPSED_AT,
    DEFAULT_NUM_FOLDS,
    DEFAULT_NUM_TRIALS,
    DEFAULT_RNG_SEED,
)
from probesizer.exceptions import DomainError
from probesizer.stats import (
    cell_counts,
    check_alpha,
    check_subsample,
    contingency,
    draw_significance,
    is_significant,
    mcnemar_chi2,
)
from probesizer.utils import derive_rng, parallel_map

logger = logging.getLogger(__name__)

# keeps trial streams apart from the power simulation streams
TRIAL_STREAM = 1


class CollapseVerdict(Enum):
    COLLAPSED = "collapsed"
    NOT_COLLAPSED = "not_collapsed"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CollapseReport:
    num_trials: int
    num_significant: int
    verdict: CollapseVerdict
    threshold: float = DEFAULT_COLLAPSED_BELOW
    not_collapsed_at: float = DEFAULT_NOT_COLLAPSED_AT
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0 <= self.num_significant <= self.num_trials:
            raise DomainError("num_significant should lie in [0, num_trials]")

    @property
    def fraction_significant(self):
        return self.num_significant / self.num_trials

    @property
    def collapsed(self):
        return self.verdict is CollapseVerdict.COLLAPSED

    def to_dict(self):
        return {
            "num_trials": self.num_trials,
            "num_significant": self.num_significant,
            "fraction_significant": self.fraction_significant,
            "verdict": self.verdict.value,
            "threshold": self.threshold,
            "not_collapsed_at": self.not_collapsed_at,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class FoldAssignment:
    run_index: int
    val_fold: int
    test_fold: int
    train_folds: tuple


@dataclass(frozen=True)
class FoldPlan:
    num_folds: int
    assignments: tuple

    def to_rows(self):
        return [
            {
                "run": assignment.run_index,
                "val": assignment.val_fold,
                "test": assignment.test_fold,
                "train": list(assignment.train_folds),
            }
            for assignment in self.assignments
        ]

    def to_dict(self):
        return {"num_folds": self.num_folds, "runs": self.to_rows()}

    def format_table(self):
        lines = [f"{'run':>4}  {'val':>4}  {'test':>4}  train"]
        for row in self.to_rows():
            train = ",".join(str(fold) for fold in row["train"])
            lines.append(f"{row['run']:>4}  {row['val']:>4}  {row['test']:>4}  {train}")
        return "\n".join(lines)


def fold_plan(num_folds=DEFAULT_NUM_FOLDS):
    """Run i validates on fold i, tests on fold (i+1) mod F and trains on the rest"""
    if isinstance(num_folds, bool) or int(num_folds) != num_folds or num_folds < 3:
        raise DomainError(
            f"num_folds should be an integer of at least 3 so that every run keeps a train fold, got {num_folds}"
        )
    num_folds = int(num_folds)
    assignments = []
    for run in range(num_folds):
        val_fold = run
        test_fold = (run + 1) % num_folds
        train_folds = tuple(
            fold for fold in range(num_folds) if fold not in (val_fold, test_fold)
        )
        assignments.append(FoldAssignment(run, val_fold, test_fold, train_folds))
    return FoldPlan(num_folds, tuple(assignments))


def _as_significance(result, alpha):
    if isinstance(result, (bool, np.bool_)):
        return bool(result)
    return is_significant(float(result), alpha)


def detect_collapse(
    trial_results,
    alpha=DEFAULT_ALPHA,
    threshold=DEFAULT_COLLAPSED_BELOW,
    not_collapsed_at=DEFAULT_NOT_COLLAPSED_AT,
):
    """Verdict from trial outcomes, each a significance flag or a chi2 statistic"""
    check_alpha(alpha)
    if not 0 < threshold <= not_collapsed_at < 1:
        raise DomainError(
            "thresholds should satisfy 0 < threshold <= not_collapsed_at < 1, "
            f"got {threshold} and {not_collapsed_at}"
        )
    outcomes = [_as_significance(result, alpha) for result in trial_results]
    if len(outcomes) < 2:
        raise DomainError(f"collapse detection needs at least 2 trials, got {len(outcomes)}")
    num_significant = sum(outcomes)
    fraction = num_significant / len(outcomes)
    if fraction < threshold:
        verdict = CollapseVerdict.COLLAPSED
    elif fraction >= not_collapsed_at:
        verdict = CollapseVerdict.NOT_COLLAPSED
    else:
        verdict = CollapseVerdict.INCONCLUSIVE
    logger.info(
        "%d/%d trials significant -> %s", num_significant, len(outcomes), verdict.value
    )
    return CollapseReport(
        num_trials=len(outcomes),
        num_significant=num_significant,
        verdict=verdict,
        threshold=threshold,
        not_collapsed_at=not_collapsed_at,
        alpha=alpha,
    )


def subsample_trials(
    pred,
    trial_size,
    num_trials=DEFAULT_NUM_TRIALS,
    alpha=DEFAULT_ALPHA,
    rng_seed=DEFAULT_RNG_SEED,
    replace=False,
):
    """Repeated pilot studies: trial t subsamples the test pool of seed t mod |seeds|"""
    check_subsample(pred, trial_size)
    check_alpha(alpha)
    if num_trials < 1:
        raise DomainError(f"num_trials should be at least 1, got {num_trials}")
    trial_size = int(trial_size)
    cells = cell_counts(pred)

    def run_trial(trial):
        rng = derive_rng(rng_seed, TRIAL_STREAM, trial_size, trial)
        seed_index = trial % pred.num_seeds
        significant = draw_significance(cells[seed_index], trial_size, 1, alpha, rng, replace)
        return bool(significant[0])

    return parallel_map(run_trial, range(int(num_trials)))


def fold_trials(fold_predictions, alpha=DEFAULT_ALPHA):
    """One McNemar outcome per (fold run, seed) over each run's full test fold"""
    check_alpha(alpha)
    outcomes = []
    for pred in fold_predictions:
        for seed in pred.seeds:
            outcomes.append(is_significant(mcnemar_chi2(contingency(pred, seed)), alpha))
    return outcomes
