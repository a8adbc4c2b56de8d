import numpy as np
import pytest
from probesizer.collapse import (
    CollapseVerdict,
    detect_collapse,
    fold_plan,
    fold_trials,
    subsample_trials,
)
from probesizer.core import PairedPredictions
from probesizer.exceptions import DomainError
from tests.helpers import predictions_from_cells


class TestFoldPlan:
    def test_six_folds(self):
        plan = fold_plan(6)
        rows = plan.to_rows()
        assert len(rows) == 6
        assert rows[0] == {"run": 0, "val": 0, "test": 1, "train": [2, 3, 4, 5]}
        assert rows[5] == {"run": 5, "val": 5, "test": 0, "train": [1, 2, 3, 4]}

    def test_every_fold_tested_once(self):
        plan = fold_plan(10)
        assert sorted(a.test_fold for a in plan.assignments) == list(range(10))
        assert sorted(a.val_fold for a in plan.assignments) == list(range(10))
        for assignment in plan.assignments:
            assert len(assignment.train_folds) == 8
            assert assignment.val_fold not in assignment.train_folds
            assert assignment.test_fold not in assignment.train_folds

    def test_table(self):
        lines = fold_plan(3).format_table().splitlines()
        assert lines[0].split() == ["run", "val", "test", "train"]
        assert lines[3].split() == ["2", "2", "0", "1"]

    @pytest.mark.parametrize("num_folds", [2, 0, 4.5, True])
    def test_invalid(self, num_folds):
        with pytest.raises(DomainError):
            fold_plan(num_folds)


class TestDetectCollapse:
    @pytest.mark.parametrize(
        "outcomes, verdict",
        [
            ([False] * 19 + [True], CollapseVerdict.COLLAPSED),
            ([True] * 4 + [False] * 16, CollapseVerdict.INCONCLUSIVE),
            ([True] * 15 + [False] * 5, CollapseVerdict.INCONCLUSIVE),
            ([True] * 16 + [False] * 4, CollapseVerdict.NOT_COLLAPSED),
        ],
    )
    def test_verdicts(self, outcomes, verdict):
        report = detect_collapse(outcomes)
        assert report.verdict is verdict
        assert report.num_trials == 20
        assert report.collapsed == (verdict is CollapseVerdict.COLLAPSED)

    def test_statistics_as_outcomes(self):
        report = detect_collapse([0.0, 1.2, 3.84, 12.0, 20.5])
        assert report.num_significant == 2
        assert report.fraction_significant == pytest.approx(0.4)

    def test_to_dict(self):
        report = detect_collapse([False, False, False])
        assert report.to_dict()["verdict"] == "collapsed"

    def test_too_few_trials(self):
        with pytest.raises(DomainError):
            detect_collapse([True])

    def test_thresholds(self):
        with pytest.raises(DomainError):
            detect_collapse([True, False], threshold=0.9, not_collapsed_at=0.8)


class TestSubsampleTrials:
    def test_identical_never_significant(self, identical_predictions):
        trials = subsample_trials(identical_predictions, 100, num_trials=20)
        assert trials == [False] * 20
        assert detect_collapse(trials).collapsed

    def test_perfect_disagreement(self, disagreeing_predictions):
        trials = subsample_trials(disagreeing_predictions, 50, num_trials=10)
        assert all(trials)

    def test_deterministic(self, gapped_predictions):
        assert subsample_trials(gapped_predictions, 64, rng_seed=5) == subsample_trials(
            gapped_predictions, 64, rng_seed=5
        )

    def test_identical_configurations_collapse(self):
        collapsed = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            correct = rng.random((3, 200)) < 0.8
            pred = PairedPredictions(tuple(range(200)), (0, 1, 2), correct, correct)
            report = detect_collapse(subsample_trials(pred, 100, rng_seed=seed))
            collapsed += report.collapsed
        assert collapsed >= 95

    def test_clear_gap_not_collapsed(self, gapped_predictions):
        report = detect_collapse(subsample_trials(gapped_predictions, 1000, num_trials=20))
        assert report.verdict is CollapseVerdict.NOT_COLLAPSED

    def test_trial_size(self, gapped_predictions):
        with pytest.raises(DomainError):
            subsample_trials(gapped_predictions, 5000)


class TestFoldTrials:
    def test_one_outcome_per_run_and_seed(self):
        runs = [
            predictions_from_cells(n01=20, n10=0, n11=10, num_seeds=2),
            predictions_from_cells(n01=5, n10=5, n11=10, num_seeds=2),
            predictions_from_cells(n01=0, n10=0, n11=30, num_seeds=2),
        ]
        assert fold_trials(runs) == [True, True, False, False, False, False]
