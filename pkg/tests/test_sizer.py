from types import SimpleNamespace

import pytest
from probesizer.bounds import (
    BoundAdapter,
    FunctionClassSpec,
    finite_class_margin,
    log_term,
    prequential_mdl_margin,
)
from probesizer.config import MESSAGE_COLLAPSE_WARNING
from probesizer.core import (
    ClassifierSpec,
    ComparisonProblem,
    MetricKind,
    PerformancePair,
    ProbingConfiguration,
)
from probesizer.exceptions import CollapsedComparisonError, DomainError, MetricRangeError
from probesizer.sizer import (
    recommend,
    recommend_for_gap,
    recommendation_table,
    required_train_size,
    total_size,
)

D768 = FunctionClassSpec(769)
D4096 = FunctionClassSpec(4097)


def logreg_problem(dim_a, dim_b=None):
    return ComparisonProblem(
        ProbingConfiguration("task", "a", ClassifierSpec.logreg(dim_a)),
        ProbingConfiguration("task", "b", ClassifierSpec.logreg(dim_b or dim_a)),
    )


class TestRequiredTrainSize:
    def test_d4096_example(self):
        assert 39000 <= required_train_size(0.05, class_spec=D4096) <= 41000

    @pytest.mark.parametrize("epsilon", [0.5, 0.1, 0.05, 0.0123, 0.001])
    def test_smallest_n(self, epsilon):
        n = required_train_size(epsilon, class_spec=D768)
        assert finite_class_margin(n, 1e-8, 1.0, D768) <= epsilon
        assert finite_class_margin(n - 1, 1e-8, 1.0, D768) > epsilon

    def test_halving_epsilon_quadruples_n(self):
        n = required_train_size(0.04, class_spec=D768)
        assert abs(required_train_size(0.02, class_spec=D768) - 4 * n) <= 4

    def test_control_task_quadruples_n(self):
        plain = required_train_size(0.05, class_spec=D768)
        control = required_train_size(0.05, class_spec=D768, adapter="control")
        assert abs(control - 4 * plain) <= 4

    def test_variational_matches_plain(self):
        variational = required_train_size(
            0.05, metric_range=1.0, class_spec=D768, adapter=BoundAdapter.VARIATIONAL_MDL
        )
        assert variational == required_train_size(0.05, class_spec=D768)

    def test_prequential(self):
        n = required_train_size(0.5, metric_range=1.0, class_spec=D768, adapter=BoundAdapter.PREQUENTIAL)
        assert prequential_mdl_margin(n, 1e-8, 1.0, D768, 1.0, 0.001) <= 0.5
        # (n / t1)^2 = 1e6 times the plain requirement
        assert n == pytest.approx(1e6 * log_term(1e-8, D768) / 0.25, rel=1e-4)

    def test_epsilon_above_range(self):
        with pytest.raises(MetricRangeError) as error:
            required_train_size(1.5, class_spec=D768)
        assert "comparison gap exceeds metric range" in str(error.value)

    @pytest.mark.parametrize("epsilon", [0, -0.1])
    def test_epsilon_positive(self, epsilon):
        with pytest.raises(DomainError):
            required_train_size(epsilon, class_spec=D768)

    def test_class_spec_required(self):
        with pytest.raises(DomainError):
            required_train_size(0.1)

    @pytest.mark.parametrize("adapter", [BoundAdapter.PREQUENTIAL, BoundAdapter.VARIATIONAL_MDL])
    def test_mdl_adapters_need_metric_range(self, adapter):
        with pytest.raises(DomainError):
            required_train_size(0.05, class_spec=D768, adapter=adapter)


class TestTotalSize:
    @pytest.mark.parametrize(
        "n_train, eta, expected",
        [(22263, 4, 33395), (100, 2, 200), (1000, 1000, 1002), (8, 4, 12), (10, 0.5, 50)],
    )
    def test_examples(self, n_train, eta, expected):
        assert total_size(n_train, eta) == expected

    def test_invalid(self):
        with pytest.raises(DomainError):
            total_size(0)
        with pytest.raises(DomainError):
            total_size(100, 0)


class TestRecommend:
    # (gap, printed n_train) for two 768-dim encoders
    @pytest.mark.parametrize(
        "gap, printed",
        [(0.1313, 22263), (0.1281, 23362), (0.0879, 49647), (0.1331, 21662), (0.1488, 17331)],
    )
    def test_d768_pilot_gaps(self, gap, printed):
        recommendation = recommend_for_gap(gap, logreg_problem(768))
        assert recommendation.n_train == pytest.approx(printed, rel=0.01)
        assert recommendation.epsilon == gap / 2

    # the 768-dim probe dominates a 300-dim one
    @pytest.mark.parametrize(
        "gap, printed",
        [(0.0344, 324563), (0.0492, 158315), (0.0355, 303516), (0.0091, 4600037), (0.0320, 373513)],
    )
    def test_mixed_dimension_gaps(self, gap, printed):
        recommendation = recommend_for_gap(gap, logreg_problem(768, 300))
        assert recommendation.n_train == pytest.approx(printed, rel=0.01)
        assert recommendation.class_spec_used == D768
        assert recommendation.n_train_per_config[1] == recommendation.n_train

    # gaps printed to three decimals, so the printed size lies within their rounding
    @pytest.mark.parametrize(
        "gap, printed",
        [
            (0.065, 95156),
            (0.128, 24375),
            (0.178, 12481),
            (0.196, 10285),
            (0.025, 635040),
            (0.019, 1128961),
            (0.041, 231499),
            (0.051, 151861),
            (0.063, 100153),
        ],
    )
    def test_rounded_gaps_d4096(self, gap, printed):
        low = required_train_size((gap + 0.0005) / 2, class_spec=D4096)
        high = required_train_size((gap - 0.0005) / 2, class_spec=D4096)
        assert low <= printed <= high

    def test_total_follows_eta(self):
        recommendation = recommend_for_gap(0.1313, logreg_problem(768), eta=4)
        assert recommendation.n_total == total_size(recommendation.n_train, 4)
        assert recommendation.n_test == recommendation.n_total - recommendation.n_train

    def test_swap_invariance(self):
        problem = logreg_problem(768, 300)
        assert recommend_for_gap(0.05, problem) == recommend_for_gap(0.05, problem.swapped())

    def test_zero_gap_is_collapsed(self):
        with pytest.raises(CollapsedComparisonError):
            recommend([PerformancePair(0.8, 0.8), PerformancePair(0.7, 0.7)], logreg_problem(768))

    def test_gap_above_range(self):
        with pytest.raises(MetricRangeError):
            recommend_for_gap(0.5, logreg_problem(768), metric_range=0.2)

    def test_per_seed_gap(self):
        pilot = [PerformancePair(0.75, 0.5), PerformancePair(0.25, 0.5)]
        per_seed = recommend(pilot, logreg_problem(768))
        assert per_seed.gap == 0.25
        with pytest.raises(CollapsedComparisonError):
            recommend(pilot, logreg_problem(768), per_seed=False)

    def test_control_adapter(self):
        plain = recommend_for_gap(0.1, logreg_problem(768))
        control = recommend_for_gap(0.1, logreg_problem(768), adapter="control")
        assert abs(control.n_train - 4 * plain.n_train) <= 4
        assert control.to_dict()["adapter"] == "control"

    def test_collapse_warning(self, caplog):
        report = SimpleNamespace(collapsed=True)
        recommendation = recommend_for_gap(0.1, logreg_problem(768), collapse_report=report)
        assert recommendation.collapse_warning
        assert recommendation.to_dict()["note"] == MESSAGE_COLLAPSE_WARNING
        assert MESSAGE_COLLAPSE_WARNING in caplog.text

    def test_no_warning_by_default(self):
        recommendation = recommend_for_gap(0.1, logreg_problem(768))
        assert not recommendation.collapse_warning
        assert "note" not in recommendation.to_dict()

    def test_codelength_pilot_range(self):
        pilot = [PerformancePair(0.9, 0.5, MetricKind.PREQUENTIAL_MDL, metric_range=1000.0)]
        recommendation = recommend(pilot, logreg_problem(768))
        assert recommendation.metric_range == 1000.0
        unit = recommend_for_gap(0.4, logreg_problem(768))
        # n grows with B squared
        assert recommendation.n_train == pytest.approx(1e6 * unit.n_train, rel=1e-3)

    def test_explicit_range_wins(self):
        pilot = [PerformancePair(0.9, 0.5, MetricKind.PREQUENTIAL_MDL, metric_range=1000.0)]
        assert recommend(pilot, logreg_problem(768), metric_range=500.0).metric_range == 500.0

    def test_accuracy_pilot_under_mdl_adapter(self):
        with pytest.raises(DomainError):
            recommend([PerformancePair(0.9, 0.5)], logreg_problem(768), adapter="prequential")
        recommendation = recommend(
            [PerformancePair(0.9, 0.5)], logreg_problem(768), adapter="variational", metric_range=1.0
        )
        assert recommendation.n_train == recommend_for_gap(0.4, logreg_problem(768)).n_train

    def test_mixed_metric_kinds(self):
        pilot = [
            PerformancePair(0.9, 0.5),
            PerformancePair(350.0, 470.5, MetricKind.VARIATIONAL_MDL, metric_range=1000.0),
        ]
        with pytest.raises(DomainError):
            recommend(pilot, logreg_problem(768))

    def test_gap_table_under_mdl_adapter(self):
        with pytest.raises(DomainError):
            recommendation_table([(100, 0.1)], logreg_problem(768), adapter="prequential")

    def test_gap_divisor(self):
        halved = recommend_for_gap(0.1, logreg_problem(768))
        thirds = recommend_for_gap(0.1, logreg_problem(768), gap_divisor=3)
        assert thirds.epsilon == pytest.approx(0.1 / 3)
        assert thirds.n_train > halved.n_train


class TestRecommendationTable:
    def test_rows(self):
        table = recommendation_table([(100, 0.1313), (200, 0.0879)], logreg_problem(768))
        assert [row["n_test"] for row in table] == [100, 200]
        assert table[0]["n_train"] == recommend_for_gap(0.1313, logreg_problem(768)).n_train
        assert table[1]["n_total"] == total_size(table[1]["n_train"])

    def test_zero_gap_row(self):
        with pytest.raises(CollapsedComparisonError):
            recommendation_table([(100, 0.0)], logreg_problem(768))
