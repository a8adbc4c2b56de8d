"""Turns a pilot study into a data requirement.

The observed gap between the two configurations is halved and used as the
target margin of the generalization bound, which is then solved for the number
of training samples. The larger of the two probes' requirements wins.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from probesizer.bounds import (
    BoundAdapter,
    check_delta,
    control_task_margin,
    finite_class_margin,
    function_class,
    log_term,
    prequential_mdl_margin,
    resolve_metric_range,
)
from probesizer.config import (
    DEFAULT_BITS_PER_PARAM,
    DEFAULT_DELTA,
    DEFAULT_ETA,
    DEFAULT_GAP_DIVISOR,
    DEFAULT_PREQUENTIAL_C,
    DEFAULT_T1_FRACTION,
    MESSAGE_COLLAPSE_WARNING,
    MESSAGE_COLLAPSED,
    MESSAGE_EPSILON_RANGE,
    MESSAGE_ETA_RANGE,
    MESSAGE_N_RANGE,
)
from probesizer.core import SplitSpec, mean_gap
from probesizer.exceptions import CollapsedComparisonError, DomainError, MetricRangeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Recommendation:
    gap: float
    epsilon: float
    n_train: int
    n_total: int
    eta: float
    delta: float
    metric_range: float
    class_spec_used: object
    collapse_warning: bool = False
    n_train_per_config: tuple = ()
    adapter: BoundAdapter = BoundAdapter.PLAIN
    gap_divisor: float = DEFAULT_GAP_DIVISOR

    @property
    def n_test(self):
        return self.n_total - self.n_train

    def to_dict(self):
        report = {
            "gap": self.gap,
            "epsilon": self.epsilon,
            "n_train": self.n_train,
            "n_total": self.n_total,
            "eta": self.eta,
            "delta": self.delta,
            "metric_range": self.metric_range,
            "gap_divisor": self.gap_divisor,
            "adapter": self.adapter.value,
            "class_spec_used": self.class_spec_used.to_dict(),
            "n_train_per_config": list(self.n_train_per_config),
            "collapse_warning": self.collapse_warning,
        }
        if self.collapse_warning:
            report["note"] = MESSAGE_COLLAPSE_WARNING
        return report


def _margin_function(adapter, delta, metric_range, class_spec, prequential_c, t1_fraction):
    adapter = BoundAdapter(adapter)
    if adapter is BoundAdapter.CONTROL_TASK:
        return lambda n: control_task_margin(
            n, delta, delta, metric_range, class_spec
        ).margin
    if adapter is BoundAdapter.PREQUENTIAL:
        return lambda n: prequential_mdl_margin(
            n, delta, metric_range, class_spec, prequential_c, t1_fraction
        )
    return lambda n: finite_class_margin(n, delta, metric_range, class_spec)


def required_train_size(
    epsilon,
    delta=DEFAULT_DELTA,
    metric_range=None,
    class_spec=None,
    adapter=BoundAdapter.PLAIN,
    prequential_c=DEFAULT_PREQUENTIAL_C,
    t1_fraction=DEFAULT_T1_FRACTION,
):
    """Smallest n whose margin is at most epsilon"""
    if class_spec is None:
        raise DomainError("a function class spec is required to size a probe")
    check_delta(delta)
    adapter = BoundAdapter(adapter)
    metric_range = resolve_metric_range(metric_range, adapter)
    if not epsilon > 0:
        raise DomainError(f"{MESSAGE_EPSILON_RANGE}, got {epsilon}")
    if epsilon > metric_range:
        raise MetricRangeError(
            f"comparison gap exceeds metric range (epsilon={epsilon}, B={metric_range})"
        )

    scale = log_term(delta, class_spec) * (metric_range / epsilon) ** 2
    if adapter is BoundAdapter.CONTROL_TASK:
        scale *= 4
    elif adapter is BoundAdapter.PREQUENTIAL:
        scale *= (prequential_c / t1_fraction) ** 2
        # t1 = round(t1_fraction * n) has to reach 1
        scale = max(scale, 0.5 / t1_fraction)
    n = max(1, math.ceil(scale))

    # the closed form can be off by one either way through float rounding
    margin = _margin_function(
        adapter, delta, metric_range, class_spec, prequential_c, t1_fraction
    )
    while _margin_or_inf(margin, n) > epsilon:
        n += 1
    while n > 1 and _margin_or_inf(margin, n - 1) <= epsilon:
        n -= 1
    return n


def _margin_or_inf(margin, n):
    try:
        return margin(n)
    except DomainError:
        return math.inf


def total_size(n_train, eta=DEFAULT_ETA):
    """(1 + 2/eta) * n_train, rounded up"""
    if isinstance(n_train, bool) or int(n_train) != n_train or n_train < 1:
        raise DomainError(f"{MESSAGE_N_RANGE}, got {n_train}")
    if not eta > 0:
        raise DomainError(f"{MESSAGE_ETA_RANGE}, got {eta}")
    # exact rational arithmetic, a float 1 + 2/eta would push ceil over whole numbers
    ratio = Fraction(eta).limit_denominator(10 ** 9)
    return int(n_train) + math.ceil(Fraction(2 * int(n_train)) / ratio)


def recommend_for_gap(
    gap,
    problem,
    delta=DEFAULT_DELTA,
    eta=DEFAULT_ETA,
    collapse_report=None,
    metric_range=None,
    bits_per_param=DEFAULT_BITS_PER_PARAM,
    gap_divisor=DEFAULT_GAP_DIVISOR,
    adapter=BoundAdapter.PLAIN,
    prequential_c=DEFAULT_PREQUENTIAL_C,
    t1_fraction=DEFAULT_T1_FRACTION,
):
    if gap == 0:
        raise CollapsedComparisonError(
            f"{MESSAGE_COLLAPSED}: the pilot gap is 0, run collapse detection instead of sizing"
        )
    if gap < 0:
        raise DomainError(f"the pilot gap should be non-negative, got {gap}")
    if not gap_divisor > 0:
        raise DomainError("gap_divisor should be positive")
    split = SplitSpec(eta)
    adapter = BoundAdapter(adapter)
    metric_range = resolve_metric_range(metric_range, adapter)
    epsilon = gap / gap_divisor

    sized = []
    for config in (problem.config_a, problem.config_b):
        class_spec = function_class(config.classifier, bits_per_param)
        n = required_train_size(
            epsilon,
            delta,
            metric_range,
            class_spec,
            adapter=adapter,
            prequential_c=prequential_c,
            t1_fraction=t1_fraction,
        )
        sized.append((n, class_spec))
    # ties resolve on the parameter count so the result does not depend on the order
    n_train, class_spec_used = max(sized, key=lambda item: (item[0], item[1].param_count))

    collapse_warning = bool(getattr(collapse_report, "collapsed", False))
    if collapse_warning:
        logger.warning(MESSAGE_COLLAPSE_WARNING)

    recommendation = Recommendation(
        gap=gap,
        epsilon=epsilon,
        n_train=n_train,
        n_total=total_size(n_train, split.eta),
        eta=split.eta,
        delta=delta,
        metric_range=metric_range,
        class_spec_used=class_spec_used,
        collapse_warning=collapse_warning,
        n_train_per_config=tuple(sorted(n for n, _ in sized)),
        adapter=adapter,
        gap_divisor=gap_divisor,
    )
    logger.info(
        "gap %.4f -> epsilon %.4f -> n_train %d, n_total %d",
        gap,
        epsilon,
        recommendation.n_train,
        recommendation.n_total,
    )
    return recommendation


def recommend(
    pilot,
    problem,
    delta=DEFAULT_DELTA,
    eta=DEFAULT_ETA,
    collapse_report=None,
    per_seed=True,
    **kwargs,
):
    """Sizes from pilot pairs; B comes from the pairs unless `metric_range` is passed"""
    pilot = list(pilot)
    gap = mean_gap(pilot, per_seed=per_seed)
    if kwargs.get("metric_range") is None:
        kwargs["metric_range"] = pilot_metric_range(pilot, kwargs.get("adapter", BoundAdapter.PLAIN))
    return recommend_for_gap(gap, problem, delta, eta, collapse_report, **kwargs)


def pilot_metric_range(pilot, adapter=BoundAdapter.PLAIN):
    kinds = {pair.metric_kind for pair in pilot}
    if len(kinds) > 1:
        raise DomainError(
            f"pilot pairs mix metric kinds: {', '.join(sorted(kind.value for kind in kinds))}"
        )
    # an accuracy pilot says nothing about the range of a codelength
    if BoundAdapter(adapter).unbounded and all(pair.metric_kind.bounded for pair in pilot):
        return None
    return max(pair.metric_range for pair in pilot)


def recommendation_table(rows, problem, delta=DEFAULT_DELTA, eta=DEFAULT_ETA, **kwargs):
    """Rows of (n_test, gap) -> rows of (n_test, gap, n_train, n_total)"""
    table = []
    for n_test, gap in rows:
        recommendation = recommend_for_gap(gap, problem, delta, eta, **kwargs)
        table.append(
            {
                "n_test": n_test,
                "gap": gap,
                "n_train": recommendation.n_train,
                "n_total": recommendation.n_total,
            }
        )
    return table
