"""Finite function class generalization bound and its adapters.

With probability at least 1 - delta, the risk of the empirically optimal probe
differs from the globally optimal one by at most

    B * sqrt(2 * ln(2|F| / delta) / n)

where |F| = 2**bits * P for a probe with P parameters of `bits` bits each.
Everything is evaluated in log space, |F| itself is never formed.
"""
import math
from dataclasses import dataclass
from enum import Enum

from probesizer.config import (
    DEFAULT_BITS_PER_PARAM,
    DEFAULT_DELTA,
    DEFAULT_METRIC_RANGE,
    DEFAULT_PREQUENTIAL_C,
    DEFAULT_T1_FRACTION,
    MESSAGE_DELTA_RANGE,
    MESSAGE_METRIC_RANGE,
    MESSAGE_N_RANGE,
    MESSAGE_T1_FRACTION_RANGE,
    MESSAGE_T1_TOO_SMALL,
    MESSAGE_UNBOUNDED_RANGE,
)
from probesizer.core import parameter_count
from probesizer.exceptions import DomainError

LN2 = math.log(2)


class BoundAdapter(Enum):
    PLAIN = "plain"
    CONTROL_TASK = "control"
    VARIATIONAL_MDL = "variational"
    PREQUENTIAL = "prequential"

    @property
    def unbounded(self):
        """MDL adapters bound codelengths, which have no natural range"""
        return self in (BoundAdapter.VARIATIONAL_MDL, BoundAdapter.PREQUENTIAL)


@dataclass(frozen=True)
class FunctionClassSpec:
    param_count: int
    bits_per_param: int = DEFAULT_BITS_PER_PARAM

    def __post_init__(self):
        if self.param_count < 1:
            raise DomainError(f"param_count should be positive, got {self.param_count}")
        if self.bits_per_param < 1:
            raise DomainError(
                f"bits_per_param should be positive, got {self.bits_per_param}"
            )

    @property
    def log_cardinality(self):
        # ln|F| = ln(2**b * P)
        return math.fsum([self.bits_per_param * LN2, math.log(self.param_count)])

    def to_dict(self):
        return {
            "param_count": self.param_count,
            "bits_per_param": self.bits_per_param,
            "log_cardinality": self.log_cardinality,
        }


def function_class(spec, bits_per_param=DEFAULT_BITS_PER_PARAM):
    return FunctionClassSpec(parameter_count(spec), bits_per_param)


@dataclass(frozen=True)
class BoundQuery:
    n: int
    class_spec: FunctionClassSpec
    delta: float = DEFAULT_DELTA
    metric_range: float = None
    adapter: BoundAdapter = BoundAdapter.PLAIN
    prequential_c: float = DEFAULT_PREQUENTIAL_C
    t1_fraction: float = DEFAULT_T1_FRACTION

    def __post_init__(self):
        object.__setattr__(self, "adapter", BoundAdapter(self.adapter))
        check_n(self.n)
        check_delta(self.delta)
        object.__setattr__(
            self, "metric_range", resolve_metric_range(self.metric_range, self.adapter)
        )
        if self.adapter is BoundAdapter.PREQUENTIAL:
            check_t1_fraction(self.t1_fraction)
            if self.prequential_c <= 0:
                raise DomainError("the prequential constant C should be positive")


@dataclass(frozen=True)
class BoundResult:
    margin: float
    effective_delta: float
    adapter: BoundAdapter = BoundAdapter.PLAIN
    loose: bool = False

    def to_dict(self):
        return {
            "margin": self.margin,
            "effective_delta": self.effective_delta,
            "adapter": self.adapter.value,
            "loose": self.loose,
        }


def check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"{MESSAGE_N_RANGE}, got {n}")


def check_delta(delta):
    if not 0 < delta < 1:
        raise DomainError(f"{MESSAGE_DELTA_RANGE}, got {delta}")


def check_metric_range(metric_range):
    if metric_range is None or not metric_range > 0:
        raise DomainError(MESSAGE_METRIC_RANGE)


def resolve_metric_range(metric_range, adapter=BoundAdapter.PLAIN):
    """B = 1 when left unset, except under the MDL adapters where it has to be given"""
    if metric_range is None:
        if BoundAdapter(adapter).unbounded:
            raise DomainError(MESSAGE_UNBOUNDED_RANGE)
        return DEFAULT_METRIC_RANGE
    check_metric_range(metric_range)
    return metric_range


def check_t1_fraction(t1_fraction):
    if not 0 < t1_fraction < 1:
        raise DomainError(f"{MESSAGE_T1_FRACTION_RANGE}, got {t1_fraction}")


def log_term(delta, class_spec):
    """2 * ln(2|F| / delta)"""
    check_delta(delta)
    return 2 * math.fsum([LN2, class_spec.log_cardinality, -math.log(delta)])


def finite_class_margin(n, delta, metric_range, class_spec):
    check_n(n)
    check_metric_range(metric_range)
    return metric_range * math.sqrt(log_term(delta, class_spec) / n)


def control_task_margin(n, delta_o, delta_c, metric_range, class_spec):
    """Bound on a control-task difference: the two margins add up and the
    confidence composes as (1 - delta_o)(1 - delta_c)."""
    margin_o = finite_class_margin(n, delta_o, metric_range, class_spec)
    margin_c = finite_class_margin(n, delta_c, metric_range, class_spec)
    effective_delta = delta_o + delta_c - delta_o * delta_c
    return BoundResult(margin_o + margin_c, effective_delta, BoundAdapter.CONTROL_TASK)


def variational_mdl_margin(n, delta, metric_range, class_spec):
    return finite_class_margin(n, delta, metric_range, class_spec)


def prequential_t1(n, t1_fraction):
    check_t1_fraction(t1_fraction)
    t1 = int(round(t1_fraction * n))
    if t1 < 1:
        raise DomainError(f"{MESSAGE_T1_TOO_SMALL} (n={n}, t1_fraction={t1_fraction})")
    return t1


def prequential_mdl_margin(
    n,
    delta,
    metric_range,
    class_spec,
    prequential_c=DEFAULT_PREQUENTIAL_C,
    t1_fraction=DEFAULT_T1_FRACTION,
):
    """Plain margin inflated by C*n/t1.

    Much looser than the other adapters since every portion of the transmission
    pays for the bound separately.
    """
    check_n(n)
    t1 = prequential_t1(n, t1_fraction)
    if prequential_c <= 0:
        raise DomainError("the prequential constant C should be positive")
    inflation = prequential_c * n / t1
    return inflation * finite_class_margin(n, delta, metric_range, class_spec)


def evaluate(query):
    adapter = query.adapter
    args = (query.n, query.delta, query.metric_range, query.class_spec)
    if adapter is BoundAdapter.CONTROL_TASK:
        return control_task_margin(
            query.n, query.delta, query.delta, query.metric_range, query.class_spec
        )
    if adapter is BoundAdapter.VARIATIONAL_MDL:
        return BoundResult(variational_mdl_margin(*args), query.delta, adapter)
    if adapter is BoundAdapter.PREQUENTIAL:
        margin = prequential_mdl_margin(
            *args, prequential_c=query.prequential_c, t1_fraction=query.t1_fraction
        )
        return BoundResult(margin, query.delta, adapter, loose=True)
    return BoundResult(finite_class_margin(*args), query.delta, adapter)
