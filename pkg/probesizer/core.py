"""Domain vocabulary shared by every other module: probing configurations,
comparison problems, paired prediction records and split geometry.

All types are frozen after construction so they can be shared freely between
worker threads.
"""
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from probesizer.config import (
    DEFAULT_ETA,
    DEFAULT_METRIC_RANGE,
    MESSAGE_EMPTY_PILOT,
    MESSAGE_ETA_RANGE,
    MESSAGE_METRIC_RANGE,
    MESSAGE_UNBOUNDED_RANGE,
)
from probesizer.exceptions import (
    CrossTaskComparisonError,
    DomainError,
    MalformedInputError,
    UnknownSeedError,
)


class ClassifierKind(Enum):
    LOGREG = "logreg"
    MLP = "mlp"


class MetricKind(Enum):
    ACCURACY = "accuracy"
    CONTROL_TASK_GAP = "control_task_gap"
    VARIATIONAL_MDL = "variational_mdl"
    PREQUENTIAL_MDL = "prequential_mdl"

    @property
    def bounded(self):
        return self in (MetricKind.ACCURACY, MetricKind.CONTROL_TASK_GAP)


ACTIVATIONS = ("sigmoid", "tanh", "relu")


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind
    input_dim: int
    hidden_units: int = 0
    num_classes: int = 2
    activation: str = "sigmoid"

    def __post_init__(self):
        kind = ClassifierKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.input_dim < 0:
            raise DomainError(f"input_dim should be non-negative, got {self.input_dim}")
        if self.num_classes < 2:
            raise DomainError(f"num_classes should be at least 2, got {self.num_classes}")
        if kind is ClassifierKind.LOGREG and self.hidden_units != 0:
            raise DomainError("A logistic regressor has no hidden units (H must be 0)")
        if kind is ClassifierKind.MLP and self.hidden_units < 1:
            raise DomainError("An MLP needs at least one hidden unit (H >= 1)")
        if self.activation not in ACTIVATIONS:
            raise DomainError(
                f"Unknown activation {self.activation}, expected one of {ACTIVATIONS}"
            )

    @classmethod
    def logreg(cls, input_dim, num_classes=2):
        return cls(ClassifierKind.LOGREG, input_dim, 0, num_classes)

    @classmethod
    def mlp(cls, input_dim, hidden_units, num_classes=2, activation="sigmoid"):
        return cls(ClassifierKind.MLP, input_dim, hidden_units, num_classes, activation)

    def describe(self):
        if self.kind is ClassifierKind.LOGREG:
            return f"logreg(D={self.input_dim}, K={self.num_classes})"
        return f"mlp(D={self.input_dim}, H={self.hidden_units}, K={self.num_classes}, {self.activation})"


def parameter_count(spec):
    """Number of parameters the bound charges a probe for.

    Follows the convention LogReg = D+1 and MLP = (D+1)H + H + 1 whatever the
    number of classes, which is the arithmetic the recommendation tables use.
    """
    d = spec.input_dim
    if spec.kind is ClassifierKind.LOGREG:
        return d + 1
    h = spec.hidden_units
    return (d + 1) * h + h + 1


@dataclass(frozen=True)
class ProbingConfiguration:
    task_id: str
    encoder_id: str
    classifier: ClassifierSpec

    def __post_init__(self):
        if not self.task_id:
            raise DomainError("task_id should be a non-empty string")
        if parameter_count(self.classifier) < 1:
            raise DomainError("classifier should have at least one parameter")


@dataclass(frozen=True)
class ComparisonProblem:
    config_a: ProbingConfiguration
    config_b: ProbingConfiguration

    def __post_init__(self):
        if self.config_a.task_id != self.config_b.task_id:
            raise CrossTaskComparisonError(
                f"Cannot compare task {self.config_a.task_id} against task {self.config_b.task_id}: "
                "McNemar's test requires paired predictions on one task"
            )

    def swapped(self):
        return ComparisonProblem(self.config_b, self.config_a)


@dataclass(frozen=True)
class SplitSpec:
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(MESSAGE_ETA_RANGE)

    @property
    def total_multiplier(self):
        return 1 + 2 / self.eta

    def split_sizes(self, per_class_train):
        held_out = per_class_train / self.eta
        rounded = int(round(held_out))
        if rounded < 1 or abs(held_out - rounded) > 1e-9:
            raise DomainError(
                f"per-class train size {per_class_train} is not a whole multiple of eta={self.eta}"
            )
        return per_class_train, rounded, rounded


@dataclass(frozen=True)
class PerformancePair:
    r1: float
    r2: float
    metric_kind: MetricKind = MetricKind.ACCURACY
    metric_range: float = None

    def __post_init__(self):
        object.__setattr__(self, "metric_kind", MetricKind(self.metric_kind))
        if self.metric_range is None:
            if not self.metric_kind.bounded:
                raise DomainError(MESSAGE_UNBOUNDED_RANGE)
            object.__setattr__(self, "metric_range", DEFAULT_METRIC_RANGE)
        if not self.metric_range > 0:
            raise DomainError(MESSAGE_METRIC_RANGE)
        if self.metric_kind.bounded:
            for value in (self.r1, self.r2):
                if not 0 <= value <= self.metric_range:
                    raise DomainError(
                        f"performance {value} lies outside the metric range [0, {self.metric_range}]"
                    )

    @property
    def gap(self):
        return abs(self.r1 - self.r2)


def mean_gap(pilot, per_seed=True):
    """Mean of per-seed |r1 - r2|; `per_seed=False` gives the gap of the means"""
    pilot = list(pilot)
    if not pilot:
        raise DomainError(MESSAGE_EMPTY_PILOT)
    if not per_seed:
        return gap_of_means(pilot)
    return float(np.mean([pair.gap for pair in pilot]))


def gap_of_means(pilot):
    pilot = list(pilot)
    if not pilot:
        raise DomainError(MESSAGE_EMPTY_PILOT)
    r1 = np.mean([pair.r1 for pair in pilot])
    r2 = np.mean([pair.r2 for pair in pilot])
    return float(abs(r1 - r2))


@dataclass(frozen=True, eq=False)
class PairedPredictions:
    item_ids: tuple
    seeds: tuple
    correct_a: np.ndarray = field(repr=False)
    correct_b: np.ndarray = field(repr=False)

    def __post_init__(self):
        item_ids = tuple(self.item_ids)
        seeds = tuple(self.seeds)
        correct_a = np.array(self.correct_a, dtype=bool)
        correct_b = np.array(self.correct_b, dtype=bool)
        if not item_ids or not seeds:
            raise DomainError("paired predictions need at least one seed and one item")
        if len(set(item_ids)) != len(item_ids):
            raise DomainError("item_ids should be unique")
        if len(set(seeds)) != len(seeds):
            raise DomainError("seeds should be unique")
        expected = (len(seeds), len(item_ids))
        if correct_a.shape != expected or correct_b.shape != expected:
            raise DomainError(
                f"correctness matrices should both have shape {expected}, "
                f"got {correct_a.shape} and {correct_b.shape}"
            )
        correct_a.setflags(write=False)
        correct_b.setflags(write=False)
        object.__setattr__(self, "item_ids", item_ids)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "correct_a", correct_a)
        object.__setattr__(self, "correct_b", correct_b)

    @classmethod
    def from_records(cls, rows, first_row_number=1):
        """Builds the matrices from (item_id, seed, correct_a, correct_b) rows.

        Row numbers in errors count from `first_row_number` over the given rows.
        """
        cells = {}
        items_per_seed = {}
        for row_number, (item_id, seed, a, b) in enumerate(rows, start=first_row_number):
            if (item_id, seed) in cells:
                raise MalformedInputError(
                    f"duplicate (item_id, seed) pair ({item_id}, {seed})",
                    row_number=row_number,
                )
            cells[(item_id, seed)] = (bool(a), bool(b))
            items_per_seed.setdefault(seed, []).append(item_id)
        if not cells:
            raise MalformedInputError("no prediction rows found")

        seeds = list(items_per_seed)
        item_ids = items_per_seed[seeds[0]]
        reference = Counter(item_ids)
        for seed in seeds[1:]:
            if Counter(items_per_seed[seed]) != reference:
                raise MalformedInputError(
                    f"seed {seed} does not cover the same item set as seed {seeds[0]}"
                )
        correct_a = [[cells[(item, seed)][0] for item in item_ids] for seed in seeds]
        correct_b = [[cells[(item, seed)][1] for item in item_ids] for seed in seeds]
        return cls(tuple(item_ids), tuple(seeds), correct_a, correct_b)

    @property
    def num_items(self):
        return len(self.item_ids)

    @property
    def num_seeds(self):
        return len(self.seeds)

    def seed_index(self, seed):
        try:
            return self.seeds.index(seed)
        except ValueError:
            raise UnknownSeedError(f"Seed {seed} not found, known seeds: {list(self.seeds)}")

    def accuracies(self):
        return [
            PerformancePair(float(a.mean()), float(b.mean()))
            for a, b in zip(self.correct_a, self.correct_b)
        ]

    def records(self):
        for s, seed in enumerate(self.seeds):
            for i, item_id in enumerate(self.item_ids):
                yield item_id, seed, int(self.correct_a[s, i]), int(self.correct_b[s, i])
