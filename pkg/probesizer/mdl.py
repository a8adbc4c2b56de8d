"""Minimum description length scores for probes, in bits.

Prequential (online) coding sends the first t1 labels with a uniform code, then
each following portion with a probe trained on everything sent so far.
Variational coding is only aggregated here: data cost plus model cost.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from probesizer.bounds import check_t1_fraction
from probesizer.config import DEFAULT_T1_FRACTION
from probesizer.datasets import RepresentationDataset
from probesizer.exceptions import DomainError
from probesizer.trainers import train_probe
from probesizer.utils import derive_rng

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)

# keeps the transmission order apart from the training streams
ORDER_STREAM = 2
FIT_STREAM = 3


class MdlKind(Enum):
    VARIATIONAL = "variational"
    PREQUENTIAL = "prequential"


@dataclass(frozen=True)
class MdlScore:
    kind: MdlKind
    codelength: float
    data_cost: float = None
    model_cost: float = None
    portion_sizes: tuple = ()
    portion_losses: tuple = ()
    t1: int = None
    num_classes: int = None

    @property
    def uniform_codelength(self):
        if self.kind is not MdlKind.PREQUENTIAL:
            return None
        return sum(self.portion_sizes) * np.log2(self.num_classes)

    @property
    def clipped_codelength(self):
        """Prequential total with every portion capped at its uniform cost"""
        if self.kind is not MdlKind.PREQUENTIAL:
            return self.codelength
        uniform = np.log2(self.num_classes)
        return float(
            sum(
                min(loss, size * uniform)
                for size, loss in zip(self.portion_sizes, self.portion_losses)
            )
        )

    def to_dict(self):
        report = {"kind": self.kind.value, "codelength": self.codelength}
        if self.kind is MdlKind.VARIATIONAL:
            report.update(data_cost=self.data_cost, model_cost=self.model_cost)
        else:
            report.update(
                t1=self.t1,
                num_classes=self.num_classes,
                portion_sizes=list(self.portion_sizes),
                portion_losses=list(self.portion_losses),
                clipped_codelength=self.clipped_codelength,
                uniform_codelength=self.uniform_codelength,
            )
        return report


def variational_mdl(data_cost, model_cost):
    if data_cost < 0 or model_cost < 0:
        raise DomainError(
            f"data and model costs should be non-negative, got {data_cost} and {model_cost}"
        )
    return MdlScore(
        MdlKind.VARIATIONAL,
        float(data_cost) + float(model_cost),
        data_cost=float(data_cost),
        model_cost=float(model_cost),
    )


def portion_schedule(num_train, t1):
    """Portion ends t1, 2 t1, 4 t1, ... with the last one at num_train"""
    ends = [min(t1, num_train)]
    while ends[-1] < num_train:
        ends.append(min(2 * ends[-1], num_train))
    return ends


def _prefix_dataset(ds, order, end):
    X_train, y_train = ds.split("train")
    picked = order[:end]
    X_val, y_val = ds.split("val")
    X_test, y_test = ds.split("test")
    return RepresentationDataset(
        np.concatenate([X_train[picked], X_val, X_test]),
        np.concatenate([y_train[picked], y_val, y_test]),
        ["train"] * end + ["val"] * len(y_val) + ["test"] * len(y_test),
        ds.num_classes,
    )


def _fit_prefix(train_ds, cfg, rng_seed, stage):
    return train_probe(train_ds, cfg, rng_seed, stream=(FIT_STREAM, stage))


def prequential_mdl(ds, cfg, t1_fraction=DEFAULT_T1_FRACTION, rng_seed=0, fit=None):
    """Online codelength of the training labels given the representations.

    `fit(train_ds, cfg, rng_seed, stage)` returns anything with a `log_proba(X)`
    method (natural log); it defaults to `train_probe`.
    """
    check_t1_fraction(t1_fraction)
    fit = fit or _fit_prefix
    X, y = ds.split("train")
    num_train = len(y)
    if num_train < 1:
        raise DomainError("prequential coding needs at least one training row")
    k = ds.num_classes
    t1 = max(1, int(round(t1_fraction * num_train)))
    order = derive_rng(rng_seed, ORDER_STREAM).permutation(num_train)
    ends = portion_schedule(num_train, t1)

    uniform = float(np.log2(k))
    sizes = [ends[0]]
    losses = [ends[0] * uniform]
    for stage, (start, end) in enumerate(zip(ends, ends[1:])):
        probe = fit(_prefix_dataset(ds, order, start), cfg, rng_seed, stage)
        block = order[start:end]
        log_p = probe.log_proba(X[block])
        loss = float(-log_p[np.arange(len(block)), y[block]].sum() / LN2)
        if loss > (end - start) * uniform:
            logger.warning(
                "portion %d-%d costs %.1f bits, more than the %.1f bits of uniform coding",
                start,
                end,
                loss,
                (end - start) * uniform,
            )
        sizes.append(end - start)
        losses.append(loss)

    codelength = float(sum(losses))
    logger.info(
        "prequential codelength %.1f bits over %d labels (uniform %.1f)",
        codelength,
        num_train,
        num_train * uniform,
    )
    return MdlScore(
        MdlKind.PREQUENTIAL,
        codelength,
        portion_sizes=tuple(sizes),
        portion_losses=tuple(losses),
        t1=t1,
        num_classes=k,
    )
