"""Paired significance testing and simulation-based power.

Power is estimated the way a reviewer would check a result: repeatedly take a
portion of the test set, run McNemar's test on it, and count how often the
difference comes out significant. Every classifier seed contributes its own
simulations and the significant ones are pooled.

A subsample only matters through its discordant counts, so a draw of size s is
realised directly as counts over the three cells {A wrong & B right,
A right & B wrong, concordant}: multivariate hypergeometric without replacement,
multinomial with replacement.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy.stats import chi2 as chi2_distribution
from probesizer.config import (
    DEFAULT_ALPHA,
    DEFAULT_NUM_SIMS,
    DEFAULT_RNG_SEED,
    MESSAGE_ALPHA_RANGE,
    POWER_THRESHOLD,
)
from probesizer.exceptions import DomainError
from probesizer.utils import POWER_COLUMNS, derive_rng, parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContingencyTable:
    """Rows: config A incorrect/correct, columns: config B incorrect/correct"""

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self):
        counts = (self.n00, self.n01, self.n10, self.n11)
        if any(count < 0 for count in counts):
            raise DomainError(f"contingency counts should be non-negative, got {counts}")
        if sum(counts) < 1:
            raise DomainError("a contingency table needs at least one item")

    @property
    def total(self):
        return self.n00 + self.n01 + self.n10 + self.n11

    def to_dict(self):
        return {"n00": self.n00, "n01": self.n01, "n10": self.n10, "n11": self.n11}


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    num_simulations: int
    num_significant: int
    alpha: float
    subsample_size: int
    # p-value at the median simulated statistic
    median_p_value: float = None

    def __post_init__(self):
        if not 0 <= self.num_significant <= self.num_simulations:
            raise DomainError("num_significant should lie in [0, num_simulations]")

    def to_dict(self):
        return {
            "power": self.power,
            "num_simulations": self.num_simulations,
            "num_significant": self.num_significant,
            "alpha": self.alpha,
            "subsample_size": self.subsample_size,
            "median_p_value": self.median_p_value,
        }


@dataclass(frozen=True)
class PowerCurve:
    points: tuple

    def __post_init__(self):
        points = tuple(self.points)
        sizes = [size for size, _ in points]
        if any(later <= earlier for earlier, later in zip(sizes, sizes[1:])):
            raise DomainError("power curve test sizes should be strictly increasing")
        object.__setattr__(self, "points", points)

    @property
    def sizes(self):
        return [size for size, _ in self.points]

    @property
    def powers(self):
        return [estimate.power for _, estimate in self.points]

    def to_frame(self):
        return pd.DataFrame(
            [
                (
                    size,
                    estimate.power,
                    estimate.num_simulations,
                    estimate.alpha,
                    estimate.median_p_value,
                )
                for size, estimate in self.points
            ],
            columns=POWER_COLUMNS,
        )

    def to_dict(self):
        return {
            "points": [
                dict(test_size=size, **estimate.to_dict()) for size, estimate in self.points
            ]
        }


def check_alpha(alpha):
    if not 0 < alpha < 1:
        raise DomainError(f"{MESSAGE_ALPHA_RANGE}, got {alpha}")


def contingency(pred, seed):
    index = pred.seed_index(seed)
    a = pred.correct_a[index]
    b = pred.correct_b[index]
    return ContingencyTable(
        n00=int(np.sum(~a & ~b)),
        n01=int(np.sum(~a & b)),
        n10=int(np.sum(a & ~b)),
        n11=int(np.sum(a & b)),
    )


def mcnemar_chi2(table):
    """(n01 - n10)^2 / (n01 + n10), 0 when there is no discordant item"""
    discordant = table.n01 + table.n10
    if discordant == 0:
        return 0.0
    return (table.n01 - table.n10) ** 2 / discordant


@lru_cache(maxsize=64)
def critical_value(alpha):
    """Upper alpha quantile of the 1-df chi-square distribution"""
    check_alpha(alpha)
    return float(chi2_distribution.isf(alpha, df=1))


def is_significant(chi2, alpha=DEFAULT_ALPHA):
    check_alpha(alpha)
    if chi2 < 0:
        raise DomainError(f"chi2 should be non-negative, got {chi2}")
    return chi2 > critical_value(alpha)


def mcnemar_pvalue(table):
    return chi2_pvalue(mcnemar_chi2(table))


def chi2_pvalue(chi2):
    if chi2 == 0:
        return 1.0
    return float(chi2_distribution.sf(chi2, df=1))


def seed_tests(pred, alpha=DEFAULT_ALPHA):
    """McNemar on the full pool of every seed, p-value next to the verdict"""
    check_alpha(alpha)
    rows = []
    for seed in pred.seeds:
        table = contingency(pred, seed)
        chi2 = mcnemar_chi2(table)
        rows.append(
            {
                "seed": seed,
                "n01": table.n01,
                "n10": table.n10,
                "chi2": chi2,
                "p_value": chi2_pvalue(chi2),
                "significant": is_significant(chi2, alpha),
            }
        )
    return rows


def cell_counts(pred):
    """Per seed [#(A wrong, B right), #(A right, B wrong), #concordant]"""
    a = pred.correct_a
    b = pred.correct_b
    n01 = np.sum(~a & b, axis=1)
    n10 = np.sum(a & ~b, axis=1)
    concordant = pred.num_items - n01 - n10
    return np.stack([n01, n10, concordant], axis=1).astype(np.int64)


def resolve_replace(subsample_size, pool_size, replace=None):
    """Without replacement below the pool size, bootstrap at the pool size"""
    if replace is None:
        return subsample_size >= pool_size
    return bool(replace)


def draw_significance(cells, subsample_size, num_draws, alpha, rng, replace):
    """McNemar significance of `num_draws` subsamples from one seed's pool"""
    return draw_statistics(cells, subsample_size, num_draws, rng, replace) > critical_value(alpha)


def draw_statistics(cells, subsample_size, num_draws, rng, replace):
    pool_size = int(cells.sum())
    if replace:
        draws = rng.multinomial(subsample_size, cells / pool_size, size=num_draws)
    else:
        draws = rng.multivariate_hypergeometric(cells, subsample_size, size=num_draws)
    n01 = draws[:, 0].astype(float)
    n10 = draws[:, 1].astype(float)
    discordant = n01 + n10
    return np.divide(
        (n01 - n10) ** 2, discordant, out=np.zeros_like(discordant), where=discordant > 0
    )


def check_subsample(pred, subsample_size):
    if isinstance(subsample_size, bool) or int(subsample_size) != subsample_size:
        raise DomainError(f"subsample_size should be an integer, got {subsample_size}")
    if subsample_size < 1:
        raise DomainError(f"subsample_size should be at least 1, got {subsample_size}")
    if subsample_size > pred.num_items:
        raise DomainError(
            f"subsample_size {subsample_size} exceeds the pool of {pred.num_items} test items"
        )


def estimate_power(
    pred,
    subsample_size,
    num_sims_per_seed=DEFAULT_NUM_SIMS,
    alpha=DEFAULT_ALPHA,
    rng_seed=DEFAULT_RNG_SEED,
    replace=None,
):
    check_subsample(pred, subsample_size)
    check_alpha(alpha)
    if num_sims_per_seed < 1:
        raise DomainError(f"num_sims_per_seed should be at least 1, got {num_sims_per_seed}")
    subsample_size = int(subsample_size)
    replace = resolve_replace(subsample_size, pred.num_items, replace)
    cells = cell_counts(pred)

    def simulate_seed(seed_index):
        # one stream per (size, seed) keeps the estimate schedule independent
        rng = derive_rng(rng_seed, subsample_size, seed_index)
        return draw_statistics(cells[seed_index], subsample_size, num_sims_per_seed, rng, replace)

    statistics = np.concatenate(parallel_map(simulate_seed, range(pred.num_seeds)))
    num_significant = int(np.sum(statistics > critical_value(alpha)))
    num_simulations = num_sims_per_seed * pred.num_seeds
    logger.debug(
        "size %d: %d/%d significant (replace=%s)",
        subsample_size,
        num_significant,
        num_simulations,
        replace,
    )
    return PowerEstimate(
        power=num_significant / num_simulations,
        num_simulations=num_simulations,
        num_significant=num_significant,
        alpha=alpha,
        subsample_size=subsample_size,
        median_p_value=chi2_pvalue(float(np.median(statistics))),
    )


def default_sizes(pool_size, smallest=8):
    """Doubling grid up to, and including, the pool size"""
    sizes = []
    size = smallest
    while size < pool_size:
        sizes.append(size)
        size *= 2
    sizes.append(pool_size)
    return sizes


def power_curve(
    pred,
    sizes=None,
    num_sims_per_seed=DEFAULT_NUM_SIMS,
    alpha=DEFAULT_ALPHA,
    rng_seed=DEFAULT_RNG_SEED,
    replace=None,
):
    if sizes is None:
        sizes = default_sizes(pred.num_items)
    sizes = sorted(set(int(size) for size in sizes))
    if not sizes:
        raise DomainError("power_curve needs at least one test size")
    for size in sizes:
        check_subsample(pred, size)
    estimates = [
        estimate_power(pred, size, num_sims_per_seed, alpha, rng_seed, replace)
        for size in sizes
    ]
    return PowerCurve(tuple(zip(sizes, estimates)))


def minimum_adequate_size(curve, threshold=POWER_THRESHOLD):
    """Smallest test size whose power reaches the threshold, None if none does"""
    for size, estimate in curve.points:
        if estimate.power >= threshold:
            return size
    return None


def suboptimality_gap(observed, higher_is_better=True):
    """Best-across-seeds as the empirical optimum and each seed's distance to it"""
    values = np.asarray(list(observed), dtype=float)
    if values.size == 0:
        raise DomainError("suboptimality_gap needs at least one observed value")
    if higher_is_better:
        best = float(values.max())
        gaps = best - values
    else:
        best = float(values.min())
        gaps = values - best
    return best, [float(gap) for gap in gaps]
