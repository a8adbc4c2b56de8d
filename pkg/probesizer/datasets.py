"""Synthetic representation datasets.

Stand-in for encoder outputs on a probing task: K Gaussian blobs whose means
sit on a regular simplex, `class_separation` apart from each other, with
isotropic within-class noise. One knob, the separation, controls how hard the
task is.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.linalg import helmert
from probesizer.config import DEFAULT_ETA
from probesizer.core import SplitSpec
from probesizer.exceptions import DomainError, InsufficientDataError, MalformedInputError
from probesizer.utils import derive_rng, write_csv

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")

# generation draws from the bare seed, these keep the other draws apart from it
NOISE_STREAM = 11
SUBSAMPLE_STREAM = 12


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    num_classes: int
    dim: int
    samples_per_class: int
    class_separation: float = 3.0
    noise_floor: float = 1.0
    rng_seed: int = 0
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if self.num_classes < 2:
            raise DomainError(f"num_classes should be at least 2, got {self.num_classes}")
        if self.dim < 1:
            raise DomainError(f"dim should be at least 1, got {self.dim}")
        if self.dim < self.num_classes - 1:
            raise DomainError(
                f"{self.num_classes} equidistant class means need dim >= {self.num_classes - 1}"
            )
        if self.samples_per_class < 1:
            raise DomainError("samples_per_class should be at least 1")
        if self.class_separation < 0:
            raise DomainError("class_separation should be non-negative")
        if not self.noise_floor > 0:
            raise DomainError("noise_floor should be positive")


@dataclass(frozen=True, eq=False)
class RepresentationDataset:
    vectors: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    splits: np.ndarray = field(repr=False)
    num_classes: int
    row_ids: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        splits = np.array(self.splits, dtype=object)
        if vectors.ndim != 2:
            raise DomainError("vectors should be an N x D matrix")
        if not len(vectors) == len(labels) == len(splits):
            raise DomainError("vectors, labels and splits should have one entry per row")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise DomainError(f"labels should lie in [0, {self.num_classes})")
        unknown = set(splits.tolist()) - set(SPLITS)
        if unknown:
            raise DomainError(f"unknown split tags {sorted(unknown)}, expected {SPLITS}")
        row_ids = self.row_ids
        if row_ids is None:
            row_ids = np.arange(len(labels))
        row_ids = np.array(row_ids, dtype=np.int64)
        for array in (vectors, labels, splits, row_ids):
            array.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "splits", splits)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.labels)

    def split(self, name):
        mask = self.splits == name
        return self.vectors[mask], self.labels[mask]

    def split_row_ids(self, name):
        return self.row_ids[self.splits == name]

    def has_splits(self):
        present = set(self.splits.tolist())
        return all(name in present for name in SPLITS)

    def class_counts(self, name):
        _, labels = self.split(name)
        return np.bincount(labels, minlength=self.num_classes)

    def with_vectors(self, vectors):
        return RepresentationDataset(
            vectors, self.labels, self.splits, self.num_classes, self.row_ids
        )

    def equals(self, other):
        return (
            self.num_classes == other.num_classes
            and np.array_equal(self.vectors, other.vectors)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.splits, other.splits)
            and np.array_equal(self.row_ids, other.row_ids)
        )


def simplex_means(num_classes, dim, separation):
    """K points in `dim` dimensions, every pair exactly `separation` apart"""
    # helmert rows are orthonormal and orthogonal to the ones vector, so the
    # columns are the projected basis vectors, pairwise sqrt(2) apart
    vertices = helmert(num_classes, full=False).T
    means = np.zeros((num_classes, dim))
    means[:, : num_classes - 1] = vertices * (separation / np.sqrt(2))
    return means


def generate_dataset(spec):
    """Gaussian blobs split eta:1:1 per class.

    Only the largest eta:1:1 split that fits `samples_per_class` is generated, so
    up to eta + 1 rows per class are left out. The ratio is exact whenever
    eta * held_out is a whole number.
    """
    held_out = int(spec.samples_per_class // (spec.eta + 2))
    if held_out < 1:
        raise DomainError(
            f"samples_per_class={spec.samples_per_class} is too small for an eta:1:1 split with eta={spec.eta}"
        )
    num_train = int(spec.eta * held_out)
    rng = derive_rng(spec.rng_seed)
    k, n = spec.num_classes, num_train + 2 * held_out
    means = simplex_means(k, spec.dim, spec.class_separation)
    labels = np.repeat(np.arange(k), n)
    noise = rng.standard_normal((k * n, spec.dim)) * spec.noise_floor
    vectors = means[labels] + noise

    tags_per_class = np.array(
        ["train"] * num_train + ["val"] * held_out + ["test"] * held_out,
        dtype=object,
    )
    splits = np.tile(tags_per_class, k)
    logger.debug(
        "generated %d x %d dataset, K=%d, separation %.3g", k * n, spec.dim, k, spec.class_separation
    )
    return RepresentationDataset(vectors, labels, splits, k)


def add_gaussian_noise(ds, sigma2, rng_seed):
    """Adds i.i.d. N(0, sigma2) noise to every coordinate"""
    if sigma2 < 0:
        raise DomainError(f"sigma2 should be non-negative, got {sigma2}")
    if sigma2 == 0:
        return ds.with_vectors(ds.vectors.copy())
    rng = derive_rng(rng_seed, NOISE_STREAM)
    noise = rng.standard_normal(ds.vectors.shape) * np.sqrt(sigma2)
    return ds.with_vectors(ds.vectors + noise)


def corrupt_dataset(ds, separation_scale, sigma2, rng_seed):
    """Pulls every class mean toward the centroid, then adds Gaussian noise.

    `separation_scale` = 1 keeps the geometry, 0 makes the classes share a mean.
    """
    if not 0 <= separation_scale <= 1:
        raise DomainError(f"separation_scale should lie in [0, 1], got {separation_scale}")
    centroid = ds.vectors.mean(axis=0)
    class_means = np.zeros((ds.num_classes, ds.dim))
    for label in range(ds.num_classes):
        members = ds.vectors[ds.labels == label]
        if len(members):
            class_means[label] = members.mean(axis=0)
    shift = (1 - separation_scale) * (class_means - centroid)
    return add_gaussian_noise(ds.with_vectors(ds.vectors - shift[ds.labels]), sigma2, rng_seed)


def stratified_subsample(ds, per_class_train, eta=DEFAULT_ETA, rng_seed=0):
    """Exact per-class counts train : train/eta : train/eta, drawn from every row"""
    train, val, test = SplitSpec(eta).split_sizes(per_class_train)
    needed = train + val + test
    rng = derive_rng(rng_seed, SUBSAMPLE_STREAM)

    picked = {name: [] for name in SPLITS}
    for label in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == label)
        if len(members) < needed:
            raise InsufficientDataError(
                f"class {label} has {len(members)} samples, the subsample needs {needed} "
                f"({train} train + {val} val + {test} test)"
            )
        chosen = rng.permutation(members)[:needed]
        picked["train"].append(chosen[:train])
        picked["val"].append(chosen[train : train + val])
        picked["test"].append(chosen[train + val :])

    order = np.concatenate([np.concatenate(picked[name]) for name in SPLITS])
    splits = np.array(
        ["train"] * (train * ds.num_classes)
        + ["val"] * (val * ds.num_classes)
        + ["test"] * (test * ds.num_classes),
        dtype=object,
    )
    return RepresentationDataset(
        ds.vectors[order], ds.labels[order], splits, ds.num_classes, ds.row_ids[order]
    )


def export_dataset(ds, path):
    """CSV with header d0..d{D-1}, label, split, row_id"""
    frame = pd.DataFrame(ds.vectors, columns=[f"d{i}" for i in range(ds.dim)])
    frame["label"] = ds.labels
    frame["split"] = ds.splits
    frame["row_id"] = ds.row_ids
    return write_csv(frame, path)


def import_dataset(path, num_classes=None):
    try:
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise MalformedInputError(f"cannot parse dataset file {path}: {error}")
    dim_columns = [column for column in frame.columns if column.startswith("d")]
    if dim_columns != [f"d{i}" for i in range(len(dim_columns))]:
        raise MalformedInputError(f"{path}: dimension columns should be d0..dD-1", row_number=1)
    for column in ("label", "split"):
        if column not in frame.columns:
            raise MalformedInputError(f"{path} is missing the {column} column", row_number=1)
    labels = frame["label"].to_numpy(dtype=np.int64)
    if num_classes is None:
        num_classes = max(2, int(labels.max()) + 1) if len(labels) else 2
    row_ids = frame["row_id"].to_numpy() if "row_id" in frame.columns else None
    try:
        return RepresentationDataset(
            frame[dim_columns].to_numpy(dtype=np.float64),
            labels,
            frame["split"].astype(str).to_numpy(dtype=object),
            num_classes,
            row_ids,
        )
    except DomainError as error:
        raise MalformedInputError(f"{path}: {error}")
