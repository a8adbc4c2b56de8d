import logging
import os
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np
import pandas as pd
import ujson
from probesizer.config import MAX_DEFAULT_THREADS, MESSAGE_UNBOUNDED_RANGE, THREADS_ENV_VAR
from probesizer.core import MetricKind, PairedPredictions, PerformancePair
from probesizer.exceptions import ConfigError, DomainError, MalformedInputError

logger = logging.getLogger(__name__)

PREDICTION_COLUMNS = ["item_id", "seed", "correct_a", "correct_b"]
POWER_COLUMNS = ["test_size", "power", "num_sims", "alpha", "median_p_value"]

# pandas reports data rows from 0 and the header sits on line 1
FIRST_DATA_LINE = 2


def thread_count():
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None or value == "":
        return max(1, min(MAX_DEFAULT_THREADS, os.cpu_count() or 1))
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} should be a positive integer, got {value}")
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} should be a positive integer, got {value}")
    return threads


def parallel_map(func, items):
    """Ordered map over a thread pool capped by PROBE_SIZER_THREADS.

    Callers hand every item its own RNG stream, so the result does not depend
    on the number of workers or on the schedule.
    """
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def derive_rng(rng_seed, *stream):
    """Generator for the stream addressed by (rng_seed, *stream)"""
    if rng_seed is None or int(rng_seed) < 0:
        raise DomainError(f"rng_seed should be a non-negative integer, got {rng_seed}")
    keys = [int(rng_seed)] + [int(key) for key in stream]
    return np.random.default_rng(np.random.SeedSequence(keys))


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def to_jsonable(value):
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, Enum):
        return value.value
    return value


def dumps_json(obj):
    return ujson.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_json(obj))
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return ujson.load(f)


def write_csv(frame, path):
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def _read_str_frame(path, required):
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        raise MalformedInputError(f"cannot parse CSV file {path}: {error}")
    frame.columns = [column.strip() for column in frame.columns]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise MalformedInputError(
            f"{path} is missing columns {missing}, expected header {required}",
            row_number=1,
        )
    return frame


def _parse_float(text, row_number, column):
    try:
        return float(text)
    except ValueError:
        raise MalformedInputError(
            f"column {column} should be a number, got {text!r}", row_number=row_number
        )


def read_predictions_csv(path):
    """Rows (item_id, seed, correct_a, correct_b) -> PairedPredictions"""
    frame = _read_str_frame(path, PREDICTION_COLUMNS)
    rows = []
    for index, row in enumerate(frame[PREDICTION_COLUMNS].itertuples(index=False)):
        row_number = index + FIRST_DATA_LINE
        item_id, seed, correct_a, correct_b = (value.strip() for value in row)
        if not item_id or not seed:
            raise MalformedInputError("item_id and seed should be non-empty", row_number=row_number)
        flags = []
        for column, value in (("correct_a", correct_a), ("correct_b", correct_b)):
            if value not in ("0", "1"):
                raise MalformedInputError(
                    f"{column} should be 0 or 1, got {value!r}", row_number=row_number
                )
            flags.append(value == "1")
        rows.append((item_id, seed, flags[0], flags[1]))
    if not rows:
        raise MalformedInputError(f"{path} holds no prediction rows")
    predictions = PairedPredictions.from_records(rows, first_row_number=FIRST_DATA_LINE)
    logger.info(
        "read %d items x %d seeds from %s",
        predictions.num_items,
        predictions.num_seeds,
        path,
    )
    return predictions


def predictions_frame(predictions):
    """Long layout read back by `read_predictions_csv`"""
    return pd.DataFrame(list(predictions.records()), columns=PREDICTION_COLUMNS)


def read_gaps_csv(path, metric_kind=MetricKind.ACCURACY, metric_range=None):
    """Pilot performances for `recommend`.

    Either per-seed (r1, r2) pairs, returned as ("pairs", [PerformancePair]), or
    already averaged gaps with an optional n_test column, returned as
    ("gaps", [(n_test, gap)]). Pairs carry `metric_kind` and `metric_range`.
    """
    metric_kind = MetricKind(metric_kind)
    if metric_range is None and not metric_kind.bounded:
        raise DomainError(MESSAGE_UNBOUNDED_RANGE)
    frame = _read_str_frame(path, [])
    columns = set(frame.columns)
    if {"r1", "r2"} <= columns:
        pairs = []
        for index, row in enumerate(frame[["r1", "r2"]].itertuples(index=False)):
            row_number = index + FIRST_DATA_LINE
            r1 = _parse_float(row[0], row_number, "r1")
            r2 = _parse_float(row[1], row_number, "r2")
            try:
                pairs.append(PerformancePair(r1, r2, metric_kind, metric_range))
            except DomainError as error:
                raise MalformedInputError(str(error), row_number=row_number)
        if not pairs:
            raise MalformedInputError(f"{path} holds no pilot rows")
        return "pairs", pairs
    if "gap" in columns:
        gaps = []
        for index, row in frame.iterrows():
            row_number = index + FIRST_DATA_LINE
            gap = _parse_float(row["gap"], row_number, "gap")
            if gap < 0:
                raise MalformedInputError("gap should be non-negative", row_number=row_number)
            n_test = None
            if "n_test" in columns and row["n_test"].strip():
                n_test = int(_parse_float(row["n_test"], row_number, "n_test"))
            gaps.append((n_test, gap))
        if not gaps:
            raise MalformedInputError(f"{path} holds no gap rows")
        return "gaps", gaps
    raise MalformedInputError(
        f"{path} should have columns r1,r2 or a gap column", row_number=1
    )
