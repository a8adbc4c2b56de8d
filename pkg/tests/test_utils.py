import io
import os

import numpy as np
import pytest
from probesizer.config import THREADS_ENV_VAR
from probesizer.core import MetricKind, PerformancePair
from probesizer.exceptions import ConfigError, DomainError, MalformedInputError
from probesizer.stats import PowerCurve, PowerEstimate
from probesizer.utils import (
    derive_rng,
    dumps_json,
    parallel_map,
    read_gaps_csv,
    read_json,
    read_predictions_csv,
    thread_count,
    write_csv,
    write_json,
)
from tests.helpers import predictions_from_cells, write_predictions

TEST_DATA = os.path.join(os.path.dirname(__file__), "test_data")


@pytest.fixture
def csv_file(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


class TestThreads:
    def test_env_var(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert thread_count() == 3

    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert 1 <= thread_count() <= 8

    @pytest.mark.parametrize("value", ["0", "-2", "many"])
    def test_invalid(self, monkeypatch, value):
        monkeypatch.setenv(THREADS_ENV_VAR, value)
        with pytest.raises(ConfigError) as error:
            thread_count()
        assert THREADS_ENV_VAR in str(error.value)

    def test_parallel_map_keeps_order(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "4")
        assert parallel_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]
        assert parallel_map(str, []) == []


class TestDeriveRng:
    def test_streams(self):
        first = derive_rng(0, 1, 2).random(5)
        assert np.array_equal(first, derive_rng(0, 1, 2).random(5))
        assert not np.array_equal(first, derive_rng(0, 2, 1).random(5))
        assert not np.array_equal(first, derive_rng(1, 1, 2).random(5))

    @pytest.mark.parametrize("seed", [None, -1])
    def test_invalid_seed(self, seed):
        with pytest.raises(DomainError):
            derive_rng(seed)


class TestJson:
    def test_sorted_and_converted(self):
        text = dumps_json({"b": np.int64(2), "a": [np.float64(0.5), np.bool_(True)]})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_write_read(self, tmp_path):
        path = write_json({"pair": PerformancePair(0.5, 0.25).__dict__}, str(tmp_path / "out.json"))
        assert read_json(path)["pair"]["r2"] == 0.25


class TestPredictionsCsv:
    def test_read(self):
        pred = read_predictions_csv(os.path.join(TEST_DATA, "predictions.csv"))
        assert pred.seeds == ("0", "1")
        assert pred.item_ids == ("q1", "q2", "q3", "q4")
        assert pred.correct_a[0].tolist() == [True, False, True, True]
        assert pred.correct_b[1].tolist() == [True, True, False, True]

    def test_write_then_read(self, tmp_path):
        pred = predictions_from_cells(n01=3, n10=1, n11=2, n00=1, num_seeds=2)
        path = write_predictions(pred, str(tmp_path / "pred.csv"))
        again = read_predictions_csv(path)
        assert np.array_equal(again.correct_a, pred.correct_a)
        assert np.array_equal(again.correct_b, pred.correct_b)

    def test_bad_flag_row_number(self, csv_file):
        path = csv_file(
            "bad.csv", "item_id,seed,correct_a,correct_b\nq1,0,1,0\nq2,0,yes,1\n"
        )
        with pytest.raises(MalformedInputError) as error:
            read_predictions_csv(path)
        assert error.value.row_number == 3
        assert str(error.value).startswith("row 3")

    def test_duplicate_row_number(self, csv_file):
        path = csv_file(
            "dup.csv", "item_id,seed,correct_a,correct_b\nq1,0,1,0\nq2,0,0,1\nq1,0,1,1\n"
        )
        with pytest.raises(MalformedInputError) as error:
            read_predictions_csv(path)
        assert error.value.row_number == 4

    def test_missing_column(self, csv_file):
        path = csv_file("cols.csv", "item_id,seed,correct_a\nq1,0,1\n")
        with pytest.raises(MalformedInputError) as error:
            read_predictions_csv(path)
        assert "correct_b" in str(error.value)

    def test_uneven_seeds(self, csv_file):
        path = csv_file(
            "uneven.csv", "item_id,seed,correct_a,correct_b\nq1,0,1,0\nq2,0,0,1\nq1,1,1,1\n"
        )
        with pytest.raises(MalformedInputError):
            read_predictions_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedInputError):
            read_predictions_csv(str(tmp_path / "nope.csv"))


class TestGapsCsv:
    def test_pairs(self):
        kind, rows = read_gaps_csv(os.path.join(TEST_DATA, "pilot_pairs.csv"))
        assert kind == "pairs"
        assert rows == [PerformancePair(0.75, 0.5), PerformancePair(0.625, 0.5)]

    def test_gaps(self):
        kind, rows = read_gaps_csv(os.path.join(TEST_DATA, "pilot_gaps.csv"))
        assert kind == "gaps"
        assert rows == [(100, 0.1313), (200, 0.0879)]

    def test_out_of_range_performance(self, csv_file):
        path = csv_file("range.csv", "r1,r2\n0.5,0.4\n1.5,0.2\n")
        with pytest.raises(MalformedInputError) as error:
            read_gaps_csv(path)
        assert error.value.row_number == 3

    def test_unknown_layout(self, csv_file):
        with pytest.raises(MalformedInputError):
            read_gaps_csv(csv_file("other.csv", "x,y\n1,2\n"))

    def test_codelength_pairs(self, csv_file):
        path = csv_file("mdl.csv", "r1,r2\n350.0,470.5\n")
        kind, rows = read_gaps_csv(path, MetricKind.PREQUENTIAL_MDL, metric_range=1000.0)
        assert kind == "pairs"
        assert rows[0].metric_range == 1000.0
        with pytest.raises(DomainError):
            read_gaps_csv(path, MetricKind.PREQUENTIAL_MDL)


class TestPowerCsv:
    def test_layout(self):
        curve = PowerCurve(((8, PowerEstimate(0.25, 4, 1, 0.05, 8, 0.5)),))
        buffer = io.StringIO()
        write_csv(curve.to_frame(), buffer)
        assert buffer.getvalue() == (
            "test_size,power,num_sims,alpha,median_p_value\n8,0.25,4,0.050000000000000003,0.5\n"
        )
