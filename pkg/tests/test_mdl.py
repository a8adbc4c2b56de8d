import numpy as np
import pytest
from probesizer.core import ClassifierSpec
from probesizer.datasets import SyntheticDatasetSpec, generate_dataset
from probesizer.exceptions import DomainError
from probesizer.mdl import (
    MdlKind,
    portion_schedule,
    prequential_mdl,
    variational_mdl,
)
from probesizer.trainers import TrainerConfig
from tests.helpers import UniformProbe


class ConfidentProbe:
    """Puts 0.999 on class 0 whatever the input"""

    def log_proba(self, X):
        return np.log(np.tile([0.999, 0.001], (len(X), 1)))


@pytest.fixture
def thousand_train_rows():
    # 750 per class leaves 500 per class for training
    return generate_dataset(SyntheticDatasetSpec(2, 4, 750, rng_seed=2))


@pytest.fixture
def trainer_config():
    return TrainerConfig(ClassifierSpec.logreg(4), (0.1,), (16,), max_epochs=10, patience=3)


class TestPrequential:
    def test_uniform_probe_costs_one_bit_per_label(self, thousand_train_rows, trainer_config):
        score = prequential_mdl(
            thousand_train_rows,
            trainer_config,
            fit=lambda train_ds, cfg, rng_seed, stage: UniformProbe(2),
        )
        assert score.t1 == 1
        assert sum(score.portion_sizes) == 1000
        assert score.codelength == pytest.approx(1000.0, rel=1e-9)
        assert score.uniform_codelength == pytest.approx(1000.0)
        assert score.kind is MdlKind.PREQUENTIAL

    def test_separable_beats_uniform(self, trainer_config):
        ds = generate_dataset(
            SyntheticDatasetSpec(2, 4, 150, class_separation=10.0, noise_floor=0.1, rng_seed=4)
        )
        score = prequential_mdl(ds, trainer_config, t1_fraction=0.05)
        assert score.t1 == 10
        assert score.portion_sizes == (10, 10, 20, 40, 80, 40)
        assert score.codelength < 0.5 * score.uniform_codelength

    def test_worse_than_uniform_is_logged(self, thousand_train_rows, trainer_config, caplog):
        score = prequential_mdl(
            thousand_train_rows,
            trainer_config,
            t1_fraction=0.1,
            fit=lambda train_ds, cfg, rng_seed, stage: ConfidentProbe(),
        )
        assert "more than" in caplog.text
        assert score.codelength > score.uniform_codelength
        assert score.clipped_codelength <= score.uniform_codelength
        report = score.to_dict()
        assert report["clipped_codelength"] == score.clipped_codelength
        assert report["portion_sizes"] == [100, 100, 200, 400, 200]

    def test_fit_sees_growing_prefixes(self, thousand_train_rows, trainer_config):
        seen = []

        def fit(train_ds, cfg, rng_seed, stage):
            seen.append((stage, len(train_ds.split("train")[1])))
            return UniformProbe(2)

        prequential_mdl(thousand_train_rows, trainer_config, t1_fraction=0.1, fit=fit)
        assert seen == [(0, 100), (1, 200), (2, 400), (3, 800)]

    @pytest.mark.parametrize("t1_fraction", [0, 1])
    def test_fraction_range(self, thousand_train_rows, trainer_config, t1_fraction):
        with pytest.raises(DomainError):
            prequential_mdl(thousand_train_rows, trainer_config, t1_fraction=t1_fraction)


class TestSchedule:
    @pytest.mark.parametrize(
        "num_train, t1, expected",
        [
            (1000, 1, [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000]),
            (10, 4, [4, 8, 10]),
            (3, 5, [3]),
            (16, 4, [4, 8, 16]),
        ],
    )
    def test_ends(self, num_train, t1, expected):
        assert portion_schedule(num_train, t1) == expected


class TestVariational:
    def test_sum(self):
        score = variational_mdl(350, 120.5)
        assert score.codelength == 470.5
        assert score.clipped_codelength == 470.5
        assert score.uniform_codelength is None
        assert score.to_dict() == {
            "kind": "variational",
            "codelength": 470.5,
            "data_cost": 350.0,
            "model_cost": 120.5,
        }

    @pytest.mark.parametrize("costs", [(-1, 2), (2, -0.5)])
    def test_negative(self, costs):
        with pytest.raises(DomainError):
            variational_mdl(*costs)
