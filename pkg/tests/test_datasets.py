import itertools

import numpy as np
import pytest
from probesizer.datasets import (
    RepresentationDataset,
    SyntheticDatasetSpec,
    add_gaussian_noise,
    corrupt_dataset,
    export_dataset,
    generate_dataset,
    import_dataset,
    simplex_means,
    stratified_subsample,
)
from probesizer.exceptions import DomainError, InsufficientDataError, MalformedInputError


@pytest.fixture
def binary_pool():
    return generate_dataset(SyntheticDatasetSpec(2, 16, 500, rng_seed=3))


class TestGenerate:
    def test_deterministic(self):
        spec = SyntheticDatasetSpec(3, 8, 60, rng_seed=9)
        assert generate_dataset(spec).equals(generate_dataset(spec))
        other = SyntheticDatasetSpec(3, 8, 60, rng_seed=10)
        assert not generate_dataset(spec).equals(generate_dataset(other))

    @pytest.mark.parametrize("num_classes", [2, 3, 6])
    def test_simplex_distances(self, num_classes):
        means = simplex_means(num_classes, 10, 2.5)
        for i, j in itertools.combinations(range(num_classes), 2):
            assert np.linalg.norm(means[i] - means[j]) == pytest.approx(2.5, rel=1e-12)

    def test_splits(self):
        ds = generate_dataset(SyntheticDatasetSpec(2, 4, 384))
        assert ds.class_counts("train").tolist() == [256, 256]
        assert ds.class_counts("val").tolist() == [64, 64]
        assert ds.class_counts("test").tolist() == [64, 64]
        assert ds.has_splits()
        assert len(ds) == 768

    def test_remainder_left_out(self):
        ds = generate_dataset(SyntheticDatasetSpec(2, 4, 100))
        assert ds.class_counts("train").tolist() == [64, 64]
        assert ds.class_counts("val").tolist() == [16, 16]
        assert ds.class_counts("test").tolist() == [16, 16]
        assert len(ds) == 192

    def test_too_small_for_split(self):
        with pytest.raises(DomainError):
            generate_dataset(SyntheticDatasetSpec(2, 4, 5))

    def test_read_only(self, binary_pool):
        with pytest.raises(ValueError):
            binary_pool.vectors[0, 0] = 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_classes": 1, "dim": 4, "samples_per_class": 10},
            {"num_classes": 4, "dim": 2, "samples_per_class": 10},
            {"num_classes": 2, "dim": 4, "samples_per_class": 0},
            {"num_classes": 2, "dim": 4, "samples_per_class": 10, "noise_floor": 0},
            {"num_classes": 2, "dim": 4, "samples_per_class": 10, "class_separation": -1},
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(DomainError):
            SyntheticDatasetSpec(**kwargs)

    def test_invalid_dataset(self):
        with pytest.raises(DomainError):
            RepresentationDataset(np.zeros((2, 3)), [0, 2], ["train", "test"], 2)
        with pytest.raises(DomainError):
            RepresentationDataset(np.zeros((2, 3)), [0, 1], ["train", "dev"], 2)


class TestNoise:
    def test_variance(self):
        ds = generate_dataset(SyntheticDatasetSpec(2, 50, 1000))
        noisy = add_gaussian_noise(ds, 2.0, rng_seed=4)
        added = noisy.vectors - ds.vectors
        assert added.size >= 100000
        assert added.var() == pytest.approx(2.0, rel=0.05)
        assert np.array_equal(noisy.labels, ds.labels)

    def test_zero_noise_copies(self, binary_pool):
        assert add_gaussian_noise(binary_pool, 0.0, rng_seed=1).equals(binary_pool)

    def test_negative_variance(self, binary_pool):
        with pytest.raises(DomainError):
            add_gaussian_noise(binary_pool, -0.5, rng_seed=1)

    def test_corruption_shrinks_separation(self, binary_pool):
        corrupted = corrupt_dataset(binary_pool, 0.5, 0.0, rng_seed=1)

        def spread(ds):
            means = [ds.vectors[ds.labels == label].mean(axis=0) for label in (0, 1)]
            return np.linalg.norm(means[0] - means[1])

        assert spread(corrupted) == pytest.approx(0.5 * spread(binary_pool), rel=1e-9)

    def test_corruption_scale_range(self, binary_pool):
        with pytest.raises(DomainError):
            corrupt_dataset(binary_pool, 1.5, 0.0, rng_seed=1)


class TestStratifiedSubsample:
    def test_exact_counts(self, binary_pool):
        subset = stratified_subsample(binary_pool, 256, eta=4, rng_seed=2)
        assert subset.class_counts("train").tolist() == [256, 256]
        assert subset.class_counts("val").tolist() == [64, 64]
        assert subset.class_counts("test").tolist() == [64, 64]
        assert len(set(subset.row_ids.tolist())) == len(subset)

    def test_six_classes(self):
        pool = generate_dataset(SyntheticDatasetSpec(6, 8, 1200))
        subset = stratified_subsample(pool, 768, eta=4)
        assert subset.class_counts("train").tolist() == [768] * 6
        assert subset.class_counts("test").tolist() == [192] * 6

    def test_smallest_subset(self, binary_pool):
        subset = stratified_subsample(binary_pool, 4, eta=4)
        assert subset.class_counts("val").tolist() == [1, 1]

    def test_rows_come_from_pool(self, binary_pool):
        subset = stratified_subsample(binary_pool, 32, eta=4, rng_seed=5)
        assert np.array_equal(subset.vectors, binary_pool.vectors[subset.row_ids])

    def test_insufficient(self, binary_pool):
        with pytest.raises(InsufficientDataError) as error:
            stratified_subsample(binary_pool, 400, eta=4)
        assert "class 0" in str(error.value)

    def test_not_a_multiple_of_eta(self, binary_pool):
        with pytest.raises(DomainError):
            stratified_subsample(binary_pool, 10, eta=4)


class TestExport:
    def test_export_import(self, tmp_path):
        ds = generate_dataset(SyntheticDatasetSpec(3, 4, 30, rng_seed=8))
        subset = stratified_subsample(ds, 8, eta=4, rng_seed=1)
        path = export_dataset(subset, str(tmp_path / "ds.csv"))
        assert import_dataset(path, num_classes=3).equals(subset)

    def test_bad_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("d0,d2,label,split\n0.1,0.2,0,train\n")
        with pytest.raises(MalformedInputError):
            import_dataset(str(path))

    def test_bad_split(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("d0,label,split\n0.1,0,holdout\n")
        with pytest.raises(MalformedInputError):
            import_dataset(str(path))
