import numpy as np
import pytest

from mrk import (
    ClassSpec,
    GeneratorSpec,
    build_planted_from_matrix,
    generate_synthetic,
    load_delimited_dataset,
    shuffle_rows,
)
from mrk.problems import ShuffleRecord


def two_class_spec(**overrides):
    fields = dict(
        classes=[ClassSpec(8, 0.0, 1.0), ClassSpec(6, 1.0, 0.5)],
        dimension=3,
        seed=17,
    )
    fields.update(overrides)
    return GeneratorSpec(**fields)


class TestGenerateSynthetic:
    def test_shapes_labels_and_consistency(self):
        system = generate_synthetic(two_class_spec())
        assert system.matrix.shape == (14, 3)
        assert system.solutions.shape == (2, 3)
        np.testing.assert_array_equal(system.class_counts(), [8, 6])
        predicted = np.einsum(
            "ij,ij->i", system.matrix, system.solutions[system.labels]
        )
        np.testing.assert_allclose(predicted, system.rhs, rtol=1e-12)

    def test_deterministic(self):
        a = generate_synthetic(two_class_spec())
        b = generate_synthetic(two_class_spec())
        np.testing.assert_array_equal(a.matrix, b.matrix)
        np.testing.assert_array_equal(a.rhs, b.rhs)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.solutions, b.solutions)

    def test_entry_statistics_follow_class_specs(self):
        spec = GeneratorSpec(
            classes=[ClassSpec(4000, 0.8, 0.3), ClassSpec(4000, -0.8, 0.3)],
            dimension=2,
            seed=3,
            shuffle=False,
        )
        system = generate_synthetic(spec)
        first = system.matrix[:4000]
        second = system.matrix[4000:]
        assert abs(first.mean() - 0.8) < 0.02
        assert abs(second.mean() + 0.8) < 0.02
        assert abs(first.std() - 0.3) < 0.02

    def test_unshuffled_blocks_are_contiguous(self):
        system = generate_synthetic(two_class_spec(shuffle=False))
        np.testing.assert_array_equal(
            system.labels, [0] * 8 + [1] * 6
        )

    def test_shuffle_permutes_but_preserves_rows(self):
        plain = generate_synthetic(two_class_spec(shuffle=False))
        mixed = generate_synthetic(two_class_spec(shuffle=True))
        assert not np.array_equal(plain.labels, mixed.labels)
        order_a = np.lexsort(plain.matrix.T)
        order_b = np.lexsort(mixed.matrix.T)
        np.testing.assert_array_equal(
            plain.matrix[order_a], mixed.matrix[order_b]
        )
        np.testing.assert_array_equal(plain.rhs[order_a], mixed.rhs[order_b])
        np.testing.assert_array_equal(plain.solutions, mixed.solutions)

    def test_solution_spread_scales_solutions(self):
        wide = generate_synthetic(two_class_spec(solution_spread=100.0, seed=50))
        assert np.abs(wide.solutions).max() > 10.0

    def test_validation_errors(self):
        with pytest.raises(ValueError, match="class 1"):
            two_class_spec(classes=[ClassSpec(8, 0.0, 1.0), ClassSpec(2, 0.0, 1.0)])
        with pytest.raises(ValueError, match="entry_spread"):
            two_class_spec(classes=[ClassSpec(8, 0.0, 0.0)])
        with pytest.raises(ValueError, match="solution_spread"):
            two_class_spec(solution_spread=0.0)
        with pytest.raises(ValueError, match="class"):
            GeneratorSpec(classes=[], dimension=2)


class TestShuffleRows:
    def test_inverse_restores_original(self, two_class_system):
        shuffled, record = shuffle_rows(two_class_system, seed=9)
        np.testing.assert_array_equal(
            shuffled.matrix[record.inverse], two_class_system.matrix
        )
        np.testing.assert_array_equal(
            shuffled.rhs[record.inverse], two_class_system.rhs
        )
        np.testing.assert_array_equal(
            shuffled.labels[record.inverse], two_class_system.labels
        )
        np.testing.assert_array_equal(shuffled.solutions, two_class_system.solutions)

    def test_permutation_applied_forward(self, two_class_system):
        shuffled, record = shuffle_rows(two_class_system, seed=10)
        np.testing.assert_array_equal(
            shuffled.matrix, two_class_system.matrix[record.permutation]
        )

    def test_record_rejects_bad_permutation(self):
        with pytest.raises(ValueError):
            ShuffleRecord(permutation=np.array([0, 0, 2]))


class TestLoadDelimitedDataset:
    def test_median_and_mean_imputation(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1,10\n2,20\n6,30\n?,40\n")
        by_median = load_delimited_dataset(path)
        np.testing.assert_array_equal(by_median[:, 0], [1.0, 2.0, 6.0, 2.0])
        by_mean = load_delimited_dataset(path, impute="mean")
        np.testing.assert_array_equal(by_mean[:, 0], [1.0, 2.0, 6.0, 3.0])
        np.testing.assert_array_equal(by_median[:, 1], [10.0, 20.0, 30.0, 40.0])

    def test_drop_first_column(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("9001,1,2\n9002,3,4\n")
        data = load_delimited_dataset(path, drop_first_column=True)
        np.testing.assert_array_equal(data, [[1.0, 2.0], [3.0, 4.0]])

    def test_error_column_numbering_counts_dropped_column(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("9001,1,x\n")
        with pytest.raises(ValueError, match="row 1, column 3"):
            load_delimited_dataset(path, drop_first_column=True)

    def test_ragged_row_reported(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ValueError, match="row 2"):
            load_delimited_dataset(path)

    def test_custom_missing_token(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1,2\nNA,4\n")
        data = load_delimited_dataset(path, missing_token="NA")
        assert data[1, 0] == 1.0

    def test_all_missing_column_rejected(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1,?\n2,?\n")
        with pytest.raises(ValueError, match="column 2"):
            load_delimited_dataset(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1,2\n\n3,4\n")
        assert load_delimited_dataset(path).shape == (2, 2)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="no data rows"):
            load_delimited_dataset(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_delimited_dataset(tmp_path / "absent.csv")


class TestBuildPlanted:
    def make_data(self, rows=10, cols=3, seed=4):
        return np.random.default_rng(seed).standard_normal((rows, cols))

    def test_blocks_labels_and_consistency(self):
        data = self.make_data()
        system = build_planted_from_matrix(data, (6, 4), solution_seed=5)
        np.testing.assert_array_equal(system.matrix, data)
        np.testing.assert_array_equal(system.labels, [0] * 6 + [1] * 4)
        predicted = np.einsum(
            "ij,ij->i", system.matrix, system.solutions[system.labels]
        )
        np.testing.assert_allclose(predicted, system.rhs, rtol=1e-12)

    def test_solutions_drawn_in_class_order(self):
        data = self.make_data()
        system = build_planted_from_matrix(data, (5, 5), solution_seed=6)
        expected = np.random.default_rng(6).standard_normal((2, 3))
        np.testing.assert_array_equal(system.solutions, expected)

    def test_split_sum_checked(self):
        with pytest.raises(ValueError, match="sum"):
            build_planted_from_matrix(self.make_data(), (6, 5), solution_seed=0)

    def test_small_block_rejected(self):
        with pytest.raises(ValueError, match="class 1"):
            build_planted_from_matrix(self.make_data(), (8, 2), solution_seed=0)

    def test_rank_deficient_block_named(self):
        data = self.make_data()
        data[3:6] = data[3]  # class 1 block collapses to one direction
        with pytest.raises(ValueError, match="class 1"):
            build_planted_from_matrix(data, (3, 3, 4), solution_seed=0)

    def test_empty_splits_rejected(self):
        with pytest.raises(ValueError):
            build_planted_from_matrix(self.make_data(), (), solution_seed=0)
