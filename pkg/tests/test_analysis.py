import itertools

import numpy as np
import pytest

from mrk import (
    LinearSystem,
    RankDeficiencyWarning,
    Trace,
    aggregate_trials,
    best_assignment,
    bound_matrix,
    check_full_rank,
    empirical_mistake_rate,
    error_series,
    l1_operator_norm,
    matched_error,
    rk_contraction_constant,
    squared_distances,
    total_error,
)
from mrk.analysis import matched_error_series


def mini_trace(error_table, initial_errors=None, **overrides):
    """Build a structurally valid trace around a given error table.

    Pass ``errors=None`` in the overrides to shape the trace from the
    table but drop the recorded series."""
    errors = np.asarray(error_table, dtype=np.float64)
    n_steps, n_iterates = errors.shape
    fields = dict(
        n_iterates=n_iterates,
        sampled_rows=np.zeros(n_steps, dtype=np.int64),
        argmin_iterates=np.zeros(n_steps, dtype=np.int64),
        target_iterates=np.zeros(n_steps, dtype=np.int64),
        coefficients=np.zeros((n_steps, n_iterates)),
        update_magnitudes=np.zeros(n_steps),
        swap_flags=np.zeros(n_steps, dtype=bool),
        final_iterates=np.zeros((n_iterates, 1)),
        errors=errors,
        initial_errors=(
            None if initial_errors is None else np.asarray(initial_errors, float)
        ),
        labeling=np.arange(n_iterates, dtype=np.int64),
    )
    fields.update(overrides)
    return Trace(**fields)


class TestDistances:
    def test_squared_distances_hand_values(self):
        out = squared_distances([[0.0, 0.0], [1.0, 1.0]], [[0.0, 1.0], [2.0, 0.0]])
        np.testing.assert_array_equal(out, [[1.0, 4.0], [1.0, 2.0]])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            squared_distances([[0.0, 0.0]], [[1.0, 2.0, 3.0]])

    def test_total_error_identity_pairing(self):
        assert total_error([[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 2.0]]) == 5.0

    def test_matched_error_picks_crossed_pairing(self):
        value = matched_error([[0.0, 0.0], [10.0, 0.0]], [[10.0, 0.0], [0.0, 0.0]])
        assert value == 0.0


class TestBestAssignment:
    def test_hand_case(self):
        assignment, total = best_assignment([[1.0, 4.0], [1.0, 2.0]])
        assert assignment == (0, 1)
        assert total == 3.0

    def test_tie_resolves_lexicographically(self):
        assignment, total = best_assignment([[1.0, 1.0], [1.0, 1.0]])
        assert assignment == (0, 1)
        assert total == 2.0

    def test_three_by_three(self):
        costs = [[5.0, 1.0, 9.0], [1.0, 9.0, 9.0], [9.0, 9.0, 1.0]]
        assignment, total = best_assignment(costs)
        assert assignment == (1, 0, 2)
        assert total == 3.0

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            best_assignment(np.ones((2, 3)))

    def test_size_cap(self):
        with pytest.raises(ValueError, match="8"):
            best_assignment(np.ones((9, 9)))

    def test_series_matches_per_step_search(self):
        rng = np.random.default_rng(0)
        history = rng.random((40, 3, 3))
        series = matched_error_series(history)
        for k in range(40):
            _, expected = best_assignment(history[k])
            assert series[k] == pytest.approx(expected, rel=1e-15)


class TestContractionConstant:
    def test_identity_matrix_exact(self):
        assert rk_contraction_constant(np.eye(3)) == pytest.approx(2.0 / 3.0)

    def test_diagonal_matrix_exact(self):
        assert rk_contraction_constant(np.diag([1.0, 2.0])) == 0.8

    def test_crosscheck_against_gram_eigenvalues(self):
        m = np.random.default_rng(1).standard_normal((20, 4))
        eigs = np.linalg.eigvalsh(m.T @ m)
        expected = 1.0 - eigs[0] / eigs.sum()
        assert rk_contraction_constant(m) == pytest.approx(expected, rel=1e-10)

    def test_rank_deficient_warns_and_returns_one(self):
        column = np.random.default_rng(2).standard_normal(5)
        m = np.column_stack([column, 2.0 * column])
        with pytest.warns(RankDeficiencyWarning):
            assert rk_contraction_constant(m) == 1.0

    def test_wide_matrix_warns(self):
        with pytest.warns(RankDeficiencyWarning):
            assert rk_contraction_constant(np.ones((2, 3))) == 1.0

    def test_single_step_expectation_along_minimal_direction(self):
        # Sample rows with probability proportional to squared norm and
        # take one projection step from a point displaced along the
        # minimal right-singular direction; the mean squared-error ratio
        # approaches the contraction constant.
        rng = np.random.default_rng(3)
        matrix = rng.standard_normal((12, 4)) * np.linspace(1.0, 2.0, 12)[:, None]
        constant = rk_contraction_constant(matrix)
        _, _, vt = np.linalg.svd(matrix)
        x_star = rng.standard_normal(4)
        b = matrix @ x_star
        displacement = 1e-3 * vt[-1]
        x = x_star + displacement
        error_before = float(displacement @ displacement)

        norms_sq = np.einsum("ij,ij->i", matrix, matrix)
        weights = norms_sq / norms_sq.sum()
        draws = rng.choice(matrix.shape[0], size=100000, p=weights)
        coeff = (matrix[draws] @ x - b[draws]) / norms_sq[draws]
        # For consistent rows the step removes c^2 ||row||^2 of error.
        after = error_before - coeff**2 * norms_sq[draws]
        mean_ratio = float(np.mean(after) / error_before)
        assert abs(mean_ratio - constant) < 0.02


class TestRankReports:
    def test_full_rank_classes(self, two_class_system):
        reports = check_full_rank(two_class_system)
        assert [r.class_index for r in reports] == [0, 1]
        assert all(r.full_rank and r.rank == 5 for r in reports)
        assert [r.n_rows for r in reports] == [25, 25]

    def test_deficient_class_detected(self):
        v = np.array([1.0, 2.0])
        matrix = np.vstack([v, 2 * v, 3 * v, np.eye(2)])
        labels = np.array([0, 0, 0, 1, 1])
        system = LinearSystem(matrix, np.zeros(5), labels=labels)
        reports = check_full_rank(system)
        assert not reports[0].full_rank
        assert reports[0].rank == 1
        assert reports[1].full_rank

    def test_unlabelled_system_reports_whole_matrix(self, single_class_system):
        reports = check_full_rank(single_class_system)
        assert len(reports) == 1
        assert reports[0].n_rows == 30


class TestBoundMatrix:
    def test_symmetric_two_class_hand_values_exact(self):
        bound = bound_matrix((10, 10), rk_constant=0.5, mistake_probability=0.0,
                             swap_probability=0.0)
        np.testing.assert_array_equal(bound.matrix, [[0.75, 0.0], [0.0, 0.75]])
        assert bound.l1_norm == 0.75
        assert bound.contracts

    def test_three_class_hand_fractions(self):
        # counts (2,1,1), c=1/2, q=1/10, r=1/5:
        # mix = 1/10 + (1/5)/3 = 1/6, keep = 1 - 1/10 - 2*(1/5)/3 = 23/30
        # column 0: diag 1 - 13/120 = 107/120, off-diag 1/6
        # columns 1,2: diag 1 + 7/240 = 247/240, off-diag 1/12
        bound = bound_matrix((2, 1, 1), rk_constant=0.5, mistake_probability=0.1,
                             swap_probability=0.2)
        expected = np.array(
            [
                [107 / 120, 1 / 12, 1 / 12],
                [1 / 6, 247 / 240, 1 / 12],
                [1 / 6, 1 / 12, 247 / 240],
            ]
        )
        np.testing.assert_allclose(bound.matrix, expected, rtol=1e-12)
        assert bound.l1_norm == pytest.approx(49 / 40, rel=1e-12)
        assert not bound.contracts

    def test_full_swap_small_counts_never_contracts(self):
        bound = bound_matrix((3, 3), rk_constant=0.5, mistake_probability=0.0,
                             swap_probability=1.0)
        assert bound.l1_norm == pytest.approx(1.625, rel=1e-12)
        assert not bound.contracts

    def test_norm_non_decreasing_in_swap_probability(self):
        grid = np.linspace(0.0, 0.5, 26)
        norms = [
            bound_matrix((10, 10), 0.5, 0.0, float(r)).l1_norm for r in grid
        ]
        assert np.all(np.diff(norms) >= -1e-15)

    def test_entries_non_negative_across_parameters(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            counts = tuple(rng.integers(1, 30, size=rng.integers(1, 5)))
            bound = bound_matrix(
                counts,
                rk_constant=float(rng.uniform(0.01, 1.0)),
                mistake_probability=float(rng.uniform(0.0, 1.0)),
                swap_probability=float(rng.uniform(0.0, 1.0)),
            )
            assert np.all(bound.matrix >= 0.0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            bound_matrix((10, 10), 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            bound_matrix((10, 10), 1.5, 0.0, 0.0)
        with pytest.raises(ValueError):
            bound_matrix((10, 0), 0.5, 0.0, 0.0)
        with pytest.raises(ValueError):
            bound_matrix((10, 10), 0.5, -0.1, 0.0)
        with pytest.raises(ValueError):
            bound_matrix((), 0.5, 0.0, 0.0)

    def test_json_dict_round_trips_values(self):
        bound = bound_matrix((4, 6), 0.9, 0.05, 0.1)
        out = bound.to_json_dict()
        np.testing.assert_allclose(out["matrix"], bound.matrix)
        assert out["l1_norm"] == bound.l1_norm
        assert out["class_counts"] == [4, 6]
        assert out["contracts"] == bound.contracts


class TestL1OperatorNorm:
    def test_hand_value(self):
        assert l1_operator_norm([[1.0, -2.0], [3.0, 4.0]]) == 6.0

    def test_matches_numpy_induced_norm(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = rng.standard_normal((4, 4))
            assert l1_operator_norm(m) == pytest.approx(
                np.linalg.norm(m, 1), rel=1e-14
            )


class TestAggregateTrials:
    def test_quartiles_hand_values(self):
        traces = [
            mini_trace([[1.0, 2.0]], initial_errors=[4.0, 8.0]),
            mini_trace([[2.0, 4.0]], initial_errors=[5.0, 9.0]),
            mini_trace([[3.0, 6.0]], initial_errors=[6.0, 10.0]),
        ]
        agg = aggregate_trials(traces)
        assert agg.first_iteration == 0
        assert agg.n_trials == 3
        np.testing.assert_allclose(agg.median, [[5.0, 9.0], [2.0, 4.0]])
        np.testing.assert_allclose(agg.q25, [[4.5, 8.5], [1.5, 3.0]])
        np.testing.assert_allclose(agg.q75, [[5.5, 9.5], [2.5, 5.0]])

    def test_order_independent(self):
        traces = [
            mini_trace([[float(v)]], initial_errors=[1.0]) for v in (3, 1, 2, 5, 4)
        ]
        forward = aggregate_trials(traces)
        backward = aggregate_trials(traces[::-1])
        np.testing.assert_array_equal(forward.median, backward.median)
        np.testing.assert_array_equal(forward.q25, backward.q25)

    def test_missing_initials_start_at_iteration_one(self):
        traces = [mini_trace([[1.0]]), mini_trace([[2.0]])]
        agg = aggregate_trials(traces)
        assert agg.first_iteration == 1
        assert agg.n_points == 1

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            aggregate_trials([mini_trace([[1.0]]), mini_trace([[1.0], [2.0]])])

    def test_empty_and_untracked_rejected(self):
        with pytest.raises(ValueError):
            aggregate_trials([])
        with pytest.raises(ValueError):
            aggregate_trials([mini_trace([[1.0]], errors=None)])


class TestErrorSeries:
    def test_series_from_solver_trace(self, two_class_system):
        import mrk

        dist = mrk.RowDistribution.uniform(two_class_system.n_rows)
        config = mrk.MrkConfig(
            swap_probability=0.1, iterations=100, distribution=dist, seed=1
        )
        inits = np.random.default_rng(2).standard_normal((2, 5))
        trace = mrk.run_mrk(two_class_system, inits, config)
        series = error_series(trace)
        assert series.per_iterate.shape == (101, 2)
        np.testing.assert_array_equal(series.per_iterate[0], trace.initial_errors)
        np.testing.assert_array_equal(
            series.total, series.per_iterate.sum(axis=1)
        )
        assert series.matched.shape == (101,)
        assert series.matched[0] == trace.initial_matched_error

    def test_untracked_trace_rejected(self):
        with pytest.raises(ValueError):
            error_series(mini_trace([[1.0]], errors=None, labeling=None))


class TestMistakeRate:
    def make_labelled_system(self):
        matrix = np.vstack([np.eye(2), np.eye(2)])
        return LinearSystem(matrix, np.zeros(4), labels=np.array([0, 0, 1, 1]))

    def test_counts_only_unswapped_steps(self):
        system = self.make_labelled_system()
        trace = mini_trace(
            np.zeros((4, 2)),
            sampled_rows=np.array([0, 2, 3, 1]),
            target_iterates=np.array([0, 1, 1, 1]),
            swap_flags=np.array([False, False, True, False]),
            labeling=np.array([0, 1]),
        )
        # Unswapped rows have classes (0, 1, 0); targets map to (0, 1, 1).
        assert empirical_mistake_rate(trace, system) == pytest.approx(1 / 3)

    def test_all_swapped_returns_nan(self):
        system = self.make_labelled_system()
        trace = mini_trace(
            np.zeros((2, 2)),
            sampled_rows=np.array([0, 1]),
            swap_flags=np.array([True, True]),
            labeling=np.array([0, 1]),
        )
        assert np.isnan(empirical_mistake_rate(trace, system))

    def test_requires_labels_and_labeling(self, two_class_system):
        trace = mini_trace(np.zeros((1, 2)), labeling=None)
        with pytest.raises(ValueError):
            empirical_mistake_rate(trace, two_class_system)
        unlabelled = LinearSystem(np.eye(2), np.zeros(2))
        with pytest.raises(ValueError):
            empirical_mistake_rate(mini_trace(np.zeros((1, 2))), unlabelled)
