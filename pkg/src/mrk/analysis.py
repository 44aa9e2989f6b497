"""Error functionals, convergence diagnostics, and trial aggregation.

The matched error treats iterate/solution pairing as an assignment
problem and reports the best total over all pairings; with at most a
handful of iterates the search is a plain permutation sweep. The
theoretical side lives in :func:`bound_matrix`, which builds the
expected one-step error-comparison matrix and its l1 operator norm.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .system import LinearSystem
from .trace import Trace
from .validation import as_float_matrix, check_fraction

__all__ = [
    "RankDeficiencyWarning",
    "ClassRankReport",
    "TheoreticalBound",
    "AggregateSeries",
    "ErrorSeries",
    "total_error",
    "matched_error",
    "best_assignment",
    "squared_distances",
    "matched_error_series",
    "rk_contraction_constant",
    "check_full_rank",
    "bound_matrix",
    "l1_operator_norm",
    "aggregate_trials",
    "error_series",
    "empirical_mistake_rate",
]

# Singular values below RANK_RTOL * sigma_max count as zero when
# deciding numerical rank.
RANK_RTOL = 1e-10

# Assignment search is factorial in the iterate count; cap it well
# inside interactive territory.
MAX_ASSIGNMENT_SIZE = 8


class RankDeficiencyWarning(UserWarning):
    """Raised (as a warning) when a matrix has numerical column rank < d."""


def squared_distances(points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape (len(a), len(b))."""
    a = as_float_matrix(points_a, "points_a")
    b = as_float_matrix(points_b, "points_b")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets must share dimension")
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def total_error(iterates, solutions) -> float:
    """Sum of squared distances under the identity pairing."""
    a = as_float_matrix(iterates, "iterates")
    b = as_float_matrix(solutions, "solutions")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.einsum("ij,ij->", diff, diff))


def best_assignment(distance_matrix: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Minimising iterate-to-solution assignment for a square cost matrix.

    Returns ``(assignment, total)`` where ``assignment[i]`` is the
    column matched to row ``i``. Ties resolve to the lexicographically
    smallest assignment. The sweep enumerates all permutations, so the
    matrix may be at most ``MAX_ASSIGNMENT_SIZE`` square.
    """
    d = np.asarray(distance_matrix, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n > MAX_ASSIGNMENT_SIZE:
        raise ValueError(
            f"assignment search supports at most {MAX_ASSIGNMENT_SIZE} "
            f"iterates, got {n}"
        )
    rows = range(n)
    best_perm: tuple[int, ...] | None = None
    best_total = np.inf
    for perm in itertools.permutations(range(n)):
        total = sum(d[i, perm[i]] for i in rows)
        if total < best_total:
            best_perm = perm
            best_total = total
    assert best_perm is not None
    return best_perm, float(best_total)


def matched_error(iterates, solutions) -> float:
    """Minimum total squared error over all iterate/solution pairings."""
    d = squared_distances(iterates, solutions)
    if d.shape[0] != d.shape[1]:
        raise ValueError("iterates and solutions must have equal counts")
    _, total = best_assignment(d)
    return total


def matched_error_series(distance_history: np.ndarray) -> np.ndarray:
    """Per-step matched error for a (N, n, n) squared-distance history."""
    hist = np.asarray(distance_history, dtype=np.float64)
    if hist.ndim != 3 or hist.shape[1] != hist.shape[2]:
        raise ValueError(f"expected (N, n, n) history, got shape {hist.shape}")
    n = hist.shape[1]
    if n > MAX_ASSIGNMENT_SIZE:
        raise ValueError(
            f"assignment search supports at most {MAX_ASSIGNMENT_SIZE} iterates"
        )
    idx = np.arange(n)
    totals = np.stack(
        [hist[:, idx, perm].sum(axis=1) for perm in itertools.permutations(range(n))],
        axis=1,
    )
    return totals.min(axis=1)


def rk_contraction_constant(matrix) -> float:
    """Worst-case expected one-step contraction factor for classic RK.

    For a full-column-rank matrix this is ``1 - sigma_min^2 / ||M||_F^2``.
    A numerically rank-deficient matrix gets no contraction guarantee:
    the function emits :class:`RankDeficiencyWarning` and returns 1.0.
    """
    m = as_float_matrix(matrix, "matrix")
    sigma = np.linalg.svd(m, compute_uv=False)
    rank = int(np.count_nonzero(sigma > RANK_RTOL * sigma[0]))
    if rank < m.shape[1]:
        warnings.warn(
            f"matrix has numerical rank {rank} < {m.shape[1]} columns; "
            "no contraction guarantee",
            RankDeficiencyWarning,
            stacklevel=2,
        )
        return 1.0
    fro_sq = float(np.einsum("ij,ij->", m, m))
    return 1.0 - float(sigma[-1]) ** 2 / fro_sq


@dataclass(frozen=True)
class ClassRankReport:
    class_index: int
    n_rows: int
    rank: int
    full_rank: bool


def check_full_rank(system: LinearSystem) -> list[ClassRankReport]:
    """Numerical rank of each class block (whole matrix when unlabelled)."""
    if system.labels is None:
        blocks = [(0, system.matrix)]
    else:
        blocks = [
            (j, system.class_block(j)) for j in range(len(system.class_counts()))
        ]
    reports = []
    for class_index, block in blocks:
        if block.shape[0] == 0:
            reports.append(ClassRankReport(class_index, 0, 0, False))
            continue
        sigma = np.linalg.svd(block, compute_uv=False)
        rank = int(np.count_nonzero(sigma > RANK_RTOL * sigma[0]))
        reports.append(
            ClassRankReport(
                class_index=class_index,
                n_rows=block.shape[0],
                rank=rank,
                full_rank=rank == system.n_cols,
            )
        )
    return reports


@dataclass(frozen=True)
class TheoreticalBound:
    """Expected one-step error-comparison matrix and its l1 norm.

    ``matrix[i, j]`` weights how the class-j error enters the bound on
    the class-i error after one step; the iteration contracts in the
    matched-error sense when ``l1_norm < 1``.
    """

    matrix: np.ndarray
    l1_norm: float
    class_counts: tuple[int, ...]
    rk_constant: float
    mistake_probability: float
    swap_probability: float

    @property
    def contracts(self) -> bool:
        return self.l1_norm < 1.0

    def to_json_dict(self) -> dict:
        return {
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "l1_norm": self.l1_norm,
            "class_counts": list(self.class_counts),
            "rk_constant": self.rk_constant,
            "mistake_probability": self.mistake_probability,
            "swap_probability": self.swap_probability,
            "contracts": self.contracts,
        }


def bound_matrix(
    class_counts,
    rk_constant: float,
    mistake_probability: float,
    swap_probability: float,
) -> TheoreticalBound:
    """Build the expected one-step error-comparison matrix.

    ``rk_constant`` must bound the per-class RK contraction constants
    from above; ``mistake_probability`` bounds the chance that an
    un-swapped update applies a row of the wrong class. Column ``j`` of
    the matrix is built from the row count of class ``j``.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("class_counts must be a non-empty 1-D sequence")
    if np.any(counts <= 0):
        raise ValueError("class counts must be positive")
    c = float(rk_constant)
    if not 0.0 < c <= 1.0:
        raise ValueError(f"rk_constant must lie in (0, 1], got {c}")
    q = check_fraction(mistake_probability, "mistake_probability")
    r = check_fraction(swap_probability, "swap_probability")

    n_classes = counts.size
    n = n_classes - 1
    m = int(counts.sum())
    share = counts / m
    mix = q + r / n_classes
    keep = 1.0 - q - n * r / n_classes

    a = np.empty((n_classes, n_classes))
    for j in range(n_classes):
        a[:, j] = 2.0 * share[j] * mix
        a[j, j] = 1.0 + share[j] * (c - 1.0) * keep + (1.0 - share[j]) * mix

    return TheoreticalBound(
        matrix=a,
        l1_norm=l1_operator_norm(a),
        class_counts=tuple(int(v) for v in counts),
        rk_constant=c,
        mistake_probability=q,
        swap_probability=r,
    )


def l1_operator_norm(matrix) -> float:
    """Operator norm induced by the l1 vector norm: max column abs sum."""
    m = as_float_matrix(matrix, "matrix")
    return float(np.abs(m).sum(axis=0).max())


@dataclass(frozen=True)
class AggregateSeries:
    """Across-trial percentile summary of per-iterate error series.

    Arrays have shape (n_points, n_iterates); row ``k`` describes
    iteration ``first_iteration + k``.
    """

    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    n_trials: int
    first_iteration: int

    @property
    def n_points(self) -> int:
        return self.median.shape[0]

    @property
    def n_iterates(self) -> int:
        return self.median.shape[1]


def aggregate_trials(traces: list[Trace]) -> AggregateSeries:
    """Per-iteration median and quartiles across a list of trial traces.

    All traces must carry error series of equal length and iterate
    count. When every trace also records its initial errors, the series
    starts at iteration 0; otherwise at iteration 1. Percentiles use
    linear interpolation. The result does not depend on trial order.
    """
    if not traces:
        raise ValueError("no traces to aggregate")
    if any(t.errors is None for t in traces):
        raise ValueError("every trace must carry an error series")
    shapes = {t.errors.shape for t in traces}
    if len(shapes) != 1:
        raise ValueError(f"traces have mismatched error shapes: {sorted(shapes)}")
    with_initial = all(t.initial_errors is not None for t in traces)
    if with_initial:
        stacked = np.stack([t.error_table() for t in traces])
        first_iteration = 0
    else:
        stacked = np.stack([t.errors for t in traces])
        first_iteration = 1
    q25, median, q75 = np.percentile(
        stacked, [25.0, 50.0, 75.0], axis=0, method="linear"
    )
    return AggregateSeries(
        median=median,
        q25=q25,
        q75=q75,
        n_trials=len(traces),
        first_iteration=first_iteration,
    )


@dataclass(frozen=True)
class ErrorSeries:
    """Labelled error series of a single run, initial point included."""

    per_iterate: np.ndarray
    total: np.ndarray
    matched: np.ndarray | None
    labeling: np.ndarray


def error_series(trace: Trace) -> ErrorSeries:
    """Extract the labelled error series from a trace."""
    if trace.errors is None or trace.labeling is None:
        raise ValueError("trace has no error series")
    per_iterate = trace.error_table()
    matched = None
    if trace.matched_errors is not None and trace.initial_matched_error is not None:
        matched = np.concatenate(
            [[trace.initial_matched_error], trace.matched_errors]
        )
    return ErrorSeries(
        per_iterate=per_iterate,
        total=per_iterate.sum(axis=1),
        matched=matched,
        labeling=trace.labeling,
    )


def empirical_mistake_rate(trace: Trace, system: LinearSystem) -> float:
    """Observed fraction of un-swapped steps that applied a wrong-class row.

    A step counts as a mistake when the sampled row's class differs from
    the class assigned to the targeted iterate by the trace labelling.
    Returns NaN when the trace has no un-swapped steps.
    """
    if system.labels is None:
        raise ValueError("system has no labels")
    if trace.labeling is None:
        raise ValueError("trace has no labeling")
    mask = ~trace.swap_flags
    if not np.any(mask):
        return float("nan")
    row_classes = system.labels[trace.sampled_rows[mask]]
    target_classes = trace.labeling[trace.target_iterates[mask]]
    return float(np.mean(row_classes != target_classes))
