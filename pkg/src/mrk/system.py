"""Linear system container and row-sampling distributions.

A :class:`LinearSystem` is a stack of row equations ``matrix @ x = rhs``.
When the rows come from several regressors, each row can carry a class
label and the system can carry the planted per-class solutions, which is
what the error diagnostics in :mod:`mrk.analysis` consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import as_float_matrix, as_float_vector

__all__ = ["LinearSystem", "RowDistribution", "CONSISTENCY_RTOL"]

# A labelled row is accepted as consistent when |row . x_label - rhs|
# is below this tolerance relative to 1 + |rhs|.
CONSISTENCY_RTOL = 1e-9


@dataclass
class LinearSystem:
    """Row-stacked linear system with optional class structure.

    Parameters
    ----------
    matrix : (m, d) array
        Row coefficients. Every row must have a nonzero norm.
    rhs : (m,) array
        Right-hand side, one value per row.
    labels : (m,) int array, optional
        Class index of each row, in ``0..n_classes-1``.
    solutions : (n_classes, d) array, optional
        Planted solution of each class. When both labels and solutions
        are present, every row must be consistent with its own class
        solution to within ``CONSISTENCY_RTOL``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    labels: np.ndarray | None = None
    solutions: np.ndarray | None = None
    row_norms_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.matrix = as_float_matrix(self.matrix, "matrix")
        m, _ = self.matrix.shape
        self.rhs = as_float_vector(self.rhs, "rhs", length=m)

        self.row_norms_sq = np.einsum("ij,ij->i", self.matrix, self.matrix)
        zero_rows = np.flatnonzero(self.row_norms_sq == 0.0)
        if zero_rows.size:
            raise ValueError(f"matrix row {zero_rows[0]} has zero norm")

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (m,):
                raise ValueError(f"labels must have shape ({m},), got {labels.shape}")
            if not np.issubdtype(labels.dtype, np.integer):
                raise ValueError("labels must be integers")
            if labels.min() < 0:
                raise ValueError("labels must be non-negative")
            self.labels = np.ascontiguousarray(labels, dtype=np.int64)

        if self.solutions is not None:
            self.solutions = as_float_matrix(self.solutions, "solutions")
            if self.solutions.shape[1] != self.n_cols:
                raise ValueError(
                    f"solutions must have {self.n_cols} columns, "
                    f"got {self.solutions.shape[1]}"
                )

        if self.labels is not None and self.solutions is not None:
            if int(self.labels.max()) >= self.solutions.shape[0]:
                raise ValueError(
                    f"label {int(self.labels.max())} has no matching solution"
                )
            predicted = np.einsum(
                "ij,ij->i", self.matrix, self.solutions[self.labels]
            )
            gap = np.abs(predicted - self.rhs)
            bad = np.flatnonzero(gap > CONSISTENCY_RTOL * (1.0 + np.abs(self.rhs)))
            if bad.size:
                row = int(bad[0])
                raise ValueError(
                    f"row {row} is inconsistent with solution of class "
                    f"{int(self.labels[row])} (residual {gap[row]:.3e})"
                )

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_classes(self) -> int | None:
        """Number of classes, when the system carries class structure."""
        if self.solutions is not None:
            return self.solutions.shape[0]
        if self.labels is not None:
            return int(self.labels.max()) + 1
        return None

    def class_counts(self) -> np.ndarray:
        """Rows per class; requires labels."""
        if self.labels is not None:
            n = int(self.labels.max()) + 1
            if self.solutions is not None:
                n = max(n, self.solutions.shape[0])
            return np.bincount(self.labels, minlength=n)
        raise ValueError("system has no labels")

    def class_block(self, class_index: int) -> np.ndarray:
        """Submatrix of the rows labelled ``class_index``."""
        if self.labels is None:
            raise ValueError("system has no labels")
        return self.matrix[self.labels == class_index]


@dataclass
class RowDistribution:
    """Sampling distribution over the rows of a system.

    ``kind`` is either ``"uniform"`` or ``"sqnorm"`` (probability
    proportional to the squared row norm). Weights are normalised and
    validated; a cumulative table is cached for constant-draw sampling.
    """

    kind: str
    weights: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    KINDS = ("uniform", "sqnorm")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        self.weights = as_float_vector(self.weights, "weights")
        if self.weights.size == 0:
            raise ValueError("weights must be non-empty")
        if np.any(self.weights < 0.0):
            raise ValueError("weights must be non-negative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        self.cumulative = np.cumsum(self.weights)
        # Guard the top end so a uniform draw in [0, 1) always lands
        # inside the table.
        self.cumulative[-1] = 1.0

    @property
    def n_rows(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def uniform(cls, n_rows: int) -> "RowDistribution":
        if n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        return cls("uniform", np.full(n_rows, 1.0 / n_rows))

    @classmethod
    def squared_row_norm(cls, system: LinearSystem) -> "RowDistribution":
        weights = system.row_norms_sq / system.row_norms_sq.sum()
        return cls("sqnorm", weights)

    @classmethod
    def from_name(cls, name: str, system: LinearSystem) -> "RowDistribution":
        if name == "uniform":
            return cls.uniform(system.n_rows)
        if name == "sqnorm":
            return cls.squared_row_norm(system)
        raise ValueError(f"unknown distribution kind {name!r}")
