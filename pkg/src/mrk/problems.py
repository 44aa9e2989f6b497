"""Problem construction: synthetic generators, dataset loading, planting.

Synthetic systems draw one Gaussian row block and one planted solution
per class from a single seeded generator, so a spec and a seed pin the
system exactly. Real data enters through a delimited-text loader plus
:func:`build_planted_from_matrix`, which turns any full-rank row blocks
into a consistent labelled system with known solutions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .system import LinearSystem
from .validation import as_float_matrix, check_count, check_seed

__all__ = [
    "ClassSpec",
    "GeneratorSpec",
    "ShuffleRecord",
    "generate_synthetic",
    "shuffle_rows",
    "load_delimited_dataset",
    "build_planted_from_matrix",
]


@dataclass(frozen=True)
class ClassSpec:
    """One class block: row count and i.i.d. normal entry parameters."""

    rows: int
    entry_mean: float
    entry_spread: float


@dataclass
class GeneratorSpec:
    """Recipe for a synthetic labelled system.

    Every class block must have at least ``dimension`` rows and a
    positive entry spread; planted solutions have i.i.d. normal entries
    with standard deviation ``solution_spread``. With ``shuffle`` the
    rows of all classes are interleaved by a random permutation drawn
    from the same generator.
    """

    classes: list[ClassSpec]
    dimension: int
    solution_spread: float = 1.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if not self.classes:
            raise ValueError("at least one class is required")
        self.dimension = check_count(self.dimension, "dimension", minimum=1)
        self.seed = check_seed(self.seed)
        if not self.solution_spread > 0.0:
            raise ValueError(
                f"solution_spread must be positive, got {self.solution_spread}"
            )
        for j, spec in enumerate(self.classes):
            if spec.rows < self.dimension:
                raise ValueError(
                    f"class {j} has {spec.rows} rows, fewer than "
                    f"dimension {self.dimension}"
                )
            if not spec.entry_spread > 0.0:
                raise ValueError(
                    f"class {j} entry_spread must be positive, got {spec.entry_spread}"
                )


@dataclass(frozen=True)
class ShuffleRecord:
    """Permutation applied to a system's rows, with its inverse."""

    permutation: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        perm = np.asarray(self.permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("permutation must contain each index exactly once")
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "inverse", np.argsort(perm))


def generate_synthetic(spec: GeneratorSpec) -> LinearSystem:
    """Draw a labelled, consistent system from a generator spec.

    Per class, in order: the row block, then the planted solution; the
    optional shuffle permutation is drawn last. The right-hand side of
    each row is its row dotted with its own class solution.
    """
    rng = np.random.default_rng(spec.seed)
    blocks = []
    solutions = []
    rhs_parts = []
    labels_parts = []
    for j, class_spec in enumerate(spec.classes):
        block = rng.normal(
            class_spec.entry_mean,
            class_spec.entry_spread,
            size=(class_spec.rows, spec.dimension),
        )
        solution = rng.normal(0.0, spec.solution_spread, size=spec.dimension)
        blocks.append(block)
        solutions.append(solution)
        rhs_parts.append(block @ solution)
        labels_parts.append(np.full(class_spec.rows, j, dtype=np.int64))

    matrix = np.vstack(blocks)
    rhs = np.concatenate(rhs_parts)
    labels = np.concatenate(labels_parts)
    if spec.shuffle:
        perm = rng.permutation(matrix.shape[0])
        matrix, rhs, labels = matrix[perm], rhs[perm], labels[perm]
    return LinearSystem(
        matrix=matrix,
        rhs=rhs,
        labels=labels,
        solutions=np.vstack(solutions),
    )


def shuffle_rows(system: LinearSystem, seed: int) -> tuple[LinearSystem, ShuffleRecord]:
    """Reorder a system's rows by a seeded random permutation."""
    seed = check_seed(seed)
    perm = np.random.default_rng(seed).permutation(system.n_rows)
    shuffled = LinearSystem(
        matrix=system.matrix[perm],
        rhs=system.rhs[perm],
        labels=None if system.labels is None else system.labels[perm],
        solutions=system.solutions,
    )
    return shuffled, ShuffleRecord(permutation=perm)


def load_delimited_dataset(
    path,
    missing_token: str = "?",
    impute: str = "median",
    drop_first_column: bool = False,
) -> np.ndarray:
    """Load a delimited numeric table, imputing missing cells per column.

    Parameters
    ----------
    path : str or Path
        Comma-delimited text file without a header row.
    missing_token : str
        Cell content standing for a missing value.
    impute : {"median", "mean"}
        Column statistic (over the present values) filled into missing
        cells. Every row is retained.
    drop_first_column : bool
        Drop the leading column before parsing values; for files whose
        first column is a record identifier.

    Raises
    ------
    ValueError
        On ragged rows, non-numeric cells (reported with 1-based row
        and column), or a column with no present values.
    OSError
        When the file cannot be read.
    """
    if impute not in ("median", "mean"):
        raise ValueError(f"unknown imputation rule {impute!r}")
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as handle:
        for line_number, record in enumerate(csv.reader(handle), start=1):
            if not record:
                continue
            fields = record[1:] if drop_first_column else record
            if width is None:
                width = len(fields)
                if width == 0:
                    raise ValueError(f"row {line_number} has no data columns")
            elif len(fields) != width:
                raise ValueError(
                    f"row {line_number} has {len(fields)} data columns, "
                    f"expected {width}"
                )
            values = []
            for offset, cell in enumerate(fields):
                cell = cell.strip()
                if cell == missing_token:
                    values.append(np.nan)
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    column = offset + (2 if drop_first_column else 1)
                    raise ValueError(
                        f"row {line_number}, column {column}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(values)
    if not rows:
        raise ValueError(f"no data rows in {path}")

    data = np.asarray(rows, dtype=np.float64)
    missing = np.isnan(data)
    if missing.any():
        empty = np.flatnonzero(missing.all(axis=0))
        if empty.size:
            raise ValueError(f"column {empty[0] + 1} has no present values")
        stat = np.nanmedian if impute == "median" else np.nanmean
        fill = stat(data, axis=0)
        data[missing] = np.broadcast_to(fill, data.shape)[missing]
    return data


def build_planted_from_matrix(
    data,
    split_sizes,
    solution_seed: int,
) -> LinearSystem:
    """Split a data matrix into class blocks and plant a solution per block.

    Rows are assigned to classes in order: the first ``split_sizes[0]``
    rows form class 0, and so on; the sizes must sum to the row count
    and each must be at least the column count. Solutions have i.i.d.
    standard normal entries drawn from ``solution_seed``, one vector per
    class in order. A rank-deficient block is rejected.
    """
    data = as_float_matrix(data, "data")
    solution_seed = check_seed(solution_seed, "solution_seed")
    sizes = [check_count(s, "split size", minimum=1) for s in split_sizes]
    if not sizes:
        raise ValueError("split_sizes must be non-empty")
    m, d = data.shape
    if sum(sizes) != m:
        raise ValueError(
            f"split sizes {sizes} sum to {sum(sizes)}, data has {m} rows"
        )
    for j, size in enumerate(sizes):
        if size < d:
            raise ValueError(
                f"class {j} has {size} rows, fewer than dimension {d}"
            )

    rng = np.random.default_rng(solution_seed)
    rhs = np.empty(m)
    labels = np.empty(m, dtype=np.int64)
    solutions = np.empty((len(sizes), d))
    start = 0
    for j, size in enumerate(sizes):
        block = data[start : start + size]
        if np.linalg.matrix_rank(block) < d:
            raise ValueError(f"class {j} block is rank-deficient")
        solutions[j] = rng.standard_normal(d)
        rhs[start : start + size] = block @ solutions[j]
        labels[start : start + size] = j
        start += size
    return LinearSystem(matrix=data, rhs=rhs, labels=labels, solutions=solutions)
