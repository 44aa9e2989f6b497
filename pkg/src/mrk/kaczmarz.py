"""Classic randomized Kaczmarz primitives and the single-iterate solver.

These are the building blocks the multi-iterate solver composes:
residual coefficients, row projections, and single-draw row sampling.
``run_rk`` is the plain randomized Kaczmarz baseline; it consumes the
random stream with the same per-step draw pattern as the multi-iterate
solver so that runs with a shared seed stay comparable step for step.
"""

from __future__ import annotations

import math

import numpy as np

from .system import LinearSystem, RowDistribution
from .trace import Trace
from .validation import as_float_vector, check_count, check_seed

__all__ = [
    "residual_coefficient",
    "kaczmarz_update",
    "sample_row",
    "run_rk",
    "derive_purpose_seeds",
    "RNG_NAME",
]

# Bit generator behind np.random.default_rng, recorded in trace metadata.
RNG_NAME = "numpy-pcg64"


def derive_purpose_seeds(seed: int, count: int) -> list[int]:
    """Expand one seed into decorrelated sub-seeds for separate purposes.

    Callers that both build a problem and solve it from a single seed
    (trial runners, estimators) give each purpose its own stream, so no
    uniform draw is shared between, say, matrix entries and row picks.
    """
    state = np.random.SeedSequence(check_seed(seed)).generate_state(count, dtype=np.uint64)
    return [int(value) for value in state]

# A single-iterate run flags the system as suspect when the largest
# scaled residual still exceeds this after the full budget. Heuristic:
# an undersized budget can trip it on a consistent system.
INCONSISTENCY_RTOL = 1e-6


def sign(value: float) -> float:
    """Sign with sign(0) = 0."""
    if value == 0.0:
        return 0.0
    return math.copysign(1.0, value)


def residual_coefficient(row, rhs_value: float, x, row_norm_sq: float | None = None) -> float:
    """Signed residual of ``x`` on one row, scaled by the squared row norm.

    This is ``(row . x - rhs) / ||row||^2``: the coefficient of the full
    Kaczmarz projection step along ``row``.
    """
    row = as_float_vector(row, "row")
    x = as_float_vector(x, "x", length=row.shape[0])
    if row_norm_sq is None:
        row_norm_sq = float(np.dot(row, row))
    if row_norm_sq <= 0.0:
        raise ValueError("row has zero norm")
    return float((np.dot(row, x) - rhs_value) / row_norm_sq)


def kaczmarz_update(x, row, rhs_value: float, row_norm_sq: float | None = None) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the hyperplane ``row . y = rhs``."""
    row = as_float_vector(row, "row")
    x = as_float_vector(x, "x", length=row.shape[0])
    if row_norm_sq is None:
        row_norm_sq = float(np.dot(row, row))
    if row_norm_sq <= 0.0:
        raise ValueError("row has zero norm")
    c = (np.dot(row, x) - rhs_value) / row_norm_sq
    return x - c * row


def sample_row(distribution: RowDistribution, rng: np.random.Generator) -> int:
    """Draw one row index; consumes exactly one uniform variate."""
    u = rng.random()
    return int(np.searchsorted(distribution.cumulative, u, side="right"))


def _distance_row(x: np.ndarray, solutions: np.ndarray) -> np.ndarray:
    """Squared distances from one point to each solution, shape (n_sol,)."""
    diff = x - solutions
    return (diff * diff).sum(axis=1)


def run_rk(
    system: LinearSystem,
    x0,
    iterations: int,
    distribution: RowDistribution,
    seed: int,
) -> Trace:
    """Run classic randomized Kaczmarz on a single-class system.

    Parameters
    ----------
    system : LinearSystem
        Must be single-class (at most one planted solution). Per-step
        squared errors are recorded when the solution is present.
    x0 : (d,) array
        Starting point.
    iterations : int
        Number of steps; 0 produces an empty trace.
    distribution : RowDistribution
        Row-sampling weights; must match the system's row count.
    seed : int
        Seed for the solver's own generator.

    Returns
    -------
    Trace
        With one iterate. Metadata carries an ``inconsistent_suspected``
        flag when residuals fail to vanish by the end of the run.
    """
    iterations = check_count(iterations, "iterations")
    seed = check_seed(seed)
    if system.n_classes is not None and system.n_classes != 1:
        raise ValueError(
            f"run_rk expects a single-class system, got {system.n_classes} classes"
        )
    if distribution.n_rows != system.n_rows:
        raise ValueError(
            f"distribution covers {distribution.n_rows} rows, "
            f"system has {system.n_rows}"
        )
    x = np.array(as_float_vector(x0, "x0", length=system.n_cols))

    matrix = system.matrix
    rhs = system.rhs
    norms_sq = system.row_norms_sq
    solutions = system.solutions
    track = solutions is not None and solutions.shape[0] == 1

    rng = np.random.default_rng(seed)
    sampled = np.empty(iterations, dtype=np.int64)
    coefficients = np.empty((iterations, 1))
    magnitudes = np.empty(iterations)
    errors = np.empty((iterations, 1)) if track else None
    initial_errors = _distance_row(x, solutions) if track else None

    for k in range(iterations):
        i = sample_row(distribution, rng)
        # Burn the swap-test draw of the multi-iterate solver so both
        # solvers consume identical random streams from a shared seed.
        rng.random()
        row = matrix[i]
        c = (np.dot(row, x) - rhs[i]) / norms_sq[i]
        if c != 0.0:
            x -= c * row
        sampled[k] = i
        coefficients[k, 0] = c
        magnitudes[k] = abs(c) * math.sqrt(norms_sq[i])
        if track:
            errors[k] = _distance_row(x, solutions)

    scaled_residual = float(
        np.max(np.abs(matrix @ x - rhs) / (1.0 + np.abs(rhs)))
    )
    zeros = np.zeros(iterations, dtype=np.int64)
    return Trace(
        n_iterates=1,
        sampled_rows=sampled,
        argmin_iterates=zeros,
        target_iterates=zeros.copy(),
        coefficients=coefficients,
        update_magnitudes=magnitudes,
        swap_flags=np.zeros(iterations, dtype=bool),
        final_iterates=x[None, :].copy(),
        errors=errors,
        matched_errors=errors[:, 0].copy() if track else None,
        initial_errors=initial_errors,
        initial_matched_error=float(initial_errors[0]) if track else None,
        labeling=np.zeros(1, dtype=np.int64) if track else None,
        metadata={
            "solver": "rk",
            "seed": seed,
            "iterations": iterations,
            "distribution": distribution.kind,
            "rng": RNG_NAME,
            "final_scaled_residual": scaled_residual,
            "inconsistent_suspected": bool(
                iterations > 0 and scaled_residual > INCONSISTENCY_RTOL
            ),
        },
    )
