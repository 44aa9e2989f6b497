"""Multi-iterate randomized Kaczmarz solver for latent-class systems.

The solver keeps one iterate per class. Each step samples a row,
computes every iterate's residual coefficient on it, and projects the
iterate with the smallest coefficient magnitude (ties go to the lowest
index). With probability ``swap_probability`` the update is redirected
to a uniformly chosen iterate instead, keeping the argmin's step size
but the target's residual sign. Row mixing is what lets an iterate that
never wins the argmin still receive updates.

Per-step draw pattern, fixed so traces from different runs and solvers
line up: one uniform variate for the row, one for the swap test, and
one more only when the swap branch is taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    MAX_ASSIGNMENT_SIZE,
    best_assignment,
    matched_error_series,
)
from .kaczmarz import RNG_NAME, _distance_row, sample_row, sign
from .system import LinearSystem, RowDistribution
from .trace import StepRecord, Trace
from .validation import as_float_matrix, check_count, check_fraction, check_seed

__all__ = ["MrkConfig", "select_target", "mrk_step", "run_mrk"]


@dataclass
class MrkConfig:
    """Knobs of a multi-iterate run.

    ``record_iterates`` additionally stores every iterate position
    (N+1, n_iterates, d), which trajectory plots of low-dimensional
    problems use.
    """

    swap_probability: float
    iterations: int
    distribution: RowDistribution
    seed: int
    record_iterates: bool = False

    def __post_init__(self) -> None:
        self.swap_probability = check_fraction(self.swap_probability, "swap_probability")
        self.iterations = check_count(self.iterations, "iterations")
        self.seed = check_seed(self.seed)
        if not isinstance(self.distribution, RowDistribution):
            raise TypeError("distribution must be a RowDistribution")


def select_target(
    argmin_index: int,
    n_iterates: int,
    swap_probability: float,
    rng: np.random.Generator,
) -> tuple[int, bool]:
    """Pick the update target: the argmin iterate, or a uniform swap.

    Returns ``(target, swapped)``. Keeps the argmin with probability
    ``1 - swap_probability``; otherwise draws the target uniformly over
    all iterates, so the argmin is kept with total probability
    ``1 - r + r / n_iterates``. Consumes one uniform variate, plus one
    more only when the swap branch is taken.
    """
    if rng.random() < swap_probability:
        target = int(n_iterates * rng.random())
        if target >= n_iterates:  # guard the measure-zero top edge
            target = n_iterates - 1
        return target, True
    return argmin_index, False


def _step_inplace(
    iterates: np.ndarray,
    matrix: np.ndarray,
    rhs: np.ndarray,
    norms_sq: np.ndarray,
    row_index: int,
    swap_probability: float,
    rng: np.random.Generator,
    coefficients_out: np.ndarray,
) -> tuple[int, int, bool, float, float]:
    """One solver step, mutating ``iterates`` and ``coefficients_out``."""
    row = matrix[row_index]
    b_i = rhs[row_index]
    nsq = norms_sq[row_index]
    n_iterates = iterates.shape[0]
    for i in range(n_iterates):
        coefficients_out[i] = (np.dot(row, iterates[i]) - b_i) / nsq
    s = int(np.argmin(np.abs(coefficients_out)))
    t, swapped = select_target(s, n_iterates, swap_probability, rng)
    magnitude_coeff = abs(coefficients_out[s])
    step_coeff = magnitude_coeff * sign(coefficients_out[t])
    if step_coeff != 0.0:
        iterates[t] -= step_coeff * row
    return s, t, swapped, float(step_coeff), float(magnitude_coeff * math.sqrt(nsq))


def mrk_step(
    iterates,
    system: LinearSystem,
    row_index: int,
    swap_probability: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, StepRecord]:
    """Apply one step for a given sampled row; pure in ``iterates``.

    Only the target iterate changes; all others are returned bitwise
    unchanged. A zero argmin coefficient leaves even the target bitwise
    unchanged.
    """
    x = np.array(as_float_matrix(iterates, "iterates"))
    if x.shape[1] != system.n_cols:
        raise ValueError(
            f"iterates have dimension {x.shape[1]}, system has {system.n_cols}"
        )
    row_index = check_count(row_index, "row_index")
    if row_index >= system.n_rows:
        raise ValueError(f"row_index {row_index} out of range [0, {system.n_rows})")
    swap_probability = check_fraction(swap_probability, "swap_probability")

    coefficients = np.empty(x.shape[0])
    s, t, swapped, _, magnitude = _step_inplace(
        x,
        system.matrix,
        system.rhs,
        system.row_norms_sq,
        row_index,
        swap_probability,
        rng,
        coefficients,
    )
    record = StepRecord(
        step=0,
        sampled_row=row_index,
        argmin_iterate=s,
        target_iterate=t,
        coefficients=tuple(float(c) for c in coefficients),
        update_magnitude=magnitude,
        swap_triggered=swapped,
    )
    return x, record


def run_mrk(system: LinearSystem, initial_iterates, config: MrkConfig) -> Trace:
    """Run the multi-iterate solver and collect a full trace.

    Parameters
    ----------
    system : LinearSystem
        Rows of all classes, in any order. When the system carries as
        many planted solutions as there are iterates, per-step squared
        errors are recorded: each iterate is measured against the
        solution assigned to it by the best final-step pairing, applied
        retroactively to the whole series, and the per-step best-pairing
        total is recorded alongside.
    initial_iterates : (n_iterates, d) array
        One starting point per class.
    config : MrkConfig
        Swap probability, budget, row distribution, and seed. The run
        is a deterministic function of these and the system.
    """
    x = np.array(as_float_matrix(initial_iterates, "initial_iterates"))
    n_iterates, dim = x.shape
    if dim != system.n_cols:
        raise ValueError(
            f"initial iterates have dimension {dim}, system has {system.n_cols}"
        )
    distribution = config.distribution
    if distribution.n_rows != system.n_rows:
        raise ValueError(
            f"distribution covers {distribution.n_rows} rows, "
            f"system has {system.n_rows}"
        )

    iterations = config.iterations
    swap_probability = config.swap_probability
    matrix = system.matrix
    rhs = system.rhs
    norms_sq = system.row_norms_sq
    solutions = system.solutions
    track = solutions is not None and solutions.shape[0] == n_iterates
    matchable = track and n_iterates <= MAX_ASSIGNMENT_SIZE

    rng = np.random.default_rng(config.seed)
    sampled = np.empty(iterations, dtype=np.int64)
    argmins = np.empty(iterations, dtype=np.int64)
    targets = np.empty(iterations, dtype=np.int64)
    coefficients = np.empty((iterations, n_iterates))
    magnitudes = np.empty(iterations)
    swaps = np.empty(iterations, dtype=bool)

    distance_history = None
    initial_distances = None
    if track:
        initial_distances = np.stack(
            [_distance_row(x[i], solutions) for i in range(n_iterates)]
        )
        distances = initial_distances.copy()
        distance_history = np.empty((iterations, n_iterates, n_iterates))
    history = None
    if config.record_iterates:
        history = np.empty((iterations + 1, n_iterates, dim))
        history[0] = x

    for k in range(iterations):
        i = sample_row(distribution, rng)
        s, t, swapped, step_coeff, magnitude = _step_inplace(
            x, matrix, rhs, norms_sq, i, swap_probability, rng, coefficients[k]
        )
        sampled[k] = i
        argmins[k] = s
        targets[k] = t
        swaps[k] = swapped
        magnitudes[k] = magnitude
        if track:
            if step_coeff != 0.0:
                distances[t] = _distance_row(x[t], solutions)
            distance_history[k] = distances
        if history is not None:
            history[k + 1] = x

    errors = None
    matched = None
    initial_errors = None
    initial_matched = None
    labeling = None
    labeling_rule = None
    if track:
        final_distances = distances if iterations > 0 else initial_distances
        if matchable:
            assignment, _ = best_assignment(final_distances)
            labeling = np.array(assignment, dtype=np.int64)
            matched = matched_error_series(distance_history)
            initial_matched = float(
                matched_error_series(initial_distances[None, :, :])[0]
            )
            labeling_rule = "matched-final"
        else:
            labeling = np.arange(n_iterates, dtype=np.int64)
            labeling_rule = "identity (assignment search capped at 8 iterates)"
        idx = np.arange(n_iterates)
        errors = distance_history[:, idx, labeling]
        initial_errors = initial_distances[idx, labeling]

    return Trace(
        n_iterates=n_iterates,
        sampled_rows=sampled,
        argmin_iterates=argmins,
        target_iterates=targets,
        coefficients=coefficients,
        update_magnitudes=magnitudes,
        swap_flags=swaps,
        final_iterates=x,
        errors=errors,
        matched_errors=matched,
        initial_errors=initial_errors,
        initial_matched_error=initial_matched,
        labeling=labeling,
        iterate_history=history,
        metadata={
            "solver": "mrk",
            "seed": config.seed,
            "swap_probability": swap_probability,
            "iterations": iterations,
            "distribution": distribution.kind,
            "rng": RNG_NAME,
            "n_rows": system.n_rows,
            "n_cols": system.n_cols,
            "n_iterates": n_iterates,
            "labeling_rule": labeling_rule,
        },
    )
