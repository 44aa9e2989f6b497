"""Per-step solver traces.

A :class:`Trace` stores one :class:`StepRecord` worth of data per
iteration in columnar arrays, which keeps long runs cheap while still
letting callers iterate over records for serialisation and testing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = ["StepRecord", "Trace"]


@dataclass(frozen=True)
class StepRecord:
    """What happened in one solver step.

    ``coefficients`` holds the residual coefficient of every iterate on
    the sampled row; ``update_magnitude`` is the Euclidean length of the
    applied update, |c_argmin| * ||row||. ``errors`` are the per-iterate
    squared errors after the step under the trace labelling, present
    only when the system carries planted solutions.
    """

    step: int
    sampled_row: int
    argmin_iterate: int
    target_iterate: int
    coefficients: tuple[float, ...]
    update_magnitude: float
    swap_triggered: bool
    errors: tuple[float, ...] | None = None

    def to_json_dict(self) -> dict:
        record = {
            "k": self.step,
            "i_k": self.sampled_row,
            "s_k": self.argmin_iterate,
            "t_k": self.target_iterate,
            "c": list(self.coefficients),
            "mag": self.update_magnitude,
            "swap": self.swap_triggered,
        }
        if self.errors is not None:
            record["err"] = list(self.errors)
        return record

    @classmethod
    def from_json_dict(cls, record: dict) -> "StepRecord":
        errors = record.get("err")
        return cls(
            step=int(record["k"]),
            sampled_row=int(record["i_k"]),
            argmin_iterate=int(record["s_k"]),
            target_iterate=int(record["t_k"]),
            coefficients=tuple(float(c) for c in record["c"]),
            update_magnitude=float(record["mag"]),
            swap_triggered=bool(record["swap"]),
            errors=None if errors is None else tuple(float(e) for e in errors),
        )


@dataclass
class Trace:
    """Columnar record of a solver run.

    Error fields are populated only when the solved system carried
    planted solutions. ``labeling`` maps each iterate to the solution
    index it is measured against (the assignment that minimises the
    total squared error at the final step, applied retroactively to the
    whole series); ``matched_errors`` is the per-step minimum over all
    iterate/solution assignments.
    """

    n_iterates: int
    sampled_rows: np.ndarray
    argmin_iterates: np.ndarray
    target_iterates: np.ndarray
    coefficients: np.ndarray
    update_magnitudes: np.ndarray
    swap_flags: np.ndarray
    final_iterates: np.ndarray
    errors: np.ndarray | None = None
    matched_errors: np.ndarray | None = None
    initial_errors: np.ndarray | None = None
    initial_matched_error: float | None = None
    labeling: np.ndarray | None = None
    iterate_history: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.n_steps
        for name in (
            "argmin_iterates",
            "target_iterates",
            "update_magnitudes",
            "swap_flags",
        ):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} must have length {n}")
        if self.coefficients.shape != (n, self.n_iterates):
            raise ValueError(
                f"coefficients must have shape ({n}, {self.n_iterates})"
            )
        if self.errors is not None and self.errors.shape != (n, self.n_iterates):
            raise ValueError(f"errors must have shape ({n}, {self.n_iterates})")
        if self.matched_errors is not None and self.matched_errors.shape[0] != n:
            raise ValueError(f"matched_errors must have length {n}")

    @property
    def n_steps(self) -> int:
        return self.sampled_rows.shape[0]

    def final_errors(self) -> np.ndarray:
        """Per-iterate squared errors after the last step."""
        if self.errors is None:
            raise ValueError("trace has no error series")
        if self.n_steps == 0:
            if self.initial_errors is None:
                raise ValueError("trace has no error series")
            return self.initial_errors
        return self.errors[-1]

    def error_table(self) -> np.ndarray:
        """Error series with the initial point prepended, shape (N+1, n+1)."""
        if self.errors is None or self.initial_errors is None:
            raise ValueError("trace has no error series")
        return np.vstack([self.initial_errors[None, :], self.errors])

    def step_records(self) -> Iterator[StepRecord]:
        for k in range(self.n_steps):
            errors = None
            if self.errors is not None:
                errors = tuple(float(e) for e in self.errors[k])
            yield StepRecord(
                step=k,
                sampled_row=int(self.sampled_rows[k]),
                argmin_iterate=int(self.argmin_iterates[k]),
                target_iterate=int(self.target_iterates[k]),
                coefficients=tuple(float(c) for c in self.coefficients[k]),
                update_magnitude=float(self.update_magnitudes[k]),
                swap_triggered=bool(self.swap_flags[k]),
                errors=errors,
            )
