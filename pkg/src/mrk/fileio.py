"""File formats: system/solution CSVs, trace JSON-Lines, summaries.

All floats are written with ``repr``, which round-trips binary64
exactly, so rewriting a file parsed from disk is byte-identical.
Traces serialise as one metadata line followed by one JSON object per
step with keys ``k, i_k, s_k, t_k, c, mag, swap`` and, when error
tracking was on, ``err``.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import AggregateSeries
from .system import LinearSystem
from .trace import StepRecord, Trace

__all__ = [
    "RunManifest",
    "write_system_csv",
    "read_system_csv",
    "solutions_sidecar_path",
    "write_solutions_csv",
    "read_solutions_csv",
    "write_trace_jsonl",
    "read_trace_jsonl",
    "write_summary_csv",
    "read_summary_csv",
    "write_aggregate_csv",
    "write_trajectory_csv",
    "write_manifest",
    "sha256_digest",
]


def _fmt(value: float) -> str:
    return repr(float(value))


def solutions_sidecar_path(system_path) -> Path:
    """Default sidecar location: ``system.csv`` -> ``system.solutions.csv``."""
    path = Path(system_path)
    return path.with_name(path.stem + ".solutions" + path.suffix)


def write_system_csv(system: LinearSystem, path) -> None:
    """Write rows as ``f1..fd,b[,label]`` with a header row."""
    header = [f"f{j + 1}" for j in range(system.n_cols)] + ["b"]
    if system.labels is not None:
        header.append("label")
    lines = [",".join(header)]
    for i in range(system.n_rows):
        cells = [_fmt(v) for v in system.matrix[i]]
        cells.append(_fmt(system.rhs[i]))
        if system.labels is not None:
            cells.append(str(int(system.labels[i])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_system_csv(path, solutions_path=None) -> LinearSystem:
    """Parse a system CSV; attaches solutions when available.

    ``solutions_path`` overrides the default sidecar; when omitted the
    sidecar is attached only if it exists.
    """
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path} is empty") from None
        header = [cell.strip() for cell in header]
        has_label = header and header[-1] == "label"
        feature_names = header[:-2] if has_label else header[:-1]
        b_index = len(feature_names)
        if (
            not feature_names
            or header[b_index] != "b"
            or any(
                name != f"f{j + 1}" for j, name in enumerate(feature_names)
            )
        ):
            raise ValueError(
                f"{path} has an unrecognised header {header!r}; "
                "expected f1..fd,b[,label]"
            )
        matrix_rows = []
        rhs = []
        labels = [] if has_label else None
        for line_number, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(
                    f"{path} row {line_number} has {len(record)} cells, "
                    f"expected {len(header)}"
                )
            try:
                matrix_rows.append([float(c) for c in record[:b_index]])
                rhs.append(float(record[b_index]))
                if has_label:
                    labels.append(int(record[b_index + 1]))
            except ValueError as exc:
                raise ValueError(f"{path} row {line_number}: {exc}") from None

    solutions = None
    if solutions_path is not None:
        solutions = read_solutions_csv(solutions_path)
    else:
        sidecar = solutions_sidecar_path(path)
        if sidecar.exists():
            solutions = read_solutions_csv(sidecar)
    return LinearSystem(
        matrix=np.asarray(matrix_rows),
        rhs=np.asarray(rhs),
        labels=None if labels is None else np.asarray(labels, dtype=np.int64),
        solutions=solutions,
    )


def write_solutions_csv(solutions: np.ndarray, path) -> None:
    """One comma-delimited solution vector per line, in class order."""
    solutions = np.asarray(solutions, dtype=np.float64)
    lines = [",".join(_fmt(v) for v in row) for row in solutions]
    Path(path).write_text("\n".join(lines) + "\n")


def read_solutions_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as handle:
        for line_number, record in enumerate(csv.reader(handle), start=1):
            if not record:
                continue
            try:
                rows.append([float(c) for c in record])
            except ValueError as exc:
                raise ValueError(f"{path} row {line_number}: {exc}") from None
    if not rows:
        raise ValueError(f"no solutions in {path}")
    return np.asarray(rows)


def _trace_meta(trace: Trace) -> dict:
    return {
        "n_iterates": trace.n_iterates,
        "n_steps": trace.n_steps,
        "labeling": None if trace.labeling is None else trace.labeling.tolist(),
        "initial_errors": (
            None if trace.initial_errors is None else trace.initial_errors.tolist()
        ),
        "initial_matched_error": trace.initial_matched_error,
        "run": trace.metadata,
    }


def write_trace_jsonl(trace: Trace, path) -> None:
    """Metadata header line, then one step record per line."""
    with open(path, "w") as handle:
        handle.write(json.dumps({"meta": _trace_meta(trace)}, sort_keys=True) + "\n")
        for record in trace.step_records():
            handle.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")


def read_trace_jsonl(path) -> tuple[dict, list[StepRecord]]:
    """Parse a trace file back into its metadata and step records."""
    with open(path) as handle:
        first = handle.readline()
        if not first:
            raise ValueError(f"{path} is empty")
        header = json.loads(first)
        if "meta" not in header:
            raise ValueError(f"{path} lacks the metadata header line")
        records = [
            StepRecord.from_json_dict(json.loads(line))
            for line in handle
            if line.strip()
        ]
    return header["meta"], records


def write_summary_csv(trace: Trace, path) -> None:
    """Per-iteration squared errors, initial point included."""
    table = trace.error_table()
    header = ["iteration"] + [f"err{i}" for i in range(trace.n_iterates)]
    lines = [",".join(header)]
    for k, row in enumerate(table):
        lines.append(",".join([str(k)] + [_fmt(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary_csv(path) -> np.ndarray:
    """Error columns of a summary file, shape (n_points, n_iterates)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if not header or header[0] != "iteration":
            raise ValueError(f"{path} is not a summary file")
        rows = [[float(c) for c in record[1:]] for record in reader if record]
    return np.asarray(rows)


def write_aggregate_csv(aggregate: AggregateSeries, path) -> None:
    """Across-trial percentiles: 1 + 3 * n_iterates columns."""
    header = ["iteration"]
    for i in range(aggregate.n_iterates):
        header += [f"median_{i}", f"q25_{i}", f"q75_{i}"]
    lines = [",".join(header)]
    for k in range(aggregate.n_points):
        cells = [str(aggregate.first_iteration + k)]
        for i in range(aggregate.n_iterates):
            cells += [
                _fmt(aggregate.median[k, i]),
                _fmt(aggregate.q25[k, i]),
                _fmt(aggregate.q75[k, i]),
            ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory_csv(trace: Trace, path) -> None:
    """Iterate coordinates per iteration; requires a recorded history."""
    if trace.iterate_history is None:
        raise ValueError("trace has no recorded iterate history")
    history = trace.iterate_history
    _, n_iterates, dim = history.shape
    header = ["iteration"] + [
        f"x{i}_{j + 1}" for i in range(n_iterates) for j in range(dim)
    ]
    lines = [",".join(header)]
    for k, positions in enumerate(history):
        lines.append(",".join([str(k)] + [_fmt(v) for v in positions.ravel()]))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class RunManifest:
    """Resolved invocation record written next to command outputs."""

    command: str
    config: dict
    inputs: dict
    outputs: list
    rng: str
    wall_seconds: float

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "rng": self.rng,
            "wall_seconds": self.wall_seconds,
        }


def write_manifest(manifest: RunManifest, path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_json_dict(), sort_keys=True, indent=2) + "\n"
    )


def sha256_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
