"""Command-line interface: gen, run, experiment, bound.

Every command is a deterministic function of its flags and input
files: rerunning with the same arguments reproduces the primary output
files byte for byte (the manifest's wall-clock field is the one
exception). See the README for the file formats.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .analysis import bound_matrix, empirical_mistake_rate, rk_contraction_constant
from .experiments import (
    DATA_ENV_VAR,
    load_dataset_matrix,
    resolve_data_path,
    resolve_preset,
    run_experiment,
)
from .fileio import (
    RunManifest,
    sha256_digest,
    solutions_sidecar_path,
    write_aggregate_csv,
    write_manifest,
    write_solutions_csv,
    write_summary_csv,
    write_system_csv,
    write_trace_jsonl,
    write_trajectory_csv,
)
from .kaczmarz import RNG_NAME, derive_purpose_seeds, run_rk
from .problems import ClassSpec, GeneratorSpec, generate_synthetic
from .solver import MrkConfig, run_mrk
from .system import RowDistribution
from .fileio import read_system_csv

__all__ = ["main", "build_parser"]


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{flag} expects comma-separated numbers")


def _parse_ints(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{flag} expects comma-separated integers")


def _broadcast(values: list[float], count: int, flag: str) -> list[float]:
    if len(values) == 1:
        return values * count
    if len(values) != count:
        raise ValueError(f"{flag} needs 1 or {count} values, got {len(values)}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrk",
        description="Multi-iterate randomized Kaczmarz solver and experiment runner.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser(
        "gen", help="generate a synthetic labelled system with planted solutions"
    )
    gen.add_argument("--spec", help="JSON generator spec file (overridden by flags)")
    gen.add_argument("--rows", help="rows per class, comma-separated")
    gen.add_argument("--dim", type=int, help="number of features")
    gen.add_argument("--means", default="0.0", help="entry mean per class")
    gen.add_argument("--spreads", default="1.0", help="entry std dev per class")
    gen.add_argument("--solution-spread", type=float, default=1.0)
    gen.add_argument("--no-shuffle", action="store_true", help="keep class blocks contiguous")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")

    run = commands.add_parser("run", help="run the solver on a system file")
    run.add_argument("system", help="system CSV (f1..fd,b[,label])")
    run.add_argument("--solutions", help="solutions CSV; default: sidecar next to the system")
    run.add_argument("--classes", type=int, default=2, help="number of iterates")
    run.add_argument("--swap-prob", type=float, default=0.0)
    run.add_argument("--iters", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--dist", choices=RowDistribution.KINDS, default="uniform")
    run.add_argument("--trace", required=True, help="output trace path (JSON-Lines)")
    run.add_argument("--summary", help="output summary CSV; default: <trace>.summary.csv")
    run.add_argument(
        "--require-errors",
        action="store_true",
        help="fail unless per-step errors can be recorded",
    )

    experiment = commands.add_parser(
        "experiment", help="run a figure-reproduction preset"
    )
    experiment.add_argument("preset", choices=["fig1", "fig2", "fig3"])
    experiment.add_argument("--out", required=True, help="output directory")
    experiment.add_argument("--seed", type=int, default=0)
    experiment.add_argument("--trials", type=int)
    experiment.add_argument("--iters", type=int)
    experiment.add_argument("--swap-prob", type=float)
    experiment.add_argument("--dist", choices=RowDistribution.KINDS)
    experiment.add_argument("--rows", help="override rows per class, comma-separated")
    experiment.add_argument(
        "--data", help=f"dataset file for fig3; default: ${DATA_ENV_VAR}"
    )
    experiment.add_argument("--jobs", type=int, default=1, help="parallel trial processes")

    bound = commands.add_parser(
        "bound", help="evaluate the theoretical one-step bound matrix"
    )
    bound.add_argument("--counts", help="rows per class, comma-separated")
    bound.add_argument("--c", type=float, help="RK constant bound in (0, 1]")
    bound.add_argument("--q", type=float, default=0.0, help="mistake probability")
    bound.add_argument("--r", type=float, default=0.0, help="swap probability")
    bound.add_argument(
        "--from-system",
        help="labelled system CSV; c becomes the max per-class RK constant",
    )
    return parser


def _cmd_gen(args) -> int:
    started = time.perf_counter()
    if args.spec:
        raw = json.loads(Path(args.spec).read_text())
        classes = [
            ClassSpec(int(c["rows"]), float(c["mean"]), float(c["spread"]))
            for c in raw["classes"]
        ]
        spec = GeneratorSpec(
            classes=classes,
            dimension=int(raw["dimension"]),
            solution_spread=float(raw.get("solution_spread", 1.0)),
            seed=int(raw.get("seed", args.seed)),
            shuffle=bool(raw.get("shuffle", not args.no_shuffle)),
        )
    else:
        if not args.rows or args.dim is None:
            raise ValueError("gen needs --rows and --dim (or --spec)")
        rows = _parse_ints(args.rows, "--rows")
        means = _broadcast(_parse_floats(args.means, "--means"), len(rows), "--means")
        spreads = _broadcast(
            _parse_floats(args.spreads, "--spreads"), len(rows), "--spreads"
        )
        spec = GeneratorSpec(
            classes=[
                ClassSpec(r, mean, spread)
                for r, mean, spread in zip(rows, means, spreads)
            ],
            dimension=args.dim,
            solution_spread=args.solution_spread,
            seed=args.seed,
            shuffle=not args.no_shuffle,
        )

    system = generate_synthetic(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    system_path = out_dir / "system.csv"
    solutions_path = solutions_sidecar_path(system_path)
    write_system_csv(system, system_path)
    write_solutions_csv(system.solutions, solutions_path)
    manifest = RunManifest(
        command="gen",
        config={
            "classes": [asdict(c) for c in spec.classes],
            "dimension": spec.dimension,
            "solution_spread": spec.solution_spread,
            "seed": spec.seed,
            "shuffle": spec.shuffle,
        },
        inputs={},
        outputs=[str(system_path), str(solutions_path)],
        rng=RNG_NAME,
        wall_seconds=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir / "manifest.json")
    print(f"seed: {spec.seed}")
    print(f"wrote {system_path} ({system.n_rows} rows) and {solutions_path}")
    return 0


def _cmd_run(args) -> int:
    started = time.perf_counter()
    system = read_system_csv(args.system, solutions_path=args.solutions)
    n_classes = args.classes
    if n_classes < 1:
        raise ValueError("--classes must be >= 1")
    trackable = (
        system.solutions is not None and system.solutions.shape[0] == n_classes
    )
    if args.require_errors and not trackable:
        have = 0 if system.solutions is None else system.solutions.shape[0]
        raise ValueError(
            f"--require-errors: system provides {have} solutions "
            f"but {n_classes} iterates were requested"
        )

    distribution = RowDistribution.from_name(args.dist, system)
    init_seed, solver_seed = derive_purpose_seeds(args.seed, 2)
    inits = np.random.default_rng(init_seed).standard_normal(
        (n_classes, system.n_cols)
    )
    if n_classes == 1:
        # One iterate is plain randomized Kaczmarz; the swap is a no-op.
        trace = run_rk(system, inits[0], args.iters, distribution, solver_seed)
    else:
        config = MrkConfig(
            swap_probability=args.swap_prob,
            iterations=args.iters,
            distribution=distribution,
            seed=solver_seed,
        )
        trace = run_mrk(system, inits, config)
    trace.metadata["cli_seed"] = args.seed
    if system.labels is not None and trace.labeling is not None:
        trace.metadata["empirical_mistake_rate"] = empirical_mistake_rate(
            trace, system
        )

    trace_path = Path(args.trace)
    if trace_path.parent != Path(""):
        trace_path.parent.mkdir(parents=True, exist_ok=True)
    write_trace_jsonl(trace, trace_path)
    outputs = [str(trace_path)]
    summary_path = (
        Path(args.summary)
        if args.summary
        else trace_path.with_name(trace_path.stem + ".summary.csv")
    )
    if trackable:
        write_summary_csv(trace, summary_path)
        outputs.append(str(summary_path))
    else:
        print(
            "note: no matching planted solutions; error summary omitted",
            file=sys.stderr,
        )

    inputs = {args.system: sha256_digest(args.system)}
    if args.solutions:
        inputs[args.solutions] = sha256_digest(args.solutions)
    manifest = RunManifest(
        command="run",
        config={
            "system": args.system,
            "classes": n_classes,
            "swap_probability": args.swap_prob,
            "iterations": args.iters,
            "seed": args.seed,
            "distribution": args.dist,
        },
        inputs=inputs,
        outputs=outputs,
        rng=RNG_NAME,
        wall_seconds=time.perf_counter() - started,
    )
    write_manifest(manifest, trace_path.with_name(trace_path.stem + ".manifest.json"))
    print(f"wrote {', '.join(outputs)}")
    return 0


def _cmd_experiment(args) -> int:
    started = time.perf_counter()
    preset = resolve_preset(
        args.preset,
        trials=args.trials,
        iterations=args.iters,
        swap_probability=args.swap_prob,
        distribution=args.dist,
        class_rows=tuple(_parse_ints(args.rows, "--rows")) if args.rows else None,
    )
    inputs = {}
    data = None
    if preset.uses_dataset:
        data_path = resolve_data_path(args.data)
        data = load_dataset_matrix(data_path)
        inputs[str(data_path)] = sha256_digest(data_path)

    traces, aggregate = run_experiment(preset, args.seed, data=data, jobs=args.jobs)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    aggregate_path = out_dir / "aggregate.csv"
    write_aggregate_csv(aggregate, aggregate_path)
    outputs = [str(aggregate_path)]
    if preset.record_iterates:
        for t, trace in enumerate(traces):
            trajectory_path = out_dir / f"trajectory_t{t:03d}.csv"
            write_trajectory_csv(trace, trajectory_path)
            outputs.append(str(trajectory_path))

    manifest = RunManifest(
        command="experiment",
        config={
            **{
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in asdict(preset).items()
            },
            "seed": args.seed,
            "trial_seed_rule": "seed + trial_index",
            "jobs": args.jobs,
        },
        inputs=inputs,
        outputs=outputs,
        rng=RNG_NAME,
        wall_seconds=time.perf_counter() - started,
    )
    write_manifest(manifest, out_dir / "manifest.json")
    final_median = aggregate.median[-1]
    print(
        f"{preset.name}: {preset.trials} trials x {preset.iterations} iterations; "
        f"final median squared errors "
        f"{', '.join(repr(float(v)) for v in final_median)}"
    )
    print(f"wrote {aggregate_path}")
    return 0


def _cmd_bound(args) -> int:
    if args.from_system:
        system = read_system_csv(args.from_system)
        if system.labels is None:
            raise ValueError("--from-system needs a labelled system file")
        counts = system.class_counts()
        constants = [
            rk_contraction_constant(system.class_block(j))
            for j in range(len(counts))
        ]
        for j, value in enumerate(constants):
            print(f"class {j}: rows {int(counts[j])}, rk constant {value!r}")
        c = max(constants)
        print(f"rk constant (max over classes): {c!r}")
    else:
        if not args.counts or args.c is None:
            raise ValueError("bound needs --counts and --c (or --from-system)")
        counts = _parse_ints(args.counts, "--counts")
        c = args.c

    bound = bound_matrix(
        counts, rk_constant=c, mistake_probability=args.q, swap_probability=args.r
    )
    print("bound matrix:")
    for row in bound.matrix:
        print("  " + ", ".join(repr(float(v)) for v in row))
    print(f"l1 operator norm: {bound.l1_norm!r}")
    verdict = "holds" if bound.contracts else "fails"
    print(f"contraction condition (norm < 1): {verdict}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "experiment": _cmd_experiment,
    "bound": _cmd_bound,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
