"""Multi-iterate randomized Kaczmarz for mixtures of linear systems.

A system whose rows come from several unknown linear models is solved
by running one Kaczmarz iterate per candidate model: each step projects
the iterate whose residual at the sampled row is smallest, with an
optional random swap that occasionally redirects the projection onto
another iterate.

The functional core lives in :mod:`mrk.kaczmarz` and :mod:`mrk.solver`;
:mod:`mrk.estimators` wraps it in fit/predict classes, and the ``mrk``
command line (:mod:`mrk.cli`) drives generation, solving, experiment
presets, and the theoretical bound.
"""

from .analysis import (
    AggregateSeries,
    RankDeficiencyWarning,
    TheoreticalBound,
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
from .estimators import MultiRandomizedKaczmarz, RandomizedKaczmarz
from .experiments import PRESETS, ExperimentPreset, resolve_preset, run_experiment
from .kaczmarz import (
    derive_purpose_seeds,
    kaczmarz_update,
    residual_coefficient,
    run_rk,
    sample_row,
)
from .problems import (
    ClassSpec,
    GeneratorSpec,
    build_planted_from_matrix,
    generate_synthetic,
    load_delimited_dataset,
    shuffle_rows,
)
from .solver import MrkConfig, mrk_step, run_mrk, select_target
from .system import LinearSystem, RowDistribution
from .trace import StepRecord, Trace

__version__ = "0.1.0"

__all__ = [
    "AggregateSeries",
    "ClassSpec",
    "ExperimentPreset",
    "GeneratorSpec",
    "LinearSystem",
    "MrkConfig",
    "MultiRandomizedKaczmarz",
    "PRESETS",
    "RandomizedKaczmarz",
    "RankDeficiencyWarning",
    "RowDistribution",
    "StepRecord",
    "TheoreticalBound",
    "Trace",
    "aggregate_trials",
    "best_assignment",
    "bound_matrix",
    "build_planted_from_matrix",
    "check_full_rank",
    "derive_purpose_seeds",
    "empirical_mistake_rate",
    "error_series",
    "generate_synthetic",
    "kaczmarz_update",
    "l1_operator_norm",
    "load_delimited_dataset",
    "matched_error",
    "mrk_step",
    "residual_coefficient",
    "resolve_preset",
    "rk_contraction_constant",
    "run_experiment",
    "run_mrk",
    "run_rk",
    "sample_row",
    "select_target",
    "shuffle_rows",
    "squared_distances",
    "total_error",
    "__version__",
]
