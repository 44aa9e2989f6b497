"""Estimator-style front end over the functional solver core.

These wrappers follow the scikit-learn contract (constructor stores
hyperparameters verbatim, ``fit`` returns ``self``, fitted attributes
get a trailing underscore) so the solvers compose with model selection
and pipeline tooling. The functional API in :mod:`mrk.solver` and
:mod:`mrk.kaczmarz` stays the primary interface for trace-level work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .kaczmarz import derive_purpose_seeds, run_rk
from .solver import MrkConfig, run_mrk
from .system import LinearSystem, RowDistribution
from .validation import as_float_matrix, as_float_vector, check_count, check_fraction

__all__ = ["RandomizedKaczmarz", "MultiRandomizedKaczmarz"]


def _resolve_seed(random_state) -> int:
    """Map sklearn-style ``random_state`` to a solver seed."""
    return int(np.random.SeedSequence(random_state).entropy)


def _split_seed(random_state) -> tuple[int, int]:
    """Derive (init_seed, solver_seed) from a ``random_state``."""
    init_seed, solver_seed = derive_purpose_seeds(_resolve_seed(random_state), 2)
    return init_seed, solver_seed


class RandomizedKaczmarz(BaseEstimator):
    """Classic randomized Kaczmarz regression on a consistent system.

    Parameters
    ----------
    iterations : int
        Projection steps to run.
    sampling : {"uniform", "sqnorm"}
        Row-sampling distribution.
    random_state : int or None
        Seed for the starting point and the row sampling.

    Attributes
    ----------
    coef_ : (n_features,) array
        Final iterate.
    trace_ : Trace
        Full per-step record of the fit.
    """

    def __init__(self, iterations: int = 1000, sampling: str = "uniform", random_state=None):
        self.iterations = iterations
        self.sampling = sampling
        self.random_state = random_state

    def fit(self, X, y) -> "RandomizedKaczmarz":
        X = as_float_matrix(X, "X")
        y = as_float_vector(y, "y", length=X.shape[0])
        check_count(self.iterations, "iterations")
        system = LinearSystem(matrix=X, rhs=y)
        distribution = RowDistribution.from_name(self.sampling, system)
        init_seed, solver_seed = _split_seed(self.random_state)
        x0 = np.random.default_rng(init_seed).standard_normal(X.shape[1])
        self.trace_ = run_rk(system, x0, self.iterations, distribution, solver_seed)
        self.coef_ = self.trace_.final_iterates[0]
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = self.iterations
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = as_float_matrix(X, "X")
        return X @ self.coef_


class MultiRandomizedKaczmarz(BaseEstimator):
    """Latent-class linear regression via multi-iterate Kaczmarz.

    Fits ``n_classes`` coefficient vectors to rows drawn from a mixture
    of linear models with unknown row-to-class assignment.

    Parameters
    ----------
    n_classes : int
        Number of latent classes (one iterate each).
    swap_probability : float
        Chance per step of redirecting the update to a uniformly chosen
        iterate; guards against an iterate never receiving updates.
    iterations : int
        Solver steps to run.
    sampling : {"uniform", "sqnorm"}
        Row-sampling distribution.
    random_state : int or None
        Seed for starting points and row sampling.

    Attributes
    ----------
    coefs_ : (n_classes, n_features) array
        One coefficient vector per class.
    labels_ : (n_samples,) array
        Training rows assigned to the class with the smallest absolute
        residual.
    trace_ : Trace
        Full per-step record of the fit.
    """

    def __init__(
        self,
        n_classes: int = 2,
        swap_probability: float = 0.1,
        iterations: int = 5000,
        sampling: str = "uniform",
        random_state=None,
    ):
        self.n_classes = n_classes
        self.swap_probability = swap_probability
        self.iterations = iterations
        self.sampling = sampling
        self.random_state = random_state

    def fit(self, X, y) -> "MultiRandomizedKaczmarz":
        X = as_float_matrix(X, "X")
        y = as_float_vector(y, "y", length=X.shape[0])
        check_count(self.n_classes, "n_classes", minimum=1)
        check_fraction(self.swap_probability, "swap_probability")
        check_count(self.iterations, "iterations")
        system = LinearSystem(matrix=X, rhs=y)
        distribution = RowDistribution.from_name(self.sampling, system)
        init_seed, solver_seed = _split_seed(self.random_state)
        config = MrkConfig(
            swap_probability=self.swap_probability,
            iterations=self.iterations,
            distribution=distribution,
            seed=solver_seed,
        )
        inits = np.random.default_rng(init_seed).standard_normal(
            (self.n_classes, X.shape[1])
        )
        self.trace_ = run_mrk(system, inits, config)
        self.coefs_ = self.trace_.final_iterates
        self.labels_ = self.assign(X, y)
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = self.iterations
        return self

    def predict(self, X) -> np.ndarray:
        """Per-class predictions, shape (n_samples, n_classes)."""
        check_is_fitted(self, "coefs_")
        X = as_float_matrix(X, "X")
        return X @ self.coefs_.T

    def assign(self, X, y) -> np.ndarray:
        """Assign each row to the class with the smallest absolute residual."""
        check_is_fitted(self, "coefs_")
        X = as_float_matrix(X, "X")
        y = as_float_vector(y, "y", length=X.shape[0])
        residuals = np.abs(X @ self.coefs_.T - y[:, None])
        return residuals.argmin(axis=1)
