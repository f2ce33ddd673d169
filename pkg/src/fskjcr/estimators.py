"""scikit-learn style wrappers over frequency-index matrices.

Rows of ``X`` are frequency sequences (integers in ``[0, M)``), one waveform
per row.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ambiguity import grid_psl_batch
from .core import DomainError, FskWaveform, WaveformSpec
from .optimizer import OptimizerConfig, optimize_phases


def check_freq_matrix(X, M: int) -> np.ndarray:
    X = check_array(X, dtype=None, ensure_min_features=1)
    if not np.all(np.equal(np.mod(X, 1), 0)):
        raise DomainError("frequency indices must be integers")
    X = X.astype(np.int64)
    if X.min() < 0 or X.max() >= M:
        raise DomainError(f"frequency indices must lie in [0, {M - 1}]")
    return X


class GridPslTransformer(TransformerMixin, BaseEstimator):
    """Maps each frequency sequence (optionally with phases) to its grid-point PSL."""

    def __init__(self, mod_order: int = 2):
        self.mod_order = mod_order

    def fit(self, X, y=None):
        X = check_freq_matrix(X, self.mod_order)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X, phases=None):
        check_is_fitted(self)
        X = check_freq_matrix(X, self.mod_order)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} sub-pulses, got {X.shape[1]}")
        return grid_psl_batch(X, None if phases is None else np.asarray(phases, dtype=float), self.mod_order)[:, None]


class PhaseOptimizer(TransformerMixin, BaseEstimator):
    """Optimizes the initial phases of every row; ``transform`` returns the phases."""

    def __init__(self, mod_order: int = 2, restarts: int = 10, max_iterations: int = 500,
                 tolerance: float = 1e-10, seed: int = 0):
        self.mod_order = mod_order
        self.restarts = restarts
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.seed = seed

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, max_iterations=self.max_iterations,
                               tolerance=self.tolerance, seed=self.seed)

    def _solve(self, X):
        spec = WaveformSpec(X.shape[1], self.mod_order)
        config = self._config()
        return [optimize_phases(FskWaveform(spec, row), config) for row in X]

    def fit(self, X, y=None):
        X = check_freq_matrix(X, self.mod_order)
        results = self._solve(X)
        self.n_features_in_ = X.shape[1]
        self.results_ = results
        self.phases_ = np.array([r.phases for r in results])
        self.psl_ = np.array([r.psl for r in results])
        self.pre_psl_ = np.array([r.pre_psl for r in results])
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_freq_matrix(X, self.mod_order)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} sub-pulses, got {X.shape[1]}")
        return np.array([r.phases for r in self._solve(X)])

    def fit_transform(self, X, y=None):
        return self.fit(X).phases_
