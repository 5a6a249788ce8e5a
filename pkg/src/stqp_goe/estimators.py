"""scikit-learn style wrappers around the solver and the edge-event statistics.

Both take symmetric matrices as input: a single ``(n, n)`` array or a stack
``(m, n, n)``.  They hold no learned state beyond what ``fit`` records about
the last batch, so they compose with pipelines but are not meant for
cross-validation.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .events import EDGE_FIELDS, classify_edges
from .goe import order_instance
from .solver import solve_enumerate


def _stack(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"expected (n, n) or (m, n, n) matrices, got shape {X.shape}")
    return X


class StQPSolver(BaseEstimator):
    """Exact StQP solver by support enumeration.

    After ``fit``, ``x_``, ``support_``, ``value_`` and ``kappa_`` describe
    the optimizer of each matrix (arrays of length m, or lists for the ragged
    supports).
    """

    def __init__(self, k_max=None):
        self.k_max = k_max

    def fit(self, X, y=None):
        results = [solve_enumerate(q, self.k_max) for q in _stack(X)]
        self.x_ = np.array([r.x for r in results])
        self.support_ = [r.support for r in results]
        self.value_ = np.array([r.value for r in results])
        self.kappa_ = np.array([r.kappa for r in results])
        self.n_features_in_ = self.x_.shape[1]
        return self

    def predict(self, X):
        """Optimal value per matrix."""
        return np.array([solve_enumerate(q, self.k_max).value for q in _stack(X)])

    def score(self, X, y=None):
        """Fraction of matrices whose optimum has support size 1."""
        kappa = np.array([solve_enumerate(q, self.k_max).kappa for q in _stack(X)])
        return float(np.mean(kappa == 1))


class EdgeEventTransformer(TransformerMixin, BaseEstimator):
    """Map each matrix to its row of edge indicators and conditional terms."""

    def fit(self, X, y=None):
        self.n_features_in_ = _stack(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _stack(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"fitted on n={self.n_features_in_}, got n={X.shape[1]}")
        out = np.empty((X.shape[0], len(EDGE_FIELDS)))
        for m, q in enumerate(X):
            rep = classify_edges(order_instance(q))
            out[m] = [float(getattr(rep, f)) for f in EDGE_FIELDS]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(EDGE_FIELDS, dtype=object)
