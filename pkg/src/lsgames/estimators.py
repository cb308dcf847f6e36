"""Scikit-learn compatible wrappers around the reduction maps and the dual SVM.

These estimators make the building blocks compose with pipelines and model
selection: a transformer that projects rows through a seeded reduction map,
and a binary classifier backed by the dual solver.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .maps import make_map, reduce_rows
from .svm import KKT_TOL, MAX_PAIR_UPDATES, LabeledDataset, solve_dual


class DimensionReducer(TransformerMixin, BaseEstimator):
    """Project feature rows through a seeded gaussian/sign/selection map.

    Parameters
    ----------
    n_components : int
        Reduced dimension.
    kind : str
        ``gaussian``, ``sign`` or ``selection``.
    seed : int
        Seed of the map entries; the same seed reproduces the same map.
    selected_indices : sequence of int, optional
        Fixed columns for selection maps (sampled from the seed if omitted).
    """

    def __init__(self, n_components=2, kind="gaussian", seed=0, selected_indices=None):
        self.n_components = n_components
        self.kind = kind
        self.seed = seed
        self.selected_indices = selected_indices

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.map_ = make_map(
            self.kind, self.n_components, self.n_features_in_, self.seed,
            selected_indices=self.selected_indices,
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "map_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return reduce_rows(self.map_, X)


class DualSvmClassifier(ClassifierMixin, BaseEstimator):
    """Binary linear SVM trained through the dual coordinate-ascent solver.

    Labels must be -1/+1. After fitting, ``coef_`` and ``intercept_`` describe
    the separating hyperplane and ``solution_`` holds the full dual solution.
    """

    def __init__(self, C=1.0, tol=KKT_TOL, max_pair_updates=MAX_PAIR_UPDATES):
        self.C = C
        self.tol = tol
        self.max_pair_updates = max_pair_updates

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        y = np.asarray(y, dtype=float)
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be -1 or +1")
        data = LabeledDataset(X=X, y=y)
        self.solution_ = solve_dual(
            data, self.C, tol=self.tol, max_pair_updates=self.max_pair_updates
        )
        self.coef_ = self.solution_.w
        self.intercept_ = self.solution_.bias
        self.support_ = self.solution_.support_indices
        self.classes_ = np.array([-1.0, 1.0])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0.0, 1.0, -1.0)
