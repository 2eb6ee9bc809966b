"""scikit-learn style wrappers for the two quantities that map data to numbers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis.dimension import DEFAULT_DELTAS, box_count
from .skew import slice_cover, build_system
from .torus.anosov import TorusPoint


class BonyAttractor(TransformerMixin, BaseEstimator):
    """Slice diameters of the skew-product attractor over given base points.

    ``fit`` assembles the system; ``transform`` maps base points (N, 2) to
    ``(diam_inner, diam_outer)`` of their depth-``n`` slices; ``predict``
    labels a fiber ``graph`` when its outer diameter is below ``tol``.
    """

    def __init__(self, m=12, d=1, eps=0.05, r0=0.05, n=10, mesh=0.01, tol=0.1):
        self.m = m
        self.d = d
        self.eps = eps
        self.r0 = r0
        self.n = n
        self.mesh = mesh
        self.tol = tol

    def fit(self, X=None, y=None):
        self.system_ = build_system(self.m, self.d, self.eps, self.r0)
        self.avg_log_lipschitz_ = self.system_.avg_log_lipschitz
        return self

    def _check(self, X):
        check_is_fitted(self, "system_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError(f"expected base points with 2 coordinates, got {X.shape[1]}")
        return np.mod(X, 1.0)

    def transform(self, X):
        X = self._check(X)
        out = np.empty((len(X), 2))
        for i, (u, v) in enumerate(X):
            C = slice_cover(self.system_, TorusPoint.from_float(u, v), self.n, self.mesh)
            out[i] = C.diam_inner, C.diam_outer
        return out

    def predict(self, X):
        D = self.transform(X)
        return np.where(D[:, 1] < self.tol, "graph", "undetermined")


class BoxCountingDimension(BaseEstimator):
    """Log-log slope of occupied-box counts of a point cloud."""

    def __init__(self, deltas=DEFAULT_DELTAS):
        self.deltas = deltas

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        res = box_count(X, self.deltas)
        self.counts_ = np.array(res.counts)
        self.deltas_ = np.array(res.deltas)
        self.dimension_ = res.dimension
        self.sparse_ = res.sparse
        return self

    def predict(self, X=None):
        check_is_fitted(self, "dimension_")
        return self.dimension_
