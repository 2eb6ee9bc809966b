"""The skew product ``F(b, x) = (A b, f_b(x))`` and covers of its fiber slices.

The slice over ``b`` at depth ``n`` is the image of the whole disk under the
fiber maps along the backward orbit ``A^-n b, ..., A^-1 b``.  It is covered
from outside by pushing a ball cover of D forward, inflating radii by the
global Lipschitz bound at each step; the pushed ball centres are genuine
points of the slice and serve as the inner approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .fiber import Blend, FiberMapFamily, apply_weights, average_log_lipschitz, make_family
from .torus.anosov import (
    AnosovMap,
    FloatBudgetError,
    TorusPoint,
    exact_orbit,
    grid_points,
    iterate_point,
    make_anosov,
    torus_step,
)
from .torus.partition import MarkovPartition, build_partition, select_marked_rectangles

PRUNE_EVERY = 5
CHUNK = 2048


@dataclass(frozen=True)
class SkewSystem:
    A: AnosovMap
    P: MarkovPartition
    F: FiberMapFamily
    blend: object
    avg_log_lipschitz: float
    contracts_in_average: bool

    @property
    def d(self) -> int:
        return self.F.d

    def weights(self, B: np.ndarray) -> np.ndarray:
        return self.blend.weights(B)

    def fiber_map(self, B: np.ndarray, X: np.ndarray) -> np.ndarray:
        """``f_b(x)`` row by row; ``X`` is (N, d) or (N, K, d)."""
        return self.blend(B, X)

    def lipschitz_in_x(self, B: np.ndarray) -> np.ndarray:
        return self.blend.lipschitz_in_x(B)

    def with_blend(self, blend, resolution: int = 64) -> "SkewSystem":
        """Same base, different fiber maps; the average-contraction flag is recomputed."""
        avg, _ = average_log_lipschitz(blend, resolution)
        return replace(self, blend=blend, F=blend.family, avg_log_lipschitz=avg, contracts_in_average=avg < 0)


def build_system(m: int, d: int, eps: float, r0: float, weight_width: float | None = None,
                 resolution: int = 128) -> SkewSystem:
    """Assemble base map, marked partition, fiber family and blend."""
    A = make_anosov(m)
    P = select_marked_rectangles(build_partition(A), d)
    F = make_family(d, eps, r0, weight_width)
    blend = Blend(F, P, F.weight_width)
    avg, _ = average_log_lipschitz(blend, resolution)
    return SkewSystem(A, P, F, blend, avg, avg < 0)


# --- orbits -----------------------------------------------------------------

def base_orbit(A: AnosovMap, b: TorusPoint, n: int, backward: bool = False) -> np.ndarray:
    """Coordinates of ``b, A^{±1} b, ..., A^{±n} b`` as an (n+1, 2) array."""
    if b.exact is None and n > A.float_depth():
        raise FloatBudgetError(
            f"depth {n} exceeds the float budget of {A.float_depth()} steps for m={A.m}; "
            "pass an exact rational base point"
        )
    if b.exact is not None:
        p, r, q = b.exact
        orbit = exact_orbit(A, np.array([[p, r]], dtype=object), q, n, backward)
        return np.array([[float(x[0, 0]) / q, float(x[0, 1]) / q] for x in orbit])
    sign = -1 if backward else 1
    return np.array([iterate_point(A, b, sign * k).coords for k in range(n + 1)])


def step(S: SkewSystem, b: TorusPoint, x) -> tuple[TorusPoint, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return torus_step(S.A, b), S.fiber_map(b.coords[None], x[None])[0]


def iterate_fiber(S: SkewSystem, b: TorusPoint, n: int, x) -> np.ndarray:
    """``f_{A^{n-1} b} o ... o f_b (x)``; ``x`` may be one point or a (K, d) cloud."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, None] if single else x[None]
    for c in base_orbit(S.A, b, n)[:n]:
        X = S.fiber_map(c[None], X)
    return X[0, 0] if single else X[0]


# --- covers -------------------------------------------------------------------

def disk_cover(d: int, mesh: float) -> np.ndarray:
    """Centres of radius-``mesh`` balls covering the closed unit disk."""
    if d == 1:
        # one extra ball keeps the spacing strictly below 2 mesh despite rounding
        k = math.ceil(1.0 / mesh) + 2
        return np.linspace(-1.0, 1.0, k)[:, None]
    h = mesh / math.sqrt(d)
    g = np.arange(-1.0 - h, 1.0 + 1.5 * h, h)
    pts = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    r = np.linalg.norm(pts, axis=1)
    pts = pts[r <= 1.0 + h * math.sqrt(d) / 2]
    r = np.linalg.norm(pts, axis=1, keepdims=True)
    pts = np.where(r > 1.0, pts / r, pts)
    return np.unique(pts, axis=0)


def cloud_diameter(X: np.ndarray) -> float:
    """Diameter of a finite point cloud."""
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        return 0.0
    if X.shape[1] == 1:
        return float(X.max() - X.min())
    if len(X) > 2000:
        try:
            X = X[ConvexHull(X).vertices]
        except Exception:
            # flat cloud: the extent along its principal axis is the diameter up to rounding
            c = X - X.mean(axis=0)
            axis = np.linalg.svd(c, full_matrices=False)[2][0]
            t = c @ axis
            X = X[[int(np.argmin(t)), int(np.argmax(t))]]
    return float(pdist(X).max())


@dataclass(frozen=True)
class SliceCover:
    base: TorusPoint
    n: int
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    inner: np.ndarray = field(repr=False)
    diam_outer: float
    diam_inner: float

    @property
    def n_balls(self) -> int:
        return len(self.centers)

    def distance(self, pts: np.ndarray) -> np.ndarray:
        """Distance from each point to the union of outer balls (0 inside)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(len(pts))
        for s in range(0, len(pts), 512):
            diff = pts[s:s + 512, None, :] - self.centers[None]
            gap = np.linalg.norm(diff, axis=-1) - self.radii[None]
            out[s:s + 512] = np.maximum(gap.min(axis=1), 0.0)
        return out

    def covers(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.distance(pts) <= tol


def _make_cover(base: TorusPoint, n: int, X: np.ndarray, r: float) -> SliceCover:
    di = cloud_diameter(X)
    return SliceCover(
        base=base,
        n=n,
        centers=X,
        radii=np.full(len(X), r),
        inner=X,
        diam_outer=min(2.0, di + 2 * r),
        diam_inner=di,
    )


def _prune(X: np.ndarray) -> np.ndarray:
    # all radii are equal, so a ball is redundant exactly when its centre repeats
    _, idx = np.unique(X, axis=0, return_index=True)
    return X[np.sort(idx)]


def slice_cover(S: SkewSystem, b: TorusPoint, n: int, mesh: float) -> SliceCover:
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0 < mesh <= 0.1:
        raise ValueError("mesh must lie in (0, 0.1]")
    orbit = base_orbit(S.A, b, n, backward=True)
    X = disk_cover(S.d, mesh)
    r = mesh
    for k in range(n, 0, -1):
        B = orbit[k][None]
        X = S.fiber_map(B, X[None])[0]
        r *= float(S.lipschitz_in_x(B)[0])
        if (n - k + 1) % PRUNE_EVERY == 0:
            X = _prune(X)
    return _make_cover(b, n, X, r)


def diameter_sequence(S: SkewSystem, orbit: np.ndarray, mesh: float) -> tuple[np.ndarray, np.ndarray]:
    """Inner and outer slice diameters at every depth ``0..n`` in one sweep.

    ``orbit`` holds the backward base orbit ``b, A^-1 b, ..., A^-n b``.  At
    backward step ``k`` the map over ``A^-k b`` acts on every slice of depth
    at least ``k``, so all depths advance together.
    """
    n = len(orbit) - 1
    X0 = disk_cover(S.d, mesh)
    X = np.broadcast_to(X0, (n + 1,) + X0.shape).copy()
    r = np.full(n + 1, mesh)
    for k in range(n, 0, -1):
        W = S.weights(orbit[k][None])
        X[k:] = apply_weights(S.F, np.repeat(W, n + 1 - k, axis=0), X[k:])
        r[k:] *= float(W[0] @ S.F.lipschitz)
    inner = np.array([cloud_diameter(x) for x in X])
    return inner, np.minimum(2.0, inner + 2 * r)


def slice_diameter(C: SliceCover) -> tuple[float, float]:
    return C.diam_inner, C.diam_outer


def push_covers(S: SkewSystem, num: np.ndarray, den: int, n: int, X0: np.ndarray, mesh: float):
    orbit = exact_orbit(S.A, num, den, n, backward=True)
    X = np.broadcast_to(X0, (len(num),) + X0.shape).copy()
    r = np.full(len(num), mesh)
    for k in range(n, 0, -1):
        B = orbit[k].astype(float) / den
        X = S.fiber_map(B, X)
        r *= S.lipschitz_in_x(B)
    return X, r


@dataclass(frozen=True)
class AttractorSample(Sequence):
    """Slice covers over a grid of exact base points, in row-major grid order."""

    n: int
    mesh: float
    grid: int
    num: np.ndarray = field(repr=False)
    den: int
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    diam_inner: np.ndarray = field(repr=False)
    diam_outer: np.ndarray = field(repr=False)
    errors: tuple = ()

    @property
    def bases(self) -> np.ndarray:
        return self.num / self.den

    def __len__(self) -> int:
        return len(self.num)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        p, r = (int(v) for v in self.num[i])
        X = self.centers[i]
        return SliceCover(
            base=TorusPoint.from_exact(p, r, self.den),
            n=self.n,
            centers=X,
            radii=np.full(len(X), self.radii[i]),
            inner=X,
            diam_outer=float(self.diam_outer[i]),
            diam_inner=float(self.diam_inner[i]),
        )

    def points(self) -> np.ndarray:
        """All inner points as rows ``(b_u, b_v, x_1..x_d)``."""
        N, K, d = self.centers.shape
        B = np.repeat(self.bases, K, axis=0)
        return np.hstack([B, self.centers.reshape(N * K, d)])


def attractor_sample(S: SkewSystem, n: int, base_grid: int, mesh: float, workers: int = 1) -> AttractorSample:
    if base_grid < 16:
        raise ValueError("base_grid must be >= 16")
    if n < 0:
        raise ValueError("n must be >= 0")
    num, den = grid_points(base_grid)
    X0 = disk_cover(S.d, mesh)
    chunks = [num[s:s + CHUNK] for s in range(0, len(num), CHUNK)]
    if workers == 1:
        parts = [push_covers(S, c, den, n, X0, mesh) for c in chunks]
    else:
        parts = Parallel(n_jobs=workers)(delayed(push_covers)(S, c, den, n, X0, mesh) for c in chunks)
    X = np.concatenate([p[0] for p in parts])
    r = np.concatenate([p[1] for p in parts])
    if S.d == 1:
        di = X[..., 0].max(axis=1) - X[..., 0].min(axis=1)
    else:
        di = np.array([cloud_diameter(x) for x in X])
    return AttractorSample(
        n=n,
        mesh=mesh,
        grid=base_grid,
        num=num,
        den=den,
        centers=X,
        radii=r,
        diam_inner=di,
        diam_outer=np.minimum(2.0, di + 2 * r),
    )
