"""Fiber maps on the closed unit disk D in R^d and their base-dependent blend.

Indices ``0..d`` are the contractions towards the simplex vertices, indices
``d+1`` and ``d+2`` are the same radial repellor.  Over a base point ``b``
the fiber map is the convex combination ``sum_i w_i(b) f_i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .torus.partition import MarkovPartition, rectangle_frame, point_parallelogram_distance

SIMPLEX_SIDE = 0.5
N_KNOTS = 33


class FamilyError(ValueError):
    pass


def regular_simplex(d: int, side: float = SIMPLEX_SIDE) -> np.ndarray:
    """``d + 1`` vertices in R^d, centroid at the origin, all edges ``side``."""
    E = np.eye(d + 1) - 1.0 / (d + 1)
    # orthonormal basis of the hyperplane sum(x) = 0
    Q, _ = np.linalg.qr(E[:, :d])
    V = E @ Q
    V *= side / np.linalg.norm(V[0] - V[1])
    V -= V.mean(axis=0)
    if d == 1:
        V = np.sign(V[:, :1]) * side / 2
        V = V[np.argsort(V[:, 0])]
    return V


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class FiberMapFamily:
    d: int
    eps: float
    r0: float
    vertices: np.ndarray = field(repr=False)
    weight_width: float
    lip_repellor: float
    profile_knots: tuple[tuple[float, float], ...] = field(repr=False, default=())

    @property
    def n_maps(self) -> int:
        return self.d + 3

    @property
    def lipschitz(self) -> np.ndarray:
        """Lipschitz constant of each ``f_i`` on D."""
        return np.array([1.0 - self.eps] * (self.d + 1) + [self.lip_repellor] * 2)

    # radial profile of the repellor: phi(0) = 1 + eps/2, phi(r) = 1 - eps/2 for r >= 2 r0
    def profile(self, r):
        return 1.0 + self.eps / 2 - self.eps * smoothstep(np.asarray(r, dtype=float) / (2 * self.r0))

    def profile_slope(self, r):
        t = np.clip(np.asarray(r, dtype=float) / (2 * self.r0), 0.0, 1.0)
        return -self.eps * 6.0 * t * (1.0 - t) / (2 * self.r0)

    def contraction(self, i: int, x: np.ndarray) -> np.ndarray:
        if not 0 <= i <= self.d:
            raise IndexError(f"contraction index must be in 0..{self.d}")
        p = self.vertices[i]
        return p + (1.0 - self.eps) * (np.asarray(x, dtype=float) - p)

    def repellor(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        return x * self.profile(r)

    def apply(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.contraction(i, x) if i <= self.d else self.repellor(x)

    def jacobian(self, i: int, x: np.ndarray) -> np.ndarray:
        """``Df_i`` at points ``x`` of shape (..., d); returns (..., d, d)."""
        x = np.asarray(x, dtype=float)
        eye = np.eye(self.d)
        if i <= self.d:
            return np.broadcast_to((1.0 - self.eps) * eye, x.shape[:-1] + (self.d, self.d)).copy()
        r = np.linalg.norm(x, axis=-1)
        phi = self.profile(r)[..., None, None]
        slope = self.profile_slope(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            outer = np.where(r[..., None, None] > 0, np.einsum("...i,...j->...ij", x, x) / r[..., None, None], 0.0)
        return phi * eye + slope[..., None, None] * outer


def _repellor_sup_derivative(eps: float, r0: float) -> float:
    r = np.concatenate([np.linspace(0.0, 2 * r0, 20001), [1.0]])
    t = np.clip(r / (2 * r0), 0.0, 1.0)
    phi = 1.0 + eps / 2 - eps * smoothstep(t)
    radial = phi + r * (-eps * 6.0 * t * (1.0 - t) / (2 * r0))
    return float(max(np.abs(phi).max(), np.abs(radial).max()))


def default_weight_width(d: int) -> float:
    # largest displacement from the default map is eps/2, so the
    # Lipschitz-in-base constant is eps / (2 w) = 18 d eps
    return 1.0 / (36 * d)


def make_family(d: int, eps: float, r0: float, weight_width: float | None = None) -> FiberMapFamily:
    """Simplex contractions with coefficient ``1 - eps`` plus the radial repellor."""
    if d < 1:
        raise FamilyError("d must be >= 1")
    if not 0 < eps < 0.2:
        raise FamilyError(f"eps must lie in (0, 0.2), got {eps}")
    if not 0 < r0 < 0.1:
        raise FamilyError(f"r0 must lie in (0, 0.1), got {r0}")
    sup = _repellor_sup_derivative(eps, r0)
    if sup >= 1 + eps:
        raise FamilyError(f"repellor derivative bound violated: sup |Df| = {sup:.6f} >= 1 + eps")
    knots = tuple((float(r), float(1.0 + eps / 2 - eps * smoothstep(r / (2 * r0))))
                  for r in np.linspace(0.0, 2 * r0, N_KNOTS))
    fam = FiberMapFamily(
        d=d,
        eps=float(eps),
        r0=float(r0),
        vertices=regular_simplex(d),
        weight_width=default_weight_width(d) if weight_width is None else float(weight_width),
        lip_repellor=sup,
        profile_knots=knots,
    )
    edge = np.linspace(-1.0, 1.0, 2001) if d == 1 else None
    if edge is not None:
        img = fam.repellor(edge[:, None])
        if np.abs(img).max() > 1.0:
            raise FamilyError("repellor does not map D into itself")
    return fam


def family_to_text(F: FiberMapFamily) -> str:
    """JSON text; floats use shortest round-trip repr so reloading is bit-exact."""
    return json.dumps(
        {
            "d": F.d,
            "eps": F.eps,
            "r0": F.r0,
            "vertices": F.vertices.tolist(),
            "weight_width": F.weight_width,
            "lip_repellor": F.lip_repellor,
            "profile_knots": [list(k) for k in F.profile_knots],
        },
        sort_keys=True,
        indent=1,
    )


def family_from_text(text: str) -> FiberMapFamily:
    raw = json.loads(text)
    return FiberMapFamily(
        d=int(raw["d"]),
        eps=float(raw["eps"]),
        r0=float(raw["r0"]),
        vertices=np.array(raw["vertices"], dtype=float),
        weight_width=float(raw["weight_width"]),
        lip_repellor=float(raw["lip_repellor"]),
        profile_knots=tuple((float(r), float(v)) for r, v in raw["profile_knots"]),
    )


def eval_contraction(F: FiberMapFamily, i: int, x) -> np.ndarray:
    return F.contraction(i, x)


def eval_repellor(F: FiberMapFamily, x) -> np.ndarray:
    return F.repellor(x)


# --- blending over the base ------------------------------------------------

@dataclass(frozen=True)
class Blend:
    """Distance-bump weights around the marked rectangles.

    Family ``i`` gets ``max(0, 1 - dist(b, R_i1 ∪ R_i2) / width)``.  The
    remaining mass is shared evenly by the contractions ``0..d``, whose
    average is the contraction ``x -> (1 - eps) x`` towards the centroid.
    """

    family: FiberMapFamily
    partition: MarkovPartition
    width: float

    def __post_init__(self):
        if self.partition.marked is None:
            raise ValueError("partition has no marked rectangles")

    @property
    def d(self) -> int:
        return self.family.d

    @cached_property
    def _frames(self) -> list:
        """Per family: ``(origin, e1, e2, lo, hi, translates)`` of both marked rectangles."""
        out = []
        w = self.width
        for i in range(self.d + 3):
            rects = []
            for j in (1, 2):
                label = self.partition.marked_label(i, j)
                origin, e1, e2 = rectangle_frame(self.partition, label)
                V = self.partition.vertices(label)
                lo, hi = V.min(axis=0) - w, V.max(axis=0) + w
                shifts = [(kx, ky) for kx in range(int(np.floor(lo[0])), int(np.ceil(hi[0])))
                          for ky in range(int(np.floor(lo[1])), int(np.ceil(hi[1])))]
                rects.append((origin, e1, e2, lo, hi, shifts))
            out.append(rects)
        return out

    def family_distance(self, i: int, B: np.ndarray) -> np.ndarray:
        """Torus distance to ``R_i1 ∪ R_i2``, exact below ``width`` and ``inf`` beyond."""
        B = np.mod(np.atleast_2d(np.asarray(B, dtype=float)), 1.0)
        out = np.full(len(B), np.inf)
        for origin, e1, e2, lo, hi, shifts in self._frames[i]:
            for shift in shifts:
                P = B + shift
                near = (P[:, 0] >= lo[0]) & (P[:, 0] <= hi[0]) & (P[:, 1] >= lo[1]) & (P[:, 1] <= hi[1])
                if not near.any():
                    continue
                idx = np.flatnonzero(near)
                out[idx] = np.minimum(out[idx], point_parallelogram_distance(P[idx], origin, e1, e2))
        return out

    def weights(self, B: np.ndarray) -> np.ndarray:
        B = np.atleast_2d(np.asarray(B, dtype=float))
        d = self.d
        bumps = np.zeros((len(B), d + 3))
        for i in range(d + 3):
            bumps[:, i] = np.maximum(0.0, 1.0 - self.family_distance(i, B) / self.width)
        total = bumps.sum(axis=1)
        over = total > 1.0
        if over.any():
            bumps[over] /= total[over, None]
            total[over] = 1.0
        W = bumps
        W[:, : d + 1] += ((1.0 - total) / (d + 1))[:, None]
        return W

    def lipschitz_in_x(self, B: np.ndarray) -> np.ndarray:
        """Upper bound ``L_b`` on ``sup_x |Df_b(x)|``."""
        return self.weights(B) @ self.family.lipschitz

    def __call__(self, B: np.ndarray, X: np.ndarray) -> np.ndarray:
        return apply_weights(self.family, self.weights(B), X)


@dataclass(frozen=True)
class ConstantBlend:
    """Base-independent fiber map with fixed weights (test and comparison families)."""

    family: FiberMapFamily
    fixed: tuple[float, ...]

    @classmethod
    def single(cls, family: FiberMapFamily, index: int) -> "ConstantBlend":
        w = [0.0] * family.n_maps
        w[index] = 1.0
        return cls(family, tuple(w))

    @property
    def d(self) -> int:
        return self.family.d

    def weights(self, B: np.ndarray) -> np.ndarray:
        B = np.atleast_2d(np.asarray(B, dtype=float))
        return np.tile(np.array(self.fixed), (len(B), 1))

    def lipschitz_in_x(self, B: np.ndarray) -> np.ndarray:
        return self.weights(B) @ self.family.lipschitz

    def __call__(self, B: np.ndarray, X: np.ndarray) -> np.ndarray:
        return apply_weights(self.family, self.weights(B), X)


def apply_weights(F: FiberMapFamily, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``sum_i W[n, i] f_i(X[n])`` for X of shape (N, d) or (N, K, d)."""
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    extra = (None,) * (X.ndim - 1)
    out = np.zeros_like(X)
    rep = W[:, F.d + 1] + W[:, F.d + 2]
    for i in range(F.d + 1):
        col = W[:, i]
        if col.any():
            out += col[(slice(None),) + extra] * F.contraction(i, X)
    if rep.any():
        out += rep[(slice(None),) + extra] * F.repellor(X)
    return out


def jacobian_x(F: FiberMapFamily, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``sum_i W_i Df_i`` for points X (N, d); returns (N, d, d)."""
    J = np.zeros(X.shape[:-1] + (F.d, F.d))
    for i in range(F.n_maps):
        J += W[:, i, None, None] * F.jacobian(i, X)
    return J


def inverse_fiber_map(F: FiberMapFamily, W: np.ndarray, Y: np.ndarray, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
    """Solve ``f_b(x) = y`` by Newton's method, one base point per row.

    Every ``Df_i`` is symmetric positive definite, so ``f_b`` is injective
    and the iteration is well posed.
    """
    Y = np.asarray(Y, dtype=float)
    X = Y.copy()
    for _ in range(max_iter):
        R = apply_weights(F, W, X) - Y
        if np.abs(R).max() < tol:
            break
        J = jacobian_x(F, W, X)
        X = X - np.linalg.solve(J, R[..., None])[..., 0]
    return X


def lipschitz_in_x(blend, b) -> float:
    return float(blend.lipschitz_in_x(np.atleast_2d(b))[0])


def average_log_lipschitz(blend, resolution: int = 128) -> tuple[float, float]:
    """Midpoint rule for ``∫ log L_b db`` over T^2.

    Returns ``(value, delta)`` where ``delta`` is the change against the
    grid with twice the resolution.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    vals = []
    for res in (resolution, 2 * resolution):
        g = (np.arange(res) + 0.5) / res
        U, V = np.meshgrid(g, g, indexing="ij")
        L = blend.lipschitz_in_x(np.column_stack([U.ravel(), V.ravel()]))
        vals.append(math.fsum(np.log(L)) / L.size)
    return vals[0], vals[1] - vals[0]
