"""Two-parallelogram (Adler-Weiss) Markov partition for ``((m, m+1), (m-1, m))``.

Everything is computed in eigen-coordinates ``(t_u, t_s)``, the coefficients
along the unit eigenvectors.  There the integer lattice is generated by
``v1 = (a, a)`` and ``v2 = (c, -c)`` (images of the standard basis vectors),
and the torus is tiled by the two rectangles

    Q1 = [0, a) x [0, c),      Q2 = [a, a + c) x [0, a).

The Markov rectangles are the pieces of ``Q_j`` cut out by the preimage
strips ``A^-1(Q_k)``; a rectangle inside ``Q_j`` whose image lies in ``Q_k``
has type ``(j, k)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .anosov import AnosovMap, TorusPoint

# Strips meeting only along a boundary line give slivers of this width.
TOUCH_TOL = 1e-11
MIN_AREA = 1e-12
CROSS_TOL = 1e-9


class PartitionError(RuntimeError):
    pass


class SelectionError(RuntimeError):
    """No admissible choice of marked rectangles; ``best`` is the separation reached."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class MarkovRectangle:
    label: int
    corner: TorusPoint
    span_u: float
    span_s: float
    type: tuple[int, int]
    # lift inside the fundamental domain, eigen-coordinates
    lo: tuple[float, float] = field(repr=False, default=(0.0, 0.0))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        u0, s0 = self.lo
        return u0, u0 + self.span_u, s0, s0 + self.span_s

    def area(self, A: AnosovMap) -> float:
        return self.span_u * self.span_s * A.sin_angle


@dataclass(frozen=True)
class PreMarkov:
    a: float
    c: float

    def piece_bounds(self, j: int) -> tuple[float, float, float, float]:
        a, c = self.a, self.c
        return (0.0, a, 0.0, c) if j == 1 else (a, a + c, 0.0, a)

    def lattice(self, ij: np.ndarray) -> np.ndarray:
        """Eigen-coordinates of integer translations ``(i, j)``."""
        ij = np.asarray(ij, dtype=float)
        return np.stack(
            [self.a * ij[..., 0] + self.c * ij[..., 1], self.a * ij[..., 0] - self.c * ij[..., 1]], axis=-1
        )


@dataclass(frozen=True)
class MarkovPartition:
    A: AnosovMap
    pre_markov: PreMarkov
    rectangles: tuple[MarkovRectangle, ...]
    transitions: np.ndarray  # bool (R, R)
    marked: dict[tuple[int, int], int] | None = None
    d: int | None = None

    def __len__(self) -> int:
        return len(self.rectangles)

    def __getitem__(self, label: int) -> MarkovRectangle:
        return self.rectangles[label]

    def of_type(self, t: tuple[int, int]) -> list[int]:
        return [r.label for r in self.rectangles if r.type == t]

    def allowed(self, r1: int, r2: int) -> bool:
        return bool(self.transitions[r1, r2])

    def total_area(self) -> float:
        return math.fsum(r.area(self.A) for r in self.rectangles)

    def marked_label(self, i: int, j: int) -> int:
        if self.marked is None:
            raise ValueError("marked rectangles not selected")
        return self.marked[(i, j)]

    @property
    def repellor_labels(self) -> tuple[int, int]:
        d = self.d
        return self.marked_label(d + 1, 1), self.marked_label(d + 2, 1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Label of the rectangle containing each point (half-open convention)."""
        return _locate(self, np.atleast_2d(np.asarray(points, dtype=float)))

    def contains(self, label: int, points: np.ndarray) -> np.ndarray:
        return self.locate(points) == label

    def vertices(self, label: int) -> np.ndarray:
        """Plane coordinates of the lift's corners, counter-clockwise from ``lo``."""
        u0, u1, s0, s1 = self.rectangles[label].bounds
        return self.A.from_eigen(np.array([[u0, s0], [u1, s0], [u1, s1], [u0, s1]]))

    def image_lift(self, label: int) -> tuple[float, float, float, float]:
        """Eigen bounds of ``A(R)`` translated into the fundamental domain."""
        r = self.rectangles[label]
        u0, u1, s0, s1 = r.bounds
        lam = self.A.lam
        img = np.array([lam * u0, lam * u1, s0 / lam, s1 / lam])
        center = np.array([(img[0] + img[1]) / 2, (img[2] + img[3]) / 2])
        shift = _fundamental_shift(self.pre_markov, self.A, center[None, :], eigen=True)[0]
        du, ds = self.pre_markov.lattice(shift)
        return img[0] - du, img[1] - du, img[2] - ds, img[3] - ds

    def crossing(self, r1: int, r2: int) -> tuple[float, float]:
        """Spans (along e_u, along e_s) of ``A(R1) ∩ R2``; negative means empty."""
        iu0, iu1, is0, is1 = self.image_lift(r1)
        u0, u1, s0, s1 = self.rectangles[r2].bounds
        return min(iu1, u1) - max(iu0, u0), min(is1, s1) - max(is0, s0)

    def full_crossing(self, r1: int, r2: int) -> bool:
        du, ds = self.crossing(r1, r2)
        return ds > TOUCH_TOL and abs(du - self.rectangles[r2].span_u) <= CROSS_TOL


def _pre_markov(A: AnosovMap) -> PreMarkov:
    m = A.m
    return PreMarkov(a=math.sqrt(2 * m) / (2 * math.sqrt(m + 1)), c=math.sqrt(2 * m) / (2 * math.sqrt(m - 1)))


def _offsets(pm: PreMarkov, A: AnosovMap) -> np.ndarray:
    """Integer shifts that can move a point of [0,1)^2 into Q1 ∪ Q2."""
    corners = []
    for j in (1, 2):
        u0, u1, s0, s1 = pm.piece_bounds(j)
        corners.append(A.from_eigen(np.array([[u0, s0], [u1, s0], [u1, s1], [u0, s1]])))
    pts = np.vstack(corners)
    lo = np.floor(pts.min(axis=0)) - 1
    hi = np.ceil(pts.max(axis=0)) + 1
    rng_i = np.arange(-hi[0], -lo[0] + 1)
    rng_j = np.arange(-hi[1], -lo[1] + 1)
    shifts = np.array(list(itertools.product(rng_i, rng_j)), dtype=float)
    # nearest shifts first so that typical points resolve early
    order = np.argsort(np.abs(shifts).sum(axis=1), kind="stable")
    return shifts[order]


def _fundamental_shift(pm: PreMarkov, A: AnosovMap, pts: np.ndarray, eigen: bool = False) -> np.ndarray:
    """Integer vectors ``k`` with ``pts - k`` in Q1 ∪ Q2 (half-open)."""
    xy = A.from_eigen(pts) if eigen else np.asarray(pts, dtype=float)
    base = np.floor(xy)
    E = A.to_eigen(xy - base)
    out = np.full(E.shape, np.nan)
    todo = np.ones(len(E), dtype=bool)
    for k in _offsets(pm, A):
        if not todo.any():
            break
        hit = _in_pieces(pm, E[todo] - pm.lattice(k)) > 0
        idx = np.flatnonzero(todo)[hit]
        out[idx] = k
        todo[idx] = False
    for n in np.flatnonzero(todo):
        # boundary round-off: fall back to the nearest piece
        gaps = [min(_gap(pm, E[n] - pm.lattice(k), 1), _gap(pm, E[n] - pm.lattice(k), 2)) for k in _offsets(pm, A)]
        out[n] = _offsets(pm, A)[int(np.argmin(gaps))]
    return out + base


def _in_pieces(pm: PreMarkov, X: np.ndarray) -> np.ndarray:
    """0 outside, else the piece index (1 or 2), half-open."""
    res = np.zeros(len(X), dtype=np.int64)
    for j in (1, 2):
        u0, u1, s0, s1 = pm.piece_bounds(j)
        inside = (X[:, 0] >= u0) & (X[:, 0] < u1) & (X[:, 1] >= s0) & (X[:, 1] < s1)
        res[inside] = j
    return res


def _gap(pm: PreMarkov, x: np.ndarray, j: int) -> float:
    u0, u1, s0, s1 = pm.piece_bounds(j)
    return max(u0 - x[0], x[0] - u1, s0 - x[1], x[1] - s1, 0.0)


def _locate(P: MarkovPartition, pts: np.ndarray) -> np.ndarray:
    pm, A = P.pre_markov, P.A
    shift = _fundamental_shift(pm, A, pts)
    E = A.to_eigen(pts - shift)
    piece = _in_pieces(pm, E)
    labels = np.full(len(pts), -1, dtype=np.int64)
    for j in (1, 2):
        lab = np.array([r.label for r in P.rectangles if r.type[0] == j])
        u0s = np.array([P.rectangles[k].lo[0] for k in lab])
        sel = piece == j
        if not sel.any():
            continue
        # piece 0 can only happen after the nearest-piece fallback
        pos = np.searchsorted(u0s, E[sel, 0], side="right") - 1
        labels[sel] = lab[np.clip(pos, 0, len(lab) - 1)]
    missing = labels < 0
    if missing.any():
        # clamp round-off stragglers into the closest rectangle
        for n in np.flatnonzero(missing):
            gaps = [max(r.lo[0] - E[n, 0], E[n, 0] - r.bounds[1], r.lo[1] - E[n, 1], E[n, 1] - r.bounds[3], 0.0)
                    for r in P.rectangles]
            labels[n] = int(np.argmin(gaps))
    return labels


def build_partition(A: AnosovMap) -> MarkovPartition:
    """Markov partition from the pre-Markov pair and its preimage under ``A``."""
    pm = _pre_markov(A)
    lam = A.lam
    pieces = []
    for j, k in itertools.product((1, 2), (1, 2)):
        qu0, qu1, qs0, qs1 = pm.piece_bounds(j)
        pu0, pu1, ps0, ps1 = pm.piece_bounds(k)
        # preimage strip of Q_k, before translation
        su0, su1, ss0, ss1 = pu0 / lam, pu1 / lam, ps0 * lam, ps1 * lam
        lu = (qu0 - su1, qu1 - su0)
        ls = (qs0 - ss1, qs1 - ss0)
        i_lo = math.floor((lu[0] + ls[0]) / (2 * pm.a)) - 1
        i_hi = math.ceil((lu[1] + ls[1]) / (2 * pm.a)) + 1
        j_lo = math.floor((lu[0] - ls[1]) / (2 * pm.c)) - 1
        j_hi = math.ceil((lu[1] - ls[0]) / (2 * pm.c)) + 1
        I, J = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing="ij")
        ell = pm.lattice(np.stack([I.ravel(), J.ravel()], axis=-1))
        u0 = np.maximum(qu0, su0 + ell[:, 0])
        u1 = np.minimum(qu1, su1 + ell[:, 0])
        s0 = np.maximum(qs0, ss0 + ell[:, 1])
        s1 = np.minimum(qs1, ss1 + ell[:, 1])
        keep = (u1 - u0 > TOUCH_TOL) & (s1 - s0 > TOUCH_TOL)
        for n in np.flatnonzero(keep):
            area = (u1[n] - u0[n]) * (s1[n] - s0[n]) * A.sin_angle
            if area < MIN_AREA:
                raise PartitionError(
                    f"degenerate rectangle (area {area:.3e}) from Q{j} ∩ A^-1(Q{k}) shifted by "
                    f"({I.ravel()[n]}, {J.ravel()[n]})"
                )
            if abs(s0[n] - qs0) > CROSS_TOL or abs(s1[n] - qs1) > CROSS_TOL:
                raise PartitionError(
                    f"Q{j} ∩ A^-1(Q{k}) piece at t_u={u0[n]:.6f} does not cross Q{j} in the stable direction"
                )
            pieces.append((j, float(u0[n]), float(u1[n]), float(qs0), float(qs1), k))
    pieces.sort(key=lambda p: (p[0], p[1]))
    rects = []
    for label, (j, u0, u1, s0, s1, k) in enumerate(pieces):
        xy = A.from_eigen(np.array([u0, s0]))
        rects.append(
            MarkovRectangle(
                label=label,
                corner=TorusPoint.from_float(xy[0], xy[1]),
                span_u=u1 - u0,
                span_s=s1 - s0,
                type=(j, k),
                lo=(u0, s0),
            )
        )
    R = len(rects)
    P = MarkovPartition(A=A, pre_markov=pm, rectangles=tuple(rects), transitions=np.zeros((R, R), dtype=bool))
    trans = np.zeros((R, R), dtype=bool)
    for r1 in range(R):
        for r2 in range(R):
            if rects[r1].type[1] == rects[r2].type[0]:
                trans[r1, r2] = P.full_crossing(r1, r2)
    trans.setflags(write=False)
    return replace(P, transitions=trans)


# --- distances -----------------------------------------------------------

def point_parallelogram_distance(pts: np.ndarray, origin: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Euclidean distance from plane points to ``{origin + s e1 + t e2 : s, t in [0, 1]}``."""
    pts = np.asarray(pts, dtype=float)
    M = np.column_stack([e1, e2])
    st = (pts - origin) @ np.linalg.inv(M).T
    inside = (st[:, 0] >= 0) & (st[:, 0] <= 1) & (st[:, 1] >= 0) & (st[:, 1] <= 1)
    corners = [origin, origin + e1, origin + e1 + e2, origin + e2]
    best = np.full(len(pts), np.inf)
    for p0, p1 in zip(corners, corners[1:] + corners[:1]):
        best = np.minimum(best, _segment_distance(pts, p0, p1))
    best[inside] = 0.0
    return best


def _segment_distance(pts: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    seg = p1 - p0
    t = np.clip(((pts - p0) @ seg) / float(seg @ seg), 0.0, 1.0)
    proj = p0 + t[:, None] * seg
    return np.linalg.norm(pts - proj, axis=1)


def rectangle_frame(P: MarkovPartition, label: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(origin, e1, e2)`` of the rectangle's lift in plane coordinates."""
    r = P.rectangles[label]
    origin = P.A.from_eigen(np.array(r.lo))
    return origin, r.span_u * P.A.e_u, r.span_s * P.A.e_s


def rectangle_distance(P: MarkovPartition, r1: int, r2: int) -> float:
    """Flat-torus distance between two rectangles (as closed sets)."""
    V1, V2 = P.vertices(r1), P.vertices(r2)
    f1, f2 = rectangle_frame(P, r1), rectangle_frame(P, r2)
    lo = np.floor(V1.min(axis=0) - V2.max(axis=0)) - 1
    hi = np.ceil(V1.max(axis=0) - V2.min(axis=0)) + 1
    K = np.array(list(itertools.product(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1))))
    # for disjoint convex polygons the distance is attained at a vertex
    d1 = point_parallelogram_distance((V2[None, :, :] + K[:, None, :]).reshape(-1, 2), *f1).min()
    d2 = point_parallelogram_distance((V1[None, :, :] - K[:, None, :]).reshape(-1, 2), *f2).min()
    return float(min(d1, d2))


def select_marked_rectangles(P: MarkovPartition, d: int) -> MarkovPartition:
    """Choose ``R_ij``, ``i = 0..d+2``, ``j = 1, 2``, of type ``(j, j)``.

    Greedy farthest-point selection: each slot takes the candidate farthest
    from the rectangles already given to other families, preferring (on
    ties) the one nearest to its own family, then the smaller label.  The
    greedy pass is seeded with each type (1,1) rectangle in label order and
    the first seed reaching the ``1/(10 d)`` separation wins.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    need = 1.0 / (10 * d)
    cand = {1: P.of_type((1, 1)), 2: P.of_type((2, 2))}
    if len(cand[1]) < d + 3 or len(cand[2]) < d + 3:
        raise SelectionError(
            f"m={P.A.m}: only {len(cand[1])} rectangles of type (1,1) and {len(cand[2])} of type (2,2); "
            f"need {d + 3} of each (increase m)",
            best=0.0,
        )
    labels = sorted(cand[1] + cand[2])
    index = {lab: n for n, lab in enumerate(labels)}
    dist = np.zeros((len(labels), len(labels)))
    for x, y in itertools.combinations(range(len(labels)), 2):
        dist[x, y] = dist[y, x] = rectangle_distance(P, labels[x], labels[y])

    best_sep, best_choice = -np.inf, None
    for seed in cand[1]:
        chosen = _greedy(cand, dist, index, d, seed)
        sep = min(
            dist[index[v1], index[v2]]
            for (i1, _), v1 in chosen.items()
            for (i2, _), v2 in chosen.items()
            if i1 != i2
        )
        if sep > best_sep:
            best_sep, best_choice = sep, chosen
        if sep >= need:
            break
    if best_sep < need:
        raise SelectionError(
            f"m={P.A.m}, d={d}: best greedy separation {best_sep:.4f} < required {need:.4f} (increase m)",
            best=float(best_sep),
        )
    chosen = best_choice
    return replace(P, marked=chosen, d=d)


def _greedy(cand, dist, index, d, seed):
    chosen: dict[tuple[int, int], int] = {(0, 1): seed}
    for i in range(d + 3):
        for j in (1, 2):
            if (i, j) in chosen:
                continue
            others = [index[v] for (ii, _), v in chosen.items() if ii != i]
            own = [index[v] for (ii, _), v in chosen.items() if ii == i]
            best_lab, best_key = None, None
            for lab in cand[j]:
                if lab in chosen.values():
                    continue
                far = dist[index[lab], others].min() if others else np.inf
                near = dist[index[lab], own].min() if own else 0.0
                key = (far, -near)
                if best_key is None or key > best_key:
                    best_lab, best_key = lab, key
            chosen[(i, j)] = best_lab
    return chosen


def marked_separation(P: MarkovPartition) -> float:
    return min(
        rectangle_distance(P, v1, v2)
        for (i1, _), v1 in P.marked.items()
        for (i2, _), v2 in P.marked.items()
        if i1 != i2
    )
