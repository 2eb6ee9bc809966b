"""Bones (fibers where the attractor has interior) and fiber classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..fiber import inverse_fiber_map
from ..skew import SkewSystem, base_orbit, diameter_sequence, slice_cover
from ..torus.anosov import AnosovMap, TorusPoint, exact_orbit
from ..torus.periodic import SymbolicWord, periodic_point_from_word

MIN_MARGIN = 1e-6
N_DIRECTIONS = 4096
N_RANDOM_DIRECTIONS = 10_000


class BoneCheckFailed(RuntimeError):
    """The ball is not compactly inside its image; ``clearance`` is the measured value."""

    def __init__(self, message: str, clearance: float):
        super().__init__(message)
        self.clearance = clearance


class PropagationError(RuntimeError):
    pass


def sphere_directions(d: int, seed: int = 0) -> np.ndarray:
    """Unit vectors sampling the sphere S^{d-1}: deterministic lattices for d <= 3."""
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        t = 2 * np.pi * np.arange(N_DIRECTIONS) / N_DIRECTIONS
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        k = np.arange(N_DIRECTIONS) + 0.5
        z = 1 - 2 * k / N_DIRECTIONS
        phi = np.pi * (1 + 5**0.5) * k
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    g = np.random.Generator(np.random.Philox(seed)).standard_normal((N_RANDOM_DIRECTIONS, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_sample(d: int, center: np.ndarray, radius: float, per_axis: int = 9) -> np.ndarray:
    """Boundary directions plus an interior grid of a closed ball."""
    pts = [center + radius * sphere_directions(d)]
    g = np.linspace(-radius, radius, per_axis)
    grid = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    pts.append(center + grid[np.linalg.norm(grid, axis=1) <= radius])
    return np.vstack(pts)


def _push(S: SkewSystem, orbit: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply the fiber maps over the base points ``orbit[0], orbit[1], ...`` in order."""
    for c in orbit:
        X = S.fiber_map(c[None], X[None])[0]
    return X


def _clearance(S: SkewSystem, orbit: np.ndarray, r: float) -> tuple[float, float, np.ndarray]:
    """Compact-inclusion clearance of ``B(0, r)`` in its image under the composition.

    The image of the ball is a topological ball bounded by the image of the
    sphere, so it contains ``B(g(0), rho)`` with ``rho = min |g(y) - g(0)|``
    over the sphere; the clearance is ``rho - |g(0)| - r``.
    """
    d = S.d
    sphere = r * sphere_directions(d)
    img = _push(S, orbit, np.vstack([np.zeros((1, d)), sphere]))
    g0, gs = img[0], img[1:]
    rho = float(np.linalg.norm(gs - g0, axis=1).min())
    return rho - float(np.linalg.norm(g0)) - r, rho, g0


@dataclass(frozen=True)
class BoneCertificate:
    word: SymbolicWord
    b: TorusPoint
    q: int
    center: np.ndarray = field(repr=False)
    radius: float
    margin: float

    def to_dict(self) -> dict:
        p, r, den = self.b.exact
        return {
            "word": list(self.word.labels),
            "b": [f"{p}/{den}", f"{r}/{den}"],
            "q": self.q,
            "center": self.center.tolist(),
            "radius": self.radius,
            "margin": self.margin,
        }


def bone_check(S: SkewSystem, w: SymbolicWord, r: float) -> BoneCertificate:
    """Certify ``B(0, r)`` is compactly inside its image over one period of ``w``."""
    if r <= 0:
        raise ValueError("r must be positive: a degenerate ball has empty interior")
    if r > S.F.r0:
        raise ValueError(f"r must be <= r0 = {S.F.r0}")
    if not set(w.labels) <= set(S.P.repellor_labels):
        raise ValueError(f"word {w.labels} leaves the repellor rectangles {S.P.repellor_labels}")
    b, q = periodic_point_from_word(S.A, S.P, w)
    orbit = base_orbit(S.A, b, q - 1)
    margin, _, _ = _clearance(S, orbit, r)
    if margin < MIN_MARGIN:
        raise BoneCheckFailed(f"ball of radius {r} is not compactly inside its image (clearance {margin:.3e})", margin)
    return BoneCertificate(w, b, q, np.zeros(S.d), float(r), margin)


def pullback_inside(S: SkewSystem, b: TorusPoint, depth: int, Y: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Exact membership in the slice ``M_{b,depth}``.

    Each fiber map is injective, so ``y`` lies in the slice iff its
    preimage under the composition lies in the unit disk.
    """
    orbit = base_orbit(S.A, b, depth, backward=True)
    X = np.asarray(Y, dtype=float)
    for k in range(1, depth + 1):
        W = S.weights(orbit[k][None])
        X = inverse_fiber_map(S.F, np.repeat(W, len(X), axis=0), X)
    return np.linalg.norm(X, axis=1) <= 1.0 + tol


def bone_persistence(S: SkewSystem, cert: BoneCertificate, k_max: int = 10, mesh: float = 0.01) -> dict:
    """Check ``U`` against the slices at depths ``k q``; returns violation counts."""
    U = ball_sample(S.d, cert.center, cert.radius)
    out = {"cover_violations": 0, "pullback_violations": 0, "depths": []}
    for k in range(1, k_max + 1):
        n = k * cert.q
        C = slice_cover(S, cert.b, n, mesh)
        out["cover_violations"] += int((~C.covers(U)).sum())
        out["pullback_violations"] += int((~pullback_inside(S, cert.b, n, U)).sum())
        out["depths"].append(n)
    return out


@dataclass(frozen=True)
class LeafPoint:
    """Point ``b + t e_u`` on the unstable line through an exact point ``b``.

    Backward iterates are ``A^-k b + lam^-k t e_u``, so they stay accurate
    at any depth.
    """

    center: TorusPoint
    t: float

    def coords(self, A: AnosovMap) -> np.ndarray:
        return np.mod(self.center.coords + self.t * A.e_u, 1.0)

    def backward_orbit(self, A: AnosovMap, n: int) -> np.ndarray:
        p, r, q = self.center.exact
        orb = exact_orbit(A, np.array([[p, r]], dtype=object), q, n, backward=True)
        base = np.array([[float(o[0, 0]) / q, float(o[0, 1]) / q] for o in orb])
        scale = A.lam ** -np.arange(n + 1, dtype=float)
        return np.mod(base + np.outer(scale * self.t, A.e_u), 1.0)


@dataclass(frozen=True)
class PropagatedBone:
    base: object
    n0: int
    center: np.ndarray = field(repr=False)
    inner_radius: float
    outer_radius: float

    @property
    def volume(self) -> float:
        d = len(self.center)
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.inner_radius**d


def _backward(S: SkewSystem, b_prime, n: int) -> np.ndarray:
    if isinstance(b_prime, LeafPoint):
        return b_prime.backward_orbit(S.A, n)
    return base_orbit(S.A, b_prime, n, backward=True)


def bone_propagate(S: SkewSystem, cert: BoneCertificate, b_prime, n0: int, blocks: int = 10) -> PropagatedBone:
    """Push the certified ball forward ``q n0`` steps to the fiber over ``b_prime``.

    The inclusion test is repeated over ``blocks`` consecutive periods of
    the backward orbit of ``A^{-q n0} b_prime``.  The returned ball of radius
    ``inner_radius`` lies inside the attractor's slice over ``b_prime``.
    """
    q, r = cert.q, cert.radius
    total = q * (n0 + blocks)
    orbit = _backward(S, b_prime, total)
    for j in range(blocks):
        # forward order over the period ending at A^{-q(n0+j)} b'
        seg = orbit[q * (n0 + j + 1): q * (n0 + j): -1]
        clearance, _, _ = _clearance(S, seg, r)
        if clearance < MIN_MARGIN:
            raise PropagationError(
                f"inclusion fails {j} periods before A^-{q * n0} b' (clearance {clearance:.3e}); try a larger n0"
            )
    if n0 == 0:
        return PropagatedBone(b_prime, 0, cert.center.copy(), r, r)
    seg = orbit[q * n0: 0: -1]
    sphere = cert.center + r * sphere_directions(S.d)
    img = _push(S, seg, np.vstack([cert.center[None], sphere]))
    g0, gs = img[0], img[1:]
    dist = np.linalg.norm(gs - g0, axis=1)
    return PropagatedBone(b_prime, n0, g0, float(dist.min()), float(dist.max()))


@dataclass(frozen=True)
class FiberClass:
    b: object
    kind: str
    diameters: tuple = ()
    rate: float = float("nan")
    evidence: object = None


def decay_rate(diam: np.ndarray, start: int = 1) -> float:
    """Least-squares slope of ``log diam(n)`` over ``n >= start``."""
    n = np.arange(len(diam))
    keep = (n >= start) & (np.asarray(diam) > 0)
    return float(np.polyfit(n[keep], np.log(np.asarray(diam)[keep]), 1)[0])


def _diameter_sequence(S: SkewSystem, b, n_max: int, mesh: float) -> np.ndarray:
    return diameter_sequence(S, _backward(S, b, n_max), mesh)[1]


def decay_against_lipschitz(S: SkewSystem, b, n_max: int, mesh: float = 0.01) -> tuple[float, float]:
    """Fitted slope of ``log diam_outer(n)`` and the mean of ``log L`` along the backward orbit.

    Depths whose outer diameter is still clipped at 2 are left out of the fit.
    """
    orbit = _backward(S, b, n_max)
    diam = diameter_sequence(S, orbit, mesh)[1]
    n = np.arange(n_max + 1)
    keep = diam < 2.0
    if keep.sum() < 2:
        raise ValueError("slice never drops below the clip value; increase n_max")
    rate = float(np.polyfit(n[keep], np.log(diam[keep]), 1)[0])
    return rate, float(np.mean(np.log(S.lipschitz_in_x(orbit[1:]))))


def classify_fiber(S: SkewSystem, b, n_max: int, tol: float, certificates=(), mesh: float = 0.01) -> FiberClass:
    """``bone`` if a certificate reaches ``b``; else ``graph`` if the slice shrinks below ``tol``."""
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    for cert in certificates:
        if isinstance(b, TorusPoint) and b.exact is not None and b.exact == cert.b.exact:
            return FiberClass(b, "bone", evidence=cert)
        if isinstance(b, LeafPoint) and b.center.exact == cert.b.exact:
            # enough periods that the leaf offset is far below float resolution of the base
            n0 = max(1, math.ceil(math.log(max(abs(b.t), 1e-300) / 1e-3) / (cert.q * math.log(S.A.lam))))
            try:
                return FiberClass(b, "bone", evidence=bone_propagate(S, cert, b, n0))
            except PropagationError:
                pass
    diam = _diameter_sequence(S, b, n_max, mesh)
    rate = decay_rate(diam)
    kind = "graph" if diam[-1] < tol and rate < 0 else "undetermined"
    return FiberClass(b, kind, tuple(float(x) for x in diam), rate)
