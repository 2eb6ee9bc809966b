"""Forward orbits of random points versus the slice covers they must lie in."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..skew import SkewSystem, push_covers, disk_cover
from ..torus.anosov import exact_orbit, random_exact_points


@dataclass(frozen=True)
class LimitReport:
    n_points: int
    n_transient: int
    n_tail: int
    depth: int
    mesh: float
    max_distance: float
    nonempty_fraction: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def random_disk_points(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)


def forward_orbits(S: SkewSystem, num: np.ndarray, den: int, x0: np.ndarray, steps: int):
    """Exact base orbits and the fiber coordinates along them, (steps+1, N, .) each."""
    orbit = exact_orbit(S.A, num, den, steps)
    xs = [x0]
    for k in range(steps):
        xs.append(S.fiber_map(orbit[k].astype(float) / den, xs[-1]))
    return orbit, np.stack(xs)


def likely_limit_sample(S: SkewSystem, n_transient: int, n_tail: int, n_points: int, seed: int = 0,
                        depth: int = 10, mesh: float = 0.01) -> LimitReport:
    """Distance of tail orbit points to the outer cover of their fiber slice.

    After ``k >= depth`` steps a point lies in ``F^k(X)``, so its fiber
    coordinate belongs to the depth-``depth`` slice over its base point.
    """
    if n_points < 10:
        raise ValueError("n_points must be >= 10")
    if n_transient < depth:
        raise ValueError("n_transient must be at least the cover depth")
    rng = np.random.Generator(np.random.Philox(seed))
    num, den = random_exact_points(rng, n_points)
    x0 = random_disk_points(rng, n_points, S.d)
    orbit, xs = forward_orbits(S, num, den, x0, n_transient + n_tail)
    tail_num = np.concatenate(orbit[n_transient + 1:])
    tail_x = np.concatenate(xs[n_transient + 1:])
    X, r = push_covers(S, tail_num, den, depth, disk_cover(S.d, mesh), mesh)
    gap = np.linalg.norm(X - tail_x[:, None, :], axis=-1) - r[:, None]
    dist = np.maximum(gap.min(axis=1), 0.0)
    nonempty = float(np.mean([len(c) > 0 for c in X]))
    return LimitReport(n_points, n_transient, n_tail, depth, mesh, float(dist.max()), nonempty)
