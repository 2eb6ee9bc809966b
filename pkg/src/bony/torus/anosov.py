"""Linear Anosov automorphism of the 2-torus and torus points.

The map is the integer matrix ``((m, m+1), (m-1, m))`` acting on R^2/Z^2.
Points may carry an exact rational form ``(p, r) / q``; exact points are
iterated with integer arithmetic so arbitrarily long orbits stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# Float orbits lose all information after roughly this many bits of expansion.
FLOAT_BUDGET_BITS = 40


class NotHyperbolicError(ValueError):
    pass


class FloatBudgetError(ValueError):
    """Raised when a float base point is iterated past its accuracy budget."""


@dataclass(frozen=True)
class TorusPoint:
    """Point of T^2 with coordinates in [0, 1).

    ``exact`` is ``(p, r, q)`` meaning ``(p/q, r/q)`` with ``0 <= p, r < q``.
    """

    u: float
    v: float
    exact: tuple[int, int, int] | None = None

    @classmethod
    def from_float(cls, u: float, v: float) -> "TorusPoint":
        u, v = float(u) % 1.0, float(v) % 1.0
        # x % 1.0 can round up to 1.0 for tiny negative x
        return cls(u if u < 1.0 else 0.0, v if v < 1.0 else 0.0)

    @classmethod
    def from_exact(cls, p: int, r: int, q: int) -> "TorusPoint":
        if q <= 0:
            raise ValueError("denominator must be positive")
        p, r = int(p) % q, int(r) % q
        g = math.gcd(math.gcd(p, r), q)
        p, r, q = p // g, r // g, q // g
        return cls(p / q, r / q, (p, r, q))

    @classmethod
    def from_fractions(cls, x: Fraction, y: Fraction) -> "TorusPoint":
        x, y = Fraction(x), Fraction(y)
        q = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
        return cls.from_exact(x.numerator * (q // x.denominator), y.numerator * (q // y.denominator), q)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.u, self.v])

    def fractions(self) -> tuple[Fraction, Fraction]:
        if self.exact is None:
            raise ValueError("point has no exact form")
        p, r, q = self.exact
        return Fraction(p, q), Fraction(r, q)


@dataclass(frozen=True)
class AnosovMap:
    """Hyperbolic toral automorphism ``((m, m+1), (m-1, m))``."""

    m: int
    matrix: tuple[tuple[int, int], tuple[int, int]]
    lam: float
    e_u: np.ndarray
    e_s: np.ndarray

    @property
    def inverse(self) -> tuple[tuple[int, int], tuple[int, int]]:
        m = self.m
        return ((m, -(m + 1)), (-(m - 1), m))

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    @property
    def lam_inv(self) -> float:
        # m - sqrt(m^2 - 1) cancels badly for large m
        return 1.0 / self.lam

    def as_array(self, inverse: bool = False) -> np.ndarray:
        return np.array(self.inverse if inverse else self.matrix, dtype=np.int64)

    @property
    def basis(self) -> np.ndarray:
        """Columns ``e_u``, ``e_s``."""
        return np.column_stack([self.e_u, self.e_s])

    @property
    def sin_angle(self) -> float:
        return abs(float(self.e_u[0] * self.e_s[1] - self.e_u[1] * self.e_s[0]))

    def to_eigen(self, xy: np.ndarray) -> np.ndarray:
        """Plane coordinates -> coefficients along the unit eigenvectors."""
        return np.asarray(xy, dtype=float) @ np.linalg.inv(self.basis).T

    def from_eigen(self, us: np.ndarray) -> np.ndarray:
        return np.asarray(us, dtype=float) @ self.basis.T

    def power(self, q: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """Exact integer matrix ``A^q`` (negative q uses the inverse)."""
        base = self.matrix if q >= 0 else self.inverse
        result = ((1, 0), (0, 1))
        for _ in range(abs(q)):
            result = _matmul(result, base)
        return result

    def float_depth(self) -> int:
        """Number of steps a float base point may be iterated."""
        return int(FLOAT_BUDGET_BITS * math.log(2.0) / math.log(self.lam))


def _matmul(x, y):
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


def make_anosov(m: int) -> AnosovMap:
    """Build the automorphism for integer ``m >= 2``."""
    if int(m) != m:
        raise TypeError(f"m must be an integer, got {m!r}")
    m = int(m)
    if m <= 1:
        raise NotHyperbolicError(f"m={m}: matrix is not hyperbolic (needs m >= 2)")
    root = math.sqrt(m * m - 1)
    lam = m + root
    norm = math.sqrt(2.0 * m)
    e_u = np.array([math.sqrt(m + 1), math.sqrt(m - 1)]) / norm
    e_s = np.array([math.sqrt(m + 1), -math.sqrt(m - 1)]) / norm
    return AnosovMap(m=m, matrix=((m, m + 1), (m - 1, m)), lam=lam, e_u=e_u, e_s=e_s)


def torus_step(A: AnosovMap, p: TorusPoint, direction: str = "forward") -> TorusPoint:
    """Apply ``A`` (or ``A^-1``) modulo 1."""
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    (a, b), (c, d) = A.matrix if direction == "forward" else A.inverse
    if p.exact is not None:
        x, y, q = p.exact
        return TorusPoint.from_exact(a * x + b * y, c * x + d * y, q)
    return TorusPoint.from_float(a * p.u + b * p.v, c * p.u + d * p.v)


def iterate_point(A: AnosovMap, p: TorusPoint, k: int) -> TorusPoint:
    """``A^k p``; negative ``k`` iterates backwards."""
    if p.exact is None and abs(k) > A.float_depth():
        raise FloatBudgetError(
            f"{abs(k)} steps exceed the float budget of {A.float_depth()} for m={A.m}; "
            "use an exact rational base point"
        )
    (a, b), (c, d) = A.power(k)
    if p.exact is not None:
        x, y, q = p.exact
        return TorusPoint.from_exact(a * x + b * y, c * x + d * y, q)
    return TorusPoint.from_float(a * p.u + b * p.v, c * p.u + d * p.v)


def exact_orbit(A: AnosovMap, num: np.ndarray, den: int, steps: int, backward: bool = False) -> list[np.ndarray]:
    """Integer orbit of many points with common denominator ``den``.

    ``num`` has shape (N, 2).  Returns ``steps + 1`` numerator arrays, the
    first being ``num`` itself.  Uses int64 when overflow is impossible and
    Python integers otherwise.
    """
    M = A.as_array(inverse=backward)
    safe = (A.m + 1) * 2 * den < 2**62
    cur = np.asarray(num, dtype=np.int64 if safe else object) % den
    out = [cur]
    Mo = M if safe else M.astype(object)
    for _ in range(steps):
        cur = (cur @ Mo.T) % den
        out.append(cur)
    return out


def random_exact_points(rng: np.random.Generator, n: int, bits: int = 40) -> tuple[np.ndarray, int]:
    """Uniform dyadic rationals ``k / 2**bits``; exact under iteration."""
    den = 1 << bits
    num = rng.integers(0, den, size=(n, 2), dtype=np.int64)
    return num, den


def jittered_grid_points(rng: np.random.Generator, grid: int, bits: int = 40) -> tuple[np.ndarray, int]:
    """One dyadic rational per cell of a ``grid x grid`` mesh (stratified sample)."""
    den = 1 << bits
    cell = den // grid
    i, j = np.meshgrid(np.arange(grid, dtype=np.int64), np.arange(grid, dtype=np.int64), indexing="ij")
    off = rng.integers(0, cell, size=(grid, grid, 2), dtype=np.int64)
    num = np.stack([i * cell + off[..., 0], j * cell + off[..., 1]], axis=-1).reshape(-1, 2)
    return num, den


def grid_points(grid: int) -> tuple[np.ndarray, int]:
    """Cell midpoints ``(i + 1/2) / grid`` as exact rationals (row-major)."""
    den = 2 * grid
    i, j = np.meshgrid(np.arange(grid, dtype=np.int64), np.arange(grid, dtype=np.int64), indexing="ij")
    num = np.stack([2 * i + 1, 2 * j + 1], axis=-1).reshape(-1, 2)
    return num, den


@dataclass(frozen=True)
class UnstableSegment:
    """Arc-length parametrised piece of the unstable line through ``center``."""

    A: AnosovMap
    center: TorusPoint
    length: float

    def __call__(self, t) -> np.ndarray:
        """Plane coordinates (mod 1) at signed arc length ``t`` from the center."""
        t = np.asarray(t, dtype=float)
        pts = self.center.coords + np.multiply.outer(t, self.A.e_u)
        return np.mod(pts, 1.0)

    def point(self, t: float) -> TorusPoint:
        x, y = self(t)
        return TorusPoint.from_float(x, y)

    @property
    def endpoints(self) -> tuple[TorusPoint, TorusPoint]:
        return self.point(-self.length / 2), self.point(self.length / 2)

    def sample(self, k: int) -> np.ndarray:
        return self(np.linspace(-self.length / 2, self.length / 2, k))

    def image(self) -> "UnstableSegment":
        return UnstableSegment(self.A, torus_step(self.A, self.center), self.A.lam * self.length)


def unstable_segment(A: AnosovMap, b: TorusPoint, length: float) -> UnstableSegment:
    if length < 0:
        raise ValueError("length must be nonnegative")
    return UnstableSegment(A, b, float(length))


def torus_delta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Shortest displacement from ``y`` to ``x`` on the flat torus."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return d - np.round(d)


def torus_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(torus_delta(x, y), axis=-1)
