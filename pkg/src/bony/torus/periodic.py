"""Periodic orbits of the base map, computed exactly.

A point ``b`` is fixed by ``A^q`` iff ``(A^q - I) b`` is an integer vector,
so every periodic point is ``(A^q - I)^{-1} k`` for some ``k`` in ``Z^2``.
The symbolic word pins down which ``k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .anosov import AnosovMap, TorusPoint, iterate_point
from .partition import MarkovPartition


class WordNotRealized(LookupError):
    pass


@dataclass(frozen=True)
class SymbolicWord:
    labels: tuple[int, ...]
    periodic: bool = True

    def __len__(self) -> int:
        return len(self.labels)

    def admissible(self, P: MarkovPartition) -> bool:
        pairs = list(zip(self.labels, self.labels[1:]))
        if self.periodic and self.labels:
            pairs.append((self.labels[-1], self.labels[0]))
        return all(P.allowed(a, b) for a, b in pairs)

    def is_primitive(self) -> bool:
        q = len(self.labels)
        return all(self.labels != self.labels[k:] + self.labels[:k] for k in range(1, q))


def _shifted_minus_identity(A: AnosovMap, q: int):
    (a, b), (c, d) = A.power(q)
    return ((a - 1, b), (c, d - 1))


def fixed_point_count(A: AnosovMap, q: int) -> int:
    (a, b), (c, d) = _shifted_minus_identity(A, q)
    return abs(a * d - b * c)


def fixed_points(A: AnosovMap, q: int) -> list[TorusPoint]:
    """All solutions of ``A^q b = b`` on the torus, as exact points.

    The solutions form the group ``M^-1 Z^2 / Z^2`` with ``M = A^q - I``,
    generated by the two columns of ``M^-1``.
    """
    (a, b), (c, d) = _shifted_minus_identity(A, q)
    det = a * d - b * c
    D = abs(det)
    sgn = 1 if det > 0 else -1
    # columns of adj(M) / det, as numerators over D
    g1 = ((sgn * d) % D, (-sgn * c) % D)
    g2 = ((-sgn * b) % D, (sgn * a) % D)
    cyclic = []
    x = (0, 0)
    while True:
        cyclic.append(x)
        x = ((x[0] + g1[0]) % D, (x[1] + g1[1]) % D)
        if x == (0, 0):
            break
    seen = set(cyclic)
    elements = list(cyclic)
    shift = g2
    while shift not in seen:
        coset = [((p + shift[0]) % D, (r + shift[1]) % D) for p, r in cyclic]
        seen.update(coset)
        elements.extend(coset)
        shift = ((shift[0] + g2[0]) % D, (shift[1] + g2[1]) % D)
    return [TorusPoint.from_exact(p, r, D) for p, r in sorted(elements)]


def periodic_point_from_word(A: AnosovMap, P: MarkovPartition, w: SymbolicWord) -> tuple[TorusPoint, int]:
    """The exact periodic point whose orbit follows ``w``.

    Candidates are the integer vectors ``k`` such that ``(A^q - I)^{-1} k``
    lies in the lift of the first rectangle; in eigen-coordinates ``A^q - I``
    is ``diag(lam^q - 1, lam^-q - 1)``, so they are lattice points of a
    thin rectangle and can be listed row by row.
    """
    if not w.periodic or len(w) == 0:
        raise ValueError("word must be periodic and nonempty")
    if not w.admissible(P):
        raise ValueError(f"word {w.labels} uses a forbidden transition")
    q = len(w)
    lam = A.lam
    pm = P.pre_markov
    u0, u1, s0, s1 = P[w.labels[0]].bounds
    gu, gs = lam**q - 1.0, lam ** (-q) - 1.0
    tu = sorted((gu * u0, gu * u1))
    ts = sorted((gs * s0, gs * s1))
    pad = 1e-9
    # eigen(k) = (a i + c j, a i - c j)
    i_lo = math.floor((tu[0] + ts[0]) / (2 * pm.a)) - 1
    i_hi = math.ceil((tu[1] + ts[1]) / (2 * pm.a)) + 1
    I = np.arange(i_lo, i_hi + 1)
    j_lo = np.ceil((pm.a * I - ts[1] - pad) / pm.c).astype(np.int64)
    j_hi = np.floor((pm.a * I - ts[0] + pad) / pm.c).astype(np.int64)
    cand = []
    for i, jl, jh in zip(I, j_lo, j_hi):
        for j in range(jl, jh + 1):
            t = pm.a * i + pm.c * j
            if tu[0] - pad <= t <= tu[1] + pad:
                cand.append((int(i), int(j)))
    (ma, mb), (mc, md) = _shifted_minus_identity(A, q)
    det = ma * md - mb * mc
    for k0, k1 in cand:
        # M^-1 k = adj(M) k / det
        p, r = md * k0 - mb * k1, -mc * k0 + ma * k1
        if det < 0:
            p, r = -p, -r
        b = TorusPoint.from_exact(p, r, abs(det))
        if _follows(A, P, b, w):
            return b, q
    raise WordNotRealized(f"no fixed point of A^{q} follows {w.labels}")


def _follows(A: AnosovMap, P: MarkovPartition, b: TorusPoint, w: SymbolicWord) -> bool:
    pts = [iterate_point(A, b, k) for k in range(len(w))]
    labels = P.locate(np.array([[p.u, p.v] for p in pts]))
    return tuple(int(x) for x in labels) == w.labels


def _canonical(word: tuple[int, ...]) -> tuple[int, ...]:
    return min(word[k:] + word[:k] for k in range(len(word)))


def enumerate_periodic_words(P: MarkovPartition, alphabet, q: int) -> list[SymbolicWord]:
    """Admissible cyclic words of length ``q`` over ``alphabet``, one per rotation class."""
    if q < 1:
        raise ValueError("q must be >= 1")
    alphabet = sorted(set(alphabet))
    if not alphabet:
        raise ValueError("alphabet must be nonempty")
    found = set()
    for word in itertools.product(alphabet, repeat=q):
        c = _canonical(word)
        if c in found:
            continue
        if SymbolicWord(c).admissible(P):
            found.add(c)
    return [SymbolicWord(c) for c in sorted(found)]


def repellor_words(P: MarkovPartition, count: int, max_q: int = 6) -> list[SymbolicWord]:
    """First ``count`` primitive words over the two repellor rectangles, shortest first."""
    out = []
    for q in range(1, max_q + 1):
        out += [w for w in enumerate_periodic_words(P, P.repellor_labels, q) if w.is_primitive()]
        if len(out) >= count:
            return out[:count]
    return out
