"""Upper bound on the attractor's dimension and its empirical counterparts."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ..skew import AttractorSample, SkewSystem
from ..torus.anosov import exact_orbit, jittered_grid_points


class HypothesisError(ValueError):
    """A hypothesis of the dimension estimate does not hold."""


def _bound_denominator(alpha, lam, L_hat, nu):
    return math.log(L_hat) + alpha * math.log(lam) - math.log(nu)


def dimension_bound(alpha: float, lam: float, L_hat: float, L: float, nu: float, beta: float, d: int) -> float:
    """``d + 2 + alpha max(d log L, d log nu, -beta) / (log L_hat + alpha log lam - log nu)``.

    ``beta = inf`` is allowed and drops the large-deviation term.
    """
    if not 0 < nu < 1:
        raise HypothesisError(f"nu must lie in (0, 1), got {nu}")
    if not 0 < L < 1:
        raise HypothesisError(f"L must lie in (0, 1), got {L}")
    if not beta > 0:
        raise HypothesisError(f"beta must be positive, got {beta}")
    den = _bound_denominator(alpha, lam, L_hat, nu)
    if den <= 0:
        raise HypothesisError(f"log L_hat + alpha log lam - log nu = {den} is not positive")
    top = max(d * math.log(L), d * math.log(nu), -beta)
    bound = d + 2 + alpha * top / den
    assert bound < d + 2
    return bound


def choose_delta(nu: float, L_hat: float, lam: float, alpha: float, n: int) -> float:
    """Box size ``(nu / (L_hat lam^alpha))^(n / alpha)`` used at depth ``n``."""
    return (nu / (L_hat * lam**alpha)) ** (n / alpha)


def _points(sample) -> np.ndarray:
    if isinstance(sample, AttractorSample):
        return sample.points()
    if isinstance(sample, np.ndarray):
        return np.atleast_2d(sample)
    rows = [np.hstack([np.broadcast_to(c.base.coords, (len(c.inner), 2)), c.inner]) for c in sample]
    return np.vstack(rows)


@dataclass(frozen=True)
class BoxCount:
    deltas: tuple[float, ...]
    counts: tuple[int, ...]
    dimension: float
    sparse: bool


def box_count(sample, deltas) -> BoxCount:
    """Occupied ``delta``-boxes of ``T^2 x D`` and the log-log slope.

    ``sample`` is an :class:`AttractorSample`, a list of slice covers, or an
    array of rows ``(b_u, b_v, x_1..x_d)``.
    """
    deltas = sorted((float(x) for x in deltas), reverse=True)
    if len(deltas) < 3 or deltas[0] / deltas[-1] < 4:
        raise ValueError("need at least 3 box sizes spanning at least 2 octaves")
    P = _points(sample)
    counts = []
    for dl in deltas:
        idx = np.floor(P / dl).astype(np.int64)
        counts.append(len(np.unique(idx, axis=0)))
    slope = float(np.polyfit(-np.log(deltas), np.log(counts), 1)[0])
    sparse = counts[-1] < 10 * counts[0]
    if sparse and len(P) > 1:
        warnings.warn("sample too sparse for a box-counting slope", RuntimeWarning, stacklevel=2)
    return BoxCount(tuple(deltas), tuple(counts), slope, sparse)


@dataclass(frozen=True)
class DeviationFit:
    n_list: tuple[int, ...]
    fractions: tuple[float, ...]
    beta: float


def violation_fractions(S: SkewSystem, L: float, n_list, grid: int, seed: int = 0) -> tuple[float, ...]:
    """Fraction of base points whose backward average of ``log L_b`` over ``n`` steps exceeds ``log L``."""
    rng = np.random.Generator(np.random.Philox(seed))
    num, den = jittered_grid_points(rng, grid)
    n_max = max(n_list)
    orbit = exact_orbit(S.A, num, den, n_max - 1, backward=True)
    logs = np.stack([np.log(S.lipschitz_in_x(o / den)) for o in orbit], axis=1)
    csum = np.cumsum(logs, axis=1)
    return tuple(float((csum[:, n - 1] / n > math.log(L)).mean()) for n in n_list)


def large_deviation_beta(S: SkewSystem, L: float, n_list=(5, 10, 15, 20), grid: int = 128, seed: int = 0) -> DeviationFit:
    """Empirical exponential rate of the violating-set measure; ``inf`` if it vanishes."""
    if not math.exp(S.avg_log_lipschitz) < L < 1:
        raise HypothesisError(f"L must lie in (exp(average log L_b), 1) = ({math.exp(S.avg_log_lipschitz):.6f}, 1)")
    n_list = tuple(sorted(int(n) for n in n_list))
    fr = violation_fractions(S, L, n_list, grid, seed)
    pos = [(n, f) for n, f in zip(n_list, fr) if f > 0]
    if len(pos) < 2:
        return DeviationFit(n_list, fr, math.inf)
    slope = np.polyfit([n for n, _ in pos], np.log([f for _, f in pos]), 1)[0]
    return DeviationFit(n_list, fr, max(0.0, float(-slope)))


@dataclass(frozen=True)
class DimensionReport:
    alpha: float
    lam: float
    L_hat: float
    L: float
    nu: float
    beta: float
    bound: float
    box_counts: tuple = field(default=())
    empirical_dim: float = float("nan")
    fractions: tuple = field(default=())
    sparse: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["box_counts"] = [list(x) for x in self.box_counts]
        out["fractions"] = list(self.fractions)
        # beta is an empirical fit, not a guaranteed constant
        out["beta_label"] = "empirical rate"
        for k in ("beta", "bound"):
            if math.isinf(out[k]):
                out[k] = "inf"
        return out


DEFAULT_DELTAS = (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)


def dimension_report(S: SkewSystem, sample: AttractorSample | None = None, L: float | None = None,
                     nu: float | None = None, n_list=(5, 10, 15, 20), grid: int = 128, seed: int = 0,
                     deltas=DEFAULT_DELTAS) -> DimensionReport:
    """Evaluate the bound with measured constants and, if given, box-count a sample.

    By default ``L = exp(avg / 2)``, halfway (in log scale) between the
    average contraction and 1, and ``nu = L``.
    """
    if L is None:
        L = math.exp(S.avg_log_lipschitz / 2)
    if nu is None:
        nu = L
    alpha = 1.0
    L_hat = float(S.F.lipschitz.max())
    fit = large_deviation_beta(S, L, n_list, grid, seed)
    bound = dimension_bound(alpha, S.A.lam, L_hat, L, nu, fit.beta, S.d)
    if sample is None:
        return DimensionReport(alpha, S.A.lam, L_hat, L, nu, fit.beta, bound, fractions=fit.fractions)
    bc = box_count(sample, deltas)
    return DimensionReport(
        alpha, S.A.lam, L_hat, L, nu, fit.beta, bound,
        box_counts=tuple(zip(bc.deltas, bc.counts)),
        empirical_dim=bc.dimension,
        fractions=fit.fractions,
        sparse=bc.sparse,
    )
