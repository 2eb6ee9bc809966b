"""Numerical checks of the inequalities the construction relies on."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .fiber import Blend, average_log_lipschitz
from .skew import SkewSystem, build_system
from .torus.anosov import make_anosov
from .torus.partition import SelectionError, build_partition, select_marked_rectangles

H_BASE = 1e-5
H_FIBER = 1e-6


class HypothesisViolation(ValueError):
    pass


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    tolerance: float = 0.0
    details: dict | None = None
    # informational checks are reported but do not decide the overall verdict
    gate: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("measured", "bound"):
            if isinstance(out[k], float) and not math.isfinite(out[k]):
                out[k] = str(out[k])
        return out


def fiber_sample(d: int, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """``n`` points of D: a regular grid for d = 1 (endpoints included), random otherwise."""
    if d == 1:
        return np.linspace(-1.0, 1.0, n)[:, None]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)


def _base_sample(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, 2))


def partial_derivatives(S: SkewSystem, n_base: int = 10_000, n_fiber: int = 1_000, seed: int = 0,
                        chunk: int = 500) -> tuple[float, float]:
    """Central-difference sup norms of ``df/db`` and ``df/dx`` over a sample grid."""
    rng = np.random.Generator(np.random.Philox(seed))
    B = _base_sample(n_base, rng)
    X = fiber_sample(S.d, n_fiber, rng)
    # keep x +- h inside D
    X *= 1.0 - 2 * H_FIBER
    d = S.d
    sup_b = sup_x = 0.0
    for s in range(0, n_base, chunk):
        Bc = B[s:s + chunk]
        Xc = np.broadcast_to(X, (len(Bc),) + X.shape)
        Jb = np.empty(Xc.shape + (2,))
        for j in range(2):
            e = np.zeros(2)
            e[j] = H_BASE
            Jb[..., j] = (S.fiber_map(Bc + e, Xc) - S.fiber_map(Bc - e, Xc)) / (2 * H_BASE)
        Jx = np.empty(Xc.shape + (d,))
        for j in range(d):
            e = np.zeros(d)
            e[j] = H_FIBER
            Jx[..., j] = (S.fiber_map(Bc, Xc + e) - S.fiber_map(Bc, Xc - e)) / (2 * H_FIBER)
        sup_b = max(sup_b, float(_opnorm(Jb).max()))
        sup_x = max(sup_x, float(_opnorm(Jx).max()))
    return sup_b, sup_x


def _opnorm(J: np.ndarray) -> np.ndarray:
    if J.shape[-2] == 1:
        return np.linalg.norm(J[..., 0, :], axis=-1)
    return np.linalg.norm(J, ord=2, axis=(-2, -1))


def dominated_splitting_check(S: SkewSystem, n_base: int = 10_000, n_fiber: int = 1_000, seed: int = 0) -> CheckResult:
    """``max(1/lam + |df/db|, |df/dx|) < lam``."""
    db, dx = partial_derivatives(S, n_base, n_fiber, seed)
    lam = S.A.lam
    lhs = max(1.0 / lam + db, dx)
    return CheckResult("dominated_splitting", lhs < lam, lhs, lam,
                       details={"df_db": db, "df_dx": dx, "lam": lam})


def slope_bound_formula(d: int, eps: float, lam: float) -> float:
    """Upper bound ``20 d eps / (lam - 1 - eps)`` on the strong stable slope."""
    return 20 * d * eps / (lam - 1 - eps)


def slope_bound(S: SkewSystem, n_base: int = 10_000, n_fiber: int = 1_000, seed: int = 0) -> CheckResult:
    """Measured ``k0 = |df/db| / (lam - |df/dx|)`` against the closed-form bound."""
    db, dx = partial_derivatives(S, n_base, n_fiber, seed)
    lam = S.A.lam
    if lam <= dx:
        raise HypothesisViolation(f"lam = {lam} does not exceed |df/dx| = {dx}")
    k0 = db / (lam - dx)
    bound = slope_bound_formula(S.d, S.F.eps, lam)
    return CheckResult("slope_bound", k0 <= bound, k0, bound, details={"df_db": db, "df_dx": dx})


def _simplex_facets(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inward unit normals ``n_k`` and offsets ``c_k`` with ``x in K  <=>  n_k . x >= c_k``."""
    d = V.shape[1]
    normals, offsets = [], []
    for k in range(d + 1):
        F = np.delete(V, k, axis=0)
        if d == 1:
            n = np.array([1.0])
        else:
            M = F[1:] - F[0]
            n = np.linalg.svd(M)[2][-1]
        if n @ (V[k] - F[0]) < 0:
            n = -n
        normals.append(n)
        offsets.append(n @ F[0])
    return np.array(normals), np.array(offsets)


def simplex_grid(V: np.ndarray, per_edge: int) -> np.ndarray:
    """Points of the simplex with barycentric coordinates in ``(1/per_edge) Z``."""
    d = V.shape[1]
    rows = []

    def rec(prefix, left):
        if len(prefix) == d:
            rows.append(prefix + [left])
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], per_edge)
    bary = np.array(rows, dtype=float) / per_edge
    return bary @ V


def density_cover_check(S_or_F, k0: float, per_edge: int = 60) -> tuple[bool, float]:
    """Every grid point of J has its closed ``4 k0``-ball inside some ``f_i(J)``.

    J is the simplex with vertices ``0.5 p_i``.  Returns the verdict and the
    worst (smallest) best clearance over the grid.
    """
    F = getattr(S_or_F, "F", S_or_F)
    J = 0.5 * F.vertices
    X = simplex_grid(J, per_edge)
    best = np.full(len(X), -np.inf)
    for i in range(F.d + 1):
        img = F.contraction(i, J)
        nrm, off = _simplex_facets(img)
        clear = (X @ nrm.T - off).min(axis=1)
        best = np.maximum(best, clear)
    worst = float(best.min())
    return bool(worst >= 4 * k0 - 1e-15), worst


def density_minimal_m(d: int, eps: float) -> int:
    """Least m with ``2 * slope bound < 0.01 eps``, i.e. ``lam > 4000 d + 1 + eps``."""
    target = 4000 * d + 1 + eps
    m = max(2, math.ceil(target / 2) - 2)
    while make_anosov(m).lam <= target:
        m += 1
    while m > 2 and make_anosov(m - 1).lam > target:
        m -= 1
    return m


def graph_density_condition(S: SkewSystem, per_edge: int = 60) -> CheckResult:
    k0 = slope_bound_formula(S.d, S.F.eps, S.A.lam)
    part_a = 2 * k0 < 0.01 * S.F.eps
    part_b, clearance = density_cover_check(S, k0, per_edge)
    m_min = density_minimal_m(S.d, S.F.eps)
    return CheckResult(
        "graph_density", part_a and part_b, 2 * k0, 0.01 * S.F.eps, gate=False,
        details={"inequality": part_a, "cover": part_b, "cover_clearance": clearance,
                 "k0_bound": k0, "minimal_m": m_min},
    )


def lipschitz_in_base_estimate(S: SkewSystem, n_pairs: int = 100_000, seed: int = 0, n_fiber: int = 21,
                               chunk: int = 20_000) -> float:
    """Largest two-point quotient ``|f_b(x) - f_b'(x)| / |b - b'|`` over close random pairs."""
    rng = np.random.Generator(np.random.Philox(seed))
    B = _base_sample(n_pairs, rng)
    ang = rng.random(n_pairs) * 2 * np.pi
    step = H_BASE * np.column_stack([np.cos(ang), np.sin(ang)])
    X = fiber_sample(S.d, n_fiber, rng)
    worst = 0.0
    for s in range(0, n_pairs, chunk):
        b, db = B[s:s + chunk], step[s:s + chunk]
        Xc = np.broadcast_to(X, (len(b),) + X.shape)
        diff = np.linalg.norm(S.fiber_map(b + db, Xc) - S.fiber_map(b, Xc), axis=-1)
        worst = max(worst, float(diff.max()) / H_BASE)
    return worst


def lipschitz_in_base_check(S: SkewSystem, n_pairs: int = 100_000, seed: int = 0) -> CheckResult:
    est = lipschitz_in_base_estimate(S, n_pairs, seed)
    bound = 20 * S.d * S.F.eps
    return CheckResult("lipschitz_in_base", est <= bound, est, bound)


def widen_if_needed(S: SkewSystem, n_pairs: int = 100_000, seed: int = 0) -> tuple[SkewSystem, CheckResult]:
    """Double the bump width once if the base-Lipschitz target is missed, then re-check."""
    res = lipschitz_in_base_check(S, n_pairs, seed)
    if res.passed or not isinstance(S.blend, Blend):
        return S, res
    width = min(2 * S.blend.width, 0.99 / (20 * S.d))
    F = replace(S.F, weight_width=width)
    blend = Blend(F, S.P, width)
    avg, _ = average_log_lipschitz(blend, 128)
    S = replace(S, F=F, blend=blend, avg_log_lipschitz=avg, contracts_in_average=avg < 0)
    return S, lipschitz_in_base_check(S, n_pairs, seed)


def average_contraction_check(S: SkewSystem, resolution: int = 128, tol: float = 1e-3) -> CheckResult:
    value, delta = average_log_lipschitz(S.blend, resolution)
    passed = value < 0 and value + delta < 0 and abs(delta) < tol
    return CheckResult("average_contraction", passed, value, 0.0, tol, details={"refinement_delta": delta})


def run_all(S: SkewSystem, seed: int = 0, n_base: int = 10_000, n_fiber: int = 1_000,
            n_pairs: int = 100_000) -> list[CheckResult]:
    out = [
        dominated_splitting_check(S, n_base, n_fiber, seed),
        average_contraction_check(S),
        lipschitz_in_base_check(S, n_pairs, seed),
    ]
    try:
        out.append(slope_bound(S, n_base, n_fiber, seed))
    except HypothesisViolation as exc:
        out.append(CheckResult("slope_bound", False, float("nan"), float("nan"), details={"error": str(exc)}))
    out.append(graph_density_condition(S))
    return out


def all_gates_pass(results) -> bool:
    return all(r.passed for r in results if r.gate)


def selection_minimal_m(d: int, m_max: int = 40) -> int | None:
    for m in range(2, m_max + 1):
        try:
            select_marked_rectangles(build_partition(make_anosov(m)), d)
            return m
        except SelectionError:
            continue
    return None


def splitting_minimal_m(d: int, eps: float) -> int:
    """Closed-form seed: least m with ``max(1/lam + 20 d eps, lip_max) < lam``."""
    m = 2
    while True:
        lam = make_anosov(m).lam
        if max(1 / lam + 20 * d * eps, 1 + eps) < lam:
            return m
        m += 1


def feasibility_frontier(d: int, eps: float, r0: float = 0.05, m_max: int = 40, seed: int = 0,
                         n_base: int = 2_000, n_fiber: int = 200) -> dict:
    """Least m for marked-rectangle selection, dominated splitting and graph density.

    The splitting seed comes from the closed form; it is confirmed by a
    direct check at the first m where a system can be assembled.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    sel = selection_minimal_m(d, m_max)
    split = splitting_minimal_m(d, eps)
    dens = density_minimal_m(d, eps)
    confirm_m = max(split, sel) if sel is not None else None
    confirmed = None
    if confirm_m is not None:
        S = build_system(confirm_m, d, eps, r0)
        confirmed = dominated_splitting_check(S, n_base, n_fiber, seed).passed
    lam_d = make_anosov(dens).lam
    return {
        "d": d,
        "eps": eps,
        "selection_m": sel,
        "splitting_m": split,
        "splitting_confirmed_at": confirm_m,
        "splitting_confirmed": confirmed,
        "density_m": dens,
        "density_lam": lam_d,
        "density_confirmed": bool(2 * slope_bound_formula(d, eps, lam_d) < 0.01 * eps),
    }
