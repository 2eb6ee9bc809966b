import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bony.analysis import (
    BoneCheckFailed,
    ball_sample,
    HypothesisError,
    LeafPoint,
    PropagationError,
    box_count,
    bone_check,
    bone_persistence,
    bone_propagate,
    choose_delta,
    classify_fiber,
    decay_against_lipschitz,
    dimension_bound,
    dimension_report,
    large_deviation_beta,
    likely_limit_sample,
    violation_fractions,
)
from bony.fiber import ConstantBlend, smoothstep
from bony.skew import attractor_sample, iterate_fiber, slice_cover
from bony.torus import TorusPoint
from bony.torus.anosov import random_exact_points
from bony.torus.periodic import SymbolicWord, periodic_point_from_word, repellor_words
from helpers import philox

MESH = 0.01


def radial_orbit(eps, r0, r, q):
    """Radius after ``q`` applications of the radial repellor, by scalar recursion."""
    for _ in range(q):
        t = min(r / (2 * r0), 1.0)
        r = r * (1 + eps / 2 - eps * (3 * t * t - 2 * t ** 3))
    return r


@pytest.fixture(scope="module")
def words(baseline):
    return repellor_words(baseline.P, 5, 4)


@pytest.fixture(scope="module")
def cert(baseline, words):
    return bone_check(baseline, words[0], baseline.F.r0 / 2)


@pytest.fixture(scope="module")
def contracting_fixed(baseline):
    S = baseline
    b, q = periodic_point_from_word(S.A, S.P, SymbolicWord((S.P.marked_label(0, 1),)))
    assert q == 1
    return b


# --- bones ---------------------------------------------------------------------

def test_smoothstep_oracle():
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(smoothstep(t), 3 * t * t - 2 * t ** 3, atol=1e-15)


def test_bone_margin_matches_radial_oracle(baseline, words):
    F = baseline.F
    r = F.r0 / 2
    for w in words:
        c = bone_check(baseline, w, r)
        expected = radial_orbit(F.eps, F.r0, r, c.q) - r
        assert c.margin == pytest.approx(expected, rel=1e-9)
        assert c.margin >= F.eps / 4 * r


def test_bone_margin_fixed_point_value(baseline, words):
    F = baseline.F
    w = next((w for w in words if len(w.labels) == 1), None)
    if w is None:
        pytest.skip("no period-one repellor word at this m")
    c = bone_check(baseline, w, F.r0 / 2)
    # phi(r0/2) - 1 = eps/2 - eps*smoothstep(1/4) = 0.34375 eps
    assert c.margin == pytest.approx(0.34375 * F.eps * F.r0 / 2, rel=1e-12)


def test_bone_words_stay_on_repellor(baseline, words):
    assert len(words) == 5
    for w in words:
        assert set(w.labels) <= set(baseline.P.repellor_labels)
        assert len(w.labels) <= 4


def test_bone_check_degenerate_radius(baseline, words):
    with pytest.raises(ValueError):
        bone_check(baseline, words[0], 0.0)
    with pytest.raises(ValueError):
        bone_check(baseline, words[0], -1e-3)
    with pytest.raises(ValueError):
        bone_check(baseline, words[0], 2 * baseline.F.r0)


def test_bone_check_zero_clearance_at_r0(baseline, words):
    # phi(r0) = 1, so the sphere of radius r0 is fixed and clearance vanishes
    with pytest.raises(BoneCheckFailed) as info:
        bone_check(baseline, words[0], baseline.F.r0)
    assert abs(info.value.clearance) < 1e-6


def test_bone_check_rejects_foreign_word(baseline):
    lab = baseline.P.marked_label(0, 1)
    with pytest.raises(ValueError):
        bone_check(baseline, SymbolicWord((lab,)), 0.01)


def test_bone_persistence_zero_violations(baseline, cert):
    rep = bone_persistence(baseline, cert, 10, MESH)
    assert rep["cover_violations"] == 0
    assert rep["pullback_violations"] == 0
    assert rep["depths"] == [k * cert.q for k in range(1, 11)]


def test_propagate_identity(baseline, cert):
    pb = bone_propagate(baseline, cert, cert.b, 0)
    np.testing.assert_array_equal(pb.center, cert.center)
    assert pb.inner_radius == cert.radius
    assert pb.volume > 0


def test_propagate_one_period(baseline, cert):
    S = baseline
    s = 0.01
    leaf = LeafPoint(cert.b, S.A.lam ** -cert.q * s)
    pb = bone_propagate(S, cert, leaf, 1)
    assert pb.inner_radius > 0 and pb.volume > 0
    # pushforward of a ball under an expanding radial map centered near 0
    assert pb.inner_radius >= cert.radius


def test_propagate_far_leaf_needs_more_periods(baseline, cert):
    S = baseline
    rep = S.F.n_maps - 1
    # a leaf point whose preimage sees no repellor at all
    for t in np.linspace(1.0, 20.0, 400):
        leaf = LeafPoint(cert.b, float(t))
        if S.weights(leaf.backward_orbit(S.A, 1)[1:])[0, rep] == 0:
            break
    else:
        pytest.fail("no leaf point outside the repellor zone found")
    with pytest.raises(PropagationError):
        bone_propagate(S, cert, leaf, 0)


# --- fiber classes ---------------------------------------------------------------

def test_classify_needs_depth(baseline, contracting_fixed):
    with pytest.raises(ValueError):
        classify_fiber(baseline, contracting_fixed, 9, 0.1)


def test_classify_constant_contracting(baseline, contracting_fixed):
    eps = baseline.F.eps
    fc = classify_fiber(baseline, contracting_fixed, 60, 0.1, mesh=MESH)
    assert fc.kind == "graph"
    assert abs(fc.rate - math.log(1 - eps)) <= 0.1 * abs(math.log(1 - eps))
    n = np.arange(61)
    exact = np.minimum(2.0, (2 + 2 * MESH) * (1 - eps) ** n)
    np.testing.assert_allclose(fc.diameters, exact, rtol=1e-12)


def test_classify_certified_base_is_bone(baseline, cert):
    fc = classify_fiber(baseline, cert.b, 10, 0.1, certificates=[cert])
    assert fc.kind == "bone"


def test_classify_leaf_points_are_bones(baseline, cert):
    for k in range(1, 11):
        leaf = LeafPoint(cert.b, 0.05 * k / 10)
        fc = classify_fiber(baseline, leaf, 10, 0.1, certificates=[cert])
        assert fc.kind == "bone", k


@pytest.fixture(scope="module")
def random_fibers():
    num, den = random_exact_points(philox(11), 200)
    return [TorusPoint.from_exact(int(p), int(r), den) for p, r in num]


@pytest.mark.parametrize("n_max", [10, 100])
def test_classify_stable_under_depth(baseline, random_fibers, n_max):
    tol = 10 * MESH
    same = sum(
        classify_fiber(baseline, b, n_max, tol, mesh=MESH).kind
        == classify_fiber(baseline, b, n_max + 10, tol, mesh=MESH).kind
        for b in random_fibers
    )
    assert same >= 0.95 * len(random_fibers)


def test_decay_against_lipschitz_constant(baseline, contracting_fixed):
    rate, avg = decay_against_lipschitz(baseline, contracting_fixed, 40, MESH)
    assert rate == pytest.approx(avg, rel=1e-9)
    assert avg == pytest.approx(math.log(1 - baseline.F.eps), rel=1e-12)


def test_decay_against_lipschitz_random(baseline):
    rng = philox(5)
    num, den = random_exact_points(rng, 5)
    for p, r in num:
        rate, avg = decay_against_lipschitz(baseline, TorusPoint.from_exact(int(p), int(r), den), 150, MESH)
        assert rate < 0 and avg < 0
        assert abs(rate / avg - 1) <= 0.25


# --- dimension bound -------------------------------------------------------------

def test_dimension_bound_example():
    val = dimension_bound(1, 5.8284, 1.05, 0.95, 0.9, 0.1, 1)
    assert val == pytest.approx(2.9732419, abs=1e-6)


def test_choose_delta_examples():
    assert choose_delta(0.9, 1.05, 5.8284, 1, 1) == pytest.approx(0.9 / (1.05 * 5.8284), rel=1e-14)
    assert choose_delta(0.9, 1.05, 5.8284, 1, 10) == pytest.approx(4.731933e-9, rel=1e-6)


@given(n=st.integers(1, 40), nu=st.floats(0.1, 0.99), L_hat=st.floats(0.5, 3.0), lam=st.floats(2.0, 50.0))
def test_choose_delta_geometric(n, nu, L_hat, lam):
    r = choose_delta(nu, L_hat, lam, 1, n + 1) / choose_delta(nu, L_hat, lam, 1, n)
    assert r == pytest.approx(nu / (L_hat * lam), rel=1e-9)


@given(L=st.floats(0.01, 0.999), nu=st.floats(0.01, 0.999), beta=st.floats(1e-3, 10.0), d=st.integers(1, 4))
def test_dimension_bound_below_top(L, nu, beta, d):
    assert dimension_bound(1, 5.8284, 1.05, L, nu, beta, d) < d + 2


def test_dimension_bound_infinite_beta():
    val = dimension_bound(1, 5.8284, 1.05, 0.9, 0.9, math.inf, 1)
    den = math.log(1.05) + math.log(5.8284) - math.log(0.9)
    assert val == pytest.approx(3 + math.log(0.9) / den, rel=1e-14)


def test_dimension_bound_tie_continuous():
    d, L = 1, 0.9
    beta = -d * math.log(L)
    at = dimension_bound(1, 5.8284, 1.05, L, L, beta, d)
    for h in (1e-9, -1e-9):
        assert dimension_bound(1, 5.8284, 1.05, L, L, beta + h, d) == pytest.approx(at, abs=1e-8)


def test_dimension_bound_hypothesis_errors():
    with pytest.raises(HypothesisError):
        dimension_bound(1, 1.01, 0.5, 0.9, 0.9, 0.1, 1)
    with pytest.raises(HypothesisError):
        dimension_bound(1, 5.8, 1.05, 1.2, 0.9, 0.1, 1)
    with pytest.raises(HypothesisError):
        dimension_bound(1, 5.8, 1.05, 0.9, 0.9, 0.0, 1)


GRID_L = np.linspace(0.8, 0.98, 5)
GRID_NU = np.linspace(0.8, 0.98, 5)
GRID_BETA = np.linspace(0.02, 0.5, 5)


@pytest.fixture(scope="module")
def bound_grid():
    return np.array([[[dimension_bound(1, 5.8284, 1.05, L, nu, b, 1) for b in GRID_BETA] for nu in GRID_NU]
                     for L in GRID_L])


def test_bound_monotone_in_L(bound_grid):
    assert (np.diff(bound_grid, axis=0) >= -1e-15).all()


def test_bound_monotone_in_beta(bound_grid):
    assert (np.diff(bound_grid, axis=2) <= 1e-15).all()


def test_bound_monotone_in_nu(bound_grid):
    assert (np.diff(bound_grid, axis=1) >= -1e-15).all()


# --- box counting ----------------------------------------------------------------

DELTAS = (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)


def test_box_count_single_point():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bc = box_count(np.array([[0.3, 0.7, 0.1]]), DELTAS)
    assert bc.counts == (1,) * 5
    assert bc.dimension == pytest.approx(0.0, abs=1e-12)


def test_box_count_full_cube():
    k = 64
    c = (np.arange(k) + 0.5) / k
    x = (np.arange(2 * k) + 0.5) / k - 1
    P = np.stack(np.meshgrid(c, c, x, indexing="ij"), axis=-1).reshape(-1, 3)
    bc = box_count(P, DELTAS)
    assert bc.counts == tuple(int(2 / dl ** 3) for dl in sorted(DELTAS, reverse=True))
    assert bc.dimension == pytest.approx(3.0, abs=1e-9)
    assert not bc.sparse


def test_box_count_needs_octaves():
    with pytest.raises(ValueError):
        box_count(np.zeros((3, 3)), (0.5, 0.4, 0.3))
    with pytest.raises(ValueError):
        box_count(np.zeros((3, 3)), (0.5, 0.125))


def test_box_count_sparse_flag():
    with pytest.warns(RuntimeWarning):
        bc = box_count(np.array([[0.1, 0.1, 0.0], [0.9, 0.9, 0.5]]), DELTAS)
    assert bc.sparse


def test_box_count_baseline_below_three(baseline):
    sample = attractor_sample(baseline, 10, 32, MESH)
    assert box_count(sample, DELTAS).dimension < 3


# --- large deviations -------------------------------------------------------------

def test_beta_constant_contraction_is_infinite(baseline):
    S = baseline.with_blend(ConstantBlend.single(baseline.F, 0))
    assert S.avg_log_lipschitz == pytest.approx(math.log(1 - S.F.eps), rel=1e-12)
    fit = large_deviation_beta(S, 0.97, grid=32)
    assert fit.fractions == (0.0,) * 4
    assert math.isinf(fit.beta)


def test_beta_precondition(baseline):
    with pytest.raises(HypothesisError):
        large_deviation_beta(baseline, 0.5, grid=16)
    with pytest.raises(HypothesisError):
        large_deviation_beta(baseline, 1.0, grid=16)


def test_fractions_nonincreasing_and_beta_positive(baseline):
    grid = 128
    L = math.exp(baseline.avg_log_lipschitz / 2)
    fit = large_deviation_beta(baseline, L, grid=grid)
    f = np.array(fit.fractions)
    assert (np.diff(f) <= 1 / grid ** 2).all()
    assert fit.beta > 0


def test_fractions_deterministic(baseline):
    L = math.exp(baseline.avg_log_lipschitz / 2)
    assert violation_fractions(baseline, L, (5, 10), 32, 3) == violation_fractions(baseline, L, (5, 10), 32, 3)


def test_dimension_report_labels_beta(baseline):
    rep = dimension_report(baseline, grid=32)
    assert rep.to_dict()["beta_label"] == "empirical rate"
    assert rep.bound < baseline.d + 2


# --- likely limit -------------------------------------------------------------------

def test_likely_limit_small(baseline):
    rep = likely_limit_sample(baseline, 30, 3, 10, seed=2, depth=10, mesh=MESH)
    assert rep.max_distance < 2 * MESH
    assert rep.nonempty_fraction == 1.0


def test_likely_limit_bone_orbit_stays(baseline, cert):
    """Orbits started in U over a bone fiber stay in the slice cover there."""
    S = baseline
    n = 10 * cert.q
    C = slice_cover(S, cert.b, n, MESH)
    U = ball_sample(S.d, cert.center, cert.radius)
    Y = U
    for _ in range(10):
        Y = np.array([iterate_fiber(S, cert.b, cert.q, y) for y in Y])
        assert C.covers(Y).all()
        assert (np.linalg.norm(Y, axis=1) <= S.F.r0 + 1e-12).all()


def test_likely_limit_preconditions(baseline):
    with pytest.raises(ValueError):
        likely_limit_sample(baseline, 30, 3, 9)
    with pytest.raises(ValueError):
        likely_limit_sample(baseline, 5, 3, 10, depth=10)
