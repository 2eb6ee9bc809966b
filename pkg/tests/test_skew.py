import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from bony.skew import (
    SliceCover,
    _make_cover,
    attractor_sample,
    base_orbit,
    disk_cover,
    iterate_fiber,
    slice_cover,
    slice_diameter,
    step,
)
from bony.torus import FloatBudgetError, TorusPoint, iterate_point
from bony.torus.periodic import SymbolicWord, fixed_points, periodic_point_from_word
from helpers import philox

MESH = 0.01


@pytest.fixture(scope="module")
def contracting_fixed(baseline):
    """Fixed point of the base map inside the marked rectangle of contraction 0."""
    S = baseline
    lab = S.P.marked_label(0, 1)
    b, q = periodic_point_from_word(S.A, S.P, SymbolicWord((lab,)))
    assert q == 1
    return b


def test_step_fixed(baseline, contracting_fixed):
    b = contracting_fixed
    p0 = baseline.F.vertices[0]
    b1, x1 = step(baseline, b, p0)
    assert b1.exact == b.exact
    assert np.array_equal(x1, p0)


def test_step_stays_in_disk(baseline):
    S = baseline
    rng = philox(1)
    B = rng.random((10_000, 2))
    g = rng.standard_normal((10_000, 1))
    X = np.sign(g) * rng.random((10_000, 1))
    assert np.abs(S.fiber_map(B, X)).max() <= 1.0


def test_iterate_matches_steps(baseline):
    S = baseline
    b = TorusPoint.from_exact(12345, 67891, 2**20)
    x = np.array([0.3])
    bb, xx = b, x
    for _ in range(7):
        bb, xx = step(S, bb, xx)
    assert np.array_equal(iterate_fiber(S, b, 7, x), xx)


def test_iterate_zero_is_identity(baseline):
    x = np.array([0.123])
    assert np.array_equal(iterate_fiber(baseline, TorusPoint.from_exact(1, 2, 3), 0, x), x)


def test_constant_word_contracts_exactly(baseline, contracting_fixed):
    S = baseline
    p0 = S.F.vertices[0]
    X = np.linspace(-1, 1, 11)[:, None]
    for n in (1, 5, 20):
        Y = iterate_fiber(S, contracting_fixed, n, X)
        lhs = np.linalg.norm(Y - p0, axis=1)
        rhs = (1 - S.F.eps) ** n * np.linalg.norm(X - p0, axis=1)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**30 - 1), st.integers(0, 2**30 - 1), st.integers(0, 8), st.integers(0, 8))
def test_iterate_composition(baseline, p, r, n, m):
    S = baseline
    b = TorusPoint.from_exact(p, r, 2**30)
    x = np.array([[-0.9], [0.0], [0.55]])
    lhs = iterate_fiber(S, b, n + m, x)
    rhs = iterate_fiber(S, iterate_point(S.A, b, n), m, iterate_fiber(S, b, n, x))
    assert np.abs(lhs - rhs).max() <= 1e-10


class TestSliceCover:
    def test_depth_zero(self, baseline):
        C = slice_cover(baseline, TorusPoint.from_exact(1, 1, 7), 0, MESH)
        assert C.diam_outer == 2.0
        assert C.covers(np.linspace(-1, 1, 10_001)[:, None]).all()

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_disk_cover(self, d):
        mesh = 0.1
        X = disk_cover(d, mesh)
        assert np.linalg.norm(X, axis=1).max() <= 1.0 + 1e-12
        g = philox(d).standard_normal((4000, d))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True) * philox(d + 9).random((4000, 1)) ** (1 / d)
        gap, _ = cKDTree(X).query(pts)
        assert gap.max() <= mesh

    def test_constant_word(self, baseline, contracting_fixed):
        eps = baseline.F.eps
        for n in (1, 4, 10, 25):
            C = slice_cover(baseline, contracting_fixed, n, MESH)
            c = (1 - eps) ** n
            assert C.diam_outer <= 2 * c + 2 * MESH * c + 1e-15
            assert C.diam_inner == pytest.approx(2 * c, rel=1e-12)

    def test_nesting_at_periodic_points(self, baseline):
        S = baseline
        pts = fixed_points(S.A, 2)
        rng = philox(2)
        chosen = [pts[i] for i in rng.choice(len(pts), 20, replace=False)]
        for b in chosen:
            diam = [slice_cover(S, b, n, MESH).diam_outer for n in range(0, 13)]
            assert all(diam[n + 1] <= diam[n] + 2 * MESH for n in range(12))

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_cover_soundness(self, baseline, n):
        """The direct image of a dense sample of D lies in the outer cover."""
        S = baseline
        b = TorusPoint.from_exact(987654321, 123456789, 2**31)
        start = iterate_point(S.A, b, -n)
        X = np.linspace(-1, 1, 100_000)[:, None]
        Y = iterate_fiber(S, start, n, X)
        C = slice_cover(S, b, n, MESH)
        assert C.covers(Y).all()
        assert C.covers(C.inner).all()

    def test_float_budget(self, baseline):
        b = TorusPoint.from_float(0.3, 0.4)
        depth = baseline.A.float_depth()
        slice_cover(baseline, b, depth, MESH)
        with pytest.raises(FloatBudgetError):
            slice_cover(baseline, b, depth + 1, MESH)
        with pytest.raises(FloatBudgetError):
            base_orbit(baseline.A, b, depth + 1, backward=True)

    @pytest.mark.parametrize("mesh", [0.0, -0.1, 0.2])
    def test_mesh_guard(self, baseline, mesh):
        with pytest.raises(ValueError):
            slice_cover(baseline, TorusPoint.from_exact(1, 1, 3), 2, mesh)

    def test_diameter_examples(self):
        b = TorusPoint.from_exact(0, 0, 1)
        one = _make_cover(b, 0, np.array([[0.2]]), 0.3)
        assert slice_diameter(one) == (0.0, pytest.approx(0.6))
        two = _make_cover(b, 0, np.array([[0.1, 0.0], [0.4, 0.4]]), 0.01)
        assert two.diam_inner >= 0.5 - 1e-15

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**30 - 1), st.integers(0, 2**30 - 1), st.integers(0, 15))
    def test_inner_below_outer(self, baseline, p, r, n):
        C = slice_cover(baseline, TorusPoint.from_exact(p, r, 2**30), n, 0.05)
        assert 0 <= C.diam_inner <= C.diam_outer <= 2
        assert C.covers(C.inner).all()


class TestAttractorSample:
    def test_depth_zero_full_disks(self, baseline):
        A = attractor_sample(baseline, 0, 16, MESH)
        assert len(A) == 256
        assert (A.diam_outer == 2).all()

    def test_nonempty_and_consistent(self, baseline):
        A = attractor_sample(baseline, 6, 16, MESH)
        assert all(c.n_balls > 0 for c in A)
        C = A[37]
        direct = slice_cover(baseline, C.base, 6, MESH)
        assert np.allclose(direct.inner, C.inner, atol=1e-15)
        assert direct.diam_outer == pytest.approx(C.diam_outer, abs=1e-15)

    def test_deterministic_across_workers(self, baseline):
        a = attractor_sample(baseline, 8, 64, MESH, workers=1)
        b = attractor_sample(baseline, 8, 64, MESH, workers=2)
        assert np.array_equal(a.centers, b.centers) and np.array_equal(a.radii, b.radii)

    def test_guard(self, baseline):
        with pytest.raises(ValueError):
            attractor_sample(baseline, 3, 8, MESH)

    def test_large_slices_become_rare(self, baseline):
        L = math.exp(baseline.avg_log_lipschitz / 2)
        fr = [float((attractor_sample(baseline, n, 32, MESH).diam_outer > L**n).mean()) for n in (10, 20, 30, 40, 50)]
        assert all(b <= a for a, b in zip(fr, fr[1:]))
        assert fr[-1] < 0.1 < fr[0]
