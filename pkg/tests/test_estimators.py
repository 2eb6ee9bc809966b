import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bony.estimators import BonyAttractor, BoxCountingDimension
from bony.skew import slice_cover
from bony.torus import TorusPoint


@pytest.fixture(scope="module")
def fitted():
    return BonyAttractor(n=8).fit()


def test_params_and_clone():
    est = BonyAttractor(m=13, d=2, n=5)
    params = est.get_params()
    assert params["m"] == 13 and params["d"] == 2 and params["n"] == 5
    c = clone(est)
    assert c.get_params() == params and not hasattr(c, "system_")


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        BonyAttractor().transform([[0.1, 0.2]])


def test_transform_matches_slice_cover(fitted):
    X = np.array([[0.1, 0.2], [0.7, 0.35], [1.7, -0.65]])
    D = fitted.transform(X)
    assert D.shape == (3, 2)
    for (u, v), row in zip(np.mod(X, 1.0), D):
        C = slice_cover(fitted.system_, TorusPoint.from_float(u, v), 8, fitted.mesh)
        assert tuple(row) == (C.diam_inner, C.diam_outer)
    # points equal mod 1 give equal slices
    np.testing.assert_array_equal(D[1], D[2])


def test_transform_rejects_bad_shape(fitted):
    with pytest.raises(ValueError):
        fitted.transform(np.zeros((2, 3)))


def test_predict_labels(fitted):
    labels = fitted.predict(np.array([[0.1, 0.2], [0.5, 0.5]]))
    assert set(labels) <= {"graph", "undetermined"}
    loose = clone(fitted).set_params(tol=3.0).fit()
    assert (loose.predict(np.array([[0.1, 0.2]])) == "graph").all()


def test_avg_log_lipschitz_exposed(fitted):
    assert fitted.avg_log_lipschitz_ == fitted.system_.avg_log_lipschitz < 0


def test_box_counting_full_cube():
    k = 32
    c = (np.arange(k) + 0.5) / k
    x = (np.arange(2 * k) + 0.5) / k - 1
    P = np.stack(np.meshgrid(c, c, x, indexing="ij"), axis=-1).reshape(-1, 3)
    est = BoxCountingDimension(deltas=(1 / 4, 1 / 8, 1 / 16, 1 / 32)).fit(P)
    assert est.predict() == pytest.approx(3.0, abs=1e-9)
    np.testing.assert_array_equal(est.counts_, [128, 1024, 8192, 65536])
    assert not est.sparse_


def test_box_counting_unfitted():
    with pytest.raises(NotFittedError):
        BoxCountingDimension().predict()
