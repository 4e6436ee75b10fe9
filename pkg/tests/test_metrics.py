import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pflatent.errors import ShapeMismatch
from pflatent.metrics import (EvalReport, explained_variance_table, linear_extrapolation_baseline,
                              mse, persistence_baseline, variance_report)
from pflatent.reduce import pca_fit

from oracles import mse_loops


def test_mse_identical_is_zero():
    x = np.random.default_rng(0).random((3, 4))
    assert mse(x, x) == 0.0


def test_mse_known_value():
    assert mse([0.0, 0.0], [1.0, 3.0]) == 5.0


def test_mse_empty():
    assert mse([], []) == 0.0


def test_mse_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        mse(np.zeros(3), np.zeros(4))


def test_mse_matches_loops():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(5, 7)), rng.normal(size=(5, 7))
    assert mse(a, b) == pytest.approx(mse_loops(a, b), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-100, 100)),
       arrays(np.float64, 6, elements=st.floats(-100, 100)), st.floats(0.1, 10))
def test_mse_scaling(a, b, c):
    assert mse(c * a, c * b) == pytest.approx(c * c * mse(a, b), rel=1e-9, abs=1e-12)
    assert mse(a, b) == mse(b, a)


def test_explained_variance_one_dimensional():
    t = np.linspace(-1, 1, 9)[:, None]
    table = explained_variance_table(pca_fit(np.hstack([t, -3 * t]), 1))
    np.testing.assert_allclose(table, [1.0])


def test_explained_variance_isotropic():
    # four points at the corners of a square have equal variance on both axes
    z = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    np.testing.assert_allclose(explained_variance_table(pca_fit(z, 2)), [0.5, 1.0])


def test_explained_variance_monotone():
    z = np.random.default_rng(2).normal(size=(30, 6))
    table = explained_variance_table(pca_fit(z, 6))
    assert np.all(np.diff(table) >= 0) and table[-1] == pytest.approx(1.0)
    assert np.all((table >= 0) & (table <= 1))


def test_persistence_ramp():
    d = 0.1
    seq = (np.arange(6) * d)[:, None]
    pred = persistence_baseline(seq, 4, 2)
    np.testing.assert_allclose(pred.ravel(), [3 * d, 3 * d])
    # errors are d and 2d on frames 5 and 6
    assert mse(pred, seq[4:6]) == pytest.approx((d**2 + 4 * d**2) / 2)


def test_linear_extrapolation_exact_on_ramp():
    seq = np.stack([np.arange(8) * 0.1, 1 - np.arange(8) * 0.3], axis=1)
    pred = linear_extrapolation_baseline(seq, 5, 3)
    np.testing.assert_allclose(pred, seq[5:8], atol=1e-14)
    with pytest.raises(ValueError):
        linear_extrapolation_baseline(seq, 1, 2)


def test_persistence_batched():
    x = np.random.default_rng(3).random((2, 7, 3))
    pred = persistence_baseline(x, 5, 2)
    assert pred.shape == (2, 2, 3)
    np.testing.assert_array_equal(pred[:, 1], x[:, 4])


def test_report_round_trip():
    r = EvalReport()
    r.set("run", "name", "desk").set("run", "ok", True).set("run", "count", 7)
    r.set("loss", "val", 0.1 + 0.2)
    back = EvalReport.parse(r.emit())
    assert back.sections == r.sections
    assert back.get("loss", "val") == 0.1 + 0.2


def test_report_rejects_multiline():
    with pytest.raises(ValueError):
        EvalReport().set("a", "b", "x\ny").emit()


def test_variance_report_keys():
    z = np.random.default_rng(4).normal(size=(10, 3))
    r = variance_report(EvalReport(), pca_fit(z, 3))
    assert list(r.sections["explained_variance"]) == ["1", "2", "3"]
