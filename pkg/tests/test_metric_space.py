import numpy as np
import pytest

from xferlab import InvalidInput, NotPsd, from_psd, identity, trace_inner
from xferlab.instances import random_psd


def test_from_psd_examples(rng):
    np.testing.assert_allclose(from_psd(np.eye(2)).t, np.eye(2))
    np.testing.assert_allclose(from_psd(np.diag([4.0, 9.0])).t, np.diag([2.0, 3.0]), atol=1e-14)
    h = random_psd(rng, 4)
    t = from_psd(h).t
    assert np.max(np.abs(t.T @ t - h)) < 1e-10


def test_from_psd_rejects_negative_eigenvalue():
    with pytest.raises(NotPsd):
        from_psd(np.diag([1.0, -0.5]))


def test_from_psd_tolerates_tiny_negative_rounding():
    ms = from_psd(np.diag([1.0, -1e-9]))
    assert ms.t[1, 1] == 0.0


def test_norm_vec_examples(rng):
    assert identity(2).norm_vec([3.0, 4.0]) == pytest.approx(5.0)
    assert from_psd(np.diag([4.0, 0.0])).norm_vec([1.0, 1.0]) == pytest.approx(2.0)
    ms = from_psd(random_psd(rng, 3))
    v = rng.standard_normal(3)
    assert abs(ms.norm_vec(v) - np.linalg.norm(ms.t @ v)) < 1e-12
    assert abs(ms.norm_vec(v) ** 2 - trace_inner(v, ms.h, v)) < 1e-12


def test_norm_vec_dimension_mismatch():
    with pytest.raises(InvalidInput):
        identity(2).norm_vec([1.0, 2.0, 3.0])


def test_norm_mat_examples(rng):
    assert identity(3).norm_mat(np.eye(3)) == pytest.approx(np.sqrt(3))
    assert from_psd(np.diag([0.0, 1.0])).norm_mat(np.eye(2)) == pytest.approx(1.0)
    ms = from_psd(random_psd(rng, 3))
    w = rng.standard_normal((3, 4))
    assert abs(ms.norm_mat(w) - np.linalg.norm(ms.t @ w)) < 1e-12


def test_normalize_examples():
    nv = identity(2).normalize([0.0, 2.0])
    np.testing.assert_allclose(nv.v, [0.0, 1.0])
    assert not nv.is_zero
    assert from_psd(np.diag([3.0, 1.0])).normalize([0.0, 0.0]).is_zero
    degenerate = from_psd(np.diag([1.0, 0.0])).normalize([0.0, 5.0])
    assert degenerate.is_zero
    np.testing.assert_array_equal(degenerate.v, [0.0, 0.0])


def test_normalize_rows_matches_single(rng):
    ms = from_psd(random_psd(rng, 3))
    rows = rng.standard_normal((5, 3))
    rows[2] = 0.0
    units, norms, is_zero = ms.normalize_rows(rows)
    for row, unit, flag in zip(rows, units, is_zero):
        single = ms.normalize(row)
        np.testing.assert_allclose(unit, single.v, atol=1e-15)
        assert flag == single.is_zero
