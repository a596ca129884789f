import numpy as np
import pytest

from xferlab import Dataset, InvalidInput, MixtureSpec, RbfTarget, make_mixture, make_target, sample_dataset
from xferlab.dataset import read_csv, write_csv
from xferlab.synthdata import box_muller, load_target, sample_inputs, save_target


def test_default_shapes():
    target = make_target(seed=1)
    assert target.features(np.zeros((1, 50))).shape == (1, 100)
    assert target(np.zeros((2, 50))).shape == (2, 10)
    assert np.all(target.sigma_sq >= 1e-3) and np.all(target.sigma_sq <= 100.0)


def test_single_rbf_at_center():
    target = RbfTarget(centers=[[0.0]], sigma_sq=[1.0], w=[[1.0]], b=[0.0])
    assert target(np.array([[0.0]]))[0, 0] == 1.0
    assert target(np.array([[1.0]]))[0, 0] == pytest.approx(np.exp(-1.0))


def test_target_is_deterministic():
    a, b = make_target(seed=5), make_target(seed=5)
    for name in ("centers", "sigma_sq", "w", "b"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_target_output_bound(rng):
    target = make_target(n=4, m_rbf=12, d=3, seed=2)
    y = target(rng.standard_normal((200, 4)))
    assert np.all(np.abs(y) <= target.output_bound())


def test_target_rejects_bad_widths():
    with pytest.raises(InvalidInput):
        RbfTarget(centers=[[0.0]], sigma_sq=[0.0], w=[[1.0]], b=[0.0])


def test_target_json_round_trip(tmp_path):
    target = make_target(n=3, m_rbf=4, d=2, seed=3)
    save_target(target, tmp_path / "t.json")
    back = load_target(tmp_path / "t.json")
    np.testing.assert_array_equal(back.w, target.w)
    np.testing.assert_array_equal(back.sigma_sq, target.sigma_sq)
    assert back.sigma_sq_floor == target.sigma_sq_floor


def test_default_dataset_shapes():
    target = make_target(seed=0)
    data = sample_dataset(target, make_mixture(seed=1), seed=2)
    assert data.x.shape == (5000, 50) and data.y.shape == (5000, 10)


def test_single_component_mean_clt_bound():
    n_samples = 4000
    x = sample_inputs(MixtureSpec(centers=np.zeros((1, 6))), n_samples, seed=9)
    assert np.all(np.abs(x.mean(axis=0)) <= 5.0 / np.sqrt(n_samples))
    assert np.all(np.abs(x.var(axis=0) - 1.0) <= 0.1)


def test_box_muller_moments():
    z = box_muller(np.random.default_rng(0), (20001,))
    assert z.shape == (20001,)
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1.0) < 0.03


def test_sampling_is_deterministic_and_worker_invariant():
    target = make_target(n=3, m_rbf=5, d=2, seed=0)
    mix = make_mixture(n=3, k=4, seed=1)
    a = sample_dataset(target, mix, n_samples=3000, seed=7, workers=1)
    b = sample_dataset(target, mix, n_samples=3000, seed=7, workers=1)
    c = sample_dataset(target, mix, n_samples=3000, seed=7, workers=4)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.x, c.x)
    np.testing.assert_array_equal(a.y, c.y)


def test_sample_dataset_validation():
    target = make_target(n=3, m_rbf=5, d=2, seed=0)
    with pytest.raises(InvalidInput):
        sample_dataset(target, make_mixture(n=4, k=2, seed=0), n_samples=10)
    with pytest.raises(InvalidInput):
        sample_dataset(target, make_mixture(n=3, k=2, seed=0), n_samples=1)


def test_csv_round_trip_is_exact(tmp_path):
    target = make_target(n=3, m_rbf=5, d=2, seed=0)
    data = sample_dataset(target, make_mixture(n=3, k=2, seed=0), n_samples=10, seed=1)
    write_csv(data, tmp_path / "d.csv")
    back = read_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.y, data.y)
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "x0,x1,x2,y0,y1"


def test_read_csv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,y0\n1.0,abc\n")
    with pytest.raises(InvalidInput):
        read_csv(path)


def test_dataset_validation():
    with pytest.raises(InvalidInput):
        Dataset(np.array([[np.inf]]))
    with pytest.raises(InvalidInput):
        Dataset(np.ones((3, 2)), np.ones((2, 1)))
