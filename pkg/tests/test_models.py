import numpy as np
import pytest

from oracles import fd_jacobian, loop_mlp_forward
from xferlab import (
    Analytic1D,
    Dataset,
    InvalidInput,
    LinearModel,
    MlpOneHidden,
    fit_mlp,
    init_mlp,
    perturb_weights,
    train_full_batch,
)
from xferlab.models import load_model, mse, save_model


def _zero_mlp(n=3, h=4, m=2):
    return MlpOneHidden(w1=np.zeros((h, n)), b1=np.zeros(h), w2=np.zeros((m, h)), b2=np.array([0.7, -1.2]))


def test_zero_weights_output_bias():
    model = _zero_mlp()
    np.testing.assert_array_equal(model.forward([1.0, 2.0, 3.0]), [0.7, -1.2])
    np.testing.assert_array_equal(model.jacobian([1.0, 2.0, 3.0]), np.zeros((3, 2)))


def test_analytic_examples():
    assert Analytic1D("square").forward([3.0])[0] == 9.0
    assert Analytic1D("signed_square").jacobian([-2.0])[0, 0] == 4.0
    assert Analytic1D("signed_square").forward([-2.0])[0] == -4.0
    with pytest.raises(InvalidInput):
        Analytic1D("cube")


def test_forward_matches_loop_oracle(rng):
    model = init_mlp(5, 7, 3, seed=11)
    for x in rng.standard_normal((4, 5)):
        assert np.max(np.abs(model.forward(x) - loop_mlp_forward(model, x))) < 1e-12


def test_batch_and_single_agree(rng):
    model = init_mlp(4, 6, 3, seed=2)
    xs = rng.standard_normal((5, 4))
    np.testing.assert_allclose(model.forward_batch(xs), np.array([model(x) for x in xs]), rtol=0, atol=1e-15)
    np.testing.assert_allclose(model.jacobian_batch(xs), np.array([model.jacobian(x) for x in xs]), atol=1e-15)


def test_jacobian_matches_finite_differences(rng):
    model = init_mlp(6, 8, 4, seed=5)
    x = rng.standard_normal(6)
    jac = model.jacobian(x)
    fd = fd_jacobian(model.forward, x)
    assert jac.shape == (6, 4)
    assert np.max(np.abs(jac - fd)) <= 1e-5 * (1.0 + np.max(np.abs(jac)))


def test_linear_model_jacobian_is_transpose(rng):
    a = rng.standard_normal((3, 5))
    model = LinearModel(a, np.ones(3))
    x = rng.standard_normal(5)
    np.testing.assert_allclose(model(x), a @ x + 1.0)
    np.testing.assert_array_equal(model.jacobian(x), a.T)


def test_dimension_mismatch_raises():
    model = init_mlp(3, 2, 1, seed=0)
    with pytest.raises(InvalidInput):
        model.forward([1.0, 2.0])
    with pytest.raises(InvalidInput):
        model.jacobian_batch(np.ones((4, 5)))


def test_json_round_trip_is_exact(tmp_path):
    model = init_mlp(4, 5, 2, seed=9)
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    for p, q in zip(model.params(), back.params()):
        np.testing.assert_array_equal(p, q)


def test_load_model_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2, "h": 3}')
    with pytest.raises(InvalidInput):
        load_model(path)


def test_one_sample_overfit():
    data = Dataset(np.array([[0.3, -0.2, 0.5]]), np.array([[1.0, -0.5]]))
    model = fit_mlp(data, hidden=5, seed=0, epochs=2000)
    assert mse(model, data) < 1e-3


def test_lr_zero_leaves_weights_unchanged():
    data = Dataset(np.ones((3, 2)), np.zeros((3, 1)))
    start = init_mlp(2, 3, 1, seed=1)
    trained = train_full_batch(start, data, lr=0.0, epochs=10)
    for p, q in zip(start.params(), trained.params()):
        np.testing.assert_array_equal(p, q)


def test_training_is_deterministic_and_monotone(rng):
    x = rng.standard_normal((40, 3))
    data = Dataset(x, np.sin(x[:, :2]))
    history = []
    a = fit_mlp(data, hidden=6, seed=4, epochs=300, history=history)
    b = fit_mlp(data, hidden=6, seed=4, epochs=300)
    for p, q in zip(a.params(), b.params()):
        np.testing.assert_array_equal(p, q)
    assert len(history) == 301
    assert all(later <= earlier for earlier, later in zip(history, history[1:]))
    assert history[-1] == pytest.approx(mse(a, data), rel=1e-12)


def test_training_rejects_bad_arguments():
    data = Dataset(np.ones((3, 2)), np.zeros((3, 1)))
    start = init_mlp(2, 3, 1, seed=1)
    with pytest.raises(InvalidInput):
        train_full_batch(start, data, lr=-1.0)
    with pytest.raises(InvalidInput):
        train_full_batch(start, data, epochs=0)
    with pytest.raises(InvalidInput):
        train_full_batch(start, Dataset(np.ones((3, 2))))


def test_perturb_examples():
    model = init_mlp(4, 5, 3, seed=3)
    same = perturb_weights(model, 0.0, seed=8)
    for p, q in zip(model.params(), same.params()):
        np.testing.assert_array_equal(p, q)
    full = perturb_weights(model, 1.0, seed=8)
    assert max(np.max(np.abs(q - p)) for p, q in zip(model.params(), full.params())) <= 0.5
    w3 = perturb_weights(model, 0.3, seed=8)
    w6 = perturb_weights(model, 0.6, seed=8)
    for p, a, b in zip(model.params(), w3.params(), w6.params()):
        np.testing.assert_allclose(b - p, 2.0 * (a - p), atol=1e-15)


def test_perturb_rejects_out_of_range_t():
    with pytest.raises(InvalidInput):
        perturb_weights(init_mlp(2, 2, 1, seed=0), 1.5, seed=0)
