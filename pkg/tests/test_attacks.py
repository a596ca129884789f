import numpy as np
import pytest

from oracles import mc_top_sigma
from xferlab import (
    Analytic1D,
    InvalidInput,
    LinearModel,
    attack_spectrum,
    deviation,
    from_psd,
    identity,
    init_mlp,
    pgd_attack,
    svd,
)
from xferlab.attacks import pgd_attack_batch, spectra_batch
from xferlab.instances import random_metric, random_mlp


def test_zero_jacobian_spectrum():
    model = LinearModel(np.zeros((2, 3)))
    spec = attack_spectrum(model, identity(2), np.zeros(3))
    np.testing.assert_array_equal(spec.sigma, np.zeros(3))
    np.testing.assert_allclose(spec.deltas.T @ spec.deltas, np.eye(3), atol=1e-12)


def test_scalar_square_spectrum():
    spec = attack_spectrum(Analytic1D("square"), identity(1), [1.0])
    np.testing.assert_allclose(spec.sigma, [2.0])
    np.testing.assert_allclose(spec.deltas[:, 0], [1.0])


def test_top_sigma_beats_random_directions(rng):
    model = random_mlp(rng, 4, 3)
    ms = random_metric(rng, 3)
    x = rng.standard_normal(4)
    spec = attack_spectrum(model, ms, x)
    lower = mc_top_sigma(model.jacobian(x).T, ms.t)
    assert lower <= spec.sigma[0] * (1 + 1e-12)
    assert lower >= 0.99 * spec.sigma[0]


def test_spectrum_matches_weighted_svd(rng):
    model = random_mlp(rng, 5, 3)
    ms = random_metric(rng, 3)
    x = rng.standard_normal(5)
    spec = attack_spectrum(model, ms, x)
    ref = svd(ms.t @ model.jacobian(x).T)
    np.testing.assert_allclose(spec.sigma[:3], ref.sigma, rtol=1e-10)
    np.testing.assert_allclose(spec.sigma[3:], 0.0)
    np.testing.assert_allclose(np.abs(spec.deltas[:, 0]), np.abs(ref.v[:, 0]), atol=1e-8)


def test_thin_and_full_spectra_agree(rng):
    model = random_mlp(rng, 6, 2)
    ms = random_metric(rng, 2)
    xs = rng.standard_normal((7, 6))
    s_full, v_full, _ = spectra_batch(model, ms, xs, full=True)
    s_thin, v_thin, _ = spectra_batch(model, ms, xs, full=False)
    np.testing.assert_allclose(s_thin, s_full[:, :2], rtol=1e-9)
    np.testing.assert_allclose(v_thin, v_full[:, :, :2], atol=1e-8)


def test_deviation_examples(rng):
    a = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    null_dev = deviation([0.0, 0.0, 1.0], LinearModel(a), identity(2), np.zeros(3))
    assert null_dev.unit.is_zero

    model = random_mlp(rng, 4, 3)
    ms = random_metric(rng, 3)
    x = rng.standard_normal(4)
    spec = attack_spectrum(model, ms, x)
    self_dev = deviation(spec.attack(1), model, ms, x)
    assert ms.norm_vec(self_dev.raw) == pytest.approx(spec.sigma[0], rel=1e-10)

    other = random_mlp(rng, 4, 2)
    d = rng.standard_normal(4)
    d /= np.linalg.norm(d)
    dev = deviation(d, other, identity(2), x)
    jac = other.jacobian(x)
    explicit = np.array([sum(jac[i, k] * d[i] for i in range(4)) for k in range(2)])
    assert np.max(np.abs(dev.raw - explicit)) < 1e-12


def test_deviation_rejects_non_unit():
    with pytest.raises(InvalidInput):
        deviation([1.0, 1.0], LinearModel(np.eye(2)), identity(2), np.zeros(2))


@pytest.mark.parametrize("eps", [1e-3, 0.5, 10.0])
def test_pgd_on_linear_model_finds_top_direction(eps):
    q1, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))
    q2, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((3, 3)))
    a = q1 @ np.diag([3.0, 1.0, 0.5]) @ q2.T
    ms = from_psd(np.diag([1.0, 2.0, 0.5]))
    top = svd(ms.t @ a).v[:, 0]
    delta = pgd_attack(LinearModel(a), ms, np.zeros(3), eps, steps=200, step_size=eps / 5)
    assert np.linalg.norm(delta) == pytest.approx(eps, rel=1e-12)
    assert abs(delta @ top) / eps == pytest.approx(1.0, abs=1e-9)


def test_pgd_small_eps_aligns_with_spectral_attack(rng):
    model = random_mlp(rng, 5, 3)
    ms = random_metric(rng, 3)
    x = rng.standard_normal(5)
    eps = 1e-4
    delta = pgd_attack(model, ms, x, eps)
    top = attack_spectrum(model, ms, x).attack(1)
    assert abs(delta @ top) / eps >= 0.99


def test_pgd_single_step_snapshot():
    model = init_mlp(3, 4, 2, seed=7)
    delta = pgd_attack(model, identity(2), np.array([0.1, -0.2, 0.3]), eps=0.1, steps=1, seed=5)
    np.testing.assert_allclose(delta, SNAPSHOT_STEP1, rtol=0, atol=1e-12)


def test_pgd_is_seeded_and_batched_consistently(rng):
    model = random_mlp(rng, 4, 2)
    xs = rng.standard_normal((3, 4))
    a = pgd_attack_batch(model, identity(2), xs, 0.05, seed=3)
    b = pgd_attack_batch(model, identity(2), xs, 0.05, seed=3)
    np.testing.assert_array_equal(a, b)


def test_pgd_rejects_bad_arguments():
    model = LinearModel(np.eye(2))
    with pytest.raises(InvalidInput):
        pgd_attack(model, identity(2), np.zeros(2), eps=0.0)
    with pytest.raises(InvalidInput):
        pgd_attack(model, identity(2), np.zeros(2), eps=0.1, steps=0)


SNAPSHOT_STEP1 = np.array([-0.044991397119997334, -0.08755511236111518, -0.017603308911201578])
