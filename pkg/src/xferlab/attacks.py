"""Adversarial attacks as the H-space singular system of a model's Jacobian.

For small perturbations ``f(x + delta) - f(x) ~ J(x)^T delta``, so the
strongest unit attack under ``||.||_H`` is the top right singular vector of
``T J(x)^T`` (with ``T^T T = H``). The full set of right singular vectors gives
the ordered family of attacks; :func:`pgd_attack` searches the finite-radius
problem directly and is used to cross-check the linearisation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .linalg import RANK_TOL, as_vector, canonical_signs, sym_eig_batch
from .metric_space import MetricSpace, NormalizedVector

UNIT_TOL = 1e-8
PGD_STEPS = 50


@dataclass(frozen=True, eq=False)
class AttackSpectrum:
    """Singular values (length n, descending, zero-padded) and unit attacks as columns."""

    x: np.ndarray
    sigma: np.ndarray
    deltas: np.ndarray

    def attack(self, order: int = 1) -> np.ndarray:
        return self.deltas[:, order - 1]


@dataclass(frozen=True, eq=False)
class Deviation:
    raw: np.ndarray
    unit: NormalizedVector


def _check_metric(model, ms: MetricSpace) -> None:
    if ms.dim != model.out_dim:
        raise InvalidInput(f"metric dimension {ms.dim} does not match model output {model.out_dim}")


def attack_spectrum(model, ms: MetricSpace, x) -> AttackSpectrum:
    """Singular system of ``T J(x)^T``; column i of ``deltas`` is the i-th attack."""
    x = as_vector(x, "x")
    sigma, deltas, _ = spectra_batch(model, ms, x[None], full=True)
    return AttackSpectrum(x=x, sigma=sigma[0], deltas=deltas[0])


def spectra_batch(model, ms: MetricSpace, xs, full: bool = True):
    """Attack spectra for every row of ``xs`` at once.

    Returns ``(sigma, deltas, jac)`` where ``sigma`` is (N, k) descending,
    ``deltas`` is (N, n, k) with unit columns and ``jac`` is the (N, n, m)
    Jacobian stack. With ``full=True`` k = n and the deltas form a complete
    orthonormal basis; otherwise k = min(n, m) and only the attacks with a
    nonzero singular value are guaranteed meaningful.
    """
    _check_metric(model, ms)
    jac = model.jacobian_batch(xs)
    n_rows, n, m = jac.shape
    b = np.einsum("ab,knb->kan", ms.t, jac)  # T J^T, shape (N, m, n)
    if full or m >= n:
        _, vecs = sym_eig_batch(np.einsum("kan,kap->knp", b, b))
    else:
        _, u = sym_eig_batch(np.einsum("kan,kbn->kab", b, b))
        bt_u = np.einsum("kan,kab->knb", b, u)
        nrm = np.linalg.norm(bt_u, axis=1)
        ok = nrm > 0.0
        vecs = np.where(ok[:, None, :], bt_u / np.where(ok, nrm, 1.0)[:, None, :], 0.0)
    bv = np.einsum("kan,knp->kap", b, vecs)
    sigma = np.linalg.norm(bv, axis=1)
    order = np.argsort(-sigma, axis=1, kind="stable")
    sigma = np.take_along_axis(sigma, order, axis=1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    top = sigma[:, :1]
    sigma = np.where(sigma < RANK_TOL * top, 0.0, sigma)
    vecs = vecs * canonical_signs(vecs)[:, None, :]
    if not (full or m >= n):
        bad = np.any(sigma == 0.0, axis=1) & (top[:, 0] > 0.0)
        if bad.any():
            s_full, v_full, _ = spectra_batch(model, ms, np.asarray(xs)[bad], full=True)
            sigma[bad] = s_full[:, : sigma.shape[1]]
            vecs[bad] = v_full[:, :, : sigma.shape[1]]
    return sigma, vecs, jac


def deviation(attacking_delta, target_model, ms_target: MetricSpace, x) -> Deviation:
    """Output change of ``target_model`` at ``x`` under a unit attack direction."""
    _check_metric(target_model, ms_target)
    delta = as_vector(attacking_delta, "delta")
    if abs(np.linalg.norm(delta) - 1.0) > UNIT_TOL:
        raise InvalidInput("attack direction must have unit Euclidean norm")
    raw = target_model.jacobian(x).T @ delta
    return Deviation(raw=raw, unit=ms_target.normalize(raw))


def _random_sphere(rng: np.random.Generator, shape, radius: float) -> np.ndarray:
    d = rng.standard_normal(shape)
    return radius * d / np.linalg.norm(d, axis=-1, keepdims=True)


def adv_loss_batch(model, ms: MetricSpace, xs, deltas, base=None) -> np.ndarray:
    """``||f(x + delta) - f(x)||_H`` row by row."""
    base = model.forward_batch(xs) if base is None else base
    return ms.row_norms(model.forward_batch(xs + deltas) - base)


def pgd_attack_batch(
    model,
    ms: MetricSpace,
    xs,
    eps: float,
    steps: int = PGD_STEPS,
    step_size: float | None = None,
    seed=0,
) -> np.ndarray:
    """Projected normalised-gradient ascent on the Euclidean eps-sphere, one row per input.

    Each row starts from a random point of the sphere. Every iterate moves
    ``step_size`` along the normalised gradient of the squared H-loss and is
    projected back to radius ``eps``; the best iterate seen after the first
    step is returned.
    """
    _check_metric(model, ms)
    if not eps > 0.0:
        raise InvalidInput(f"eps must be positive, got {eps}")
    if int(steps) != steps or steps < 1:
        raise InvalidInput(f"steps must be a positive integer, got {steps}")
    step = eps / 10.0 if step_size is None else float(step_size)
    if not step > 0.0:
        raise InvalidInput(f"step_size must be positive, got {step_size}")
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    rng = np.random.default_rng(seed)
    delta = _random_sphere(rng, xs.shape, eps)
    base = model.forward_batch(xs)
    best = np.zeros_like(delta)
    best_loss = np.full(xs.shape[0], -np.inf)
    for _ in range(int(steps)):
        moved = xs + delta
        resid = model.forward_batch(moved) - base
        grad = np.einsum("knm,ml,kl->kn", model.jacobian_batch(moved), ms.h, resid)
        gnorm = np.linalg.norm(grad, axis=1, keepdims=True)
        grad = np.where(gnorm > 0.0, grad / np.where(gnorm > 0.0, gnorm, 1.0), 0.0)
        delta = delta + step * grad
        dnorm = np.linalg.norm(delta, axis=1, keepdims=True)
        delta = np.where(dnorm > 0.0, eps * delta / np.where(dnorm > 0.0, dnorm, 1.0), delta)
        loss = adv_loss_batch(model, ms, xs, delta, base)
        better = loss > best_loss
        best[better] = delta[better]
        best_loss[better] = loss[better]
    return best


def pgd_attack(model, ms, x, eps: float, steps: int = PGD_STEPS, step_size=None, seed=0):
    x = as_vector(x, "x")
    return pgd_attack_batch(model, ms, x[None], eps, steps, step_size, seed)[0]
