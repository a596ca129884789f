"""Hot numeric kernels.

Every kernel has two implementations with the same contract: a scalar-loop
version compiled by numba, and a pure-numpy version that vectorises the same
loop over the leading batch axis. ``_accel.USE_NUMBA`` picks one at import
time; both stay importable so tests and benchmarks can compare them.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60


@njit(cache=True)
def _jacobi_eigh_numba(a, tol, max_sweeps):
    nb, k, _ = a.shape
    vals = np.empty((nb, k))
    vecs = np.empty((nb, k, k))
    sweeps = np.zeros(nb, dtype=np.int64)
    for b in range(nb):
        m = a[b].copy()
        v = np.eye(k)
        fro = 0.0
        for i in range(k):
            for j in range(k):
                fro += m[i, j] * m[i, j]
        fro = math.sqrt(fro)
        for sweep in range(max_sweeps):
            off = 0.0
            for p in range(k - 1):
                for q in range(p + 1, k):
                    off += 2.0 * m[p, q] * m[p, q]
            if math.sqrt(off) <= tol * fro:
                break
            sweeps[b] = sweep + 1
            for p in range(k - 1):
                for q in range(p + 1, k):
                    apq = m[p, q]
                    if apq == 0.0:
                        continue
                    theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(k):
                        mrp = m[r, p]
                        mrq = m[r, q]
                        m[r, p] = c * mrp - s * mrq
                        m[r, q] = s * mrp + c * mrq
                    for r in range(k):
                        mpr = m[p, r]
                        mqr = m[q, r]
                        m[p, r] = c * mpr - s * mqr
                        m[q, r] = s * mpr + c * mqr
                    m[p, q] = 0.0
                    m[q, p] = 0.0
                    for r in range(k):
                        vrp = v[r, p]
                        vrq = v[r, q]
                        v[r, p] = c * vrp - s * vrq
                        v[r, q] = s * vrp + c * vrq
        for i in range(k):
            vals[b, i] = m[i, i]
        vecs[b] = v
    return vals, vecs, sweeps


def _jacobi_eigh_numpy(a, tol, max_sweeps):
    a = np.array(a, dtype=np.float64, copy=True)
    nb, k, _ = a.shape
    v = np.broadcast_to(np.eye(k), (nb, k, k)).copy()
    sweeps = np.zeros(nb, dtype=np.int64)
    fro = np.sqrt(np.einsum("bij,bij->b", a, a))
    iu = np.triu_indices(k, 1)
    for sweep in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(a[:, iu[0], iu[1]] ** 2, axis=1))
        active = off > tol * fro
        if not active.any():
            break
        sweeps[active] = sweep + 1
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[:, p, q]
                rot = active & (apq != 0.0)
                if not rot.any():
                    continue
                safe = np.where(rot, apq, 1.0)
                with np.errstate(over="ignore"):
                    theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                    t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta < 0.0, -t, t)
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                colp = a[:, :, p].copy()
                colq = a[:, :, q].copy()
                a[:, :, p] = cc * colp - ss * colq
                a[:, :, q] = ss * colp + cc * colq
                rowp = a[:, p, :].copy()
                rowq = a[:, q, :].copy()
                a[:, p, :] = cc * rowp - ss * rowq
                a[:, q, :] = ss * rowp + cc * rowq
                a[rot, p, q] = 0.0
                a[rot, q, p] = 0.0
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = cc * vp - ss * vq
                v[:, :, q] = ss * vp + cc * vq
    vals = np.diagonal(a, axis1=1, axis2=2).copy()
    return vals, v, sweeps


def jacobi_eigh_numba(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    if not _accel.HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    a, scale = _unit_scale(a)
    vals, vecs, sweeps = _jacobi_eigh_numba(np.ascontiguousarray(a), float(tol), int(max_sweeps))
    return vals * scale[:, None], vecs, sweeps


def jacobi_eigh_numpy(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    a, scale = _unit_scale(a)
    vals, vecs, sweeps = _jacobi_eigh_numpy(a, float(tol), int(max_sweeps))
    return vals * scale[:, None], vecs, sweeps


def _unit_scale(a):
    # the convergence test squares entries, which under- or overflows far from unit scale
    a = np.asarray(a, dtype=np.float64)
    scale = np.max(np.abs(a), axis=(1, 2)) if a.size else np.ones(a.shape[0])
    scale = np.where(scale > 0.0, scale, 1.0)
    return a / scale[:, None, None], scale


def jacobi_eigh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi on a stack of symmetric matrices.

    Args:
        a: array of shape (B, k, k); each slice must be symmetric.
        tol: stop once the off-diagonal Frobenius mass drops to
            ``tol * ||A||_F``.
        max_sweeps: hard cap on full sweeps.

    Returns:
        ``(values, vectors, sweeps)`` with values of shape (B, k) in the
        order the rotations left them (unsorted), eigenvectors as columns of
        ``vectors[b]``, and the number of sweeps each matrix needed.
    """
    if _accel.USE_NUMBA:
        return jacobi_eigh_numba(a, tol, max_sweeps)
    return jacobi_eigh_numpy(a, tol, max_sweeps)
