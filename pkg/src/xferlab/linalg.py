"""Dense linear algebra on small float64 matrices.

Eigendecompositions go through the cyclic Jacobi kernel in
:mod:`xferlab.kernels`; the SVD and pseudo-inverse are built on top of it.
Matrices are plain 2-D numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInput

RANK_TOL = 1e-12
SYM_TOL = 1e-9


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class EigResult:
    vectors: np.ndarray
    values: np.ndarray


def as_matrix(a, name="matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def as_vector(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def frobenius(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def mean_rows(a) -> np.ndarray:
    """Mean over the leading axis using numpy's pairwise summation.

    ``np.mean(axis=0)`` accumulates strided rows one by one; transposing to
    make the sample axis contiguous gets the pairwise reduction instead.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] == 0:
        raise InvalidInput("mean over an empty set of rows")
    flat = np.ascontiguousarray(a.reshape(a.shape[0], -1).T)
    return (flat.sum(axis=1) / a.shape[0]).reshape(a.shape[1:])


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Per-column (last-axis) sign flips making the largest |entry| positive."""
    idx = np.argmax(np.abs(vectors), axis=-2)
    picked = np.take_along_axis(vectors, idx[..., None, :], axis=-2)[..., 0, :]
    return np.where(picked < 0.0, -1.0, 1.0)


def sym_eig_batch(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a stack (B, k, k) of symmetric matrices.

    Values come back descending, eigenvectors sign-canonicalised.
    """
    a = np.asarray(a, dtype=np.float64)
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    vals, vecs, _ = kernels.jacobi_eigh(a)
    order = np.argsort(-vals, axis=1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    vecs = vecs * canonical_signs(vecs)[:, None, :]
    return vals, vecs


def sym_eig(a) -> EigResult:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"sym_eig needs a square matrix, got {a.shape}")
    if frobenius(a - a.T) > SYM_TOL * (1.0 + frobenius(a)):
        raise InvalidInput("sym_eig input is not symmetric")
    if a.shape[0] == 0:
        return EigResult(vectors=np.zeros((0, 0)), values=np.zeros(0))
    vals, vecs = sym_eig_batch(a[None])
    return EigResult(vectors=vecs[0], values=vals[0])


def _orthonormal_completion(cols: np.ndarray, dim: int, total: int) -> np.ndarray:
    # Modified Gram-Schmidt (two passes) on the given columns, then greedy
    # extension by the standard basis vector with the largest residual.
    basis = []
    for c in cols.T:
        w = c.copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        nrm = np.linalg.norm(w)
        if nrm > 0.0:
            basis.append(w / nrm)
    eye = np.eye(dim)
    while len(basis) < total:
        best, best_norm = None, -1.0
        for e in eye:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w -= (b @ w) * b
            nrm = np.linalg.norm(w)
            if nrm > best_norm + 1e-12:
                best, best_norm = w, nrm
        basis.append(best / best_norm)
    return np.array(basis).T.reshape(dim, total)


def svd(a) -> SvdResult:
    """Thin SVD through the smaller Gram matrix.

    Singular values are re-measured as ``||A v_i||`` after the eigensolve,
    values below ``RANK_TOL * sigma_1`` are set to exactly zero, and each
    right singular vector is flipped so its largest-magnitude entry is
    positive.
    """
    a = as_matrix(a)
    rows, cols = a.shape
    k = min(rows, cols)
    if k == 0:
        return SvdResult(u=np.zeros((rows, 0)), sigma=np.zeros(0), v=np.zeros((cols, 0)))
    transposed = rows < cols
    # work at unit scale so the Gram matrix neither underflows nor overflows
    amax = float(np.max(np.abs(a)))
    unit = amax if amax > 0.0 else 1.0
    b = (a.T if transposed else a) / unit
    _, v = sym_eig_batch((b.T @ b)[None])
    v = v[0]
    bv = b @ v
    sigma = np.sqrt(np.sum(bv * bv, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma, v, bv = sigma[order], v[:, order], bv[:, order]
    if sigma[0] > 0.0:
        sigma = np.where(sigma < RANK_TOL * sigma[0], 0.0, sigma)
    nz = sigma > 0.0
    u = _orthonormal_completion(bv[:, nz] / sigma[nz], b.shape[0], k)
    if transposed:
        u, v = v, u
    flip = canonical_signs(v)
    return SvdResult(u=u * flip, sigma=sigma * unit, v=v * flip)


def pinv(a, rel_tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse; singular values under ``rel_tol * sigma_max`` count as zero."""
    if not 0.0 < rel_tol < 1.0:
        raise InvalidInput(f"rel_tol must lie in (0, 1), got {rel_tol}")
    a = as_matrix(a)
    res = svd(a)
    if res.sigma.size == 0 or res.sigma[0] == 0.0:
        return np.zeros(a.shape[::-1])
    keep = res.sigma > rel_tol * res.sigma[0]
    inv = np.zeros_like(res.sigma)
    inv[keep] = 1.0 / res.sigma[keep]
    return (res.v * inv) @ res.u.T


def trace_inner(w, s, m) -> float:
    """``tr(W^T S M)``, the S-weighted matrix inner product.

    Vectors are accepted as single-column matrices.
    """
    w = np.asarray(w, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if w.ndim == 1:
        w = w[:, None]
    if m.ndim == 1:
        m = m[:, None]
    w, s, m = as_matrix(w, "w"), as_matrix(s, "s"), as_matrix(m, "m")
    if s.shape[0] != s.shape[1]:
        raise InvalidInput(f"s must be square, got {s.shape}")
    if w.shape != m.shape or w.shape[0] != s.shape[0]:
        raise InvalidInput(f"shapes {w.shape}, {s.shape}, {m.shape} are not conformable")
    return float(np.sum(w * (s @ m)))
