"""Output-space metric induced by a PSD matrix H.

``||v||_H = sqrt(v^T H v)`` and ``||W||_H = sqrt(tr(W^T H W))``. The symmetric
square root T (T^T T = H) turns every H-norm into a Euclidean one:
``||v||_H = ||T v||_2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPsd
from .linalg import SYM_TOL, as_matrix, as_vector, frobenius, sym_eig

NEG_EIG_TOL = 1e-6


@dataclass(frozen=True)
class NormalizedVector:
    v: np.ndarray
    norm_used: float
    is_zero: bool


@dataclass(frozen=True, eq=False)
class MetricSpace:
    h: np.ndarray
    t: np.ndarray

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "MetricSpace":
        eye = np.eye(dim)
        return cls(h=eye, t=eye.copy())

    def _check_dim(self, n: int) -> None:
        if n != self.dim:
            raise InvalidInput(f"dimension {n} does not match metric dimension {self.dim}")

    def inner(self, u, v) -> float:
        u, v = as_vector(u), as_vector(v)
        self._check_dim(u.size)
        self._check_dim(v.size)
        return float(u @ self.h @ v)

    def norm_vec(self, v) -> float:
        v = as_vector(v)
        self._check_dim(v.size)
        return float(np.linalg.norm(self.t @ v))

    def norm_mat(self, w) -> float:
        w = as_matrix(w)
        self._check_dim(w.shape[0])
        return frobenius(self.t @ w)

    def default_zero_tol(self) -> float:
        return 1e-12 * self.dim

    def normalize(self, v, zero_tol: float | None = None) -> NormalizedVector:
        """``v / ||v||_H``, or an explicit zero when the H-norm is negligible (0/0 = 0)."""
        v = as_vector(v)
        tol = self.default_zero_tol() if zero_tol is None else zero_tol
        nrm = self.norm_vec(v)
        if nrm <= tol:
            return NormalizedVector(v=np.zeros_like(v), norm_used=nrm, is_zero=True)
        return NormalizedVector(v=v / nrm, norm_used=nrm, is_zero=False)

    # batched helpers: rows of a (N, dim) array

    def row_norms(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        self._check_dim(rows.shape[-1])
        tr = rows @ self.t.T
        return np.sqrt(np.sum(tr * tr, axis=-1))

    def normalize_rows(self, rows, zero_tol: float | None = None):
        """Row-wise :meth:`normalize`; returns ``(units, norms, is_zero)``."""
        rows = np.asarray(rows, dtype=np.float64)
        tol = self.default_zero_tol() if zero_tol is None else zero_tol
        norms = self.row_norms(rows)
        is_zero = norms <= tol
        safe = np.where(is_zero, 1.0, norms)
        units = np.where(is_zero[..., None], 0.0, rows / safe[..., None])
        return units, norms, is_zero


def from_psd(h) -> MetricSpace:
    """Build the metric and its symmetric square root ``T = Q diag(sqrt(lam)) Q^T``.

    Eigenvalues are clamped at zero; anything below ``-1e-6 * ||H||_F`` is
    rejected as not PSD.
    """
    h = as_matrix(h, "h")
    if h.shape[0] != h.shape[1]:
        raise InvalidInput(f"metric matrix must be square, got {h.shape}")
    scale = frobenius(h)
    if frobenius(h - h.T) > SYM_TOL * (1.0 + scale):
        raise InvalidInput("metric matrix is not symmetric")
    h = 0.5 * (h + h.T)
    eig = sym_eig(h)
    if eig.values.size and eig.values[-1] < -NEG_EIG_TOL * scale:
        raise NotPsd(f"smallest eigenvalue {eig.values[-1]:.3e} is negative")
    root = np.sqrt(np.clip(eig.values, 0.0, None))
    t = (eig.vectors * root) @ eig.vectors.T
    t = 0.5 * (t + t.T)
    return MetricSpace(h=h, t=t)


def identity(dim: int) -> MetricSpace:
    return MetricSpace.identity(dim)
