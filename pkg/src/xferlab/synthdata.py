"""Synthetic regression world: an RBF ground-truth target and a Gaussian-mixture input law."""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import InvalidInput

SIGMA_SQ_FLOOR = 1e-3
SIGMA_SQ_CEIL = 100.0
CHUNK_ROWS = 1024


@dataclass(frozen=True, eq=False)
class RbfTarget:
    """``y(x) = W phi(x) + b`` with ``phi_i(x) = exp(-||x - mu_i||^2 / sigma_sq_i)``."""

    centers: np.ndarray
    sigma_sq: np.ndarray
    w: np.ndarray
    b: np.ndarray
    sigma_sq_floor: float = SIGMA_SQ_FLOOR

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        sigma_sq = np.atleast_1d(np.asarray(self.sigma_sq, dtype=np.float64))
        w = np.atleast_2d(np.asarray(self.w, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        n_rbf = centers.shape[0]
        if sigma_sq.shape != (n_rbf,) or w.shape[1] != n_rbf or b.shape != (w.shape[0],):
            raise InvalidInput("inconsistent RBF target shapes")
        if not np.all(sigma_sq > 0.0):
            raise InvalidInput("RBF widths must be strictly positive")
        for name, val in (("centers", centers), ("sigma_sq", sigma_sq), ("w", w), ("b", b)):
            if not np.all(np.isfinite(val)):
                raise InvalidInput(f"{name} has non-finite entries")
            object.__setattr__(self, name, val)

    @property
    def in_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_rbf(self) -> int:
        return self.centers.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    def features(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise InvalidInput(f"input has dimension {x.shape[1]}, target expects {self.in_dim}")
        diff = x[:, None, :] - self.centers[None, :, :]
        return np.exp(-np.sum(diff * diff, axis=2) / self.sigma_sq)

    def output_bound(self) -> np.ndarray:
        """Per-output bound ``sum_i |W_ji| + |b_j|``, valid because phi lies in (0, 1]."""
        return np.sum(np.abs(self.w), axis=1) + np.abs(self.b)

    def __call__(self, x) -> np.ndarray:
        y = self.features(x) @ self.w.T + self.b
        bound = self.output_bound()
        if np.any(np.abs(y) > bound * (1.0 + 1e-12)):
            raise AssertionError("RBF target output exceeds its coefficient bound")
        return y

    def to_dict(self) -> dict:
        return {
            "n": self.in_dim,
            "M": self.n_rbf,
            "d": self.out_dim,
            "centers": self.centers.tolist(),
            "sigma_sq": self.sigma_sq.tolist(),
            "w": self.w.tolist(),
            "b": self.b.tolist(),
            "sigma_sq_floor": self.sigma_sq_floor,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RbfTarget":
        try:
            return cls(
                centers=np.array(obj["centers"], dtype=np.float64).reshape(obj["M"], obj["n"]),
                sigma_sq=np.array(obj["sigma_sq"], dtype=np.float64),
                w=np.array(obj["w"], dtype=np.float64).reshape(obj["d"], obj["M"]),
                b=np.array(obj["b"], dtype=np.float64),
                sigma_sq_floor=float(obj.get("sigma_sq_floor", SIGMA_SQ_FLOOR)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed target JSON: {exc}") from exc


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Equal-weight Gaussian mixture with identity covariance."""

    centers: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if centers.shape[0] < 1:
            raise InvalidInput("a mixture needs at least one component")
        object.__setattr__(self, "centers", centers)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def make_target(
    n: int = 50, m_rbf: int = 100, d: int = 10, seed=0, sigma_sq_floor: float = SIGMA_SQ_FLOOR
) -> RbfTarget:
    if min(n, m_rbf, d) < 1:
        raise InvalidInput(f"dimensions must be positive, got n={n} M={m_rbf} d={d}")
    if not 0.0 < sigma_sq_floor < SIGMA_SQ_CEIL:
        raise InvalidInput(f"sigma_sq_floor must lie in (0, {SIGMA_SQ_CEIL})")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.5, 0.5, (m_rbf, n))
    sigma_sq = rng.uniform(sigma_sq_floor, SIGMA_SQ_CEIL, m_rbf)
    w = rng.uniform(-0.5, 0.5, (d, m_rbf))
    b = rng.uniform(-0.5, 0.5, d)
    return RbfTarget(centers=centers, sigma_sq=sigma_sq, w=w, b=b, sigma_sq_floor=sigma_sq_floor)


def make_mixture(n: int = 50, k: int = 10, seed=0) -> MixtureSpec:
    if k < 1 or n < 1:
        raise InvalidInput(f"need k >= 1 and n >= 1, got k={k} n={n}")
    rng = np.random.default_rng(seed)
    return MixtureSpec(centers=rng.uniform(-0.5, 0.5, (k, n)))


def _chunk_rng(seed, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(chunk,))
    return np.random.Generator(np.random.Philox(ss))


def box_muller(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normals from pairs of uniforms."""
    count = int(np.prod(shape))
    half = (count + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1], keeps log finite
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:count].reshape(shape)


def _sample_chunk(mix: MixtureSpec, seed, chunk: int, rows: int) -> np.ndarray:
    rng = _chunk_rng(seed, chunk)
    comp = rng.integers(0, mix.k, rows)
    return mix.centers[comp] + box_muller(rng, (rows, mix.dim))


def sample_inputs(mix: MixtureSpec, n_samples: int, seed, workers: int = 1) -> np.ndarray:
    """Mixture draws in fixed 1024-row chunks, one Philox stream per chunk.

    The chunking is fixed, so ``workers`` changes only wall time.
    """
    if n_samples < 1:
        raise InvalidInput(f"n_samples must be positive, got {n_samples}")
    starts = list(range(0, n_samples, CHUNK_ROWS))
    jobs = [(i, min(CHUNK_ROWS, n_samples - s)) for i, s in enumerate(starts)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _sample_chunk(mix, seed, *j), jobs))
    else:
        parts = [_sample_chunk(mix, seed, *j) for j in jobs]
    return np.vstack(parts)


def sample_dataset(
    target: RbfTarget, mix: MixtureSpec, n_samples: int = 5000, seed=0, workers: int = 1
) -> Dataset:
    if n_samples < 2:
        raise InvalidInput(f"need at least 2 samples, got {n_samples}")
    if mix.dim != target.in_dim:
        raise InvalidInput("mixture and target dimensions differ")
    x = sample_inputs(mix, n_samples, seed, workers)
    return Dataset(x=x, y=target(x))


def save_target(target: RbfTarget, path) -> None:
    Path(path).write_text(json.dumps(target.to_dict()) + "\n")


def load_target(path) -> RbfTarget:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    return RbfTarget.from_dict(obj)
