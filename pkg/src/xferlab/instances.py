"""Random problem instances shared by the verification suites, tests and benchmarks."""

import numpy as np

from .dataset import Dataset
from .metric_space import MetricSpace, from_psd
from .models import Analytic1D, init_mlp

APPENDIX_A_POINTS = 2001


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    """``G^T G`` with square Gaussian G, so full rank almost surely."""
    g = rng.standard_normal((dim, dim))
    return g.T @ g


def random_metric(rng: np.random.Generator, dim: int) -> MetricSpace:
    return from_psd(random_psd(rng, dim))


def random_rank_deficient(rng: np.random.Generator, rows: int, cols: int, rank: int) -> np.ndarray:
    return rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))


def random_mlp(rng: np.random.Generator, n: int, m: int, hidden: int | None = None, scale: float = 1.0):
    h = int(rng.integers(3, 10)) if hidden is None else hidden
    model = init_mlp(n, h, m, int(rng.integers(2**63)))
    if scale == 1.0:
        return model
    return model.with_params(*(scale * p for p in model.params()))


def random_inputs(rng: np.random.Generator, rows: int, n: int) -> Dataset:
    return Dataset(x=rng.standard_normal((rows, n)))


def appendix_a_models():
    """``(f_T, f_S) = (x^2, sign(x) x^2)``."""
    return Analytic1D("square"), Analytic1D("signed_square")


def symmetric_grid(points: int = APPENDIX_A_POINTS) -> Dataset:
    """Cell midpoints of [-1, 1], built as ``{0} U {+-k h}`` so the grid is exactly symmetric."""
    if points % 2 != 1:
        raise ValueError("symmetric grid needs an odd number of points")
    h = 2.0 / points
    half = h * np.arange(1, points // 2 + 1)
    x = np.concatenate([-half[::-1], [0.0], half])
    return Dataset(x=x[:, None])


def positive_grid(points: int = APPENDIX_A_POINTS, lo: float = 0.0, hi: float = 2.0) -> Dataset:
    """Cell midpoints of [lo, hi]; none of them is the endpoint 0."""
    h = (hi - lo) / points
    return Dataset(x=(lo + h * (np.arange(points) + 0.5))[:, None])
