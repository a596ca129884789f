"""Input/target sample container and its CSV format."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of ``x`` (N, n) and optional targets ``y`` (N, d).

    The empirical distribution over rows is the data distribution for every
    expectation computed in :mod:`xferlab.transfer`.
    """

    x: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise InvalidInput(f"x must be 2-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("x has non-finite entries")
        object.__setattr__(self, "x", x)
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64)
            if y.ndim == 1:
                y = y[:, None]
            if y.shape[0] != x.shape[0]:
                raise InvalidInput(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
            if not np.all(np.isfinite(y)):
                raise InvalidInput("y has non-finite entries")
            object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def in_dim(self) -> int:
        return self.x.shape[1]

    def require_rows(self) -> None:
        if self.size == 0:
            raise InvalidInput("dataset has no rows")

    def require_y(self) -> np.ndarray:
        if self.y is None:
            raise InvalidInput("dataset has no targets")
        return self.y


def write_csv(data: Dataset, path) -> None:
    y = data.require_y()
    n, d = data.x.shape[1], y.shape[1]
    header = ",".join([f"x{i}" for i in range(n)] + [f"y{j}" for j in range(d)])
    table = np.hstack([data.x, y])
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in table:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_csv(path) -> Dataset:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    n = sum(1 for h in header if h.startswith("x"))
    d = sum(1 for h in header if h.startswith("y"))
    if n + d != len(header) or n == 0:
        raise InvalidInput(f"{path}: unexpected CSV header")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    if table.shape[1] != n + d:
        raise InvalidInput(f"{path}: expected {n + d} columns, found {table.shape[1]}")
    return Dataset(x=table[:, :n], y=table[:, n:] if d else None)
