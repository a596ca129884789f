"""Differentiable models with exact Jacobians.

Jacobians use the n x m orientation: ``jacobian(x)[i, j] = d f_j / d x_i``, so
``f(x + delta) - f(x) ~ jacobian(x).T @ delta``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import InvalidInput, TrainingDiverged
from .linalg import as_matrix, as_vector, mean_rows

DEFAULT_LR = 0.5
DEFAULT_EPOCHS = 2000
INIT_HALF_WIDTH = 0.5
MAX_HALVINGS = 40


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def sigmoid_prime(z):
    s = sigmoid(z)
    return s * (1.0 - s)


class _Batched:
    """Shared dimension checks and single-row wrappers over batch methods."""

    in_dim: int
    out_dim: int

    def _rows(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None]
        x = as_matrix(x, "x")
        if x.shape[1] != self.in_dim:
            raise InvalidInput(f"input has dimension {x.shape[1]}, model expects {self.in_dim}")
        return x

    def _one(self, x) -> np.ndarray:
        x = as_vector(x, "x")
        if x.size != self.in_dim:
            raise InvalidInput(f"input has dimension {x.size}, model expects {self.in_dim}")
        return x[None]

    def forward(self, x) -> np.ndarray:
        return self.forward_batch(self._one(x))[0]

    def jacobian(self, x) -> np.ndarray:
        return self.jacobian_batch(self._one(x))[0]

    def __call__(self, x):
        return self.forward(x)


@dataclass(frozen=True, eq=False)
class MlpOneHidden(_Batched):
    """``f(x) = W2 sigmoid(W1 x + b1) + b2``."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        w1 = as_matrix(self.w1, "w1")
        w2 = as_matrix(self.w2, "w2")
        b1 = as_vector(self.b1, "b1")
        b2 = as_vector(self.b2, "b2")
        if b1.size != w1.shape[0] or w2.shape[1] != w1.shape[0] or b2.size != w2.shape[0]:
            raise InvalidInput(
                f"inconsistent shapes w1 {w1.shape}, b1 {b1.shape}, w2 {w2.shape}, b2 {b2.shape}"
            )
        for name, val in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            object.__setattr__(self, name, val)

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[0]

    def forward_batch(self, x) -> np.ndarray:
        x = self._rows(x)
        return sigmoid(x @ self.w1.T + self.b1) @ self.w2.T + self.b2

    def jacobian_batch(self, x) -> np.ndarray:
        """Stack of Jacobians, shape (N, n, m)."""
        x = self._rows(x)
        sp = sigmoid_prime(x @ self.w1.T + self.b1)
        # J[k] = W1^T diag(sp[k]) W2^T
        return np.einsum("hi,kh,mh->kim", self.w1, sp, self.w2, optimize=True)

    def params(self) -> tuple[np.ndarray, ...]:
        return self.w1, self.b1, self.w2, self.b2

    def with_params(self, w1, b1, w2, b2) -> "MlpOneHidden":
        return MlpOneHidden(w1=w1, b1=b1, w2=w2, b2=b2)

    def to_dict(self) -> dict:
        return {
            "n": self.in_dim,
            "h": self.hidden,
            "m": self.out_dim,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MlpOneHidden":
        try:
            model = cls(
                w1=np.array(obj["w1"], dtype=np.float64).reshape(obj["h"], obj["n"]),
                b1=np.array(obj["b1"], dtype=np.float64).reshape(obj["h"]),
                w2=np.array(obj["w2"], dtype=np.float64).reshape(obj["m"], obj["h"]),
                b2=np.array(obj["b2"], dtype=np.float64).reshape(obj["m"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed model JSON: {exc}") from exc
        return model


def save_model(model: MlpOneHidden, path) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path) -> MlpOneHidden:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    return MlpOneHidden.from_dict(obj)


@dataclass(frozen=True, eq=False)
class Analytic1D(_Batched):
    """``x**2`` (``square``) or ``sign(x) * x**2`` (``signed_square``).

    The derivative at 0 is taken to be 0 for both kinds.
    """

    kind: str
    in_dim: int = field(default=1, init=False)
    out_dim: int = field(default=1, init=False)

    def __post_init__(self):
        if self.kind not in ("square", "signed_square"):
            raise InvalidInput(f"unknown analytic kind {self.kind!r}")

    def forward_batch(self, x) -> np.ndarray:
        x = self._rows(x)
        if self.kind == "square":
            return x * x
        return np.sign(x) * x * x

    def jacobian_batch(self, x) -> np.ndarray:
        x = self._rows(x)
        d = 2.0 * x if self.kind == "square" else 2.0 * np.abs(x)
        return d[:, :, None]


@dataclass(frozen=True, eq=False)
class LinearModel(_Batched):
    """``f(x) = A x + c``; its Jacobian ``A^T`` is constant."""

    a: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        c = np.zeros(a.shape[0]) if self.c is None else as_vector(self.c, "c")
        if c.size != a.shape[0]:
            raise InvalidInput(f"offset has size {c.size}, expected {a.shape[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)

    @property
    def in_dim(self) -> int:
        return self.a.shape[1]

    @property
    def out_dim(self) -> int:
        return self.a.shape[0]

    def forward_batch(self, x) -> np.ndarray:
        return self._rows(x) @ self.a.T + self.c

    def jacobian_batch(self, x) -> np.ndarray:
        x = self._rows(x)
        return np.broadcast_to(self.a.T, (x.shape[0],) + self.a.T.shape).copy()


def init_mlp(n: int, h: int, m: int, seed) -> MlpOneHidden:
    """Every weight and bias drawn from U(-0.5, 0.5), in the order w1, b1, w2, b2."""
    if min(n, h, m) < 1:
        raise InvalidInput(f"layer sizes must be positive, got n={n} h={h} m={m}")
    rng = np.random.default_rng(seed)
    lo, hi = -INIT_HALF_WIDTH, INIT_HALF_WIDTH
    return MlpOneHidden(
        w1=rng.uniform(lo, hi, (h, n)),
        b1=rng.uniform(lo, hi, h),
        w2=rng.uniform(lo, hi, (m, h)),
        b2=rng.uniform(lo, hi, m),
    )


def mse(model, data: Dataset) -> float:
    """Mean over rows of the squared Euclidean error."""
    r = model.forward_batch(data.x) - data.require_y()
    return float(mean_rows(np.sum(r * r, axis=1)))


def _loss_and_grads(model: MlpOneHidden, x, y):
    n_rows = x.shape[0]
    z = x @ model.w1.T + model.b1
    s = sigmoid(z)
    r = s @ model.w2.T + model.b2 - y
    loss = float(np.sum(r * r) / n_rows)
    g_out = (2.0 / n_rows) * r
    g_w2 = g_out.T @ s
    g_b2 = g_out.sum(axis=0)
    g_z = (g_out @ model.w2) * s * (1.0 - s)
    g_w1 = g_z.T @ x
    g_b1 = g_z.sum(axis=0)
    return loss, (g_w1, g_b1, g_w2, g_b2)


def train_full_batch(
    model: MlpOneHidden,
    data: Dataset,
    lr: float = DEFAULT_LR,
    epochs: int = DEFAULT_EPOCHS,
    seed=None,
    history: list | None = None,
) -> MlpOneHidden:
    """Full-batch gradient descent on the mean squared error.

    ``model`` is the starting point. Passing ``model=None`` together with a
    ``seed`` is not supported here; use :func:`fit_mlp` for that. The ``seed``
    argument is accepted for interface symmetry: the descent itself has no
    randomness. ``lr`` is the initial step size; whenever a step would raise
    the loss it is halved until it does not, and training stops early if no
    step size down to ``lr * 2**-MAX_HALVINGS`` helps. When ``history`` is a list, the loss before each epoch and the
    final loss are appended to it.
    """
    del seed
    if not isinstance(model, MlpOneHidden):
        raise InvalidInput("train_full_batch needs an MlpOneHidden starting point")
    if not (lr >= 0.0 and np.isfinite(lr)):
        raise InvalidInput(f"lr must be a finite non-negative number, got {lr}")
    if int(epochs) != epochs or epochs < 1:
        raise InvalidInput(f"epochs must be a positive integer, got {epochs}")
    data.require_rows()
    x, y = data.x, data.require_y()
    if x.shape[1] != model.in_dim or y.shape[1] != model.out_dim:
        raise InvalidInput("dataset dimensions do not match the model")
    if lr == 0.0:
        return model.with_params(*(p.copy() for p in model.params()))
    params = [p.copy() for p in model.params()]
    current = model.with_params(*params)
    loss, grads = _loss_and_grads(current, x, y)
    step = float(lr)
    for epoch in range(int(epochs)):
        if not np.isfinite(loss):
            raise TrainingDiverged(f"loss became non-finite at epoch {epoch}")
        if history is not None:
            history.append(loss)
        # backtrack: a step that raises the loss is halved and retried, and
        # the smaller step is kept for later epochs
        for _ in range(MAX_HALVINGS):
            trial = [p - step * g for p, g in zip(params, grads)]
            if all(np.all(np.isfinite(p)) for p in trial):
                with np.errstate(over="ignore", invalid="ignore"):
                    cand = model.with_params(*trial)
                    new_loss, new_grads = _loss_and_grads(cand, x, y)
                if np.isfinite(new_loss) and new_loss <= loss:
                    break
            step *= 0.5
        else:
            break
        params, current, loss, grads = trial, cand, new_loss, new_grads
    if not np.isfinite(loss):
        raise TrainingDiverged("final loss is non-finite")
    if history is not None:
        history.append(loss)
    return current


def fit_mlp(
    data: Dataset,
    hidden: int,
    seed,
    lr: float = DEFAULT_LR,
    epochs: int = DEFAULT_EPOCHS,
    history: list | None = None,
) -> MlpOneHidden:
    """Initialise from ``seed`` and train on ``data``."""
    y = data.require_y()
    start = init_mlp(data.in_dim, hidden, y.shape[1], seed)
    return train_full_batch(start, data, lr=lr, epochs=epochs, history=history)


def perturb_weights(model: MlpOneHidden, t: float, seed) -> MlpOneHidden:
    """``W + t * V`` for every weight and bias, with V ~ U(-0.5, 0.5) from ``seed``.

    V is drawn in the order w1, b1, w2, b2 regardless of ``t``, so runs that
    share a seed move along the same direction.
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t must lie in [0, 1], got {t}")
    rng = np.random.default_rng(seed)
    lo, hi = -INIT_HALF_WIDTH, INIT_HALF_WIDTH
    noise = [rng.uniform(lo, hi, p.shape) for p in model.params()]
    if t == 0.0:
        return model.with_params(*(p.copy() for p in model.params()))
    return model.with_params(*(p + t * v for p, v in zip(model.params(), noise)))
