"""Transferability metrics and matching distances over an empirical dataset.

Every expectation is an exact mean over dataset rows. A transfer direction
``f1 -> f2`` means the attack is computed on ``f1`` and its effect measured on
``f2``. For the matching distances the pair ``(f_star, f_diamond)`` follows the
same convention: ``f_star`` is approximated from ``f_diamond``.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .attacks import PGD_STEPS, adv_loss_batch, pgd_attack_batch, spectra_batch
from .dataset import Dataset
from .errors import InvalidInput, NumericalInconsistency
from .linalg import frobenius, mean_rows, pinv, svd, sym_eig, trace_inner
from .metric_space import MetricSpace, identity

__all__ = [
    "AffineMap",
    "Dataset",
    "ModelProbe",
    "PairStats",
    "Theorem1Terms",
    "Theorem4Result",
    "Theorem5Result",
    "TransferReport",
    "affine_fit",
    "alpha1_pointwise",
    "FiniteAlpha1",
    "alpha1_finite_eps",
    "alpha1_small_eps",
    "alpha1x2",
    "alpha2",
    "alpha2_pair_form",
    "check_theorem4",
    "check_theorem5",
    "func_match",
    "generalized_a1",
    "grad_match_closed",
    "grad_match_theorem1",
    "knowledge_dist",
    "output_dist",
    "pair_stats",
    "theorem1_terms",
    "transfer_report",
]

CLAMP_REL_TOL = 1e-6
KERNEL_TOL = 1e-8
RANK_RATIO_TOL = 1e-8
BOUND_SLACK = 1e-9
EXPLICIT_PAIR_LIMIT = 4_000_000


class ModelProbe:
    """A model, its output metric and a set of inputs, with cached Jacobians and spectra.

    Sweeps evaluate many metrics against the same model on the same rows;
    sharing one probe keeps the expensive per-row eigendecompositions to
    one per model.
    """

    def __init__(self, model, ms: MetricSpace | None, x):
        self.model = model
        self.ms = identity(model.out_dim) if ms is None else ms
        if self.ms.dim != model.out_dim:
            raise InvalidInput(
                f"metric dimension {self.ms.dim} does not match model output {model.out_dim}"
            )
        self.x = x.x if isinstance(x, Dataset) else np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.x.shape[0] == 0:
            raise InvalidInput("dataset has no rows")
        if self.x.shape[1] != model.in_dim:
            raise InvalidInput(f"inputs have dimension {self.x.shape[1]}, model expects {model.in_dim}")
        self._jac = None
        self._outputs = None
        self._spectra = {}

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def jac(self) -> np.ndarray:
        if self._jac is None:
            self._jac = self.model.jacobian_batch(self.x)
        return self._jac

    @property
    def outputs(self) -> np.ndarray:
        if self._outputs is None:
            self._outputs = self.model.forward_batch(self.x)
        return self._outputs

    def spectra(self, full: bool = False):
        """``(sigma, deltas)``; ``full`` asks for all n attacks rather than min(n, m)."""
        if full in self._spectra:
            return self._spectra[full]
        if not full and True in self._spectra:
            return self._spectra[True]
        sigma, deltas, jac = spectra_batch(self.model, self.ms, self.x, full=full)
        if self._jac is None:
            self._jac = jac
        self._spectra[full] = (sigma, deltas)
        return sigma, deltas

    def top_sigma(self) -> np.ndarray:
        return self.spectra()[0][:, 0]

    def attack(self, order: int) -> np.ndarray:
        sigma, deltas = self.spectra(full=order > min(self.model.in_dim, self.model.out_dim))
        if not 1 <= order <= self.model.in_dim:
            raise InvalidInput(f"attack order must lie in 1..{self.model.in_dim}, got {order}")
        return deltas[:, :, order - 1]


def _probe_pair(f1, f2, ms1, ms2, data) -> tuple[ModelProbe, ModelProbe]:
    if isinstance(data, Dataset):
        data.require_rows()
    if f1.in_dim != f2.in_dim:
        raise InvalidInput(f"models disagree on input dimension ({f1.in_dim} vs {f2.in_dim})")
    return ModelProbe(f1, ms1, data), ModelProbe(f2, ms2, data)


def _safe_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 = 0, and anything over a zero denominator as well
    ok = den > 0.0
    return np.where(ok, num / np.where(ok, den, 1.0), 0.0)


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    tol = 1e-12 * rows.shape[1]
    return np.where((norms > tol)[:, None], rows / np.where(norms > tol, norms, 1.0)[:, None], 0.0)


# -- probe-level kernels ---------------------------------------------------


def _deviations(p1: ModelProbe, p2: ModelProbe, order: int):
    delta = p1.attack(order)
    d11 = np.einsum("knm,kn->km", p1.jac, delta)
    d12 = np.einsum("knm,kn->km", p2.jac, delta)
    return d11, d12


def probe_alpha1_rows(p1: ModelProbe, p2: ModelProbe, order: int = 1) -> np.ndarray:
    _, d12 = _deviations(p1, p2, order)
    return _safe_divide(p2.ms.row_norms(d12), p2.top_sigma())


def probe_alpha2(p1: ModelProbe, p2: ModelProbe, order: int = 1, weights=None) -> float:
    d11, d12 = _deviations(p1, p2, order)
    u1, u2 = _unit_rows(d11), _unit_rows(d12)
    if weights is not None:
        u1 = u1 * weights[:, None]
    return frobenius(mean_rows(u1[:, :, None] * u2[:, None, :]))


def probe_alpha2_pairs(p1: ModelProbe, p2: ModelProbe, order: int = 1, block: int = 256) -> float:
    d11, d12 = _deviations(p1, p2, order)
    u1, u2 = _unit_rows(d11), _unit_rows(d12)
    total = 0.0
    n_rows = u1.shape[0]
    for start in range(0, n_rows, block):
        g1 = u1[start : start + block] @ u1.T
        g2 = u2[start : start + block] @ u2.T
        total += float(np.sum(g1 * g2))
    return float(np.sqrt(max(total, 0.0)) / n_rows)


# -- public metric API -----------------------------------------------------


def _default_attack_metric(f1, ms1, ms2):
    if ms1 is not None:
        return ms1
    if ms2 is not None and ms2.dim == f1.out_dim:
        return ms2
    return None


def alpha1_pointwise(f1, f2, ms2, data, ms1=None, order: int = 1) -> np.ndarray:
    """Per-row ``||J2(x)^T delta_1(x)||_H2 / sigma_1^{f2}(x)``."""
    ms1 = _default_attack_metric(f1, ms1, ms2)
    p1, p2 = _probe_pair(f1, f2, ms1, ms2, data)
    return probe_alpha1_rows(p1, p2, order)


def alpha1_small_eps(f1, f2, ms2, data, ms1=None, order: int = 1) -> float:
    """First transferability from ``f1`` to ``f2`` in the small-perturbation limit.

    ``ms1`` is the metric used to find the attack on ``f1``. It defaults to
    ``ms2`` when the output dimensions agree and to the identity otherwise. ``order`` picks which attack of ``f1``'s spectrum is used.
    """
    return float(mean_rows(alpha1_pointwise(f1, f2, ms2, data, ms1, order)))


@dataclass(frozen=True, eq=False)
class FiniteAlpha1:
    """Finite-radius first transferability; ``clipped`` counts per-row ratios above 1 + 1e-6."""

    value: float
    clipped: int
    ratios: np.ndarray


def alpha1_finite_eps(
    f1,
    f2,
    ms2,
    data,
    eps: float,
    steps: int = PGD_STEPS,
    step_size: float | None = None,
    seed=0,
    ms1=None,
) -> FiniteAlpha1:
    """Mean over rows of ``loss_2(attack on f1) / loss_2(attack on f2)`` with PGD attacks.

    A ratio above one means the optimiser found a weaker attack on ``f2``
    than the transferred one; such ratios are clipped to 1 and counted.
    """
    ms1 = _default_attack_metric(f1, ms1, ms2)
    p1, p2 = _probe_pair(f1, f2, ms1, ms2, data)
    x = p1.x
    d1 = pgd_attack_batch(f1, p1.ms, x, eps, steps, step_size, seed)
    d2 = pgd_attack_batch(f2, p2.ms, x, eps, steps, step_size, seed)
    base = p2.outputs
    ratios = _safe_divide(
        adv_loss_batch(f2, p2.ms, x, d1, base), adv_loss_batch(f2, p2.ms, x, d2, base)
    )
    clipped = int(np.sum(ratios > 1.0 + 1e-6))
    ratios = np.minimum(ratios, 1.0)
    return FiniteAlpha1(value=float(mean_rows(ratios)), clipped=clipped, ratios=ratios)


def alpha2(f1, f2, ms1, ms2, data, order: int = 1) -> float:
    """Second transferability: Frobenius norm of the mean outer product of unit deviations.

    Deviations are normalised in the Euclidean norm; ``ms2`` does not enter.
    """
    p1, p2 = _probe_pair(f1, f2, ms1, ms2, data)
    return probe_alpha2(p1, p2, order)


def alpha2_pair_form(f1, f2, ms1, ms2, data, order: int = 1) -> float:
    """Same quantity as :func:`alpha2`, summed over all ordered row pairs."""
    p1, p2 = _probe_pair(f1, f2, ms1, ms2, data)
    return probe_alpha2_pairs(p1, p2, order)


def alpha1x2(f1, f2, ms1, ms2, data, order: int = 1) -> float:
    p1, p2 = _probe_pair(f1, f2, ms1, ms2, data)
    return probe_alpha2(p1, p2, order, weights=probe_alpha1_rows(p1, p2, order))


def generalized_a1(f_star, f_diamond, ms_star, ms_diamond, x) -> np.ndarray:
    """Entry i is ``||J_diamond(x)^T delta_star^(i)(x)||_H / sigma_1^{f_diamond}(x)``."""
    x = np.asarray(x, dtype=np.float64)
    p1, p2 = _probe_pair(f_star, f_diamond, ms_star, ms_diamond, x[None] if x.ndim == 1 else x)
    _, deltas = p1.spectra(full=True)
    dev = np.einsum("knm,kni->kmi", p2.jac, deltas)
    norms = np.linalg.norm(np.einsum("ab,kbi->kai", p2.ms.t, dev), axis=1)
    out = _safe_divide(norms, p2.top_sigma()[:, None])
    return out[0] if x.ndim == 1 else out


# -- gradient matching -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairStats:
    p: np.ndarray
    j: np.ndarray
    j_pinv: np.ndarray
    kernel_residual: float

    @property
    def kernel_ok(self) -> bool:
        return self.kernel_residual <= KERNEL_TOL * (1.0 + frobenius(self.p))


def _pair_stats(ps: ModelProbe, pd: ModelProbe) -> PairStats:
    p = mean_rows(np.einsum("kna,knb->kab", ps.jac, pd.jac))
    j = mean_rows(np.einsum("kna,knb->kab", pd.jac, pd.jac))
    j = 0.5 * (j + j.T)
    eig = sym_eig(j)
    top = eig.values[0] if eig.values.size else 0.0
    null = eig.vectors[:, eig.values <= 1e-12 * max(top, 0.0)] if top > 0.0 else eig.vectors
    resid = float(np.max(np.linalg.norm(p @ null, axis=0))) if null.shape[1] else 0.0
    return PairStats(p=p, j=j, j_pinv=pinv(j), kernel_residual=resid)


def pair_stats(f_star, f_diamond, data) -> PairStats:
    """``P = E[J_star^T J_diamond]``, ``J = E[J_diamond^T J_diamond]`` and ``J^+``.

    ``kernel_residual`` is the largest ``||P v||`` over numerical null vectors
    v of J, which must vanish for the closed form to be exact.
    """
    ps, pd = _probe_pair(f_star, f_diamond, None, None, data)
    return _pair_stats(ps, pd)


def _jac_norm_sq(ps: ModelProbe) -> float:
    tj = np.einsum("ab,knb->kna", ps.ms.t, ps.jac)
    return float(mean_rows(np.sum(tj * tj, axis=(1, 2))))


def _finish_radicand(radicand: float, scale: float) -> float:
    if radicand < -CLAMP_REL_TOL * scale:
        raise NumericalInconsistency(
            f"squared distance {radicand:.3e} is negative beyond rounding (scale {scale:.3e})"
        )
    return float(np.sqrt(max(radicand, 0.0)))


def probe_grad_match(ps: ModelProbe, pd: ModelProbe, stats: PairStats | None = None) -> float:
    stats = _pair_stats(ps, pd) if stats is None else stats
    total = _jac_norm_sq(ps)
    radicand = total - trace_inner(stats.p, ps.ms.h, stats.p @ stats.j_pinv)
    return _finish_radicand(radicand, total)


def grad_match_closed(f_star, f_diamond, ms_star, data) -> float:
    """``min_W sqrt(E ||J_star^T - W J_diamond^T||^2_{H_star})`` in closed form."""
    ps, pd = _probe_pair(f_star, f_diamond, ms_star, None, data)
    return probe_grad_match(ps, pd)


@dataclass(frozen=True)
class Theorem1Terms:
    value: float
    fraction: float
    expectation: float
    j_pinv_norm: float
    jac_norm_sq: float


def _theorem1(ps: ModelProbe, pd: ModelProbe, method: str = "auto") -> Theorem1Terms:
    n_rows, n = ps.size, ps.model.in_dim
    sigma_s, deltas = ps.spectra(full=True)
    sigma1_d = pd.top_sigma()
    dev_ss = np.einsum("knm,kni->kmi", ps.jac, deltas)
    dev_sd = np.einsum("knm,kni->kmi", pd.jac, deltas)
    norm_sd = np.linalg.norm(np.einsum("ab,kbi->kai", pd.ms.t, dev_sd), axis=1)
    a1 = _safe_divide(norm_sd, sigma1_d[:, None])
    v = sigma1_d[:, None] * sigma_s * a1
    a = dev_ss * _safe_divide(np.ones_like(sigma_s), sigma_s)[:, None, :]
    b = dev_sd * _safe_divide(np.ones_like(norm_sd), norm_sd)[:, None, :]

    stats = _pair_stats(ps, pd)
    jp_norm = pd.ms.norm_mat(stats.j_pinv)
    total = _jac_norm_sq(ps)
    if jp_norm == 0.0:
        expectation = 0.0
    else:
        j_hat = stats.j_pinv / jp_norm
        if method == "auto":
            method = "pairs" if (n_rows * n) ** 2 <= EXPLICIT_PAIR_LIMIT else "factored"
        if method == "pairs":
            ta = np.einsum("ab,kbi->kai", ps.ms.t, a)
            inner_a = np.einsum("kai,laj->klij", ta, ta)
            inner_b = np.einsum("kai,ab,lbj->klij", b, j_hat, b, optimize=True)
            a2 = inner_a * inner_b
            expectation = float(np.einsum("ki,klij,lj->", v, a2, v, optimize=True)) / n_rows**2
        elif method == "factored":
            p = v[:, None, :] * np.einsum("ab,kbi->kai", ps.ms.t, a)
            m = mean_rows(np.einsum("kai,kbi->kab", p, b))
            expectation = float(np.sum(m * (m @ j_hat)))
        else:
            raise InvalidInput(f"unknown method {method!r}")
    fraction = expectation * jp_norm / total if total > 0.0 else 1.0
    value = _finish_radicand(total * (1.0 - fraction), total)
    return Theorem1Terms(
        value=value,
        fraction=float(fraction),
        expectation=expectation,
        j_pinv_norm=jp_norm,
        jac_norm_sq=total,
    )


def theorem1_terms(f_star, f_diamond, ms_star, ms_diamond, data, method: str = "auto"):
    """Gradient matching distance assembled from per-row attack spectra.

    Uses all n attacks of ``f_star``. ``method`` is ``"pairs"`` for the
    explicit (N, N, n, n) pair tensor, ``"factored"`` for the equivalent
    rank-factored sum, or ``"auto"``. The identity with
    :func:`grad_match_closed` needs ``H_diamond`` to be non-singular, since
    the deviations are normalised under it.
    """
    ps, pd = _probe_pair(f_star, f_diamond, ms_star, ms_diamond, data)
    return _theorem1(ps, pd, method)


def grad_match_theorem1(f_star, f_diamond, ms_star, ms_diamond, data, method: str = "auto") -> float:
    return theorem1_terms(f_star, f_diamond, ms_star, ms_diamond, data, method).value


# -- affine fits -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineMap:
    w: np.ndarray
    b: np.ndarray

    def __call__(self, src) -> np.ndarray:
        return np.asarray(src, dtype=np.float64) @ self.w.T + self.b

    def rank_ratio(self) -> float:
        s = svd(self.w).sigma
        return float(s[-1] / s[0]) if s.size and s[0] > 0.0 else 0.0


def affine_fit(src, tgt) -> AffineMap:
    """Least-squares affine map from rows of ``src`` to rows of ``tgt``."""
    src = np.atleast_2d(np.asarray(src, dtype=np.float64))
    tgt = np.atleast_2d(np.asarray(tgt, dtype=np.float64))
    if src.shape[0] != tgt.shape[0] or src.shape[0] == 0:
        raise InvalidInput(f"need matching non-empty row counts, got {src.shape[0]} and {tgt.shape[0]}")
    mu_s, mu_t = mean_rows(src), mean_rows(tgt)
    sc, tc = src - mu_s, tgt - mu_t
    c_ss = mean_rows(sc[:, :, None] * sc[:, None, :])
    c_ts = mean_rows(tc[:, :, None] * sc[:, None, :])
    w = c_ts @ pinv(0.5 * (c_ss + c_ss.T))
    return AffineMap(w=w, b=mu_t - w @ mu_s)


def output_dist(a, b, ms: MetricSpace | None = None) -> float:
    """``sqrt(mean ||a - b||^2_H)`` over rows; Euclidean when ``ms`` is None."""
    r = np.atleast_2d(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    norms = np.linalg.norm(r, axis=1) if ms is None else ms.row_norms(r)
    return float(np.sqrt(mean_rows(norms * norms)))


def _fit_residual(src, tgt, ms) -> float:
    return output_dist(tgt, affine_fit(src, tgt)(src), ms)


def func_match(f_star, f_diamond, ms_star, data) -> float:
    """Best affine reconstruction of ``f_star``'s outputs from ``f_diamond``'s."""
    ps, pd = _probe_pair(f_star, f_diamond, ms_star, None, data)
    return _fit_residual(pd.outputs, ps.outputs, ps.ms)


def knowledge_dist(f_source, data: Dataset, ms_target: MetricSpace | None = None) -> float:
    """Best affine reconstruction of the labels from the source model's outputs."""
    y = data.require_y()
    data.require_rows()
    ms = identity(y.shape[1]) if ms_target is None else ms_target
    if ms.dim != y.shape[1]:
        raise InvalidInput(f"metric dimension {ms.dim} does not match label dimension {y.shape[1]}")
    return _fit_residual(f_source.forward_batch(data.x), y, ms)


@dataclass(frozen=True)
class Theorem4Result:
    surrogate: float
    true_loss: float
    err_budget: float
    holds: bool


def check_theorem4(f_s, f_t, data: Dataset, ms_t: MetricSpace | None = None) -> Theorem4Result:
    """Knowledge distance versus its function-matching surrogate, within ``||f_T - y||``."""
    y = data.require_y()
    ms = identity(y.shape[1]) if ms_t is None else ms_t
    true_loss = knowledge_dist(f_s, data, ms)
    surrogate = func_match(f_t, f_s, ms, data)
    budget = output_dist(f_t.forward_batch(data.x), y, ms)
    return Theorem4Result(
        surrogate=surrogate,
        true_loss=true_loss,
        err_budget=budget,
        holds=bool(abs(true_loss - surrogate) <= budget + BOUND_SLACK),
    )


@dataclass(frozen=True)
class Theorem5Result:
    case: str
    status: str
    checks: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == "ok" and all(c["holds"] for c in self.checks.values())


def _injective_constant(w: np.ndarray, h: np.ndarray) -> float:
    gram_inv = pinv(w.T @ w)
    return float(np.sqrt(frobenius(gram_inv) * frobenius(h)))


def check_theorem5(f_s, f_t, ms_s, ms_t, data) -> Theorem5Result:
    """Compare the two function-matching directions.

    With m = dim f_S and d = dim f_T: for d <= m the fit of f_T from f_S is
    bounded by the reverse fit, for d >= m the other way round. Skipped when
    either optimal linear part has ``sigma_min / sigma_max <= 1e-8``.
    """
    pt, ps = _probe_pair(f_t, f_s, ms_t, ms_s, data)
    out_s, out_t = ps.outputs, pt.outputs
    m, d = out_s.shape[1], out_t.shape[1]
    case = "d<m" if d < m else ("d>m" if d > m else "d=m")
    g_ts = affine_fit(out_s, out_t)
    g_st = affine_fit(out_t, out_s)
    if min(g_ts.rank_ratio(), g_st.rank_ratio()) <= RANK_RATIO_TOL:
        return Theorem5Result(case=case, status="skipped")
    checks = {}
    if d <= m:
        lhs = output_dist(out_t, g_ts(out_s), pt.ms)
        rhs = _injective_constant(g_st.w, pt.ms.h) * output_dist(out_s, g_st(out_t))
        checks["eq1"] = {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + BOUND_SLACK)}
    if d >= m:
        lhs = output_dist(out_s, g_st(out_t), ps.ms)
        rhs = _injective_constant(g_ts.w, ps.ms.h) * output_dist(out_t, g_ts(out_s))
        checks["eq2"] = {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + BOUND_SLACK)}
    return Theorem5Result(case=case, status="ok", checks=checks)


# -- reports ---------------------------------------------------------------


@dataclass(frozen=True)
class TransferReport:
    alpha1: float
    alpha2: float
    alpha1x2: float
    direction: str
    grad_match: float
    func_match: float
    knowledge_dist: float | None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def transfer_report(
    f_star, f_diamond, ms_star, ms_diamond, data, direction: str = "T->S", order: int = 1, metadata=None
) -> TransferReport:
    """All metrics for the direction ``f_star -> f_diamond``.

    ``direction`` names which model is the source: ``"T->S"`` means
    ``f_diamond`` is the source, ``"S->T"`` means ``f_star`` is. The knowledge
    distance is reported only when the dataset carries labels.
    """
    if direction not in ("T->S", "S->T"):
        raise InvalidInput(f"direction must be 'T->S' or 'S->T', got {direction!r}")
    ps, pd = _probe_pair(f_star, f_diamond, ms_star, ms_diamond, data)
    a1_rows = probe_alpha1_rows(ps, pd, order)
    knowledge = None
    if isinstance(data, Dataset) and data.y is not None:
        source, target_ms = (f_diamond, ps.ms) if direction == "T->S" else (f_star, pd.ms)
        knowledge = knowledge_dist(source, data, target_ms if target_ms.dim == data.y.shape[1] else None)
    meta = {"n_rows": ps.size, "in_dim": f_star.in_dim, "order": order}
    meta.update(metadata or {})
    return TransferReport(
        alpha1=float(mean_rows(a1_rows)),
        alpha2=probe_alpha2(ps, pd, order),
        alpha1x2=probe_alpha2(ps, pd, order, weights=a1_rows),
        direction=direction,
        grad_match=probe_grad_match(ps, pd),
        func_match=_fit_residual(pd.outputs, ps.outputs, ps.ms),
        knowledge_dist=knowledge,
        metadata=meta,
    )
