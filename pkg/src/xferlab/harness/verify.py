"""Randomised identity and bound suites behind ``xferlab verify``.

Each suite draws its own instances from a seed derived from the run seed
and the suite name, so ``--only`` reproduces the same trials as a full run.
"""

import time

import numpy as np

from .. import _accel
from ..dataset import Dataset
from ..instances import (
    appendix_a_models,
    positive_grid,
    random_metric,
    random_mlp,
    random_psd,
    random_rank_deficient,
    symmetric_grid,
)
from ..linalg import frobenius, pinv
from ..metric_space import from_psd
from ..transfer import (
    ModelProbe,
    _pair_stats,
    _theorem1,
    alpha1_small_eps,
    alpha1x2,
    alpha2,
    alpha2_pair_form,
    check_theorem4,
    check_theorem5,
    grad_match_closed,
    probe_alpha1_rows,
    probe_alpha2,
)
from .config import derive_seed

RANGE_SLACK = 1e-9


class _Tally:
    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance
        self.trials = 0
        self.checks = 0
        self.failures = 0
        self.worst = 0.0
        self.examples = []

    def record(self, ok: bool, err: float = 0.0, detail=None, new_trial: bool = True):
        # one trial is one random instance; an instance may carry several checks
        self.trials += int(new_trial)
        self.checks += 1
        self.worst = max(self.worst, float(err))
        if not ok:
            self.failures += 1
            if len(self.examples) < 5:
                self.examples.append(detail)

    def report(self, started: float) -> dict:
        return {
            "suite": self.name,
            "trials": self.trials,
            "checks": self.checks,
            "failures": self.failures,
            "passed": self.failures == 0 and self.trials > 0,
            "worst": self.worst,
            "tolerance": self.tolerance,
            "seconds": round(time.perf_counter() - started, 3),
            "failed_examples": self.examples,
        }


def _instance(rng, n_rng=(4, 8), m_rng=(2, 5), rows_rng=(20, 60)):
    n = int(rng.integers(n_rng[0], n_rng[1] + 1))
    m_a = int(rng.integers(m_rng[0], m_rng[1] + 1))
    m_b = int(rng.integers(m_rng[0], m_rng[1] + 1))
    rows = int(rng.integers(rows_rng[0], rows_rng[1] + 1))
    f_a, f_b = random_mlp(rng, n, m_a), random_mlp(rng, n, m_b)
    data = Dataset(x=rng.standard_normal((rows, n)))
    return f_a, f_b, random_metric(rng, m_a), random_metric(rng, m_b), data


def suite_theorem1(rng, trials):
    tally = _Tally("theorem1", 1e-8)
    for _ in range(trials):
        f_a, f_b, ms_a, ms_b, data = _instance(rng)
        pairs = ((f_a, f_b, ms_a, ms_b), (f_b, f_a, ms_b, ms_a))
        for idx, (fs, fd, hs, hd) in enumerate(pairs):
            ps, pd = ModelProbe(fs, hs, data), ModelProbe(fd, hd, data)
            closed = grad_match_closed(fs, fd, hs, data)
            value = _theorem1(ps, pd).value
            err = abs(value - closed) / (1.0 + closed)
            tally.record(err <= tally.tolerance, err, {"closed": closed, "theorem1": value},
                         new_trial=idx == 0)
    return tally


def suite_prop1(rng, trials):
    tally = _Tally("prop1", 1e-10)
    for _ in range(trials):
        f_a, f_b, ms_a, ms_b, _ = _instance(rng)
        data = Dataset(x=rng.standard_normal((int(rng.integers(1, 101)), f_a.in_dim)))
        a = alpha2(f_a, f_b, ms_a, ms_b, data)
        b = alpha2_pair_form(f_a, f_b, ms_a, ms_b, data)
        tally.record(abs(a - b) <= tally.tolerance, abs(a - b), {"frobenius": a, "pairs": b})
    return tally


def _in_unit(v: float) -> tuple[bool, float]:
    err = max(-v, v - 1.0, 0.0)
    return err <= RANGE_SLACK, err


def suite_prop2(rng, trials):
    tally = _Tally("prop2", RANGE_SLACK)
    for _ in range(trials):
        f_a, f_b, ms_a, ms_b, data = _instance(rng, rows_rng=(5, 30))
        pa, pb = ModelProbe(f_a, ms_a, data), ModelProbe(f_b, ms_b, data)
        a1 = probe_alpha1_rows(pa, pb)
        vals = {
            "alpha1": float(np.mean(a1)),
            "alpha2": probe_alpha2(pa, pb),
            "alpha1x2": probe_alpha2(pa, pb, weights=a1),
        }
        checks = [_in_unit(v) for v in vals.values()]
        tally.record(all(c[0] for c in checks), max(c[1] for c in checks), vals)
    return tally


def suite_prop3(rng, trials):
    tally = _Tally("prop3", RANGE_SLACK)
    for _ in range(trials):
        f_a, f_b, ms_a, ms_b, data = _instance(rng, rows_rng=(5, 30))
        frac = _theorem1(ModelProbe(f_a, ms_a, data), ModelProbe(f_b, ms_b, data)).fraction
        ok, err = _in_unit(frac)
        tally.record(ok, err, {"fraction": frac})
    return tally


def suite_theorem4(rng, trials):
    tally = _Tally("theorem4", 1e-9)
    for _ in range(trials):
        n = int(rng.integers(3, 7))
        m, d = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        rows = int(rng.integers(20, 60))
        f_s, f_t = random_mlp(rng, n, m), random_mlp(rng, n, d)
        x = rng.standard_normal((rows, n))
        y = f_t.forward_batch(x) + 0.3 * rng.standard_normal((rows, d))
        res = check_theorem4(f_s, f_t, Dataset(x=x, y=y), random_metric(rng, d))
        gap = abs(res.true_loss - res.surrogate) - res.err_budget
        tally.record(res.holds, max(gap, 0.0), res.__dict__)
    return tally


def suite_theorem5(rng, trials):
    tally = _Tally("theorem5", 1e-9)
    for d, m in ((2, 4), (4, 2), (3, 3)):
        done = 0
        attempts = 0
        while done < trials and attempts < 20 * trials:
            attempts += 1
            n = int(rng.integers(3, 7))
            rows = int(rng.integers(30, 80))
            f_s, f_t = random_mlp(rng, n, m, scale=2.0), random_mlp(rng, n, d, scale=2.0)
            data = Dataset(x=rng.standard_normal((rows, n)))
            res = check_theorem5(f_s, f_t, random_metric(rng, m), random_metric(rng, d), data)
            if res.status == "skipped":
                continue
            done += 1
            gap = max(c["lhs"] - c["rhs"] for c in res.checks.values())
            tally.record(res.holds, max(gap, 0.0), {"case": res.case, "checks": res.checks})
        if done < trials:
            tally.record(False, 0.0, {"case": f"d={d},m={m}", "reason": "too many rank-deficient draws"})
    return tally


def suite_lemma_e1(rng, trials):
    tally = _Tally("lemma_e1", 1e-9)
    for _ in range(trials):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        ms = from_psd(random_psd(rng, m) if rng.random() < 0.7 else _low_rank_psd(rng, m))
        w, v = rng.standard_normal((m, n)), rng.standard_normal(n)
        lhs = ms.norm_vec(w @ v)
        rhs = ms.norm_mat(w) * np.linalg.norm(v)
        tally.record(lhs <= rhs + tally.tolerance, max(lhs - rhs, 0.0), {"lhs": lhs, "rhs": rhs})
    return tally


def _low_rank_psd(rng, m):
    r = int(rng.integers(0, m + 1))
    g = rng.standard_normal((r, m))
    return g.T @ g


def suite_lemma_e2(rng, trials):
    """Null vectors of E[M^T M] annihilate E[N^T M], with M sharing a forced kernel."""
    tally = _Tally("lemma_e2", 1e-8)
    for _ in range(trials):
        n, m, d = int(rng.integers(2, 7)), int(rng.integers(2, 7)), int(rng.integers(1, 6))
        rows = int(rng.integers(3, 30))
        rank = int(rng.integers(0, m))
        basis = rng.standard_normal((rank, m))
        # every M_x maps R^m -> R^n through the same rank-deficient row space
        mx = np.einsum("knr,rm->knm", rng.standard_normal((rows, n, rank)), basis)
        nx = rng.standard_normal((rows, n, d))
        j = np.mean(np.einsum("kna,knb->kab", mx, mx), axis=0)
        p = np.mean(np.einsum("kna,knb->kab", nx, mx), axis=0)
        vals, vecs = np.linalg.eigh(j)
        top = max(vals.max(), 0.0)
        null = vecs[:, vals <= 1e-12 * top] if top > 0 else vecs
        resid = float(np.max(np.linalg.norm(p @ null, axis=0))) if null.shape[1] else 0.0
        bound = tally.tolerance * (1.0 + frobenius(p))
        tally.record(resid <= bound, resid, {"residual": resid, "null_dim": int(null.shape[1])})
    # the same inclusion on real Jacobian pairs, through the library path
    for _ in range(max(1, trials // 10)):
        f_a, f_b, _, _, data = _instance(rng, rows_rng=(2, 4))
        stats = _pair_stats(ModelProbe(f_a, None, data), ModelProbe(f_b, None, data))
        tally.record(stats.kernel_ok, stats.kernel_residual, {"residual": stats.kernel_residual},
                     new_trial=False)
    return tally


def suite_lemma_e3(rng, trials):
    """Inverting an injective affine map costs at most sqrt(||(W^T W)^-1||_F ||H||_F)."""
    tally = _Tally("lemma_e3", 1e-9)
    for _ in range(trials):
        m = int(rng.integers(1, 5))
        d = int(rng.integers(m, 7))
        w, b = rng.standard_normal((d, m)), rng.standard_normal(d)
        ms = from_psd(random_psd(rng, m))
        v, target = rng.standard_normal(m), rng.standard_normal(d)
        w_pinv = pinv(w)
        inverse = w_pinv @ target - w_pinv @ b
        lhs = ms.norm_vec(v - inverse)
        const = np.sqrt(frobenius(np.linalg.inv(w.T @ w)) * frobenius(ms.h))
        rhs = const * np.linalg.norm(target - (w @ v + b))
        tally.record(lhs <= rhs + tally.tolerance * (1.0 + rhs), max(lhs - rhs, 0.0),
                     {"lhs": lhs, "rhs": rhs})
    return tally


def suite_pinv(rng, trials):
    tally = _Tally("pinv", 1e-8)
    for i in range(trials):
        rows, cols = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        if i % 2:
            rank = int(rng.integers(0, min(rows, cols) + 1))
            a = random_rank_deficient(rng, rows, cols, rank)
        else:
            a = rng.standard_normal((rows, cols))
        ap = pinv(a)
        scale = 1.0 + frobenius(a)
        errs = (
            frobenius(a @ ap @ a - a),
            frobenius(ap @ a @ ap - ap),
            frobenius((a @ ap).T - a @ ap),
            frobenius((ap @ a).T - ap @ a),
        )
        err = max(errs) / scale
        tally.record(err <= tally.tolerance, err, {"shape": [rows, cols], "errors": errs})
    return tally


def suite_appendix_a(rng, trials):
    del rng, trials
    tally = _Tally("appendix_a", 1e-9)
    f_t, f_s = appendix_a_models()
    sym = symmetric_grid()
    pos = positive_grid()
    val = alpha2(f_t, f_s, None, None, sym)
    tally.record(val <= tally.tolerance, val, {"alpha2_T->S_on_[-1,1]": val})
    for f1, f2, label in ((f_t, f_s, "T->S"), (f_s, f_t, "S->T")):
        for name, fn in (
            ("alpha1", lambda a, b: alpha1_small_eps(a, b, None, pos)),
            ("alpha2", lambda a, b: alpha2(a, b, None, None, pos)),
            ("alpha1x2", lambda a, b: alpha1x2(a, b, None, None, pos)),
        ):
            v = fn(f1, f2)
            err = abs(v - 1.0)
            tally.record(err <= tally.tolerance, err, {f"{name}_{label}_on_[0,2]": v}, new_trial=False)
    return tally


SUITES = {
    "theorem1": (suite_theorem1, 200),
    "prop1": (suite_prop1, 100),
    "prop2": (suite_prop2, 1000),
    "prop3": (suite_prop3, 1000),
    "theorem4": (suite_theorem4, 100),
    "theorem5": (suite_theorem5, 100),
    "lemma_e1": (suite_lemma_e1, 500),
    "lemma_e2": (suite_lemma_e2, 500),
    "lemma_e3": (suite_lemma_e3, 500),
    "pinv": (suite_pinv, 1000),
    "appendix_a": (suite_appendix_a, 1),
}


def run_verify(seed: int = 0, only=None, trials: int | None = None) -> dict:
    """Run the named suites (all by default) and return a JSON-ready report."""
    names = list(SUITES) if not only else list(only)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    results = {}
    for name in names:
        fn, default_trials = SUITES[name]
        rng = np.random.default_rng(derive_seed(seed, f"verify:{name}"))
        started = time.perf_counter()
        results[name] = fn(rng, default_trials if trials is None else trials).report(started)
    return {
        "seed": seed,
        "backend": _accel.backend(),
        "passed": all(r["passed"] for r in results.values()),
        "suites": results,
    }
