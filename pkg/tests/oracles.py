"""Slow, independent reference implementations used only by the tests."""

import math

import numpy as np


def charpoly_eigvals(a):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier + companion roots)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    roots = np.roots(coeffs)
    return np.sort(roots.real)[::-1]


def gauss_jordan_inverse(a):
    a = np.array(a, dtype=float)
    n = a.shape[0]
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def loop_trace_inner(w, s, m):
    total = 0.0
    rows, cols = w.shape
    for c in range(cols):
        for i in range(rows):
            for j in range(rows):
                total += w[i, c] * s[i, j] * m[j, c]
    return total


def loop_mlp_forward(model, x):
    out = []
    for k in range(model.out_dim):
        acc = model.b2[k]
        for j in range(model.hidden):
            z = model.b1[j] + sum(model.w1[j, i] * x[i] for i in range(model.in_dim))
            acc += model.w2[k, j] / (1.0 + math.exp(-z))
        out.append(acc)
    return np.array(out)


def fd_jacobian(f, x, h=1e-5):
    """Central differences, returned in the n x m orientation."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(cols)


def descent_weighted_lstsq(a_stack, b_stack, h, max_iters=20000):
    """Minimise mean_k ||A_k - W B_k||^2_H over W by conjugate-gradient descent.

    ``a_stack`` is (N, p, q) and ``b_stack`` is (N, r, q); W is p x r. The
    descent only ever applies the objective's gradient and Hessian, built
    from sample moments; nothing is factorised or inverted.
    Returns the attained distance.
    """
    n_rows = a_stack.shape[0]
    bb = np.einsum("krq,ktq->rt", b_stack, b_stack) / n_rows
    ab = np.einsum("kpq,ktq->pt", a_stack, b_stack) / n_rows

    def objective(w):
        r = a_stack - np.einsum("pr,krq->kpq", w, b_stack)
        return float(np.einsum("kpq,ps,ksq->", r, h, r, optimize=True) / n_rows)

    def hess(d):
        return 2.0 * h @ d @ bb

    def grad(w):
        return hess(w) - 2.0 * h @ ab

    w = np.zeros((a_stack.shape[1], b_stack.shape[1]))
    scale = float(np.sqrt(np.sum(grad(w) ** 2))) + 1e-300
    it = 0
    while it < max_iters:
        # restart from the true gradient every few sweeps to shed rounding drift
        g = grad(w)
        rr = float(np.sum(g * g))
        if np.sqrt(rr) <= 1e-14 * scale:
            break
        d = -g
        for _ in range(2 * w.size):
            ad = hess(d)
            curv = float(np.sum(d * ad))
            if curv <= 0.0 or np.sqrt(rr) <= 1e-14 * scale:
                break
            step = rr / curv
            w = w + step * d
            g = g + step * ad
            rr_new = float(np.sum(g * g))
            d = -g + (rr_new / rr) * d
            rr = rr_new
            it += 1
        else:
            continue
        it += 1
    return math.sqrt(max(objective(w), 0.0))


def descent_affine_residual(src, tgt, h, max_iters=20000):
    """Distance of the best affine map src -> tgt under H, by descent on the augmented inputs."""
    aug = np.hstack([src, np.ones((src.shape[0], 1))])
    return descent_weighted_lstsq(tgt[:, :, None], aug[:, :, None], h, max_iters)


def mc_top_sigma(jac_t, t, samples=10_000, seed=0):
    """Largest ||T J^T d|| over random unit directions d; a lower bound on sigma_1."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((samples, jac_t.shape[1]))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return float(np.max(np.linalg.norm(d @ (t @ jac_t).T, axis=1)))


def ranks(a):
    return np.argsort(np.argsort(a, kind="stable"), kind="stable").astype(float)


def spearman(a, b):
    return float(np.corrcoef(ranks(np.asarray(a)), ranks(np.asarray(b)))[0, 1])
