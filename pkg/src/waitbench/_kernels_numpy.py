"""Pure-numpy implementations of the hot kernels.

Signatures and tie-breaking rules match ``_kernels_numba`` exactly; this
module is the fallback selected when numba is unavailable or disabled via
WAITBENCH_DISABLE_NUMBA.
"""

import numpy as np


def pairwise_sq_dist(X):
    """Squared Euclidean distances between rows of X, exact zero diagonal."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    diff = X[:, None, :] - X[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def best_split_gini(values, labels, n_classes, min_leaf):
    """Best Gini split of a pre-sorted node.

    values: sorted ascending, labels: int64 class indices aligned to values.
    Boundary b puts [0:b) left and [b:m) right; only boundaries where the
    feature value changes are valid. Returns (boundary, weighted_impurity)
    with boundary = -1 when no valid split exists. Ties keep the smallest
    boundary (first strict improvement, scanning ascending).
    """
    m = values.shape[0]
    if m < 2 * min_leaf:
        return -1, np.inf
    onehot = np.zeros((m, n_classes), dtype=np.float64)
    onehot[np.arange(m), labels] = 1.0
    prefix = np.cumsum(onehot, axis=0)
    total = prefix[-1]
    bs = np.arange(min_leaf, m - min_leaf + 1)
    valid = values[bs - 1] < values[bs]
    if not valid.any():
        return -1, np.inf
    bs = bs[valid]
    left = prefix[bs - 1]
    right = total[None, :] - left
    n_left = bs.astype(np.float64)
    n_right = m - n_left
    metric = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / n_right
    k = int(np.argmax(metric))
    return int(bs[k]), 1.0 - metric[k] / m


def best_split_grad(values, g, h, lam, min_leaf):
    """Best second-order split of a pre-sorted node.

    Returns (boundary, gain) maximizing
    0.5*[GL^2/(HL+lam) + GR^2/(HR+lam) - GT^2/(HT+lam)]; boundary = -1 and
    gain = -inf when no valid split exists. First maximum wins.
    """
    m = values.shape[0]
    if m < 2 * min_leaf:
        return -1, -np.inf
    gp = np.cumsum(g)
    hp = np.cumsum(h)
    gt, ht = gp[-1], hp[-1]
    bs = np.arange(min_leaf, m - min_leaf + 1)
    valid = values[bs - 1] < values[bs]
    if not valid.any():
        return -1, -np.inf
    bs = bs[valid]
    gl, hl = gp[bs - 1], hp[bs - 1]
    gr, hr = gt - gl, ht - hl
    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - gt * gt / (ht + lam))
    k = int(np.argmax(gain))
    return int(bs[k]), float(gain[k])


def markov_fill(onset_p, leave_p, u):
    """Two-state chain: silent starts, onset_p[t] to start speaking, leave_p to stop.

    u holds one uniform draw per second; u[0] is consumed for stream-shape
    stability but second 0 is always silent.
    """
    T = onset_p.shape[0]
    out = np.zeros(T, dtype=np.uint8)
    onset = onset_p.tolist()
    draws = u.tolist()
    state = 0
    for t in range(1, T):
        if state == 0:
            if draws[t] < onset[t]:
                state = 1
        else:
            if draws[t] < leave_p:
                state = 0
        out[t] = state
    return out


def cd_solve(X, y, beta, lam1, lam2, col_sq, active, max_iter, tol):
    """Cyclic coordinate descent on 0.5*||y-Xb||^2 + lam1*||b||_1 + lam2*||b||_2^2.

    beta is updated in place over the ``active`` column indices. Returns
    (beta, obj_per_sweep, n_sweeps, converged). The objective is recomputed
    from a fresh residual at the end of every sweep so the recorded path is
    drift-free.
    """
    obj = np.empty(max_iter, dtype=np.float64)
    n_sweeps = 0
    converged = False
    r = y - X @ beta
    for sweep in range(max_iter):
        max_delta = 0.0
        for j in active:
            bj = beta[j]
            if bj != 0.0:
                r = r + X[:, j] * bj
            rho = float(X[:, j] @ r)
            bn = np.sign(rho) * max(abs(rho) - lam1, 0.0) / (col_sq[j] + 2.0 * lam2)
            if bn != 0.0:
                r = r - X[:, j] * bn
            beta[j] = bn
            d = abs(bn - bj)
            if d > max_delta:
                max_delta = d
        r = y - X @ beta
        obj[sweep] = 0.5 * float(r @ r) + lam1 * float(np.abs(beta).sum()) + lam2 * float(beta @ beta)
        n_sweeps = sweep + 1
        if max_delta < tol:
            converged = True
            break
    return beta, obj[:n_sweeps], n_sweeps, converged
