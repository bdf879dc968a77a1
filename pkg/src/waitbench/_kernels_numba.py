"""Numba-compiled implementations of the hot kernels.

Loop-style twins of ``_kernels_numpy``; same signatures, same tie rules.
Importing this module requires numba.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def pairwise_sq_dist(X):
    n, d = X.shape
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            out[i, j] = s
            out[j, i] = s
    return out


@njit(cache=True)
def best_split_gini(values, labels, n_classes, min_leaf):
    m = values.shape[0]
    if m < 2 * min_leaf:
        return -1, np.inf
    total = np.zeros(n_classes, dtype=np.float64)
    for i in range(m):
        total[labels[i]] += 1.0
    left = np.zeros(n_classes, dtype=np.float64)
    for i in range(min_leaf - 1):
        left[labels[i]] += 1.0
    best_b = -1
    best_metric = -np.inf
    for b in range(min_leaf, m - min_leaf + 1):
        left[labels[b - 1]] += 1.0
        if values[b - 1] >= values[b]:
            continue
        sl = 0.0
        sr = 0.0
        for c in range(n_classes):
            sl += left[c] * left[c]
            rc = total[c] - left[c]
            sr += rc * rc
        metric = sl / b + sr / (m - b)
        if metric > best_metric:
            best_metric = metric
            best_b = b
    if best_b < 0:
        return -1, np.inf
    return best_b, 1.0 - best_metric / m


@njit(cache=True)
def best_split_grad(values, g, h, lam, min_leaf):
    m = values.shape[0]
    if m < 2 * min_leaf:
        return -1, -np.inf
    gt = 0.0
    ht = 0.0
    for i in range(m):
        gt += g[i]
        ht += h[i]
    gl = 0.0
    hl = 0.0
    for i in range(min_leaf - 1):
        gl += g[i]
        hl += h[i]
    parent = gt * gt / (ht + lam)
    best_b = -1
    best_gain = -np.inf
    for b in range(min_leaf, m - min_leaf + 1):
        gl += g[b - 1]
        hl += h[b - 1]
        if values[b - 1] >= values[b]:
            continue
        gr = gt - gl
        hr = ht - hl
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        if gain > best_gain:
            best_gain = gain
            best_b = b
    return best_b, best_gain


@njit(cache=True)
def markov_fill(onset_p, leave_p, u):
    T = onset_p.shape[0]
    out = np.zeros(T, dtype=np.uint8)
    state = 0
    for t in range(1, T):
        if state == 0:
            if u[t] < onset_p[t]:
                state = 1
        else:
            if u[t] < leave_p:
                state = 0
        out[t] = state
    return out


@njit(cache=True)
def cd_solve(X, y, beta, lam1, lam2, col_sq, active, max_iter, tol):
    n = X.shape[0]
    obj = np.empty(max_iter, dtype=np.float64)
    n_sweeps = 0
    converged = False
    r = y - X @ beta
    for sweep in range(max_iter):
        max_delta = 0.0
        for idx in range(active.shape[0]):
            j = active[idx]
            bj = beta[j]
            if bj != 0.0:
                for i in range(n):
                    r[i] += X[i, j] * bj
            rho = 0.0
            for i in range(n):
                rho += X[i, j] * r[i]
            az = abs(rho) - lam1
            if az > 0.0:
                bn = np.sign(rho) * az / (col_sq[j] + 2.0 * lam2)
            else:
                bn = 0.0
            if bn != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * bn
            beta[j] = bn
            d = abs(bn - bj)
            if d > max_delta:
                max_delta = d
        r = y - X @ beta
        rss = 0.0
        for i in range(n):
            rss += r[i] * r[i]
        l1 = 0.0
        l2 = 0.0
        for j in range(beta.shape[0]):
            l1 += abs(beta[j])
            l2 += beta[j] * beta[j]
        obj[sweep] = 0.5 * rss + lam1 * l1 + lam2 * l2
        n_sweeps = sweep + 1
        if max_delta < tol:
            converged = True
            break
    return beta, obj[:n_sweeps], n_sweeps, converged
