"""Naive ground-truth implementations used only by the test suite.

Everything here is written with plain Python loops over numpy arrays and
deliberately shares no code with the scan-based paths it checks.
"""

import math

import numpy as np

MATCHA_ORACLE_MAX_T = 32


def monotonic_alpha_recursive(p_row, prev_alpha):
    """Expected monotonic attention by direct sequential recursion.

    Uses ``q[j] = (1 - p[j-1]) * q[j-1] + prev_alpha[j]`` and
    ``alpha[j] = p[j] * q[j]``, which has no singularity as ``p -> 1``.
    """
    p = np.asarray(p_row, dtype=np.float64)
    prev = np.asarray(prev_alpha, dtype=np.float64)
    alpha = np.zeros_like(p)
    q = 0.0
    for j in range(len(p)):
        carry = (1.0 - p[j - 1]) * q if j > 0 else 0.0
        q = carry + prev[j]
        alpha[j] = p[j] * q
    return alpha


def mocha_beta_bruteforce(alpha_row, u, w):
    """Chunkwise attention distribution by the nested-sum definition.

    ``beta[j] = sum_{k=j}^{j+w-1} alpha[k] * exp(u[j]) / sum_{l=k-w+1}^{k} exp(u[l])``
    with indices outside ``[0, T)`` skipped.
    """
    alpha = np.asarray(alpha_row, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n = len(alpha)
    beta = np.zeros(n)
    for j in range(n):
        total = 0.0
        for k in range(j, min(j + w, n)):
            denom = 0.0
            for l in range(max(k - w + 1, 0), k + 1):
                denom += math.exp(u[l])
            total += alpha[k] * math.exp(u[j]) / denom
        beta[j] = total
    return beta


def matcha_beta_bruteforce(prev_alpha, p_row, u):
    """Adaptive-chunk attention distribution by the triple nested sum.

    Sums over the previous stop ``k <= j`` and the current stop ``l >= j``
    the softmax weight of ``j`` on the chunk ``[k, l]`` times
    ``prev_alpha[k] * p[l] * prod(1 - p[k..l-1])``.
    """
    prev = np.asarray(prev_alpha, dtype=np.float64)
    p = np.asarray(p_row, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n = len(p)
    if n > MATCHA_ORACLE_MAX_T:
        raise ValueError(f"oracle is O(T^3); refusing T={n} > {MATCHA_ORACLE_MAX_T}")
    beta = np.zeros(n)
    for j in range(n):
        total = 0.0
        for k in range(j + 1):
            for l in range(j, n):
                chunk = 0.0
                for m in range(k, l + 1):
                    chunk += math.exp(u[m])
                not_stopped = 1.0
                for o in range(k, l):
                    not_stopped *= 1.0 - p[o]
                total += math.exp(u[j]) / chunk * prev[k] * p[l] * not_stopped
        beta[j] = total
    return beta


def finite_difference_gradient(f, x, h=1e-5):
    """Central-difference gradient of a scalar function of a real vector."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for j in range(x.size):
        step = np.zeros_like(x)
        step.flat[j] = h
        grad.flat[j] = (f(x + step) - f(x - step)) / (2 * h)
    return grad
