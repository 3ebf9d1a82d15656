"""Compiled inner loops for the two simulators.

Each kernel reseeds numba's generator on entry, so a call is a pure function
of its arguments.
"""
import numpy as np
from numba import njit

POISSON = 0
BINOMIAL = 1


@njit(cache=True)
def _grow(arr, size):
    out = np.empty(size, arr.dtype)
    out[:arr.size] = arr
    return out


@njit(cache=True)
def graph_cascade(indptr, indices, rho, a0, lam, seed, max_epochs):
    np.random.seed(seed)
    n = indptr.size - 1
    in_total = np.zeros(n, np.bool_)
    current = np.empty(n, np.int64)
    order = np.empty(n, np.int64)

    # a0 distinct seeds by partial Fisher-Yates
    perm = np.arange(n)
    for i in range(a0):
        j = np.random.randint(i, n)
        perm[i], perm[j] = perm[j], perm[i]
        u = perm[i]
        in_total[u] = True
        current[i] = u
        order[i] = u

    cap = min(max_epochs, n) + 1
    A = np.empty(cap, np.int64)
    C = np.empty(cap, np.int64)
    G = np.empty(cap, np.int64)
    T = np.empty(cap, np.float64)
    A[0] = a0
    C[0] = a0
    G[0] = 0
    T[0] = 0.0

    live = a0
    total = a0
    t = 0.0
    e = 0
    while live > 0 and e < max_epochs:
        t += np.random.exponential(1.0 / (lam * live))
        i = np.random.randint(0, live)
        u = current[i]
        live -= 1
        current[i] = current[live]
        g = 0
        for p in range(indptr[u], indptr[u + 1]):
            if rho >= 1.0 or np.random.random() < rho:
                v = indices[p]
                if not in_total[v]:
                    in_total[v] = True
                    current[live] = v
                    live += 1
                    order[total + g] = v
                    g += 1
        total += g
        e += 1
        A[e] = total
        C[e] = live
        G[e] = g
        T[e] = t
    return e, A[:e + 1], C[:e + 1], G[1:e + 1], T[:e + 1], order[:total]


@njit(cache=True)
def _tef_mean(a, m_bar, k1, k2, a_bar, rho):
    if a <= a_bar:
        mn = m_bar - k1 * a
    else:
        mn = (m_bar - a_bar * (k1 - k2)) - k2 * a
    m = rho * mn
    return m if m > 0.0 else 0.0


@njit(cache=True)
def abstract_chain(kind, m_bar, k1, k2, a_bar, rho, n_max, a0, lam, seed, max_epochs):
    np.random.seed(seed)
    cap = min(max_epochs, 4096) + 1
    A = np.empty(cap, np.int64)
    C = np.empty(cap, np.int64)
    G = np.empty(cap, np.int64)
    T = np.empty(cap, np.float64)
    A[0] = a0
    C[0] = a0
    G[0] = 0
    T[0] = 0.0

    live = a0
    total = a0
    t = 0.0
    e = 0
    while live > 0 and e < max_epochs:
        if e + 1 >= A.size:
            size = min(2 * A.size, max_epochs + 1)
            A = _grow(A, size)
            C = _grow(C, size)
            G = _grow(G, size)
            T = _grow(T, size)
        t += np.random.exponential(1.0 / (lam * live))
        mean = _tef_mean(float(total), m_bar, k1, k2, a_bar, rho)
        if kind == POISSON:
            g = np.random.poisson(mean) if mean > 0.0 else 0
        else:
            p = mean / n_max
            if p > 1.0:
                p = 1.0
            g = np.random.binomial(n_max, p) if p > 0.0 else 0
        live += g - 1
        total += g
        e += 1
        A[e] = total
        C[e] = live
        G[e] = g
        T[e] = t
    return e, A[:e + 1].copy(), C[:e + 1].copy(), G[1:e + 1].copy(), T[:e + 1].copy()
