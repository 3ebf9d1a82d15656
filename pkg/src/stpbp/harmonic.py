"""Exact epoch times ``t_n = sum_{k=1..n} 1/k`` and the epoch counter ``eta``.

Small ``n`` use a table built with Neumaier-compensated summation; beyond the
table the asymptotic expansion of the harmonic numbers is used, whose
truncation error there is far below double precision.
"""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329

_TABLE_SIZE = 1 << 17
_table: np.ndarray | None = None


def _build_table() -> np.ndarray:
    out = np.empty(_TABLE_SIZE + 1)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for k in range(1, _TABLE_SIZE + 1):
        x = 1.0 / k
        t = s + x
        if abs(s) >= abs(x):
            comp += (s - t) + x
        else:
            comp += (x - t) + s
        s = t
        out[k] = s + comp
    return out


def _get_table() -> np.ndarray:
    global _table
    if _table is None:
        _table = _build_table()
    return _table


def _asymptotic(n: np.ndarray) -> np.ndarray:
    inv = 1.0 / n
    inv2 = inv * inv
    return (np.log(n) + EULER_GAMMA + 0.5 * inv
            - inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 / 252)))


def epoch_time(n):
    """``t_n`` for integer ``n >= 0`` (scalar or array)."""
    arr = np.asarray(n, dtype=np.int64)
    if np.any(arr < 0):
        raise ValueError("epoch index must be nonnegative")
    table = _get_table()
    small = arr <= _TABLE_SIZE
    out = np.empty(arr.shape)
    out[small] = table[arr[small]]
    if not np.all(small):
        out[~small] = _asymptotic(arr[~small].astype(float))
    return out if out.ndim else float(out)


def epoch_time_span(n: int, k) -> np.ndarray:
    """``t_k - t_n`` for ``k >= n``, computed without cancellation for large n."""
    k = np.asarray(k, dtype=np.int64)
    if n <= _TABLE_SIZE and np.all(k <= _TABLE_SIZE):
        table = _get_table()
        return table[k] - table[n]
    # tail sums directly; 1/j over a bounded range so plain cumsum is accurate
    kmax = int(k.max())
    steps = 1.0 / np.arange(n + 1, kmax + 1, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    return cum[k - n]


def eta_exact(t: float) -> int:
    """``max{n : t_n <= t}``; returns 0 for ``t < 1``."""
    if t < 1.0:
        return 0
    guess = max(1, int(math.exp(t - EULER_GAMMA)))
    n = guess
    while epoch_time(n) > t:
        n -= 1
    while epoch_time(n + 1) <= t:
        n += 1
    return n


def eta_approx(t):
    """``e^{t - gamma}``, the continuous approximation of the epoch counter."""
    return np.exp(np.asarray(t, dtype=float) - EULER_GAMMA) if np.ndim(t) else math.exp(t - EULER_GAMMA)
