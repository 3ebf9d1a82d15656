"""Monte-Carlo content propagation on a social graph.

One run: ``a0`` distinct uniform seed users hold unread copies. Each epoch a
uniformly chosen unread copy is read; its reader forwards to each neighbour
independently with probability ``rho``; neighbours that already received
the post are dropped and the rest join both the total and unread sets.
Wake-up gaps are exponential with rate ``lam * C_{n-1}`` and do not affect
the ordering.
"""
from __future__ import annotations

from typing import Iterator

import numpy as np

from . import _kernels
from .graph import Graph
from .trace import EXTINCT, TRUNCATED, ConfigError, EmbeddedTrace, SimConfig, run_seed


def _check(g: Graph, cfg: SimConfig) -> int:
    if cfg.seed_count > g.node_count:
        raise ConfigError(f"seed_count {cfg.seed_count} exceeds node count {g.node_count}")
    return cfg.max_epochs if cfg.max_epochs is not None else g.node_count + cfg.seed_count


def _run(g: Graph, cfg: SimConfig, seed: int, max_epochs: int, record_recipients: bool):
    e, A, C, G, T, order = _kernels.graph_cascade(
        g.indptr, g.indices, float(cfg.rho), int(cfg.seed_count), float(cfg.lam),
        seed, max_epochs)
    return EmbeddedTrace(
        A=A.copy(), C=C.copy(), gamma=G.copy(), tau=T.copy(),
        terminal=EXTINCT if C[-1] == 0 else TRUNCATED,
        recipients=order.copy() if record_recipients else None,
    )


def simulate_cascade(g: Graph, cfg: SimConfig, record_recipients: bool = False) -> EmbeddedTrace:
    """Single cascade seeded directly from ``cfg.rng_seed``."""
    max_epochs = _check(g, cfg)
    return _run(g, cfg, run_seed(cfg.rng_seed, 0), max_epochs, record_recipients)


def simulate_run(g: Graph, cfg: SimConfig, index: int, record_recipients: bool = False) -> EmbeddedTrace:
    """Run ``index`` of a batch; reproducible from ``(cfg.rng_seed, index)``."""
    max_epochs = _check(g, cfg)
    return _run(g, cfg, run_seed(cfg.rng_seed, index), max_epochs, record_recipients)


def iter_batch(g: Graph, cfg: SimConfig, runs: int, start: int = 0) -> Iterator[EmbeddedTrace]:
    """Lazily yield runs ``start .. start+runs-1``; keeps memory flat for long batches."""
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    max_epochs = _check(g, cfg)
    for i in range(start, start + runs):
        yield _run(g, cfg, run_seed(cfg.rng_seed, i), max_epochs, False)


def _chunk(g, cfg, indices):
    max_epochs = _check(g, cfg)
    return [_run(g, cfg, run_seed(cfg.rng_seed, i), max_epochs, False) for i in indices]


def simulate_batch(g: Graph, cfg: SimConfig, runs: int, jobs: int = 1) -> list[EmbeddedTrace]:
    """``runs`` independent cascades; run ``i`` uses seed ``split(cfg.rng_seed, i)``.

    With ``jobs > 1`` runs are spread over worker processes; the result is
    identical to the sequential one.
    """
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    if jobs <= 1 or runs == 1:
        return list(iter_batch(g, cfg, runs))
    from joblib import Parallel, delayed

    chunks = [list(c) for c in np.array_split(np.arange(runs), min(jobs, runs))]
    parts = Parallel(n_jobs=jobs)(delayed(_chunk)(g, cfg, c) for c in chunks)
    return [tr for part in parts for tr in part]
