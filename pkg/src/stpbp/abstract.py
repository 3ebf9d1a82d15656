"""Graph-free STP-BP: the embedded chain driven by a total-population-dependent
offspring law, plus the fraction process and its interpolation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .harmonic import epoch_time_span
from .tef import TefParams, tef_eval
from .trace import EXTINCT, TRUNCATED, ConfigError, EmbeddedTrace, SimConfig, run_seed

DEFAULT_MAX_EPOCHS = 10**6


@dataclass(frozen=True)
class OffspringModel:
    """Offspring law with mean ``max(m(a), 0)``.

    ``poisson``: Poisson with that mean. ``binomial``: ``n_max`` trials with
    success probability ``clamp(m(a) / n_max, 0, 1)``.
    """
    tef: TefParams
    kind: str = "poisson"
    n_max: int = 0

    def __post_init__(self):
        if self.kind not in ("poisson", "binomial"):
            raise ConfigError(f"unknown offspring kind {self.kind!r}")
        if self.kind == "binomial" and self.n_max < 1:
            raise ConfigError("binomial offspring needs n_max >= 1")

    def mean(self, a):
        return tef_eval(self.tef, a)

    def pgf(self, s, a):
        m = self.mean(a)
        if self.kind == "poisson":
            return np.exp(m * (s - 1.0))
        p = min(m / self.n_max, 1.0)
        return (1.0 - p + p * s) ** self.n_max


def constant_mean(mean: float, kind: str = "poisson", n_max: int = 0) -> OffspringModel:
    """Offspring model whose mean does not depend on the total population."""
    if mean < 0:
        raise ConfigError("mean must be nonnegative")
    return OffspringModel(TefParams(m_bar=mean, kappa1=0.0, kappa2=0.0, a_bar=1.0),
                          kind=kind, n_max=n_max)


class ChainError(RuntimeError):
    """The embedded chain was stepped after extinction."""


def step_embedded(state: tuple[int, int], gamma_n: int) -> tuple[int, int]:
    """One wake-up: ``(C, A) -> (C + gamma - 1, A + gamma)``."""
    c, a = state
    if c <= 0:
        raise ChainError("cannot step an extinct chain (C = 0)")
    if gamma_n < 0:
        raise ValueError("gamma_n must be nonnegative")
    return c + gamma_n - 1, a + gamma_n


def _run(model: OffspringModel, cfg: SimConfig, seed: int) -> EmbeddedTrace:
    p = model.tef
    max_epochs = cfg.max_epochs if cfg.max_epochs is not None else DEFAULT_MAX_EPOCHS
    kind = _kernels.POISSON if model.kind == "poisson" else _kernels.BINOMIAL
    e, A, C, G, T = _kernels.abstract_chain(
        kind, p.m_bar, p.kappa1, p.kappa2, p.a_bar, p.rho, max(model.n_max, 1),
        int(cfg.seed_count), float(cfg.lam), seed, max_epochs)
    return EmbeddedTrace(A=A, C=C, gamma=G, tau=T, terminal=EXTINCT if C[-1] == 0 else TRUNCATED)


def simulate_abstract(model: OffspringModel, cfg: SimConfig, index: int = 0) -> EmbeddedTrace:
    """Run ``index`` of a batch seeded from ``cfg.rng_seed``.

    ``cfg.rho`` is ignored here; attractiveness lives in ``model.tef.rho``.
    """
    return _run(model, cfg, run_seed(cfg.rng_seed, index))


def iter_abstract(model: OffspringModel, cfg: SimConfig, runs: int, start: int = 0
                  ) -> Iterator[EmbeddedTrace]:
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    for i in range(start, start + runs):
        yield _run(model, cfg, run_seed(cfg.rng_seed, i))


def simulate_abstract_batch(model: OffspringModel, cfg: SimConfig, runs: int) -> list[EmbeddedTrace]:
    return list(iter_abstract(model, cfg, runs))


# ------------------------------------------------------------ fraction process

@dataclass(frozen=True, eq=False)
class FractionTrace:
    """``psi_c[n] = C_n / n`` and ``psi_a[n] = A_n / n`` for ``n >= 1``; both equal ``a0`` at ``n = 0``."""
    psi_c: np.ndarray
    psi_a: np.ndarray

    @property
    def epochs(self) -> int:
        return int(self.psi_a.size - 1)


def fractions(t: EmbeddedTrace) -> FractionTrace:
    if t.A.size == 0:
        raise ValueError("empty trace")
    n = np.arange(t.A.size, dtype=float)
    n[0] = 1.0
    psi_c = t.C / n
    psi_a = t.A / n
    psi_c[0] = psi_a[0] = float(t.a0)
    return FractionTrace(psi_c, psi_a)


@dataclass(frozen=True, eq=False)
class StepInterpolant:
    """Piecewise-constant path started at epoch ``start``.

    Value ``values[i]`` (the fraction pair at epoch ``start + i``) holds on
    ``[times[i], times[i+1])`` with ``times[i] = t_{start+i} - t_start``.
    After the last recorded epoch the final value persists.
    """
    start: int
    times: np.ndarray
    psi_c: np.ndarray
    psi_a: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("interpolant is defined for t >= 0")
        i = np.searchsorted(self.times, t, side="right") - 1
        return self.psi_c[i], self.psi_a[i]

    def window(self, horizon: float):
        """Epochs ``k`` with ``t_k - t_start <= horizon`` and their values."""
        k = np.searchsorted(self.times, horizon, side="right")
        return self.start + np.arange(k), self.times[:k], self.psi_c[:k], self.psi_a[:k]


def interpolate(frac: FractionTrace, from_epoch: int) -> StepInterpolant:
    n = int(from_epoch)
    if n < 1:
        raise ValueError("interpolation starts at epoch >= 1")
    if n > frac.epochs:
        raise ValueError(f"trace has only {frac.epochs} epochs")
    k = np.arange(n, frac.epochs + 1)
    times = epoch_time_span(n, k)
    return StepInterpolant(n, times, frac.psi_c[n:].copy(), frac.psi_a[n:].copy())
