"""Embedded-chain traces, simulation config, and the trace CSV format."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EXTINCT = "extinct"
TRUNCATED = "truncated"
VIRAL = "viral"

DEFAULT_DELTA = 100


class ConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``rho`` is the forwarding probability per neighbour in graph mode; in
    abstract mode the offspring model carries its own ``rho``. ``lam`` only
    scales wake-up timestamps. ``max_epochs=None`` picks a mode-specific cap.
    """
    rho: float = 1.0
    seed_count: int = 2
    lam: float = 1.0
    rng_seed: int = 0
    max_epochs: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.rho <= 1:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if self.seed_count < 1:
            raise ConfigError("seed_count must be >= 1")
        if not self.lam > 0:
            raise ConfigError("lam must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")
        if self.max_epochs is not None and self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")


def run_seed(base: int, index: int) -> int:
    """32-bit seed for run ``index`` of a batch, split from ``base``."""
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass(frozen=True, eq=False)
class EmbeddedTrace:
    """Per-epoch record of one cascade.

    ``A``, ``C`` and ``tau`` have one entry per epoch ``n = 0..N``; ``gamma``
    holds ``Gamma_1..Gamma_N`` (there is no forward count at epoch 0).
    """
    A: np.ndarray
    C: np.ndarray
    gamma: np.ndarray
    tau: np.ndarray
    terminal: str
    recipients: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def a0(self) -> int:
        return int(self.A[0])

    @property
    def epochs(self) -> int:
        return int(self.A.size - 1)

    @property
    def final_total(self) -> int:
        return int(self.A[-1])

    @property
    def peak_current(self) -> int:
        return int(self.C.max())

    @property
    def extinct(self) -> bool:
        return self.terminal == EXTINCT

    def check(self) -> None:
        """Assert the embedded-chain invariants; raises AssertionError."""
        n = np.arange(self.A.size)
        assert self.A[0] == self.C[0]
        assert np.array_equal(self.A - self.C, n)
        assert np.array_equal(np.diff(self.A), self.gamma)
        assert np.array_equal(np.diff(self.C), self.gamma - 1)
        assert np.all(self.C >= 0) and np.all(self.C[:-1] > 0)
        assert np.all(np.diff(self.tau) > 0)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,A,C,Gamma,tau\n")
        out.write(f"0,{self.A[0]},{self.C[0]},,{float(self.tau[0])!r}\n")
        A, C, G, T = self.A.tolist(), self.C.tolist(), self.gamma.tolist(), self.tau.tolist()
        out.writelines(f"{i},{A[i]},{C[i]},{G[i - 1]},{T[i]!r}\n" for i in range(1, len(A)))
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EmbeddedTrace":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "n,A,C,Gamma,tau":
            raise ValueError("not a trace CSV (expected header n,A,C,Gamma,tau)")
        rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
        if not rows:
            raise ValueError("trace CSV has no rows")
        A = np.array([int(r[1]) for r in rows], dtype=np.int64)
        C = np.array([int(r[2]) for r in rows], dtype=np.int64)
        G = np.array([int(r[3]) for r in rows[1:]], dtype=np.int64)
        T = np.array([float(r[4]) for r in rows])
        return cls(A, C, G, T, EXTINCT if C[-1] == 0 else TRUNCATED)


@dataclass(frozen=True)
class PathClass:
    kind: str
    delta: int


def classify_path(t: EmbeddedTrace, delta: int = DEFAULT_DELTA) -> PathClass:
    """Viral iff the current-share count ever exceeds ``delta``."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    return PathClass(VIRAL if t.peak_current > delta else EXTINCT, delta)


def is_viral(t: EmbeddedTrace, delta: int = DEFAULT_DELTA) -> bool:
    return classify_path(t, delta).kind == VIRAL
