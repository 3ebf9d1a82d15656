"""Theory-versus-simulation error metrics."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import theory
from .cascade import iter_batch
from .graph import Graph
from .tef import TefParams
from .trace import DEFAULT_DELTA, EmbeddedTrace, SimConfig, is_viral


class NotViralError(ValueError):
    """Comparison requested on a trace that never exceeded the virality threshold."""


@dataclass(frozen=True)
class ComparisonReport:
    peak_rel_err: float
    reach_rel_err: float
    sup_rel_err_total: float
    sim_peak: float
    theory_peak: float
    sim_reach: float
    theory_reach: float


def compare_curves(A: Sequence[float], C: Sequence[float], p: TefParams, a0: float) -> ComparisonReport:
    """Relative errors of a (total, current) epoch curve against theory.

    Peak: ``|max C - c*| / max C``. Reach: ``|A_N - n_e| / A_N``. Total:
    ``max_n |A_n - a_n| / A_n`` over the recorded epochs.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    c_star = theory.peak_current(p, a0).c_star
    n_e = theory.life_span(p, a0)
    a_n, _ = theory.shares_at_epoch(np.arange(A.size), p, a0)
    sim_peak = float(C.max())
    sim_reach = float(A[-1])
    return ComparisonReport(
        peak_rel_err=abs(sim_peak - c_star) / sim_peak,
        reach_rel_err=abs(sim_reach - n_e) / sim_reach,
        sup_rel_err_total=float(np.max(np.abs(A - a_n) / A)),
        sim_peak=sim_peak,
        theory_peak=c_star,
        sim_reach=sim_reach,
        theory_reach=n_e,
    )


def compare_trace(t: EmbeddedTrace, p: TefParams, a0: Optional[float] = None,
                  delta: int = DEFAULT_DELTA) -> ComparisonReport:
    if not is_viral(t, delta):
        raise NotViralError(f"trace peak {t.peak_current} does not exceed delta={delta}")
    return compare_curves(t.A, t.C, p, t.a0 if a0 is None else a0)


_FIELDS = ("peak_rel_err", "reach_rel_err", "sup_rel_err_total")


@dataclass(frozen=True)
class RhoRow:
    """Errors at one attractiveness level: mean and worst case over viral runs."""
    rho: float
    runs: int
    viral: int
    mean: Optional[dict] = None
    worst: Optional[dict] = None

    @property
    def inconclusive(self) -> bool:
        return self.viral == 0


def aggregate(rho: float, runs: int, reports: Iterable[ComparisonReport]) -> RhoRow:
    reports = list(reports)
    if not reports:
        return RhoRow(rho, runs, 0)
    mean = {f: math.fsum(getattr(r, f) for r in reports) / len(reports) for f in _FIELDS}
    worst = {f: max(getattr(r, f) for r in reports) for f in _FIELDS}
    return RhoRow(rho, runs, len(reports), mean, worst)


@dataclass(frozen=True)
class SweepReport:
    rows: list = field(default_factory=list)

    def worst_over_rho(self, field_name: str, stat: str = "mean") -> float:
        vals = [getattr(r, stat)[field_name] for r in self.rows if not r.inconclusive]
        return max(vals) if vals else math.nan

    def to_csv(self, stat: str = "mean") -> str:
        out = io.StringIO()
        out.write("rho,peak_rel_err,reach_rel_err,sup_rel_err_total\n")
        for r in self.rows:
            if r.inconclusive:
                out.write(f"{r.rho!r},,,\n")
            else:
                d = getattr(r, stat)
                out.write(f"{r.rho!r},{d['peak_rel_err']!r},{d['reach_rel_err']!r},{d['sup_rel_err_total']!r}\n")
        return out.getvalue()

    def summary(self) -> str:
        lines = []
        for r in self.rows:
            if r.inconclusive:
                lines.append(f"rho={r.rho:g}: inconclusive (0 viral of {r.runs} runs)")
                continue
            lines.append(
                f"rho={r.rho:g}: {r.viral}/{r.runs} viral; peak err mean {100 * r.mean['peak_rel_err']:.3f}% "
                f"max {100 * r.worst['peak_rel_err']:.3f}%; reach err mean {100 * r.mean['reach_rel_err']:.3f}% "
                f"max {100 * r.worst['reach_rel_err']:.3f}%")
        if any(not r.inconclusive for r in self.rows):
            lines.append(
                f"worst over rho (per-rho mean): peak {100 * self.worst_over_rho('peak_rel_err'):.3f}%, "
                f"reach {100 * self.worst_over_rho('reach_rel_err'):.3f}%")
        return "\n".join(lines) + "\n"


def rho_sweep(g: Graph, rhos: Sequence[float], p_network: TefParams, runs: int,
              seed_count: int = 2, rng_seed: int = 0, delta: int = DEFAULT_DELTA,
              lam: float = 1.0) -> SweepReport:
    """Simulate ``runs`` cascades per ``rho`` and compare viral ones against
    theory for ``m = rho * m_N``."""
    rows = []
    for rho in rhos:
        if not 0 < rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {rho}")
        p = p_network.with_rho(rho)
        cfg = SimConfig(rho=rho, seed_count=seed_count, lam=lam, rng_seed=rng_seed)
        reps = [compare_trace(t, p, seed_count, delta)
                for t in iter_batch(g, cfg, runs) if is_viral(t, delta)]
        rows.append(aggregate(rho, runs, reps))
    return SweepReport(rows)
