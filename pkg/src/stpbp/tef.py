"""Total-share-dependent expected forwards (TeF).

``m(a) = rho * m_N(a)`` with ``m_N`` piecewise linear: slope ``-kappa1`` up to
the breakpoint ``a_bar`` and ``-kappa2`` after it, continuous at ``a_bar``.
This module evaluates the curve, estimates it from simulated traces by
binning on the total share count, and fits the two-slope form back to the
binned estimates.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class ParameterError(ValueError):
    """Parameters outside the model's domain."""


@dataclass(frozen=True)
class TefParams:
    m_bar: float
    kappa1: float
    kappa2: float
    a_bar: float
    rho: float = 1.0

    def __post_init__(self):
        for name in ("m_bar", "kappa1", "kappa2", "a_bar", "rho"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v}")
        if self.m_bar < 0 or self.kappa1 < 0 or self.kappa2 < 0:
            raise ParameterError("m_bar, kappa1 and kappa2 must be nonnegative")
        if self.a_bar <= 0:
            raise ParameterError("a_bar must be positive")
        if not 0 < self.rho <= 1:
            raise ParameterError(f"rho must lie in (0, 1], got {self.rho}")

    @property
    def m_tilde(self) -> float:
        return self.m_bar - self.a_bar * (self.kappa1 - self.kappa2)

    def with_rho(self, rho: float) -> "TefParams":
        return replace(self, rho=rho)

    def check_viral(self) -> None:
        """Reject parameters outside the two-slope supercritical regime."""
        if not self.kappa1 > self.kappa2 > 0:
            raise ParameterError(
                f"need kappa1 > kappa2 > 0, got kappa1={self.kappa1}, kappa2={self.kappa2}")
        if not self.rho * self.m_bar > 1:
            raise ParameterError(
                f"need rho * m_bar > 1 for growth, got {self.rho * self.m_bar:.6g}")

    def to_config(self) -> str:
        return "".join(f"{k}={v!r}\n" for k, v in (
            ("m_bar", self.m_bar), ("kappa1", self.kappa1), ("kappa2", self.kappa2),
            ("a_bar", self.a_bar), ("rho", self.rho)))

    @classmethod
    def from_mapping(cls, kv: dict) -> "TefParams":
        missing = {"m_bar", "kappa1", "kappa2", "a_bar"} - kv.keys()
        if missing:
            raise ParameterError(f"missing TeF keys: {sorted(missing)}")
        return cls(m_bar=float(kv["m_bar"]), kappa1=float(kv["kappa1"]),
                   kappa2=float(kv["kappa2"]), a_bar=float(kv["a_bar"]),
                   rho=float(kv.get("rho", 1.0)))

    @classmethod
    def from_config(cls, text: str) -> "TefParams":
        from .config import parse_key_values
        return cls.from_mapping(parse_key_values(text))


# common fit of the network TeF on the Twitter follow graph at rho = 1
C_FIT = TefParams(m_bar=21.321042, kappa1=532e-6, kappa2=83e-6, a_bar=35000.0)


def tef_eval(p: TefParams, a):
    """Expected effective forwards at total share count ``a``, clamped at 0."""
    a = np.asarray(a, dtype=float)
    mn = np.where(a <= p.a_bar, p.m_bar - p.kappa1 * a, p.m_tilde - p.kappa2 * a)
    out = np.maximum(p.rho * mn, 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- estimation

@dataclass(frozen=True, eq=False)
class BinnedTef:
    bin_width: int
    transitions: np.ndarray
    forward_sum: np.ndarray

    def __post_init__(self):
        if self.bin_width < 1:
            raise ValueError("bin_width must be >= 1")
        if self.transitions.shape != self.forward_sum.shape:
            raise ValueError("transitions and forward_sum must align")

    @property
    def n_bins(self) -> int:
        return int(self.transitions.size)

    @property
    def lower(self) -> np.ndarray:
        return np.arange(self.n_bins, dtype=np.int64) * self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return self.lower + self.bin_width / 2.0

    @property
    def estimate(self) -> np.ndarray:
        """Mean forwards per transition; NaN for empty bins."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.transitions > 0,
                            self.forward_sum / np.maximum(self.transitions, 1), np.nan)

    def merge(self, other: "BinnedTef") -> "BinnedTef":
        if other.bin_width != self.bin_width:
            raise ValueError("cannot merge bins of different width")
        size = max(self.n_bins, other.n_bins)
        t = np.zeros(size, dtype=np.int64)
        s = np.zeros(size, dtype=np.result_type(self.forward_sum, other.forward_sum))
        for b in (self, other):
            t[:b.n_bins] += b.transitions
            s[:b.n_bins] += b.forward_sum
        return BinnedTef(self.bin_width, t, s)

    def scaled_estimate(self, rho: float) -> np.ndarray:
        return self.estimate / rho

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("bin_lo,bin_hi,transitions,forward_sum,estimate\n")
        est = self.estimate
        for b in range(self.n_bins):
            lo = b * self.bin_width
            e = "" if np.isnan(est[b]) else repr(float(est[b]))
            fs = self.forward_sum[b]
            fs = int(fs) if float(fs).is_integer() else repr(float(fs))
            out.write(f"{lo},{lo + self.bin_width},{self.transitions[b]},{fs},{e}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BinnedTef":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("bin_lo"):
            raise ValueError("not a BinnedTef CSV (missing header)")
        rows = [ln.split(",") for ln in lines[1:]]
        if not rows:
            raise ValueError("BinnedTef CSV has no rows")
        lo = np.array([int(r[0]) for r in rows])
        width = int(rows[0][1]) - int(rows[0][0])
        if np.any(lo != np.arange(len(rows)) * width):
            raise ValueError("BinnedTef CSV rows must be contiguous equal-width bins from 0")
        t = np.array([int(r[2]) for r in rows], dtype=np.int64)
        s = np.array([float(r[3]) for r in rows])
        if np.all(s == np.round(s)):
            s = s.astype(np.int64)
        return cls(width, t, s)


def _trace_bins(trace, bin_width: int) -> BinnedTef:
    prev_total = np.asarray(trace.A[:-1], dtype=np.int64)
    gamma = np.asarray(trace.gamma, dtype=np.int64)
    if prev_total.size == 0:
        return BinnedTef(bin_width, np.zeros(0, np.int64), np.zeros(0, np.int64))
    idx = prev_total // bin_width
    size = int(idx.max()) + 1
    t = np.bincount(idx, minlength=size).astype(np.int64)
    # integer sums; bincount weights go through float64 which is exact below 2**53
    s = np.bincount(idx, weights=gamma, minlength=size).astype(np.int64)
    return BinnedTef(bin_width, t, s)


def estimate_tef(traces: Iterable, bin_width: int) -> BinnedTef:
    """Bin each transition's forwards by the total share count before it.

    Every epoch ``n >= 1`` of every trace contributes one transition and
    ``Gamma_n`` forwards to the bin containing ``A_{n-1}``.
    """
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    acc = BinnedTef(bin_width, np.zeros(0, np.int64), np.zeros(0, np.int64))
    count = 0
    for tr in traces:
        acc = acc.merge(_trace_bins(tr, bin_width))
        count += 1
    if count == 0:
        raise ValueError("no traces to estimate from")
    return acc


# ------------------------------------------------------------------- fitting

class TwoSlopeFitError(ValueError):
    """No breakpoint candidate satisfies kappa1 >= kappa2 > 0.

    ``unconstrained`` holds the best candidate ignoring the slope constraints.
    """

    def __init__(self, msg, unconstrained=None):
        super().__init__(msg)
        self.unconstrained = unconstrained


@dataclass(frozen=True)
class _Candidate:
    sse: float
    a_bar: float
    m_bar: float
    kappa1: float
    kappa2: float


def _wls_line(x, y, w):
    """Weighted least-squares line; returns (intercept, slope, sse)."""
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    dx = x - xm
    sxx = (w * dx * dx).sum()
    slope = (w * dx * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    r = y - intercept - slope * x
    return intercept, slope, float((w * r * r).sum())


def _hinge_fit(x, y, w, brk, scale):
    """Continuity-constrained two-segment WLS with the breakpoint fixed at ``brk``."""
    xs = x / scale
    bs = brk / scale
    design = np.column_stack([np.ones_like(xs), -xs, np.maximum(xs - bs, 0.0)])
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    r = y - design @ beta
    m_bar, k1, dk = beta[0], beta[1] / scale, beta[2] / scale
    return _Candidate(float((w * r * r).sum()), float(brk), float(m_bar), float(k1), float(k1 - dk))


def _candidates(x, y, w):
    """Hinges at every interior data point plus, for every split between
    adjacent points, the unconstrained two-line fit when the lines cross
    inside that gap. Together these cover the exact breakpoint optimum."""
    n = x.size
    scale = float(np.max(np.abs(x))) or 1.0
    out = []
    for j in range(1, n - 1):
        out.append(_hinge_fit(x, y, w, x[j], scale))
    for j in range(1, n - 2):
        bl, sl, el = _wls_line(x[:j + 1], y[:j + 1], w[:j + 1])
        br, sr, er = _wls_line(x[j + 1:], y[j + 1:], w[j + 1:])
        if sl == sr:
            continue
        cross = (br - bl) / (sl - sr)
        if x[j] < cross < x[j + 1]:
            out.append(_Candidate(el + er, float(cross), float(bl), float(-sl), float(-sr)))
    return out


class TwoSlopeTef(RegressorMixin, BaseEstimator):
    """Two-slope continuous piecewise-linear fit of a TeF curve.

    ``fit`` takes bin centres ``X`` (shape ``(n, 1)``), estimates ``y`` and
    transition counts as ``sample_weight``. The breakpoint is chosen among
    hinges at the data points and the exact crossings of per-side fits, by
    minimum weighted squared error subject to ``kappa1 >= kappa2 > 0``.
    Near-ties resolve to the smallest breakpoint.
    """

    def __init__(self, min_transitions: int = 30, tie_rtol: float = 1e-12):
        self.min_transitions = min_transitions
        self.tie_rtol = tie_rtol

    def fit(self, X, y, sample_weight=None):
        X, y = check_X_y(X, y, ensure_min_samples=4, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError("TwoSlopeTef expects a single feature (total shares)")
        x = X[:, 0].astype(float)
        w = np.ones_like(x) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if np.any(w <= 0):
            raise ValueError("sample weights must be positive")
        order = np.argsort(x, kind="stable")
        x, y, w = x[order], y[order].astype(float), w[order]

        cands = _candidates(x, y, w)
        if not cands:
            raise TwoSlopeFitError("no breakpoint candidates (need at least 4 distinct points)")
        valid = [c for c in cands
                 if c.kappa2 > 0 and c.kappa1 >= c.kappa2 - 1e-9 * abs(c.kappa1)]
        best_any = min(cands, key=lambda c: c.sse)
        if not valid:
            raise TwoSlopeFitError(
                "no breakpoint candidate satisfies kappa1 >= kappa2 > 0 "
                f"(unconstrained best: a_bar={best_any.a_bar:.6g}, kappa1={best_any.kappa1:.6g}, "
                f"kappa2={best_any.kappa2:.6g}, sse={best_any.sse:.6g})",
                unconstrained=best_any)
        best_sse = min(c.sse for c in valid)
        tol = self.tie_rtol * float((w * y * y).sum())
        best = min((c for c in valid if c.sse <= best_sse + tol), key=lambda c: c.a_bar)

        self.params_ = TefParams(m_bar=max(best.m_bar, 0.0), kappa1=max(best.kappa1, 0.0),
                                 kappa2=best.kappa2, a_bar=best.a_bar, rho=1.0)
        self.sse_ = best.sse
        self.breakpoint_ = best.a_bar
        self.n_candidates_ = len(cands)
        self.n_features_in_ = 1
        return self

    def fit_binned(self, b: BinnedTef, rho: float = 1.0):
        """Fit on populated bins (``transitions >= min_transitions``).

        Estimates are divided by ``rho`` first, so the result describes the
        network curve ``m_N``; ``params_`` then carries ``rho``.
        """
        keep = b.transitions >= self.min_transitions
        if keep.sum() < 4:
            raise TwoSlopeFitError(
                f"need at least 4 bins with >= {self.min_transitions} transitions, got {int(keep.sum())}")
        self.fit(b.centers[keep].reshape(-1, 1), b.estimate[keep] / rho,
                 sample_weight=b.transitions[keep].astype(float))
        if rho != 1.0:
            self.params_ = self.params_.with_rho(rho)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return tef_eval(self.params_.with_rho(1.0), X[:, 0])


def fit_two_slope(b: BinnedTef, min_transitions: int = 30) -> TefParams:
    """Two-slope fit of binned estimates with ``rho`` fixed at 1."""
    return TwoSlopeTef(min_transitions=min_transitions).fit_binned(b).params_


def synthetic_bins(p: TefParams, bin_width: float, n_bins: int,
                   transitions: Sequence[int] | int = 1000) -> BinnedTef:
    """Noiseless bins whose estimates equal ``m`` at the bin centres.

    Forward sums are real-valued here, unlike bins estimated from traces.
    """
    t = np.broadcast_to(np.asarray(transitions, dtype=np.int64), (n_bins,)).copy()
    centers = np.arange(n_bins) * bin_width + bin_width / 2.0
    return BinnedTef(bin_width, t, tef_eval(p, centers) * t)
