"""Deterministic approximations of the saturated process.

With the epoch counter approximated by ``e^{t - gamma}``, the total shares
solve ``a' = m(a) e^{t - gamma}`` and, for the two-slope TeF, follow a
double exponential ``a(t) = w1 - w2 exp(-w3 e^t)`` in each phase. Indexed by
epoch (``t_n ~ gamma + ln n``) that becomes ``a_n = w1 - w2 exp(-n r)`` with
growth rate ``r = kappa * rho`` and ``c_n = a_n - n``.

Everything here is a pure function of ``(TefParams, a0)``. Parameters must
satisfy ``kappa1 > kappa2 > 0``, ``rho * m_bar > 1`` and ``a0 < a_bar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .harmonic import EULER_GAMMA, epoch_time, eta_approx, eta_exact  # noqa: F401  (re-exported)
from .tef import ParameterError, TefParams, tef_eval

E_GAMMA = math.exp(EULER_GAMMA)
INITIAL = "initial"
LATE = "late"


class SolverError(RuntimeError):
    """A bracketing root search found no sign change."""


class ODERefinementError(RuntimeError):
    """Halving the integration step moved the solution by more than the tolerance."""


@dataclass(frozen=True)
class Phase:
    """``a(t) = w1 - w2 exp(-w3 e^t)`` on this phase."""
    w1: float
    w2: float
    w3: float

    @property
    def rate(self) -> float:
        """Per-epoch growth rate ``w3 e^gamma`` (equals ``kappa * rho``)."""
        return self.w3 * E_GAMMA

    def total(self, t):
        return self.w1 - self.w2 * np.exp(-self.w3 * np.exp(t))

    def total_at_epoch(self, n):
        return self.w1 - self.w2 * np.exp(-np.asarray(n, dtype=float) * self.rate)

    def residual(self, n):
        """``a_n - n``: the epoch-indexed current shares of this phase."""
        return self.total_at_epoch(n) - n

    def peak_epoch(self) -> float:
        return math.log(self.w2 * self.rate) / self.rate

    def peak_value(self) -> float:
        r = self.rate
        return self.w1 - (1.0 + math.log(self.w2 * r)) / r


@dataclass(frozen=True)
class PhaseConstants:
    """Per-phase constants.

    ``u`` and ``v`` are the integrating-factor constants of the fraction
    solutions ``(start time, initial fraction, intercept * rho, slope * rho)``.
    ``late`` is None when total shares never reach ``a_bar`` (``m_bar/kappa1 <= a_bar``).
    """
    initial: Phase
    late: Optional[Phase]
    tau_s: float
    n_s: float
    u: tuple
    v: tuple

    @property
    def w(self):
        return (self.initial.w1, self.initial.w2, self.initial.w3), (
            None if self.late is None else (self.late.w1, self.late.w2, self.late.w3))

    def phase_at_epoch(self, n) -> np.ndarray:
        return np.asarray(n) > self.n_s


def check_params(p: TefParams, a0: float) -> None:
    p.check_viral()
    if not 0 < a0 < p.a_bar:
        raise ParameterError(f"need 0 < a0 < a_bar, got a0={a0}, a_bar={p.a_bar}")


@lru_cache(maxsize=256)
def phase_constants(p: TefParams, a0: float) -> PhaseConstants:
    check_params(p, a0)
    w1 = p.m_bar / p.kappa1
    w3 = p.kappa1 * p.rho / E_GAMMA
    first = Phase(w1, (w1 - a0) * math.exp(w3), w3)
    c0 = float(a0)
    u1 = (0.0, c0, p.m_bar * p.rho, p.kappa1 * p.rho)
    if w1 <= p.a_bar:
        return PhaseConstants(first, None, math.inf, math.inf, (u1,), (u1,))

    tau_s = math.log(math.log(first.w2 / (w1 - p.a_bar)) / w3)
    w1b = p.m_tilde / p.kappa2
    w3b = p.kappa2 * p.rho / E_GAMMA
    late = Phase(w1b, (w1b - p.a_bar) * math.exp(w3b * math.exp(tau_s)), w3b)
    n_s = math.exp(tau_s - EULER_GAMMA)
    psi_a_s = p.a_bar / n_s
    psi_c_s = _current_cont(tau_s, first, late, tau_s) / n_s
    u2 = (tau_s, psi_a_s, p.m_tilde * p.rho, p.kappa2 * p.rho)
    v2 = (tau_s, psi_c_s, p.m_tilde * p.rho, p.kappa2 * p.rho)
    return PhaseConstants(first, late, tau_s, n_s, (u1, u2), (u1, v2))


def _total_cont(t, first: Phase, late: Optional[Phase], tau_s: float):
    t = np.asarray(t, dtype=float)
    if late is None:
        return first.total(t)
    return np.where(t <= tau_s, first.total(np.minimum(t, tau_s)), late.total(np.maximum(t, tau_s)))


def _current_cont(t, first, late, tau_s):
    t = np.asarray(t, dtype=float)
    phi = np.where(t > tau_s, tau_s, 0.0)
    # c(phi) - a(phi) = e^{-gamma}(1 - e^phi) in both phases, since c(0) = a(0)
    c_minus_a = (1.0 - np.exp(phi)) / E_GAMMA
    return c_minus_a + _total_cont(t, first, late, tau_s) + (np.exp(phi) - np.exp(t)) / E_GAMMA


def _bisect(f, lo, hi, xtol=0.0, ftol=0.0, max_iter=400):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise SolverError(f"no sign change on [{lo}, {hi}]: f={flo:.6g}, {fhi:.6g}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0 or abs(fm) < ftol or hi - lo < xtol:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=256)
def extinction_time(p: TefParams, a0: float) -> float:
    """``tau_e``: first zero of the continuous current-share trajectory."""
    pc = phase_constants(p, a0)

    def c(t):
        return float(_current_cont(t, pc.initial, pc.late, pc.tau_s))

    if pc.late is not None:
        if c(pc.tau_s) > 0:
            return _bisect(c, pc.tau_s, pc.tau_s + 50.0, xtol=1e-14)
        return _bisect(c, 0.0, pc.tau_s, xtol=1e-14)
    hi = 1.0
    while c(hi) > 0:
        hi += 1.0
    return _bisect(c, 0.0, hi, xtol=1e-14)


def total_shares(t, p: TefParams, a0: float):
    """Continuous total-share trajectory; frozen at ``a(tau_e)`` after extinction."""
    pc = phase_constants(p, a0)
    tau_e = extinction_time(p, a0)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    out = _total_cont(np.minimum(t, tau_e), pc.initial, pc.late, pc.tau_s)
    return float(out) if out.ndim == 0 else out


def current_shares(t, p: TefParams, a0: float):
    """Continuous current-share trajectory; zero from ``tau_e`` on."""
    pc = phase_constants(p, a0)
    tau_e = extinction_time(p, a0)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    out = np.where(t < tau_e, _current_cont(np.minimum(t, tau_e), pc.initial, pc.late, pc.tau_s), 0.0)
    return float(out) if out.ndim == 0 else out


def trajectory_rhs(t, p: TefParams, a0: float):
    """Right-hand sides ``(m(a) e^{t-gamma}, (m(a) - 1) e^{t-gamma})`` along the closed form."""
    a = total_shares(t, p, a0)
    scale = np.exp(np.asarray(t, dtype=float) - EULER_GAMMA)
    m = tef_eval(p, a)
    return m * scale, (m - 1.0) * scale


# ------------------------------------------------------------ epoch indexed

def _last_phase(pc: PhaseConstants) -> tuple[Phase, float, float]:
    """Phase in which the epoch-indexed current shares reach zero, with a bracket."""
    if pc.late is not None and pc.initial.residual(pc.n_s) > 0:
        return pc.late, pc.n_s, pc.late.w1
    ph = pc.initial
    lo = max(0.0, ph.peak_epoch())
    hi = ph.w1 if pc.late is None else min(pc.n_s, ph.w1)
    return ph, lo, hi


@lru_cache(maxsize=256)
def _life_span(p: TefParams, a0: float) -> tuple[float, str]:
    pc = phase_constants(p, a0)
    ph, lo, hi = _last_phase(pc)
    n_e = _bisect(lambda n: float(ph.residual(n)), lo, hi, ftol=1e-11 * ph.w1)
    return n_e, LATE if ph is pc.late else INITIAL


def life_span(p: TefParams, a0: float) -> float:
    """Epoch ``n_e`` at which the epoch-indexed current shares vanish.

    Solves ``w1 - w2 exp(-n r) = n`` by bisection in the terminal phase;
    ``n_e`` is also the saturated total (max reach).
    """
    return _life_span(p, a0)[0]


def life_span_residual(p: TefParams, a0: float) -> tuple[float, float]:
    """``(|g(n_e)|, w1)`` of the terminal phase, for checking the solve."""
    pc = phase_constants(p, a0)
    ph, _, _ = _last_phase(pc)
    n_e = life_span(p, a0)
    return abs(float(ph.residual(n_e))), ph.w1


def shares_at_epoch(n, p: TefParams, a0: float):
    """``(a_n, c_n)`` at epoch ``n``; ``(n_e, 0)`` beyond the life span."""
    pc = phase_constants(p, a0)
    n_e = life_span(p, a0)
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 0):
        raise ValueError("epoch must be >= 0")
    a = pc.initial.total_at_epoch(n_arr)
    if pc.late is not None:
        a = np.where(n_arr > pc.n_s, pc.late.total_at_epoch(n_arr), a)
    alive = n_arr <= n_e
    a_out = np.where(alive, a, n_e)
    c_out = np.where(alive, a - n_arr, 0.0)
    if a_out.ndim == 0:
        return float(a_out), float(c_out)
    return a_out, c_out


@dataclass(frozen=True)
class Peak:
    c_star: float
    phase: str
    epoch: float
    at_boundary: bool = False


def peak_current(p: TefParams, a0: float) -> Peak:
    """Peak of the current shares.

    Each phase's epoch curve ``w1 - w2 e^{-n r} - n`` is concave with
    maximiser ``ln(w2 r)/r``; a phase's candidate counts only if that
    maximiser falls inside the phase. If neither does, the larger endpoint
    value is returned with ``at_boundary`` set.
    """
    pc = phase_constants(p, a0)
    cands = []
    ph = pc.initial
    if ph.w2 * ph.rate > 0:
        n1 = ph.peak_epoch()
        if 0 <= n1 <= pc.n_s:
            cands.append(Peak(ph.peak_value(), INITIAL, n1))
    if pc.late is not None and pc.initial.residual(pc.n_s) > 0:
        n2 = pc.late.peak_epoch()
        if n2 >= pc.n_s:
            cands.append(Peak(pc.late.peak_value(), LATE, n2))
    if cands:
        return max(cands, key=lambda c: c.c_star)
    ends = [Peak(float(pc.initial.residual(0.0)), INITIAL, 0.0, True)]
    if pc.late is not None:
        ends.append(Peak(float(pc.initial.residual(pc.n_s)), LATE, pc.n_s, True))
    return max(ends, key=lambda c: c.c_star)


@dataclass(frozen=True)
class TheorySummary:
    tau_s: float
    tau_e: float
    n_s: Optional[int]
    n_e: float
    c_star: float
    peak_phase: str
    peak_epoch: float
    max_reach: float
    growth_initial: float
    growth_late: float

    def to_text(self) -> str:
        items = [
            ("tau_s", repr(self.tau_s)), ("tau_e", repr(self.tau_e)),
            ("n_s", "" if self.n_s is None else str(self.n_s)), ("n_e", repr(self.n_e)),
            ("c_star", repr(self.c_star)), ("peak_phase", self.peak_phase),
            ("peak_epoch", repr(self.peak_epoch)), ("max_reach", repr(self.max_reach)),
            ("growth_initial", repr(self.growth_initial)), ("growth_late", repr(self.growth_late)),
        ]
        return "".join(f"{k}={v}\n" for k, v in items)


def summarize(p: TefParams, a0: float) -> TheorySummary:
    pc = phase_constants(p, a0)
    tau_e = extinction_time(p, a0)
    pk = peak_current(p, a0)
    return TheorySummary(
        tau_s=pc.tau_s,
        tau_e=tau_e,
        n_s=None if pc.late is None else int(math.floor(pc.n_s)),
        n_e=life_span(p, a0),
        c_star=pk.c_star,
        peak_phase=pk.phase,
        peak_epoch=pk.epoch,
        max_reach=total_shares(tau_e, p, a0),
        growth_initial=p.kappa1 * p.rho,
        growth_late=p.kappa2 * p.rho,
    )


# ----------------------------------------------------------- fraction ODE

@dataclass(frozen=True, eq=False)
class FractionSolution:
    """Samples of the fraction ODE at every epoch boundary inside the window.

    ``times`` are relative to the start time ``t_start``; ``epochs[i]`` is
    the value of the exact epoch counter on ``[times[i], times[i+1])``.
    """
    t_start: float
    times: np.ndarray
    epochs: np.ndarray
    psi_c: np.ndarray
    psi_a: np.ndarray

    def shares(self):
        """``(psi_a * eta, psi_c * eta)`` at the sample times."""
        return self.psi_a * self.epochs, self.psi_c * self.epochs


def _integrate(p: TefParams, psi_c, psi_a, start_epoch, horizon, step):
    m_bar, k1, k2, a_bar, rho = p.m_bar, p.kappa1, p.kappa2, p.a_bar, p.rho
    m_tilde = p.m_tilde

    def m(a):
        v = rho * (m_bar - k1 * a if a <= a_bar else m_tilde - k2 * a)
        return v if v > 0.0 else 0.0

    times = [0.0]
    epochs = [start_epoch]
    out_c = [psi_c]
    out_a = [psi_a]
    k = start_epoch
    s = 0.0
    alive = psi_c > 0
    while s < horizon:
        full = 1.0 / (k + 1)
        length = full if horizon - s >= full * (1 - 1e-9) else horizon - s  # absorb rounding at boundaries
        if alive:
            eta = float(k)
            nsub = max(1, math.ceil(length / step))
            h = length / nsub
            for _ in range(nsub):
                # RK4; the right-hand side is autonomous while eta is fixed
                f1 = m(psi_a * eta)
                k1c, k1a = f1 - 1.0 - psi_c, f1 - psi_a
                ya = psi_a + 0.5 * h * k1a
                f2 = m(ya * eta)
                k2c, k2a = f2 - 1.0 - (psi_c + 0.5 * h * k1c), f2 - ya
                ya = psi_a + 0.5 * h * k2a
                f3 = m(ya * eta)
                k3c, k3a = f3 - 1.0 - (psi_c + 0.5 * h * k2c), f3 - ya
                ya = psi_a + h * k3a
                f4 = m(ya * eta)
                k4c, k4a = f4 - 1.0 - (psi_c + h * k3c), f4 - ya
                psi_c += h * (k1c + 2 * k2c + 2 * k3c + k4c) / 6.0
                psi_a += h * (k1a + 2 * k2a + 2 * k3a + k4a) / 6.0
                if psi_c <= 0.0:
                    psi_c = 0.0
                    alive = False
                    break
        s += length
        if length == full:
            k += 1
        times.append(s)
        epochs.append(k)
        out_c.append(psi_c)
        out_a.append(psi_a)
    return (np.asarray(times), np.asarray(epochs, dtype=np.int64),
            np.asarray(out_c), np.asarray(out_a))


def integrate_fraction_ode(p: TefParams, a0: float, horizon: float, step: float,
                           start_epoch: int = 0, initial: Optional[tuple[float, float]] = None,
                           check: bool = True, tol: float = 1e-6) -> FractionSolution:
    """Solve ``psi_c' = (m(psi_a eta) - 1 - psi_c) I``, ``psi_a' = (m(psi_a eta) - psi_a) I``.

    ``eta`` is the exact (step) epoch counter, so the system is integrated
    with RK4 separately on each interval where ``eta`` is constant. The
    window starts at ``t_{start_epoch}`` from ``initial`` (default
    ``(a0, a0)``) and spans ``horizon``. ``I`` is the indicator
    ``psi_c > 0``; once it drops the state freezes.

    With ``check`` the solve is repeated at half the step; a sup-norm change
    above ``tol * max(1, sup|psi|)`` raises ODERefinementError.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ValueError("horizon must be finite and >= 0")
    c0, a0_ = (float(a0), float(a0)) if initial is None else map(float, initial)
    t_start = float(epoch_time(start_epoch))
    times, epochs, pc, pa = _integrate(p, c0, a0_, int(start_epoch), horizon, step)
    if check:
        _, _, pc2, pa2 = _integrate(p, c0, a0_, int(start_epoch), horizon, step / 2)
        diff = max(np.max(np.abs(pc - pc2)), np.max(np.abs(pa - pa2)))
        scale = max(1.0, np.max(np.abs(pa2)), np.max(np.abs(pc2)))
        if diff > tol * scale:
            raise ODERefinementError(
                f"step {step} not converged: halving changed the solution by {diff:.3g}")
    return FractionSolution(t_start, times, epochs, pc, pa)


# --------------------------------------------------- extinction probability

def pgf_extinction_prob(model, a0: float = 1.0, tol: float = 1e-12, max_iter: int = 10**7) -> float:
    """Extinction probability of a single line under the offspring law at total ``a0``.

    Minimal fixed point of the PGF, by monotone iteration ``s <- f(s)`` from 0.
    For ``k`` independent seeds the extinction probability is the k-th power.
    """
    mean = float(model.mean(a0))
    if mean <= 1.0:
        return 1.0
    s = 0.0
    for _ in range(max_iter):
        nxt = float(model.pgf(s, a0))
        if abs(nxt - s) < tol:
            return nxt
        s = nxt
    raise SolverError("PGF iteration did not converge")
