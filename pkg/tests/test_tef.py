import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from sklearn.base import clone

from stpbp.tef import (C_FIT, BinnedTef, ParameterError, TefParams, TwoSlopeFitError, TwoSlopeTef,
                       estimate_tef, fit_two_slope, synthetic_bins, tef_eval)
from stpbp.trace import EmbeddedTrace


def test_cfit_values():
    assert tef_eval(C_FIT, 0.0) == pytest.approx(21.321042, rel=1e-15)
    assert tef_eval(C_FIT, 35000.0) == pytest.approx(21.321042 - 0.000532 * 35000, rel=1e-12)
    assert tef_eval(C_FIT, 35000.0) == pytest.approx(2.701042, rel=1e-12)


def test_continuity_at_breakpoint():
    eps = 1e-6
    left = tef_eval(C_FIT, C_FIT.a_bar - eps)
    right = tef_eval(C_FIT, C_FIT.a_bar + eps)
    assert left == pytest.approx(right, abs=1e-8)


def test_rho_scales_and_clamps():
    p = C_FIT.with_rho(0.5)
    a = np.array([0.0, 1e4, 4e4])
    assert np.allclose(tef_eval(p, a), 0.5 * tef_eval(C_FIT, a))
    assert tef_eval(C_FIT, 1e7) == 0.0


@pytest.mark.parametrize("kw", [dict(m_bar=-1.0), dict(a_bar=0.0), dict(rho=0.0), dict(rho=1.5),
                                dict(kappa1=float("nan"))])
def test_invalid_params_rejected(kw):
    base = dict(m_bar=10.0, kappa1=1e-3, kappa2=1e-4, a_bar=5000.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        TefParams(**base)


def test_check_viral():
    C_FIT.check_viral()
    with pytest.raises(ParameterError):
        C_FIT.with_rho(0.01).check_viral()
    with pytest.raises(ParameterError):
        TefParams(10.0, 1e-4, 2e-4, 100.0).check_viral()


def test_config_roundtrip():
    p = C_FIT.with_rho(0.6)
    assert TefParams.from_config(p.to_config()) == p
    assert TefParams.from_config("# c\nm-bar = 3\nkappa1=0.1\nkappa2=0.01\na_bar=4\n").m_bar == 3.0
    with pytest.raises(ParameterError):
        TefParams.from_config("m_bar=1\n")


def test_estimate_hand_count():
    t = EmbeddedTrace(A=np.array([2, 4, 5]), C=np.array([2, 3, 3]), gamma=np.array([2, 1]),
                      tau=np.array([0.0, 0.1, 0.2]), terminal="truncated")
    b = estimate_tef([t], 1000)
    assert b.transitions.tolist() == [2]
    assert b.forward_sum.tolist() == [3]
    assert b.estimate[0] == 1.5


def test_estimate_bins_by_previous_total():
    t = EmbeddedTrace(A=np.array([1, 3, 3, 4]), C=np.array([1, 2, 1, 1]), gamma=np.array([2, 0, 1]),
                      tau=np.arange(4.0), terminal="truncated")
    b = estimate_tef([t, t], 2)
    # A_{n-1} = 1, 3, 3 -> bins 0, 1, 1
    assert b.transitions.tolist() == [2, 4]
    assert b.forward_sum.tolist() == [4, 2]


def test_estimate_requires_traces():
    with pytest.raises(ValueError):
        estimate_tef([], 10)


def test_binned_csv_roundtrip_and_empty_bins():
    b = BinnedTef(10, np.array([3, 0, 5]), np.array([6, 0, 1]))
    text = b.to_csv()
    assert text.splitlines()[0] == "bin_lo,bin_hi,transitions,forward_sum,estimate"
    assert text.splitlines()[2] == "10,20,0,0,"
    b2 = BinnedTef.from_csv(text)
    assert b2.transitions.tolist() == [3, 0, 5]
    assert np.isnan(b2.estimate[1])
    assert b.centers.tolist() == [5.0, 15.0, 25.0]


def test_fit_exact_recovery_cfit():
    b = synthetic_bins(C_FIT, bin_width=1000, n_bins=60)
    p = fit_two_slope(b)
    for name in ("m_bar", "kappa1", "kappa2", "a_bar"):
        assert getattr(p, name) == pytest.approx(getattr(C_FIT, name), rel=1e-6)


def test_fit_breakpoint_off_grid():
    p = TefParams(20.0, 4e-4, 1e-4, 12345.6)
    b = synthetic_bins(p, bin_width=1000, n_bins=70)
    q = fit_two_slope(b, min_transitions=1)
    assert q.a_bar == pytest.approx(12345.6, rel=1e-9)


def test_fit_single_slope_tie_breaks_to_smallest_breakpoint():
    # kappa1 == kappa2: every breakpoint explains the data; smallest candidate wins
    p = TefParams(20.0, 2e-4, 2e-4, 30000.0)
    b = synthetic_bins(p, bin_width=1000, n_bins=50)
    est = TwoSlopeTef().fit_binned(b)
    q = est.params_
    assert q.kappa1 == pytest.approx(q.kappa2, rel=1e-6)
    assert q.kappa1 == pytest.approx(2e-4, rel=1e-6)
    assert q.a_bar == pytest.approx(b.centers[1])


def test_fit_rejects_increasing_late_slope():
    x = np.arange(10, dtype=float)
    y = np.where(x < 5, x, 5 + 3 * (x - 5))  # rising everywhere: no valid candidate
    with pytest.raises(TwoSlopeFitError) as exc:
        TwoSlopeTef().fit(x.reshape(-1, 1), y)
    assert exc.value.unconstrained is not None


def test_fit_too_few_populated_bins():
    b = synthetic_bins(C_FIT, 1000, 10, transitions=[100] * 3 + [1] * 7)
    with pytest.raises(TwoSlopeFitError):
        fit_two_slope(b)


def test_fit_divides_by_rho():
    p = C_FIT.with_rho(0.4)
    b = synthetic_bins(p, 1000, 60)
    q = TwoSlopeTef().fit_binned(b, rho=0.4).params_
    assert q.rho == 0.4
    assert q.m_bar == pytest.approx(C_FIT.m_bar, rel=1e-9)


def test_estimator_api():
    est = TwoSlopeTef(min_transitions=5)
    assert clone(est).get_params() == {"min_transitions": 5, "tie_rtol": 1e-12}
    x = np.linspace(500, 59500, 60).reshape(-1, 1)
    y = tef_eval(C_FIT, x[:, 0])
    est.fit(x, y)
    assert np.allclose(est.predict(x), y, atol=1e-9)
    assert est.score(x, y) == pytest.approx(1.0)


@given(st.floats(5.0, 40.0), st.floats(1e-4, 2e-3), st.floats(0.05, 0.8), st.floats(0.2, 0.8),
       st.floats(5.0, 20.0))
def test_generate_and_refit(m_bar, k1, ratio, where, per_bin):
    p = TefParams(m_bar, k1, k1 * ratio, where * m_bar / k1)
    zero = p.m_tilde / p.kappa2
    width = p.a_bar / per_bin
    n_bins = int(0.95 * zero // width)
    # identifiability: at least two bin centres on each side of the breakpoint
    assume(n_bins - int(p.a_bar / width + 0.5) >= 2)
    q = fit_two_slope(synthetic_bins(p, width, n_bins))
    for name in ("m_bar", "kappa1", "kappa2", "a_bar"):
        assert getattr(q, name) == pytest.approx(getattr(p, name), rel=1e-6)
