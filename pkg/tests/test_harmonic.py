import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stpbp.harmonic import EULER_GAMMA, epoch_time, epoch_time_span, eta_approx, eta_exact


def brute_eta(t):
    n, s = 0, 0.0
    while s + 1.0 / (n + 1) <= t:
        n += 1
        s += 1.0 / n
    return n


def test_small_epoch_times_exact():
    for n in range(0, 40):
        exact = sum(Fraction(1, k) for k in range(1, n + 1))
        assert epoch_time(n) == pytest.approx(float(exact), abs=1e-15)


def test_eta_examples():
    assert eta_exact(0.5) == 0
    assert eta_exact(1.0) == 1
    assert eta_exact(1.5) == 2
    assert eta_exact(10.0) == brute_eta(10.0) == 12366


def test_table_boundary_continuous():
    n = np.arange((1 << 17) - 3, (1 << 17) + 4)
    t = epoch_time(n)
    assert np.allclose(np.diff(t), 1.0 / n[1:], rtol=1e-9, atol=0)


def test_large_n_against_fsum():
    n = 400_000
    ref = math.fsum(1.0 / k for k in range(1, n + 1))
    assert epoch_time(n) == pytest.approx(ref, rel=1e-15, abs=1e-14)


def test_span_matches_direct_tail_sum():
    n, k = 200_000, np.array([200_000, 200_001, 250_000])
    ref = [math.fsum(1.0 / j for j in range(n + 1, kk + 1)) for kk in k]
    assert np.allclose(epoch_time_span(n, k), ref, rtol=1e-12, atol=1e-15)


def test_eta_approx_identities():
    assert eta_approx(EULER_GAMMA) == pytest.approx(1.0)
    assert eta_approx(EULER_GAMMA + math.log(100)) == pytest.approx(100.0)


@given(st.floats(0.0, 9.0))
def test_eta_exact_matches_brute_force(t):
    assert eta_exact(t) == brute_eta(t)


@given(st.integers(1, 500))
def test_eta_inverts_epoch_time(n):
    assert eta_exact(float(epoch_time(n))) == n
