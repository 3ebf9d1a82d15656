import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stpbp import theory
from stpbp.abstract import (ChainError, OffspringModel, constant_mean, fractions, interpolate,
                            iter_abstract, simulate_abstract, step_embedded)
from stpbp.harmonic import epoch_time
from stpbp.tef import C_FIT, TefParams
from stpbp.trace import ConfigError, EmbeddedTrace, SimConfig


def test_step_embedded():
    assert step_embedded((1, 1), 0) == (0, 1)
    assert step_embedded((5, 10), 3) == (7, 13)
    with pytest.raises(ChainError):
        step_embedded((0, 4), 1)


@given(st.integers(1, 50), st.lists(st.integers(0, 5), max_size=40))
def test_step_keeps_conservation(a0, gammas):
    c, a, n = a0, a0, 0
    for g in gammas:
        if c == 0:
            break
        c, a = step_embedded((c, a), g)
        n += 1
        assert a - c == n


def test_zero_mean_dies_after_seed_count():
    m = OffspringModel(TefParams(0.0, 0.0, 0.0, 1.0))
    t = simulate_abstract(m, SimConfig(seed_count=4, rng_seed=1))
    assert t.epochs == 4 and t.extinct
    assert t.A.tolist() == [4] * 5


def test_binomial_bounded_by_trials():
    m = OffspringModel(TefParams(30.0, 1e-3, 1e-4, 5000.0), kind="binomial", n_max=12)
    for t in iter_abstract(m, SimConfig(seed_count=2, rng_seed=3, max_epochs=3000), 5):
        t.check()
        assert t.gamma.max() <= 12


def test_offspring_model_validation():
    with pytest.raises(ConfigError):
        OffspringModel(C_FIT, kind="geometric")
    with pytest.raises(ConfigError):
        OffspringModel(C_FIT, kind="binomial")


def test_poisson_mean_matches_tef():
    # sample mean of Gamma_1 across runs is m(a0)
    m = OffspringModel(C_FIT.with_rho(0.3))
    g = [t.gamma[0] for t in iter_abstract(m, SimConfig(seed_count=2, rng_seed=4, max_epochs=1), 4000)]
    target = 0.3 * (C_FIT.m_bar - C_FIT.kappa1 * 2)
    assert np.mean(g) == pytest.approx(target, abs=4 * np.sqrt(target / 4000))


def test_reproducible_per_index():
    m = OffspringModel(C_FIT.with_rho(0.6))
    cfg = SimConfig(seed_count=2, rng_seed=5, max_epochs=2000)
    batch = list(iter_abstract(m, cfg, 3))
    assert simulate_abstract(m, cfg, index=2).to_csv() == batch[2].to_csv()
    assert batch[0].to_csv() != batch[1].to_csv()


def test_saturated_total_near_life_span():
    p = C_FIT.with_rho(0.6)
    n_e = theory.life_span(p, 2)
    m = OffspringModel(p)
    finals = [t.final_total for t in iter_abstract(m, SimConfig(seed_count=2, rng_seed=6), 8)
              if t.final_total > 1000]
    assert finals
    assert abs(np.mean(finals) - n_e) / n_e < 0.03


def test_fractions_example():
    t = EmbeddedTrace(A=np.array([2, 4]), C=np.array([2, 3]), gamma=np.array([2]),
                      tau=np.array([0.0, 1.0]), terminal="truncated")
    f = fractions(t)
    assert f.psi_a.tolist() == [2.0, 4.0]
    assert f.psi_c.tolist() == [2.0, 3.0]


def test_fraction_difference_is_one():
    m = OffspringModel(C_FIT.with_rho(0.6))
    t = simulate_abstract(m, SimConfig(seed_count=2, rng_seed=8, max_epochs=5000))
    f = fractions(t)
    assert np.allclose(f.psi_a[1:] - f.psi_c[1:], 1.0, rtol=0, atol=1e-12)


def test_interpolant_steps():
    m = OffspringModel(C_FIT.with_rho(0.6))
    t = simulate_abstract(m, SimConfig(seed_count=2, rng_seed=8, max_epochs=500))
    f = fractions(t)
    ups = interpolate(f, 10)
    pc, pa = ups(0.0)
    assert (pc, pa) == (f.psi_c[10], f.psi_a[10])
    # value on [t_k - t_n, t_{k+1} - t_n) is that of epoch k
    k = 37
    lo = epoch_time(k) - epoch_time(10)
    hi = epoch_time(k + 1) - epoch_time(10)
    for s in (lo, 0.5 * (lo + hi), np.nextafter(hi, 0)):
        assert ups(s)[1] == f.psi_a[k]
    ks, ts, _, _ = ups.window(1.0)
    assert ts[-1] <= 1.0 and ks[0] == 10
    with pytest.raises(ValueError):
        interpolate(f, 0)


@pytest.mark.parametrize("rho,a0", [(0.1, 1), (0.08, 2)])
def test_probability_of_virality_near_pgf(rho, a0):
    # empirical check of p_delta ~ 1 - p_e^a0; agreement is expected, not guaranteed
    p = C_FIT.with_rho(rho)
    m = OffspringModel(p)
    p_e = theory.pgf_extinction_prob(m, a0=a0) ** a0
    runs = iter_abstract(m, SimConfig(seed_count=a0, rng_seed=3, max_epochs=3000), 4000)
    viral = sum(t.peak_current > 100 for t in runs) / 4000
    assert abs(viral - (1 - p_e)) < 0.03
