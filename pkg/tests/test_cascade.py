import numpy as np
import pytest

from stpbp.cascade import iter_batch, simulate_batch, simulate_cascade, simulate_run
from stpbp.graph import from_edges, scale_free_graph
from stpbp.trace import (EXTINCT, VIRAL, ConfigError, EmbeddedTrace, SimConfig, classify_path,
                         is_viral)


@pytest.fixture(scope="module")
def star():
    return from_edges([(0, k) for k in range(1, 6)])


@pytest.fixture(scope="module")
def ba():
    return scale_free_graph(2000, 5, seed=11)


def test_star_from_center(star):
    # find a seed whose single copy lands on the centre (node 0)
    for s in range(200):
        t = simulate_cascade(star, SimConfig(rho=1.0, seed_count=1, rng_seed=s), record_recipients=True)
        if t.recipients[0] == 0:
            break
    else:
        pytest.fail("no seed started at the centre")
    assert t.gamma.tolist() == [5, 0, 0, 0, 0, 0]
    assert t.A.tolist() == [1, 6, 6, 6, 6, 6, 6]
    assert t.C.tolist() == [1, 5, 4, 3, 2, 1, 0]
    assert t.epochs == 6 and t.extinct
    assert sorted(t.recipients.tolist()) == list(range(6))


def test_rho_zero_extinct_at_seed_count(ba):
    cfg = SimConfig(rho=0.0, seed_count=3, rng_seed=1)
    for t in simulate_batch(ba, cfg, 100):
        assert t.epochs == 3 and t.extinct
        assert np.all(t.gamma == 0)


def test_invariants_and_tau(ba):
    for t in iter_batch(ba, SimConfig(rho=0.3, seed_count=2, rng_seed=5, lam=2.0), 20):
        t.check()
        assert t.final_total <= ba.node_count


def test_determinism_and_independence(ba):
    cfg = SimConfig(rho=0.5, seed_count=2, rng_seed=7)
    a = simulate_batch(ba, cfg, 2)
    b = simulate_batch(ba, cfg, 2)
    assert a[0].to_csv() == b[0].to_csv() and a[1].to_csv() == b[1].to_csv()
    assert a[0].to_csv() != a[1].to_csv()
    assert simulate_run(ba, cfg, 1).to_csv() == a[1].to_csv()


def test_parallel_matches_sequential(ba):
    cfg = SimConfig(rho=0.5, seed_count=2, rng_seed=9)
    seq = simulate_batch(ba, cfg, 6)
    par = simulate_batch(ba, cfg, 6, jobs=2)
    assert [t.to_csv() for t in seq] == [t.to_csv() for t in par]


def test_max_epochs_truncates(ba):
    t = simulate_cascade(ba, SimConfig(rho=1.0, seed_count=2, rng_seed=1, max_epochs=50))
    assert t.epochs == 50 and not t.extinct


def test_seed_count_exceeds_nodes(star):
    with pytest.raises(ConfigError):
        simulate_cascade(star, SimConfig(seed_count=7))


@pytest.mark.parametrize("kw", [dict(rho=-0.1), dict(rho=1.1), dict(seed_count=0), dict(lam=0.0),
                                dict(rng_seed=-1), dict(max_epochs=0)])
def test_bad_config(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def _trace(C):
    C = np.asarray(C)
    n = np.arange(C.size)
    A = C + n
    return EmbeddedTrace(A, C, np.diff(A), n.astype(float), EXTINCT if C[-1] == 0 else "truncated")


def test_classify_path():
    assert classify_path(_trace([2, 3, 2, 1, 0])).kind == EXTINCT
    assert classify_path(_trace([2, 101, 100])).kind == VIRAL
    assert not is_viral(_trace([2, 100, 99]))
    with pytest.raises(ValueError):
        classify_path(_trace([1, 0]), delta=0)


def test_trace_csv_roundtrip(ba):
    t = simulate_cascade(ba, SimConfig(rho=0.4, seed_count=2, rng_seed=3))
    text = t.to_csv()
    assert text.splitlines()[0] == "n,A,C,Gamma,tau"
    assert text.splitlines()[1].split(",")[3] == ""
    u = EmbeddedTrace.from_csv(text)
    assert np.array_equal(u.A, t.A) and np.array_equal(u.gamma, t.gamma)
    assert np.array_equal(u.tau, t.tau)
    assert u.to_csv() == text
