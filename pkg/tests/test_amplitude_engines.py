import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpwm.amplitude_engines import (
    GoodSubspace,
    QaaParams,
    QaeParams,
    QmciParams,
    ae_error_bound,
    ae_estimates,
    make_qmci_params,
    qae_distribution,
    qmci_estimate_distribution,
    qmci_tail,
    qsearch,
    grover_success_prob,
)
from qpwm.errors import PreconditionError


def statevector_grover(n_items, good, j):
    """Oracle: explicit Grover iterations on an n_items-dimensional vector."""
    psi = np.full(n_items, 1 / math.sqrt(n_items))
    s = psi.copy()
    v = psi.copy()
    for _ in range(j):
        v[list(good)] *= -1
        v = 2 * s * (s @ v) - v
    return float(np.sum(v[list(good)] ** 2))


def statevector_qae(a, M):
    """Oracle: phase estimation of the Grover rotation, outcome y -> sin^2(pi y / M)."""
    th = math.asin(math.sqrt(a))
    Q = np.array([[math.cos(2 * th), -math.sin(2 * th)], [math.sin(2 * th), math.cos(2 * th)]])
    psi = np.array([math.cos(th), math.sin(th)])
    branches = [psi]
    for _ in range(M - 1):
        branches.append(Q @ branches[-1])
    branches = np.array(branches)  # x -> Q^x psi
    x = np.arange(M)
    probs = {}
    for y in range(M):
        amp = (np.exp(-2j * np.pi * x * y / M) @ branches) / M
        est = round(math.sin(math.pi * y / M) ** 2, 12)
        probs[est] = probs.get(est, 0.0) + float(np.sum(np.abs(amp) ** 2))
    return probs


def test_grover_closed_forms():
    assert grover_success_prob(0.25, 1) == pytest.approx(1.0)
    assert grover_success_prob(1.0, 0) == 1.0
    assert all(grover_success_prob(0.0, j) == 0 for j in range(10))


@given(st.floats(0, 1))
def test_zero_iterations_is_bare_measurement(a):
    assert grover_success_prob(a, 0) == pytest.approx(a, abs=1e-12)


def test_grover_matches_statevector():
    for n_items, g in [(8, 1), (16, 3), (32, 5)]:
        for j in range(6):
            assert grover_success_prob(g / n_items, j) == pytest.approx(
                statevector_grover(n_items, range(g), j), abs=1e-12)


def test_qsearch_certain_success():
    out = qsearch(1.0, QaaParams(0.1, 0.05), np.random.default_rng(0))
    assert out.success and out.queries == 1 and out.steps == 1


def test_qsearch_zero_amplitude_always_fails():
    # [PAPER] a = 0 certainly ends in failure
    rng = np.random.default_rng(1)
    p = QaaParams(0.01, 0.05)
    assert all(qsearch(0.0, p, rng).status == "failure" for _ in range(1000))


def test_qsearch_success_rate():
    rng = np.random.default_rng(2)
    p = QaaParams(0.1, 0.05)
    wins = sum(qsearch(0.25, p, rng).success for _ in range(1000))
    assert wins >= 950


def test_qsearch_success_samples_good_label():
    sub = GoodSubspace(0.5, lambda g: ("k", int(g.integers(0, 3))))
    out = qsearch(sub, QaaParams(0.1, 0.05), np.random.default_rng(3))
    assert out.success and out.label[0] == "k"


def test_qsearch_forwards_query_counts():
    seen = []
    out = qsearch(0.0, QaaParams(0.05, 0.1), np.random.default_rng(4), seen.append)
    assert sum(seen) == out.queries and len(seen) == out.steps


def test_qsearch_query_law():
    # median queries at a and a/4 differ by about 2 (the 1/sqrt(a) law)
    rng = np.random.default_rng(5)
    p = QaaParams(1e-4, 0.05)
    q1 = np.median([qsearch(0.04, p, rng).queries for _ in range(3000)])
    q4 = np.median([qsearch(0.01, p, rng).queries for _ in range(3000)])
    assert 1.5 <= q4 / q1 <= 2.5


def test_qaa_params_validation():
    with pytest.raises(PreconditionError):
        QaaParams(0, 0.5)
    with pytest.raises(PreconditionError):
        QaaParams(0.5, 1)
    assert QaaParams(0.01, 0.05).range_cap == 10
    assert QaaParams(0.01, 0.05).schedules == 6


def test_qae_point_masses():
    d0, d1 = qae_distribution(0.0, 8), qae_distribution(1.0, 8)
    assert d0.mass[0] == pytest.approx(1.0) and d0.support[0] == 0
    assert d1.mass[-1] == pytest.approx(1.0) and d1.support[-1] == pytest.approx(1.0)


def test_qae_requires_power_of_two():
    with pytest.raises(PreconditionError):
        qae_distribution(0.3, 12)


@pytest.mark.parametrize("a", [0.0, 0.05, 0.3, 0.5, 0.77, 1.0])
@pytest.mark.parametrize("M", [2, 8, 16])
def test_qae_matches_statevector(a, M):
    d = qae_distribution(a, M)
    oracle = statevector_qae(a, M)
    assert len(oracle) == d.support.size
    for est, p in zip(d.support, d.mass):
        assert p == pytest.approx(oracle[round(float(est), 12)], abs=1e-12)


def test_qae_bound_mass_example():
    d = qae_distribution(0.3, 16)
    assert d.mass_within(0.3, ae_error_bound(0.3, 16)) >= 8 / math.pi**2


def test_qae_bound_mass_grid():
    for M in [8, 16, 32, 64, 128, 256, 512, 1024]:
        for a in np.linspace(0, 1, 20):
            d = qae_distribution(a, M)
            assert d.total == pytest.approx(1.0, abs=1e-9)
            assert set(np.round(d.support, 12)) <= set(np.round(ae_estimates(M), 12))
            assert d.mass_within(a, ae_error_bound(a, M)) >= 8 / math.pi**2


def test_qmci_parameter_formulas():
    assert make_qmci_params(0.1, 0.01).J == 85
    assert make_qmci_params(0.1, 0.5).J == 13
    p = make_qmci_params(0.0625, 0.1)
    assert (p.t, p.M) == (316, 512)
    assert p.oracle_calls == p.J * (2 * p.M - 1)


def test_median_law_point_masses():
    p = make_qmci_params(0.1, 0.05)
    d0, d1 = qmci_estimate_distribution(0.0, p), qmci_estimate_distribution(1.0, p)
    assert d0.mass[0] == pytest.approx(1.0)
    assert d1.mass[-1] == pytest.approx(1.0)


def test_median_law_example():
    d = qmci_estimate_distribution(0.5, make_qmci_params(0.1, 0.05))
    assert d.mass_within(0.5, 0.1) >= 0.95


def test_median_law_grid():
    for eps in (0.05, 0.1):
        for delta in (0.2, 0.05, 0.01):
            p = make_qmci_params(eps, delta)
            for mu in np.linspace(0, 1, 11):
                d = qmci_estimate_distribution(mu, p)
                assert d.total == pytest.approx(1.0, abs=1e-9)
                assert d.mass_within(mu, eps) >= 1 - delta


def test_median_law_matches_enumeration_for_three_runs():
    """Oracle: enumerate all outcome triples of a small run law and take medians."""
    per = qae_distribution(0.4, 8)
    params = QmciParams(0.1, 0.5, 3, QaeParams(8, 8))
    law = np.zeros(per.support.size)
    for idx in itertools.product(range(per.support.size), repeat=3):
        law[sorted(idx)[1]] += np.prod(per.mass[list(idx)])
    assert np.allclose(qmci_estimate_distribution(0.4, params).mass, law, atol=1e-14)


def test_qmci_tail_trivial_cases():
    p = make_qmci_params(0.1, 0.5)
    assert qmci_tail(1.0, 0.5, p) == pytest.approx(1.0)
    assert qmci_tail(0.0, 0.01, p) == pytest.approx(0.0, abs=1e-15)


def test_qmci_tail_matches_median_law():
    p = make_qmci_params(0.1, 0.5)
    assert p.J == 13
    d = qmci_estimate_distribution(0.5, p)
    assert qmci_tail(0.5, 0.5, p) == pytest.approx(d.tail(0.5), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_qmci_tail_vectorised_equals_scalar(mu, thr):
    p = make_qmci_params(0.2, 0.2)
    vec = qmci_tail(np.array([mu, mu]), thr, p)
    assert vec[0] == pytest.approx(qmci_tail(mu, thr, p), abs=1e-15)
