import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehsense.battery import (
    INF,
    BatteryParams,
    DegenerateChainWarning,
    build_chain,
    closed_form_state_probabilities,
    depletion_curve,
    depletion_probability,
    depletion_probability_ratio_form,
    depletion_probability_sum_form,
    steady_state,
)
from ehsense.errors import InvalidParameterError
from ehsense.observation import RayleighRician, tail_probabilities


def power_iteration(P, tol=1e-15, max_iter=2_000_000):
    p = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = P.T @ p
        if np.max(np.abs(nxt - p)) < tol:
            return nxt
        p = nxt
    raise AssertionError("power iteration did not converge")


def test_single_slot_transition_matrix():
    chain = build_chain(BatteryParams(1, 0.5, 0.5))
    np.testing.assert_array_equal(chain.P, [[0.5, 0.5], [0.25, 0.75]])
    np.testing.assert_allclose(steady_state(chain), [1 / 3, 2 / 3], atol=1e-15)


def test_general_transition_entries():
    p_e, q = 0.3, 0.4
    P = build_chain(BatteryParams(4, p_e, q)).P
    assert P[0, 0] == 1 - p_e and P[0, 1] == p_e
    for k in range(1, 4):
        assert P[k, k + 1] == pytest.approx((1 - q) * p_e)
        assert P[k, k - 1] == pytest.approx(q * (1 - p_e))
        assert P[k, k] == pytest.approx(q * p_e + (1 - q) * (1 - p_e))
    assert P[4, 3] == pytest.approx(q * (1 - p_e))
    assert P[4, 4] == pytest.approx(1 - q * (1 - p_e))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
    # tridiagonal
    assert np.all(np.triu(P, 2) == 0) and np.all(np.tril(P, -2) == 0)


def test_no_arrivals_absorbs_at_empty():
    with pytest.warns(DegenerateChainWarning):
        chain = build_chain(BatteryParams(2, 0.0, 0.6))
    np.testing.assert_array_equal(steady_state(chain), [1.0, 0.0, 0.0])


@pytest.mark.parametrize("K", [1, 3, 6])
def test_certain_arrivals_never_deplete(K):
    with pytest.warns(DegenerateChainWarning):
        chain = build_chain(BatteryParams(K, 1.0, 0.7))
    assert steady_state(chain)[0] == 0.0
    assert depletion_probability(BatteryParams(K, 1.0, 0.7)) == 0.0


def test_steady_state_matches_power_iteration():
    chain = build_chain(BatteryParams(3, 0.3, 0.4))
    pi = steady_state(chain)
    np.testing.assert_allclose(pi, power_iteration(chain.P), atol=1e-12)
    np.testing.assert_allclose(chain.P.T @ pi, pi, atol=1e-10)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_reference_operating_point_closed_form_vs_solve():
    q0, q1 = tail_probabilities(RayleighRician(5.0), 3.0)
    q = 0.8 * q0 + 0.2 * q1
    params = BatteryParams(2, 0.15, q)
    np.testing.assert_allclose(steady_state(build_chain(params)), closed_form_state_probabilities(params), atol=1e-12)


def test_equal_rates_limit():
    params = BatteryParams(2, 0.5, 0.5)
    assert depletion_probability(params) == pytest.approx(0.2, abs=1e-15)
    assert steady_state(build_chain(params))[0] == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("K", [1, 5, 1000, INF])
def test_no_arrivals_means_always_empty(K):
    assert depletion_probability(BatteryParams(K, 0.0, 0.3)) == 1.0


def test_infinite_capacity():
    assert depletion_probability(BatteryParams(INF, 0.15, 0.15)) == 0.0
    assert depletion_probability(BatteryParams(INF, 0.15, 0.1)) == 0.0
    assert depletion_probability(BatteryParams(INF, 0.1, 0.2)) == pytest.approx(0.5)


def test_degenerate_rules():
    assert depletion_probability(BatteryParams(3, 0.4, 0.0)) == 0.0
    assert depletion_probability(BatteryParams(3, 0.0, 0.0)) == 1.0
    assert depletion_probability(BatteryParams(3, 1.0, 1.0)) == 0.0


def test_always_transmitting_sensor():
    # q = 1: the closed form is finite and matches the chain
    params = BatteryParams(4, 0.3, 1.0)
    p0 = depletion_probability(params)
    assert p0 == pytest.approx(0.7)
    np.testing.assert_allclose(steady_state(build_chain(params)), closed_form_state_probabilities(params), atol=1e-12)


def test_infinite_capacity_has_no_chain():
    with pytest.raises(InvalidParameterError):
        build_chain(BatteryParams(INF, 0.2, 0.3))


@pytest.mark.parametrize("bad", [dict(K=0, p_e=0.1, q=0.1), dict(K=1.5, p_e=0.1, q=0.1), dict(K=2, p_e=1.1, q=0.1), dict(K=2, p_e=0.1, q=-0.1)])
def test_invalid_params(bad):
    with pytest.raises(InvalidParameterError):
        BatteryParams(**bad)


def test_closed_form_matches_solve_up_to_k100():
    grid = np.linspace(0.05, 0.95, 7)
    for K in (1, 2, 3, 10, 37, 100):
        for p_e in grid:
            for q in grid:
                params = BatteryParams(K, p_e, q)
                pi = steady_state(build_chain(params))
                assert abs(depletion_probability(params) - pi[0]) < 1e-10
                np.testing.assert_allclose(closed_form_state_probabilities(params), pi, atol=1e-10)


def test_large_capacity_sparse_solve():
    params = BatteryParams(100_000, 0.3, 0.31)
    pi = steady_state(build_chain(params))
    assert abs(pi[0] - depletion_probability(params)) < 1e-10
    assert pi.sum() == pytest.approx(1.0)


@settings(max_examples=300, deadline=None)
@given(K=st.integers(1, 60), p_e=st.floats(0.01, 0.99), q=st.floats(0.01, 0.99))
def test_lemma_forms_agree(K, p_e, q):
    params = BatteryParams(K, p_e, q)
    a = depletion_probability_sum_form(params)
    assert depletion_probability(params) == pytest.approx(a, rel=1e-12, abs=1e-14)
    if abs(p_e - q) > 1e-6:
        b = depletion_probability_ratio_form(params)
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_lemma_forms_agree_tightly_away_from_cancellation():
    for K in (1, 2, 5, 20):
        for p_e, q in ((0.1, 0.5), (0.6, 0.2), (0.15, 0.3), (0.9, 0.05)):
            params = BatteryParams(K, p_e, q)
            assert abs(depletion_probability_sum_form(params) - depletion_probability_ratio_form(params)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(K=st.integers(1, 200), p_e=st.floats(0.0, 1.0), q=st.floats(0.0, 1.0), dk=st.integers(1, 50), d=st.floats(0, 0.5))
def test_depletion_monotonicity(K, p_e, q, dk, d):
    base = depletion_probability(BatteryParams(K, p_e, q))
    assert depletion_probability(BatteryParams(K + dk, p_e, q)) <= base + 1e-12
    assert depletion_probability(BatteryParams(K, min(1.0, p_e + d), q)) <= base + 1e-12
    assert depletion_probability(BatteryParams(K, p_e, min(1.0, q + d))) >= base - 1e-12


def test_large_capacity_converges_to_infinite_limit():
    for p_e, q in ((0.1, 0.2), (0.15, 0.3), (0.3, 0.31)):
        assert depletion_probability(BatteryParams(10**4, p_e, q)) == pytest.approx(1 - p_e / q, abs=1e-6)
    for p_e, q in ((0.3, 0.2), (0.8, 0.5)):
        assert depletion_probability(BatteryParams(10**4, p_e, q)) < 1e-6


def test_vectorized_curve_matches_scalar():
    qs = np.concatenate([np.linspace(0, 1, 41), [0.15, 0.15 + 1e-12]])
    for K in (1, 3, 500, INF):
        for p_e in (0.0, 0.15, 0.6, 1.0):
            curve = depletion_curve(K, p_e, qs)
            ref = [depletion_probability(BatteryParams(K, p_e, q)) for q in qs]
            np.testing.assert_allclose(curve, ref, atol=1e-15, rtol=1e-13)
