import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehsense.battery import INF, BatteryParams, depletion_probability
from ehsense.errors import InvalidParameterError
from ehsense.metrics import (
    NOISELESS,
    ChannelModel,
    SensorDesign,
    bd_upper_bound,
    bhattacharyya,
    channel_output_pmf,
    constrained_bd,
    constrained_bd_curve,
    kailath_bound,
    unconstrained_bd,
)
from ehsense.observation import RayleighRician, TableModel, tail_probabilities

NOISY = ChannelModel(0.1, 0.2)
probs = st.floats(0.0, 1.0)
eps = st.floats(0.0, 0.49)


def enumerate_channel(q_h, p0, ch):
    # sensor output u then channel flip, summed cell by cell
    pu = {1: q_h * (1 - p0), 0: 1 - q_h * (1 - p0)}
    flip = {0: ch.eps0, 1: ch.eps1}
    py1 = 0.0
    for u, pr in pu.items():
        py1 += pr * (1 - flip[u] if u == 1 else flip[u])
    return py1


def bd_term_by_term(a, b):
    return -math.log(sum(math.sqrt(p * r) for p, r in ((a, b), (1 - a, 1 - b))))


def monolithic_bd(q0, q1, K, p_e, pi1, ch):
    # single closed expression with the depletion law folded in
    q = (1 - pi1) * q0 + pi1 * q1
    om = p_e * (1 - q) / (q * (1 - p_e))
    x = p_e * (om**K - 1) / (p_e * om**K - q)
    d = 1 - ch.eps0 - ch.eps1
    return -math.log(
        math.sqrt((ch.eps0 + d * q0 * x) * (ch.eps0 + d * q1 * x))
        + math.sqrt((1 - ch.eps0 - d * q0 * x) * (1 - ch.eps0 - d * q1 * x))
    )


def test_channel_validation():
    with pytest.raises(InvalidParameterError):
        ChannelModel(0.5, 0.0)
    with pytest.raises(InvalidParameterError):
        ChannelModel(0.0, -0.1)
    assert NOISY.delta == pytest.approx(0.7)
    assert NOISELESS.noiseless


def test_channel_output_examples():
    assert channel_output_pmf(0.0, 1.0, 0.0, NOISELESS) == (0.0, 1.0)
    assert channel_output_pmf(0.3, 0.8, 1.0, NOISY) == pytest.approx((0.1, 0.1), abs=1e-15)
    a, b = channel_output_pmf(0.05, 0.9, 0.3, NOISY)
    assert a == pytest.approx(0.1245, abs=1e-15)
    assert b == pytest.approx(0.541, abs=1e-15)
    assert a == pytest.approx(enumerate_channel(0.05, 0.3, NOISY), abs=1e-15)
    assert b == pytest.approx(enumerate_channel(0.9, 0.3, NOISY), abs=1e-15)


@given(q=probs, p0=probs, e0=eps, e1=eps)
def test_channel_output_matches_enumeration(q, p0, e0, e1):
    ch = ChannelModel(e0, e1)
    a, _ = channel_output_pmf(q, q, p0, ch)
    assert a == pytest.approx(enumerate_channel(q, p0, ch), abs=1e-14)


def test_bhattacharyya_examples():
    assert bhattacharyya(0.3, 0.3) == 0.0
    assert bhattacharyya(0.0, 1.0) == math.inf
    assert bhattacharyya(1.0, 0.0) == math.inf
    assert bhattacharyya(0.1245, 0.541) == pytest.approx(bd_term_by_term(0.1245, 0.541), rel=1e-14)


@given(a=st.floats(0.001, 0.999), b=st.floats(0.001, 0.999))
def test_bhattacharyya_term_by_term(a, b):
    ref = bd_term_by_term(a, b)
    assert bhattacharyya(a, b) == pytest.approx(ref, rel=1e-12, abs=1e-15)
    assert bhattacharyya(a, b) == bhattacharyya(b, a)


def test_bhattacharyya_small_distance_relative_accuracy():
    a, b = 0.3, 0.3 + 1e-9
    # second-order expansion: (b - a)^2 / (8 a (1 - a))
    ref = (b - a) ** 2 / (8 * a * (1 - a))
    assert bhattacharyya(a, b) == pytest.approx(ref, rel=1e-6)


def test_constrained_bd_trivial_cases():
    table = TableModel((0.0, 1.0), (0.4, 0.2), (0.4, 0.2))
    assert constrained_bd(SensorDesign(table, 1.0, 2, 0.3, NOISY), 0.2) == 0.0
    model = RayleighRician(5.0)
    assert constrained_bd(SensorDesign(model, 3.0, 2, 0.0, NOISY), 0.2) == 0.0


@pytest.mark.parametrize("tau", [1.0, 2.5, 3.0, 4.2, 6.0])
@pytest.mark.parametrize("ch", [NOISELESS, NOISY])
@pytest.mark.parametrize("K", [1, 2, 5])
def test_constrained_bd_two_paths(tau, ch, K):
    model = RayleighRician(5.0)
    design = SensorDesign(model, tau, K, 0.15, ch)
    q0, q1 = tail_probabilities(model, tau)
    assert constrained_bd(design, 0.2) == pytest.approx(monolithic_bd(q0, q1, K, 0.15, 0.2, ch), rel=1e-12)


def test_unconstrained_examples():
    assert unconstrained_bd(0.4, 0.4, NOISY) == 0.0
    assert unconstrained_bd(0.0, 1.0, NOISELESS) == math.inf
    a, b = channel_output_pmf(0.05, 0.9, 0.0, NOISY)
    assert unconstrained_bd(0.05, 0.9, NOISY) == pytest.approx(bhattacharyya(a, b), rel=1e-14)


@given(tau=st.floats(0.0, 10.0), e0=eps, e1=eps, K=st.sampled_from([1, 3, 50, INF]))
@settings(max_examples=60, deadline=None)
def test_full_energy_equals_unconstrained(tau, e0, e1, K):
    ch = ChannelModel(e0, e1)
    model = RayleighRician(4.0)
    design = SensorDesign(model, tau, K, 1.0, ch)
    q0, q1 = design.tails
    c0, c1 = design.complements
    assert constrained_bd(design, 0.3) == unconstrained_bd(q0, q1, ch, c0, c1)


def test_upper_bound_examples():
    assert bd_upper_bound(INF, 0.2, 0.2, NOISELESS) == math.inf
    assert bd_upper_bound(INF, 0.1, 0.2, NOISELESS) == pytest.approx(0.5 * math.log(2), rel=1e-14)
    b = bd_upper_bound(1, 0.15, 0.2, NOISY)
    assert 0 < b < math.inf


@pytest.mark.parametrize("K", [1, 2, 5, 10, INF])
@pytest.mark.parametrize("ch", [NOISELESS, NOISY])
def test_theorem_dominance_dense_grid(K, ch):
    taus = np.linspace(0.0, 14.0, 10_000)
    bound = bd_upper_bound(K, 0.15, 0.2, ch)
    for s in (1.0, 5.0, 10.0):
        bd = constrained_bd_curve(RayleighRician(s), taus, K, 0.15, 0.2, ch)[0]
        assert np.all(bd <= bound + 1e-12)


@pytest.mark.parametrize("ch", [NOISELESS, NOISY])
def test_bound_monotonicity(ch):
    Ks = list(range(1, 200)) + [INF]
    for p_e in (0.05, 0.15, 0.2, 0.5):
        vals = [bd_upper_bound(K, p_e, 0.2, ch) for K in Ks]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    pes = np.linspace(0.0, 1.0, 401)
    for K in (1, 2, 10, INF):
        vals = [bd_upper_bound(K, p, 0.2, ch) for p in pes]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    pis = np.linspace(0.01, 0.99, 393)
    for K in (1, 2, 10, INF):
        vals = [bd_upper_bound(K, 0.15, p, ch) for p in pis]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


dyadic = st.integers(0, 2**20).map(lambda k: k / 2**20)


@given(s0=dyadic, s1=dyadic, e0=eps, e1=eps)
def test_output_relabeling_symmetry(s0, s1, e0, e1):
    # relabel y -> 1 - y: eps0 <-> eps1 and the sent probability q_h (1 - p0)
    # becomes its complement; dyadic values keep 1 - s exact
    a, b = channel_output_pmf(s0, s1, 0.0, ChannelModel(e0, e1))
    a2, b2 = channel_output_pmf(1 - s0, 1 - s1, 0.0, ChannelModel(e1, e0))
    assert a2 == pytest.approx(1 - a, abs=1e-14)
    assert b2 == pytest.approx(1 - b, abs=1e-14)
    assert bhattacharyya(a, b) == pytest.approx(bhattacharyya(a2, b2), rel=1e-9, abs=1e-12)


def test_kailath_examples():
    assert kailath_bound(0.0, 0.5) == 0.5
    assert kailath_bound(math.inf, 0.3) == 0.0
    assert kailath_bound(2.0, 0.2) == pytest.approx(0.4 * math.exp(-2), rel=1e-15)
    assert kailath_bound(0.0, 0.2) == 0.2  # clamped to min(pi0, pi1)
    with pytest.raises(InvalidParameterError):
        kailath_bound(-1.0, 0.2)


def test_design_operating_point_consistency():
    model = RayleighRician(5.0)
    design = SensorDesign(model, 3.0, 2, 0.15, NOISY)
    op = design.operating_point(0.2)
    q0, q1 = tail_probabilities(model, 3.0)
    assert (op.q0, op.q1) == (q0, q1)
    assert op.q == pytest.approx(0.8 * q0 + 0.2 * q1, rel=1e-15)
    assert op.p0 == pytest.approx(depletion_probability(BatteryParams(2, 0.15, op.q)), rel=1e-12)
    assert op.py1_h0 + op.py0_h0 == pytest.approx(1.0, abs=1e-15)
    assert op.py1_h1 + op.py0_h1 == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidParameterError):
        design.operating_point(1.5)


def test_curve_matches_scalar():
    model = RayleighRician(5.0)
    taus = np.linspace(0, 12, 97)
    curve = constrained_bd_curve(model, taus, 2, 0.15, 0.2, NOISY)[0]
    ref = [constrained_bd(SensorDesign(model, t, 2, 0.15, NOISY), 0.2) for t in taus]
    np.testing.assert_allclose(curve, ref, rtol=1e-13, atol=1e-16)
