"""Bhattacharyya distances at the fusion-center input.

Unbounded distances are returned as ``math.inf`` (``np.inf`` in arrays).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .battery import INF, BatteryParams, depletion_curve, depletion_probability
from .errors import InvalidParameterError
from .observation import ObservationModel, TailPair, tail_complements, tail_probabilities

__all__ = [
    "ChannelModel",
    "NOISELESS",
    "SensorDesign",
    "OperatingPoint",
    "channel_output_pmf",
    "bhattacharyya",
    "constrained_bd",
    "unconstrained_bd",
    "bd_upper_bound",
    "kailath_bound",
    "constrained_bd_curve",
]


@dataclass(frozen=True)
class ChannelModel:
    """Binary asymmetric channel: ``eps0`` flips 0->1, ``eps1`` flips 1->0."""

    eps0: float = 0.0
    eps1: float = 0.0

    def __post_init__(self):
        for name in ("eps0", "eps1"):
            v = getattr(self, name)
            if not (0.0 <= v < 0.5):
                raise InvalidParameterError(f"{name} must lie in [0, 0.5), got {v}")

    @property
    def delta(self) -> float:
        return 1.0 - self.eps0 - self.eps1

    @property
    def noiseless(self) -> bool:
        return self.eps0 == 0.0 and self.eps1 == 0.0


NOISELESS = ChannelModel()


def _check_prob(name, v):
    if not np.all((np.asarray(v) >= 0.0) & (np.asarray(v) <= 1.0)):
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {v}")


def _check_prior(pi1):
    if not (0.0 < pi1 < 1.0):
        raise InvalidParameterError(f"prior pi1 must lie in (0, 1), got {pi1}")


@dataclass(frozen=True)
class OperatingPoint:
    """Everything one sensor contributes at a given prior."""

    q0: float
    q1: float
    q: float
    p0: float
    py1_h0: float
    py1_h1: float
    py0_h0: float
    py0_h1: float

    @property
    def bd(self) -> float:
        return _bd_from_law(self.py1_h0, self.py0_h0, self.py1_h1, self.py0_h1)


@dataclass(frozen=True)
class SensorDesign:
    """One sensor: observation model, threshold, battery and channel.

    ``K`` is a positive integer or ``math.inf``. The intended-transmission
    probability ``q`` depends on the prior and is filled in by
    :meth:`operating_point`.
    """

    model: ObservationModel
    tau: float
    K: float | int
    p_e: float
    channel: ChannelModel = NOISELESS

    def __post_init__(self):
        BatteryParams(self.K, self.p_e, 0.0)  # validates K and p_e
        tail_probabilities(self.model, self.tau)  # validates tau

    @cached_property
    def tails(self) -> TailPair:
        return tail_probabilities(self.model, self.tau)

    @cached_property
    def complements(self) -> TailPair:
        return tail_complements(self.model, self.tau)

    def battery(self, pi1: float) -> BatteryParams:
        q0, q1 = self.tails
        return BatteryParams(self.K, self.p_e, (1.0 - pi1) * q0 + pi1 * q1)

    def operating_point(self, pi1: float) -> OperatingPoint:
        _check_prior(pi1)
        q0, q1 = self.tails
        c0, c1 = self.complements
        bat = self.battery(pi1)
        p0 = depletion_probability(bat)
        a1, a0 = _channel_law(q0, c0, p0, self.channel)
        b1, b0 = _channel_law(q1, c1, p0, self.channel)
        return OperatingPoint(q0, q1, bat.q, p0, a1, b1, a0, b0)


def _channel_law(qh, ch_comp, p0, ch: ChannelModel):
    """``(Pr(y=1|h), Pr(y=0|h))``, both computed without cancellation."""
    d = ch.delta
    sent = qh * (1.0 - p0)
    silent = ch_comp + qh * p0  # == 1 - sent
    return ch.eps0 + d * sent, ch.eps1 + d * silent


def channel_output_pmf(q0: float, q1: float, p0: float, ch: ChannelModel) -> tuple[float, float]:
    """``(Pr(y=1|H0), Pr(y=1|H1))`` at the fusion-center input."""
    for name, v in (("q0", q0), ("q1", q1), ("p0", p0)):
        _check_prob(name, v)
    a, _ = _channel_law(q0, 1.0 - q0, p0, ch)
    b, _ = _channel_law(q1, 1.0 - q1, p0, ch)
    return a, b


def _bd_from_law(a1, a0, b1, b0):
    """BD of Bernoulli laws given both cells of each; vectorized.

    Uses ``1 - coef = (sum (sqrt P0 - sqrt P1)^2) / 2`` so small distances
    keep their relative accuracy.
    """
    a1, a0, b1, b0 = (np.asarray(v, dtype=float) for v in (a1, a0, b1, b0))
    hell = 0.5 * ((np.sqrt(a1) - np.sqrt(b1)) ** 2 + (np.sqrt(a0) - np.sqrt(b0)) ** 2)
    coef = np.sqrt(a1 * b1) + np.sqrt(a0 * b0)
    with np.errstate(divide="ignore"):
        out = np.where(hell < 0.5, -np.log1p(-np.minimum(hell, 0.5)), -np.log(coef))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def bhattacharyya(a: float, b: float) -> float:
    """``-ln[sqrt(a b) + sqrt((1-a)(1-b))]`` for Bernoulli parameters ``a``, ``b``."""
    _check_prob("a", a)
    _check_prob("b", b)
    return _bd_from_law(a, 1.0 - a, b, 1.0 - b)


def constrained_bd(design: SensorDesign, pi1: float) -> float:
    """Steady-state BD of an energy-harvesting sensor."""
    return design.operating_point(pi1).bd


def unconstrained_bd(q0: float, q1: float, ch: ChannelModel, c0: float | None = None, c1: float | None = None) -> float:
    """BD when energy is always available (depletion forced to zero).

    ``c0``/``c1`` optionally supply ``1 - q0``/``1 - q1`` computed elsewhere
    with better accuracy.
    """
    _check_prob("q0", q0)
    _check_prob("q1", q1)
    c0 = 1.0 - q0 if c0 is None else c0
    c1 = 1.0 - q1 if c1 is None else c1
    a1, a0 = _channel_law(q0, c0, 0.0, ch)
    b1, b0 = _channel_law(q1, c1, 0.0, ch)
    return _bd_from_law(a1, a0, b1, b0)


def constrained_bd_curve(model: ObservationModel, taus, K, p_e: float, pi1: float, ch: ChannelModel, unconstrained: bool = False):
    """BD over an array of thresholds, plus the ``(q0, q1, p0)`` used.

    Composes :func:`tail_probabilities`, the depletion law and the channel
    law exactly as the scalar :func:`constrained_bd` does.
    """
    _check_prior(pi1)
    taus = np.asarray(taus, dtype=float)
    q0, q1 = tail_probabilities(model, taus)
    c0, c1 = tail_complements(model, taus)
    q0, q1, c0, c1 = (np.asarray(v, dtype=float) for v in (q0, q1, c0, c1))
    if unconstrained:
        p0 = np.zeros_like(q0)
    else:
        p0 = depletion_curve(K, p_e, (1.0 - pi1) * q0 + pi1 * q1)
    a1, a0 = _channel_law(q0, c0, p0, ch)
    b1, b0 = _channel_law(q1, c1, p0, ch)
    return np.asarray(_bd_from_law(a1, a0, b1, b0)), q0, q1, p0


def bd_upper_bound(K, p_e: float, pi1: float, ch: ChannelModel) -> float:
    """Largest BD any single-threshold sensor with these energy features can deliver.

    Attained by a separable sensor (``q0 = 0``, ``q1 = 1``), whose
    intended-transmission probability is exactly ``pi1``.
    """
    _check_prior(pi1)
    p0 = depletion_probability(BatteryParams(K, p_e, pi1))
    e0, e1, d = ch.eps0, ch.eps1, ch.delta
    coef = math.sqrt(e0 * (1.0 - e1 - p0 * d)) + math.sqrt((1.0 - e0) * (e1 + p0 * d))
    if coef <= 0.0:
        return math.inf
    return max(0.0, -math.log(coef))


def kailath_bound(b_total: float, pi1: float) -> float:
    """``sqrt(pi0 pi1) exp(-B)`` clamped to ``[0, min(pi0, pi1)]``."""
    if not b_total >= 0:
        raise InvalidParameterError(f"total BD must be >= 0, got {b_total}")
    _check_prior(pi1)
    if math.isinf(b_total):
        return 0.0
    v = math.sqrt(pi1 * (1.0 - pi1)) * math.exp(-b_total)
    return min(max(v, 0.0), min(pi1, 1.0 - pi1))
