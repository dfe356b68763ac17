"""Exact fusion-center analysis by enumerating all outcome vectors.

Outcome vectors ``y in {0,1}^N`` are encoded as integers with
``y_n = (code >> n) & 1``; sensor 0 is the least significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError, NetworkSizeError
from .metrics import OperatingPoint, SensorDesign

__all__ = [
    "MAX_ENUM_SENSORS",
    "NetworkScenario",
    "joint_pmf",
    "joint_pmf_map",
    "map_decisions",
    "map_error_probability",
    "total_bd",
    "joint_bd",
]

MAX_ENUM_SENSORS = 24


@dataclass(frozen=True)
class NetworkScenario:
    pi1: float
    sensors: tuple

    def __post_init__(self):
        if not (0.0 < self.pi1 < 1.0):
            raise InvalidParameterError(f"prior pi1 must lie in (0, 1), got {self.pi1}")
        sensors = tuple(self.sensors)
        if not sensors:
            raise InvalidParameterError("a network needs at least one sensor")
        for s in sensors:
            if not isinstance(s, SensorDesign):
                raise InvalidParameterError(f"expected SensorDesign, got {type(s).__name__}")
        object.__setattr__(self, "sensors", sensors)

    @property
    def n(self) -> int:
        return len(self.sensors)

    @cached_property
    def operating_points(self) -> tuple[OperatingPoint, ...]:
        return tuple(s.operating_point(self.pi1) for s in self.sensors)


def _require_enumerable(scenario: NetworkScenario):
    if scenario.n > MAX_ENUM_SENSORS:
        raise NetworkSizeError(f"exact enumeration supports at most {MAX_ENUM_SENSORS} sensors, got {scenario.n}")


def joint_pmf(scenario: NetworkScenario, h: int) -> np.ndarray:
    """``Pr(y | h)`` for every outcome code ``0 .. 2^N - 1``."""
    _require_enumerable(scenario)
    if h not in (0, 1):
        raise InvalidParameterError(f"hypothesis must be 0 or 1, got {h}")
    pmf = np.ones(1)
    for op in scenario.operating_points:
        p1, p0 = (op.py1_h0, op.py0_h0) if h == 0 else (op.py1_h1, op.py0_h1)
        pmf = np.concatenate([pmf * p0, pmf * p1])
    return pmf


def joint_pmf_map(scenario: NetworkScenario, h: int) -> dict[tuple[int, ...], float]:
    """:func:`joint_pmf` keyed by outcome tuples ``(y_1, ..., y_N)``."""
    pmf = joint_pmf(scenario, h)
    n = scenario.n
    return {tuple((code >> i) & 1 for i in range(n)): float(p) for code, p in enumerate(pmf)}


def map_decisions(scenario: NetworkScenario) -> np.ndarray:
    """MAP decision per outcome code; exact ties decide 0."""
    w0 = (1.0 - scenario.pi1) * joint_pmf(scenario, 0)
    w1 = scenario.pi1 * joint_pmf(scenario, 1)
    return (w1 > w0).astype(np.int8)


def map_error_probability(scenario: NetworkScenario) -> float:
    """Bayes error of the MAP fusion rule, ``1 - sum_y max_j pi_j Pr(y|j)``."""
    w0 = (1.0 - scenario.pi1) * joint_pmf(scenario, 0)
    w1 = scenario.pi1 * joint_pmf(scenario, 1)
    # sum of the minima equals 1 - sum of the maxima and avoids the cancellation;
    # deciding by the prior alone already achieves min(pi0, pi1)
    pe = float(np.sum(np.minimum(w0, w1)))
    return min(pe, min(scenario.pi1, 1.0 - scenario.pi1))


def total_bd(scenario: NetworkScenario) -> float:
    """Sum of per-sensor distances (valid for conditionally independent sensors)."""
    return float(sum(op.bd for op in scenario.operating_points))


def joint_bd(scenario: NetworkScenario) -> float:
    """``-ln sum_y sqrt(Pr(y|0) Pr(y|1))`` by direct enumeration."""
    coef = float(np.sum(np.sqrt(joint_pmf(scenario, 0) * joint_pmf(scenario, 1))))
    return math.inf if coef <= 0.0 else -math.log(coef)
