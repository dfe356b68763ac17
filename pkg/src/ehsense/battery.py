"""Battery charge as a (K+1)-state Markov chain.

One packet may be harvested (probability ``p_e``) and one spent per
interval. A packet is spent only when the sensor intends to transmit
(probability ``q``) and the battery is non-empty; a packet arriving at a
full battery is lost.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidParameterError

__all__ = [
    "INF",
    "BatteryParams",
    "BatteryChain",
    "DegenerateChainWarning",
    "build_chain",
    "steady_state",
    "depletion_probability",
    "depletion_probability_sum_form",
    "depletion_probability_ratio_form",
    "closed_form_state_probabilities",
    "depletion_curve",
    "omega",
]

INF = math.inf


class DegenerateChainWarning(RuntimeWarning):
    """The chain is reducible; a limiting distribution was returned instead."""


def _is_inf(K) -> bool:
    return isinstance(K, float) and math.isinf(K)


@dataclass(frozen=True)
class BatteryParams:
    K: float | int
    p_e: float
    q: float

    def __post_init__(self):
        if _is_inf(self.K):
            if self.K < 0:
                raise InvalidParameterError("capacity cannot be -inf")
        else:
            if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
                raise InvalidParameterError(f"capacity K must be a positive integer or inf, got {self.K!r}")
            object.__setattr__(self, "K", int(self.K))
        for name in ("p_e", "q"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {v}")

    @property
    def finite(self) -> bool:
        return not _is_inf(self.K)


def omega(p_e: float, q: float) -> float:
    """Geometric ratio ``p_e (1-q) / (q (1-p_e))`` of the steady-state law."""
    return p_e * (1.0 - q) / (q * (1.0 - p_e))


@dataclass(frozen=True)
class BatteryChain:
    """Tridiagonal transition law; ``P`` materializes the dense matrix."""

    params: BatteryParams
    lower: np.ndarray  # lower[k] = P[k+1, k]
    diag: np.ndarray
    upper: np.ndarray  # upper[k] = P[k, k+1]
    steady: np.ndarray

    @property
    def P(self) -> np.ndarray:
        n = self.diag.size
        m = np.diag(self.diag)
        idx = np.arange(n - 1)
        m[idx + 1, idx] = self.lower
        m[idx, idx + 1] = self.upper
        return m

    @property
    def size(self) -> int:
        return self.diag.size


def _bands(params: BatteryParams):
    K, p_e, q = params.K, params.p_e, params.q
    down = q * (1.0 - p_e)
    up = (1.0 - q) * p_e
    lower = np.full(K, down)
    upper = np.full(K, up)
    upper[0] = p_e
    diag = np.full(K + 1, q * p_e + (1.0 - q) * (1.0 - p_e))
    diag[0] = 1.0 - p_e
    diag[K] = 1.0 - down
    return lower, diag, upper


def build_chain(params: BatteryParams) -> BatteryChain:
    if not params.finite:
        raise InvalidParameterError("transition matrix needs a finite capacity; use depletion_probability for K=inf")
    lower, diag, upper = _bands(params)
    pi = _solve_stationary(params, lower, diag, upper)
    return BatteryChain(params, lower, diag, upper, pi)


def steady_state(chain: BatteryChain) -> np.ndarray:
    return chain.steady


def _degenerate_limit(params: BatteryParams):
    K, p_e, q = params.K, params.p_e, params.q
    e = np.zeros(K + 1)
    if p_e == 0.0:
        e[0] = 1.0
    elif p_e == 1.0 and q == 1.0:
        # harvest and spend every interval: from empty the charge sticks at 1
        e[1] = 1.0
    elif p_e == 1.0 or q == 0.0:
        e[K] = 1.0
    else:
        return None
    return e


def _solve_stationary(params, lower, diag, upper):
    limit = _degenerate_limit(params)
    if limit is not None:
        warnings.warn(
            f"battery chain is reducible for p_e={params.p_e}, q={params.q}; returning its absorbing limit",
            DegenerateChainWarning,
            stacklevel=3,
        )
        return limit
    n = diag.size
    if n <= _DENSE_MAX:
        # balance equations (P^T - I) p = 0; the last one is redundant and is
        # replaced by sum(p) = 1
        A = np.diag(diag - 1.0) + np.diag(upper, -1) + np.diag(lower, 1)
        A[n - 1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        pi = np.linalg.solve(A, rhs)
    else:
        pi = _solve_banded_anchor(params, lower, diag, upper)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


_DENSE_MAX = 2048


def _solve_banded_anchor(params, lower, diag, upper):
    """O(K) banded LU (partial pivoting) with one balance equation swapped
    for an anchor ``p_j = 1`` at the end of the chain where mass piles up,
    so the unnormalized solution stays bounded; normalized by the caller."""
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = lower  # superdiagonal of P^T - I
    ab[1, :] = diag - 1.0
    ab[2, :-1] = upper  # subdiagonal
    rhs = np.zeros(n)
    drift_up = params.p_e * (1.0 - params.q) >= params.q * (1.0 - params.p_e)
    j = n - 1 if drift_up else 0
    # row j of the banded matrix: a[j, j+1] -> ab[0, j+1], a[j, j-1] -> ab[2, j-1]
    if j + 1 < n:
        ab[0, j + 1] = 0.0
    if j > 0:
        ab[2, j - 1] = 0.0
    ab[1, j] = 1.0
    rhs[j] = 1.0
    return linalg.solve_banded((1, 1), ab, rhs)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _degenerate_p0(p_e: float, q: float):
    if p_e == 0.0:
        return 1.0
    if p_e == 1.0 or q == 0.0:
        return 0.0
    return None


def _log_geometric(K: int, p_e: float, q: float) -> float:
    """log of sum_{j=0}^{K-1} Omega^j, stable for Omega near 0, 1, inf and large K."""
    if p_e == q:
        return math.log(K)
    if K == 1 or q == 1.0:  # Omega = 0 at q = 1
        return 0.0
    log_den = math.log(q) + math.log1p(-p_e)
    om_minus_1 = (p_e - q) / math.exp(log_den) if log_den > -700 else math.inf
    if abs(om_minus_1) < 0.5:
        log_om = math.log1p(om_minus_1)
    else:
        log_om = math.log(p_e) + math.log1p(-q) - log_den
    if log_om == -math.inf:
        return 0.0
    log_abs_om_minus_1 = math.log(abs(p_e - q)) - log_den
    if p_e < q:
        return math.log(-math.expm1(K * log_om)) - log_abs_om_minus_1
    return K * log_om + math.log(-math.expm1(-K * log_om)) - log_abs_om_minus_1


def depletion_probability(params: BatteryParams) -> float:
    """Steady-state probability of an empty battery.

    Finite ``K`` uses ``p0 = 1 / (1 + r * sum_{j<K} Omega^j)`` with
    ``r = p_e / (q (1 - p_e))``, algebraically the same as
    ``[1 + (1-q)^-1 sum_{k=1..K} Omega^k]^-1`` but finite at ``q = 1`` and
    free of overflow for large ``K``. ``K = inf`` gives ``max(0, 1 - p_e/q)``.
    """
    p_e, q = params.p_e, params.q
    d = _degenerate_p0(p_e, q)
    if d is not None:
        return d
    if not params.finite:
        return 0.0 if p_e >= q else 1.0 - p_e / q
    return math.exp(_log_p0(params.K, p_e, q))


def _log_p0(K: int, p_e: float, q: float) -> float:
    log_r = math.log(p_e) - math.log(q) - math.log1p(-p_e)
    return -float(np.logaddexp(0.0, log_r + _log_geometric(K, p_e, q)))


def depletion_probability_sum_form(params: BatteryParams) -> float:
    """Literal ``[1 + (1-q)^-1 * sum_{k=1}^K Omega^k]^-1`` (needs ``q < 1``)."""
    om = omega(params.p_e, params.q)
    total = sum(om ** k for k in range(1, params.K + 1))
    return 1.0 / (1.0 + total / (1.0 - params.q))


def depletion_probability_ratio_form(params: BatteryParams) -> float:
    """Literal ``(p_e - q) / (p_e Omega^K - q)`` (undefined at ``p_e = q``)."""
    om = omega(params.p_e, params.q)
    return (params.p_e - params.q) / (params.p_e * om ** params.K - params.q)


def closed_form_state_probabilities(params: BatteryParams) -> np.ndarray:
    """Whole steady-state vector from ``p_k = Omega^k / (1-q) * p_0``, k >= 1."""
    if not params.finite:
        raise InvalidParameterError("state vector needs a finite capacity")
    K, p_e, q = params.K, params.p_e, params.q
    limit = _degenerate_limit(params)
    if limit is not None:
        return limit
    log_p0 = _log_p0(K, p_e, q)
    out = np.zeros(K + 1)
    out[0] = math.exp(log_p0)
    # Omega^k / (1-q) = r * Omega^(k-1), finite at q = 1
    log_r = math.log(p_e) - math.log(q) - math.log1p(-p_e)
    om = omega(p_e, q)
    if om == 0.0:
        out[1] = math.exp(log_p0 + log_r)
    else:
        k = np.arange(1, K + 1)
        out[1:] = np.exp(log_p0 + log_r + (k - 1) * math.log(om))
    return out


def depletion_curve(K, p_e: float, q) -> np.ndarray:
    """Vectorized :func:`depletion_probability` over an array of ``q``."""
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape)
    flat = q.ravel()
    res = out.ravel()
    if np.any((flat < 0) | (flat > 1)) or not (0.0 <= p_e <= 1.0):
        raise InvalidParameterError("probabilities must lie in [0, 1]")
    if p_e == 0.0:
        res[:] = 1.0
        return out
    if p_e == 1.0:
        res[:] = 0.0
        return out
    if _is_inf(K):
        with np.errstate(divide="ignore", invalid="ignore"):
            res[:] = np.where(flat <= p_e, 0.0, 1.0 - p_e / flat)
        return out
    K = int(K)
    zero_q = flat == 0.0
    qq = np.where(zero_q, 0.5, flat)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_r = np.log(p_e) - np.log(qq) - np.log1p(-p_e)
        om_minus_1 = (p_e - qq) / (qq * (1.0 - p_e))
        log_om = np.log1p(om_minus_1)
        lo = np.log(-np.expm1(K * log_om)) - np.log(-om_minus_1)
        hi = K * log_om + np.log(-np.expm1(-K * log_om)) - np.log(om_minus_1)
        log_g = np.where(om_minus_1 < 0, lo, hi)
        log_g = np.where(qq == 1.0, 0.0, log_g)
        log_g = np.where(qq == p_e, np.log(K), log_g)
        p0 = np.exp(-np.logaddexp(0.0, log_r + log_g))
    res[:] = np.where(zero_q, 0.0, p0)
    return out
