"""Sensor observation models and threshold tail probabilities.

Two kinds are supported:

* :class:`RayleighRician` -- Rayleigh magnitude under H0, Rician under H1.
* :class:`TableModel` -- explicit ``(q0, q1)`` pairs at a finite set of
  thresholds, useful to inject exact operating points.

Thresholds live in observation space. For the Rayleigh/Rician pair with
equal scales the likelihood ratio is increasing in ``x``, so an
observation threshold is equivalent to a log-likelihood-ratio threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameterError

__all__ = [
    "TailPair",
    "RayleighRician",
    "TableModel",
    "ObservationModel",
    "tail_probabilities",
    "tail_complements",
    "density",
    "sample",
    "marcum_q1",
]


class TailPair(NamedTuple):
    """False-alarm ``q0`` and detection ``q1`` probabilities of a threshold test."""

    q0: float
    q1: float


@dataclass(frozen=True)
class RayleighRician:
    s: float
    sigma0: float = 1.0
    sigma1: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 0):
            raise InvalidParameterError(f"noncentrality s must be >= 0, got {self.s}")
        for name in ("sigma0", "sigma1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {v}")

    @property
    def natural_max(self) -> float:
        return max(12.0, self.s + 6.0 * self.sigma1)


@dataclass(frozen=True)
class TableModel:
    """Tail probabilities given only at ``thresholds`` (strictly increasing).

    Between table points the tails follow the step function of the discrete
    observation law that places mass ``q_h(t_i) - q_h(t_{i+1})`` on ``t_i``
    and the remainder at ``-inf``: ``q_h(tau) = q_h(t_i)`` for the smallest
    ``t_i >= tau`` and ``0`` past the last point.
    """

    thresholds: tuple
    q0: tuple
    q1: tuple

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        a = np.asarray(self.q0, dtype=float)
        b = np.asarray(self.q1, dtype=float)
        if t.ndim != 1 or t.size == 0 or a.shape != t.shape or b.shape != t.shape:
            raise InvalidParameterError("table needs equal-length, non-empty threshold/q0/q1 sequences")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("table thresholds must be finite and strictly increasing")
        for name, q in (("q0", a), ("q1", b)):
            if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
                raise InvalidParameterError(f"table {name} entries must lie in [0, 1]")
            if np.any(np.diff(q) > 0):
                raise InvalidParameterError(f"table {name} must be non-increasing in the threshold")
        object.__setattr__(self, "thresholds", tuple(float(v) for v in t))
        object.__setattr__(self, "q0", tuple(float(v) for v in a))
        object.__setattr__(self, "q1", tuple(float(v) for v in b))

    def _index(self, tau):
        return np.searchsorted(np.asarray(self.thresholds), tau, side="left")

    @property
    def natural_max(self) -> float:
        return self.thresholds[-1]


ObservationModel = Union[RayleighRician, TableModel]


# ---------------------------------------------------------------------------
# Marcum Q of order one
# ---------------------------------------------------------------------------

_TAIL_SIGMAS = 15.0


def _poisson_pmf_rows(x, jmax):
    j = np.arange(jmax + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = special.xlogy(j[None, :], x[:, None]) - x[:, None] - special.gammaln(j + 1.0)[None, :]
    rows = np.exp(logp)
    # each row holds all but exp(-112) of its mass; renormalizing cancels the
    # slow drift from rounding in the large log terms
    return rows / rows.sum(axis=1, keepdims=True)


def marcum_q1(a, b, complement: bool = False):
    """Generalized Marcum Q function of order one, ``Q1(a, b)``.

    With ``M ~ Poisson(a^2/2)`` and ``J ~ Poisson(b^2/2)`` independent,
    ``Q1(a, b) = Pr(J <= M)``; this is the Bessel series regrouped by
    order. The sum runs over ``J`` with all terms positive, so both
    ``Q1`` and (``complement=True``) ``1 - Q1`` keep full relative accuracy.
    Truncation drops Poisson mass below ``exp(-112)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    lam = (0.5 * a * a).ravel()
    x = (0.5 * b * b).ravel()
    out = np.empty(lam.shape)
    for lv in np.unique(lam):
        sel = lam == lv
        xs = x[sel]
        jmax = int(max(xs.max(), lv) + _TAIL_SIGMAS * np.sqrt(max(xs.max(), lv)) + 60)
        j = np.arange(jmax + 1, dtype=float)
        if complement:
            # Pr(M < j)
            weight = np.where(j > 0, special.pdtr(j - 1.0, lv), 0.0)
        else:
            # Pr(M >= j)
            weight = np.where(j > 0, special.pdtrc(j - 1.0, lv), 1.0)
        out[sel] = _poisson_pmf_rows(xs, jmax) @ weight
    out = np.clip(out, 0.0, 1.0).reshape(shape)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _check_tau(model, tau):
    t = np.asarray(tau, dtype=float)
    if np.any(np.isnan(t)):
        raise InvalidParameterError("threshold is NaN")
    if isinstance(model, RayleighRician) and np.any(t < 0):
        raise InvalidParameterError("threshold must be >= 0 for magnitude observations")
    return t


def _scalarize(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def tail_probabilities(model: ObservationModel, tau) -> TailPair:
    """``(Pr(X >= tau | H0), Pr(X >= tau | H1))``; ``tau`` may be an array."""
    t = _check_tau(model, tau)
    if isinstance(model, RayleighRician):
        q0 = np.exp(-0.5 * (t / model.sigma0) ** 2)
        if model.s == 0.0:
            q1 = np.exp(-0.5 * (t / model.sigma1) ** 2)
        else:
            q1 = marcum_q1(model.s / model.sigma1, t / model.sigma1)
    elif isinstance(model, TableModel):
        q0, q1 = _table_lookup(model, t)
    else:
        raise TypeError(f"unsupported observation model {type(model).__name__}")
    return TailPair(_scalarize(q0), _scalarize(q1))


def tail_complements(model: ObservationModel, tau) -> TailPair:
    """``(1 - q0, 1 - q1)`` without cancellation."""
    t = _check_tau(model, tau)
    if isinstance(model, RayleighRician):
        c0 = -np.expm1(-0.5 * (t / model.sigma0) ** 2)
        if model.s == 0.0:
            c1 = -np.expm1(-0.5 * (t / model.sigma1) ** 2)
        else:
            c1 = marcum_q1(model.s / model.sigma1, t / model.sigma1, complement=True)
    elif isinstance(model, TableModel):
        q0, q1 = _table_lookup(model, t)
        c0, c1 = 1.0 - q0, 1.0 - q1
    else:
        raise TypeError(f"unsupported observation model {type(model).__name__}")
    return TailPair(_scalarize(c0), _scalarize(c1))


def _table_lookup(model: TableModel, t):
    idx = model._index(t)
    q0 = np.append(np.asarray(model.q0), 0.0)[idx]
    q1 = np.append(np.asarray(model.q1), 0.0)[idx]
    return q0, q1


def density(model: RayleighRician, x, h: int):
    """Conditional density ``f(x | h)``; vectorized in ``x``."""
    if not isinstance(model, RayleighRician):
        raise TypeError("density is only defined for the Rayleigh/Rician model")
    xs = np.asarray(x, dtype=float)
    if np.any(np.isnan(xs)) or np.any(xs < 0):
        raise InvalidParameterError("observations are magnitudes and must be >= 0")
    if h == 0:
        v0 = model.sigma0 ** 2
        out = xs / v0 * np.exp(-0.5 * xs * xs / v0)
    elif h == 1:
        v1 = model.sigma1 ** 2
        z = xs * model.s / v1
        # I0(z) * exp(-z) == ive(0, z) keeps the exponentials in range
        out = xs / v1 * np.exp(-0.5 * (xs - model.s) ** 2 / v1) * special.i0e(z)
    else:
        raise InvalidParameterError(f"hypothesis must be 0 or 1, got {h}")
    return _scalarize(out)


def sample(model: ObservationModel, h, rng: np.random.Generator, size=None):
    """Draw observations under hypothesis ``h`` (scalar or array).

    Every draw consumes exactly three uniforms from ``rng``, element by
    element, regardless of ``h``: one for the Rayleigh inverse CDF and two
    turned into standard normals by the inverse normal CDF for the Rician
    branch. The stream position thus depends only on the number of draws,
    and drawing in pieces gives the same values as drawing all at once.
    """
    hs = np.asarray(h)
    shape = hs.shape if size is None else (size if isinstance(size, tuple) else (size,))
    hs = np.broadcast_to(hs, shape)
    draws = rng.random(tuple(shape) + (3,))
    u = draws[..., 0]
    # 0 is a possible uniform; nudge it so the normal stays finite
    z = special.ndtri(np.maximum(np.moveaxis(draws[..., 1:], -1, 0), 2.0**-54))
    if isinstance(model, RayleighRician):
        x0 = model.sigma0 * np.sqrt(-2.0 * np.log1p(-u))
        x1 = np.hypot(model.s + model.sigma1 * z[0], model.sigma1 * z[1])
        out = np.where(hs == 1, x1, x0)
    elif isinstance(model, TableModel):
        q0 = np.asarray(model.q0)
        q1 = np.asarray(model.q1)
        n0 = np.sum(u[..., None] < q0, axis=-1)
        n1 = np.sum(u[..., None] < q1, axis=-1)
        n = np.where(hs == 1, n1, n0)
        t = np.concatenate(([-np.inf], np.asarray(model.thresholds)))
        out = t[n]
    else:
        raise TypeError(f"unsupported observation model {type(model).__name__}")
    return _scalarize(out)


def tail_by_quadrature(model: RayleighRician, tau: float, h: int) -> float:
    """Reference ``Pr(X >= tau | h)`` by adaptive quadrature of the density."""
    if h == 0:
        hi = np.inf
    else:
        hi = model.s + 40.0 * model.sigma1
    if tau >= hi:
        return 0.0
    # split at the mode so quad sees the peak
    mode = model.s if h == 1 else model.sigma0
    pieces = [tau] + [p for p in (mode, mode + 8 * max(model.sigma0, model.sigma1)) if p > tau] + [hi]
    total = 0.0
    for lo, up in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(lambda v: density(model, v, h), lo, up, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += val
    return total
