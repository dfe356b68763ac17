"""Threshold design by grid search with local refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateObjectiveError, InvalidParameterError
from .metrics import ChannelModel, constrained_bd_curve
from .observation import ObservationModel, RayleighRician, TableModel

__all__ = [
    "GridSpec",
    "DesignResult",
    "default_grid",
    "optimize_constrained",
    "optimize_unconstrained",
]


@dataclass(frozen=True)
class GridSpec:
    tau_min: float
    tau_max: float
    points: int = 4096
    refinement_rounds: int = 3

    def __post_init__(self):
        if not self.tau_min < self.tau_max:
            raise InvalidParameterError(f"need tau_min < tau_max, got {self.tau_min}, {self.tau_max}")
        if self.points < 2:
            raise InvalidParameterError("grid needs at least 2 points")
        if self.refinement_rounds < 0:
            raise InvalidParameterError("refinement_rounds must be >= 0")


@dataclass(frozen=True)
class DesignResult:
    tau_star: float
    bd_at_star: float
    q0: float
    q1: float
    p0: float
    curve: np.ndarray = field(repr=False)  # (n, 2) rows of (tau, BD), sorted by tau
    round_best: tuple = field(default=(), repr=False)  # incumbent BD after each round


def default_grid(model: ObservationModel, points: int = 4096, rounds: int = 3, tau_max: float | None = None) -> GridSpec:
    """``[0, max(12, s + 6 sigma1)]`` for the Rayleigh/Rician model."""
    if isinstance(model, TableModel):
        lo, hi = model.thresholds[0], model.thresholds[-1]
        if lo == hi:
            hi = lo + 1.0
        return GridSpec(lo, hi, points, 0)
    hi = model.natural_max if tau_max is None else tau_max
    return GridSpec(0.0, hi, points, rounds)


def _search(model, grid, objective):
    if isinstance(model, TableModel):
        # only the tabulated operating points are meaningful
        taus = np.asarray(model.thresholds)
        taus = taus[(taus >= grid.tau_min) & (taus <= grid.tau_max)]
        if taus.size == 0:
            raise InvalidParameterError("grid range contains no tabulated threshold")
        rounds = 0
    else:
        taus = np.linspace(grid.tau_min, grid.tau_max, grid.points)
        rounds = grid.refinement_rounds
    lower = 0.0 if isinstance(model, RayleighRician) else -np.inf

    seen_t = []
    seen_b = []
    step = (taus[-1] - taus[0]) / max(taus.size - 1, 1)
    best_t = None
    best_b = -np.inf
    history = []
    for r in range(rounds + 1):
        if r > 0:
            lo = max(best_t - step, lower)
            hi = best_t + step
            taus = np.linspace(lo, hi, grid.points)
            step = (hi - lo) / (grid.points - 1)
        bd = objective(taus)
        seen_t.append(taus)
        seen_b.append(bd)
        cand_t = taus if best_t is None else np.append(taus, best_t)
        cand_b = bd if best_t is None else np.append(bd, best_b)
        order = np.argsort(cand_t, kind="stable")
        cand_t, cand_b = cand_t[order], cand_b[order]
        top = np.max(cand_b)
        # ties go to the largest threshold
        i = np.flatnonzero(cand_b == top)[-1]
        best_t, best_b = float(cand_t[i]), float(cand_b[i])
        history.append(best_b)

    all_t = np.concatenate(seen_t)
    all_b = np.concatenate(seen_b)
    all_t, idx = np.unique(all_t, return_index=True)
    curve = np.column_stack([all_t, all_b[idx]])
    if not np.any(curve[:, 1] > 0.0):
        raise DegenerateObjectiveError("Bhattacharyya distance is zero at every threshold; the sensor is uninformative")
    return best_t, best_b, curve, tuple(history)


def _finish(model, K, p_e, pi1, ch, grid, unconstrained):
    if grid is None:
        grid = default_grid(model)

    def objective(t):
        return constrained_bd_curve(model, t, K, p_e, pi1, ch, unconstrained=unconstrained)[0]

    t, b, curve, hist = _search(model, grid, objective)
    _, q0, q1, p0 = constrained_bd_curve(model, np.array([t]), K, p_e, pi1, ch, unconstrained=unconstrained)
    return DesignResult(t, b, float(q0[0]), float(q1[0]), float(p0[0]), curve, hist)


def optimize_constrained(model: ObservationModel, K, p_e: float, pi1: float, ch: ChannelModel, grid: GridSpec | None = None) -> DesignResult:
    """Threshold maximizing the steady-state BD of an energy-harvesting sensor."""
    return _finish(model, K, p_e, pi1, ch, grid, unconstrained=False)


def optimize_unconstrained(model: ObservationModel, pi1: float, ch: ChannelModel, grid: GridSpec | None = None) -> DesignResult:
    """Threshold maximizing the BD when energy is always available.

    ``p0`` in the result is 0 by construction.
    """
    return _finish(model, 1, 1.0, pi1, ch, grid, unconstrained=True)
