"""Discrete-time Monte Carlo simulation of the whole network.

Each interval: draw the hypothesis, draw every sensor's observation,
transmit iff the observation clears the threshold and the battery is
non-empty, pass the bit through the sensor's BAC, update the battery with
that interval's arrival, and let the fusion center apply the analytic MAP
table to the received vector.

Random numbers come from independent streams, one for the hypothesis and
one per (sensor, purpose), so changing one sensor never perturbs another
sensor's sample path. Runs are bit-reproducible for a given seed on one
platform; chunking does not affect results.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidParameterError
from .network import NetworkScenario, map_decisions
from .observation import sample

__all__ = [
    "SimConfig",
    "SensorStats",
    "SimReport",
    "derive_stream_seed",
    "run",
    "HYPOTHESIS",
    "OBSERVATION",
    "CHANNEL",
    "ENERGY",
]

HYPOTHESIS, OBSERVATION, CHANNEL, ENERGY, REPLICA_HYPOTHESIS, REPLICA_OBSERVATION = 0, 1, 2, 3, 4, 5

CHUNK = 1 << 18
N_BATCHES = 100


def derive_stream_seed(master_seed: int, stream_id) -> int:
    """64-bit seed for one random stream.

    ``stream_id`` is an int or a tuple of ints. Seeds come from
    :class:`numpy.random.SeedSequence` spawn keys, which are designed to
    give statistically independent streams.
    """
    if isinstance(stream_id, (int, np.integer)):
        key = (int(stream_id),)
    else:
        key = tuple(int(v) for v in stream_id)
    if any(k < 0 for k in key) or master_seed < 0:
        raise InvalidParameterError("seeds and stream ids must be non-negative")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _stream(master_seed, *key):
    return np.random.Generator(np.random.PCG64(derive_stream_seed(master_seed, key)))


@dataclass(frozen=True)
class SimConfig:
    """``initial_battery`` is ``"empty"``, ``"full"`` or an integer level.

    ``independent_batteries`` is a diagnostic mode: each battery is driven
    by its own replica of the hypothesis and observation process instead of
    the shared one. Battery states are then independent across sensors and
    of the current interval, which is the independence the exact fusion
    analysis assumes. In the physical (default) mode, batteries are
    correlated through the common hypothesis history.
    """

    scenario: NetworkScenario
    steps: int
    seed: int = 0
    burn_in: int = 10_000
    initial_battery: str | int = "empty"
    independent_batteries: bool = False

    def __post_init__(self):
        if not (0 <= self.burn_in < self.steps):
            raise InvalidParameterError(f"need 0 <= burn_in < steps, got burn_in={self.burn_in}, steps={self.steps}")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")
        for i, s in enumerate(self.scenario.sensors):
            if isinstance(s.K, float) and math.isinf(s.K):
                raise InvalidParameterError(f"sensor {i}: finite capacity required for simulation")
        init = self.initial_battery
        if isinstance(init, str):
            if init not in ("empty", "full"):
                raise InvalidParameterError(f"initial_battery must be 'empty', 'full' or a level, got {init!r}")
        else:
            if isinstance(init, bool) or int(init) != init or init < 0:
                raise InvalidParameterError(f"invalid initial battery level {init!r}")
            for i, s in enumerate(self.scenario.sensors):
                if init > s.K:
                    raise InvalidParameterError(f"sensor {i}: initial level {init} exceeds capacity {s.K}")

    def initial_level(self, K: int) -> int:
        if self.initial_battery == "empty":
            return 0
        if self.initial_battery == "full":
            return int(K)
        return int(self.initial_battery)


@dataclass
class SensorStats:
    battery_histogram: list
    depletion_frequency: float
    depletion_stderr: float
    py1_given_h0: float
    py1_given_h1: float
    ones_given_h0: int
    ones_given_h1: int
    transmissions: int


@dataclass
class SimReport:
    steps: int
    burn_in: int
    seed: int
    samples: int
    count_h0: int
    count_h1: int
    fc_errors: int
    fc_error_frequency: float
    fc_error_stderr: float
    sensors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _batch_stderr(sums: np.ndarray, sizes: np.ndarray) -> float:
    ok = sizes > 0
    means = sums[ok] / sizes[ok]
    b = means.size
    if b < 2:
        return float("nan")
    return float(np.std(means, ddof=1) / math.sqrt(b))


def run(config: SimConfig, chunk: int = CHUNK) -> SimReport:
    scenario = config.scenario
    n = scenario.n
    seed = config.seed
    table = map_decisions(scenario)
    weights = (1 << np.arange(n)).astype(np.int64)

    hyp_rng = _stream(seed, HYPOTHESIS)
    obs_rng = [_stream(seed, OBSERVATION, i) for i in range(n)]
    ch_rng = [_stream(seed, CHANNEL, i) for i in range(n)]
    en_rng = [_stream(seed, ENERGY, i) for i in range(n)]
    if config.independent_batteries:
        rep_h_rng = [_stream(seed, REPLICA_HYPOTHESIS, i) for i in range(n)]
        rep_x_rng = [_stream(seed, REPLICA_OBSERVATION, i) for i in range(n)]

    levels = [config.initial_level(s.K) for s in scenario.sensors]
    hist = [np.zeros(int(s.K) + 1, dtype=np.int64) for s in scenario.sensors]
    ones = np.zeros((n, 2), dtype=np.int64)
    sent = np.zeros(n, dtype=np.int64)
    count_h = np.zeros(2, dtype=np.int64)
    errors = 0

    kept = config.steps - config.burn_in
    nb = min(N_BATCHES, kept)
    batch_size = np.zeros(nb, dtype=np.int64)
    batch_err = np.zeros(nb, dtype=np.float64)
    batch_dep = np.zeros((n, nb), dtype=np.float64)

    for start in range(0, config.steps, chunk):
        m = min(chunk, config.steps - start)
        t = np.arange(start, start + m)
        h = (hyp_rng.random(m) < scenario.pi1).astype(np.int8)
        keep = t >= config.burn_in
        bidx = ((t[keep] - config.burn_in) * nb) // kept
        batch_size += np.bincount(bidx, minlength=nb)
        hk = h[keep]
        count_h += np.bincount(hk, minlength=2)
        code = np.zeros(m, dtype=np.int64)
        path = np.empty(m, dtype=np.int64)
        for i, s in enumerate(scenario.sensors):
            x = sample(s.model, h, obs_rng[i])
            intent = np.asarray(x >= s.tau)
            arrive = (en_rng[i].random(m) < s.p_e).astype(np.int64)
            flip = ch_rng[i].random(m)
            if config.independent_batteries:
                h_rep = (rep_h_rng[i].random(m) < scenario.pi1).astype(np.int8)
                drive = np.asarray(sample(s.model, h_rep, rep_x_rng[i]) >= s.tau)
            else:
                drive = intent
            levels[i] = _kernels.battery_path(levels[i], drive, arrive, int(s.K), path)
            u = intent & (path > 0)
            y = np.where(u, flip >= s.channel.eps1, flip < s.channel.eps0)
            code += y.astype(np.int64) * weights[i]

            pk = path[keep]
            hist[i] += np.bincount(pk, minlength=hist[i].size)
            sent[i] += int(np.count_nonzero(u[keep]))
            yk = y[keep]
            ones[i, 0] += int(np.count_nonzero(yk & (hk == 0)))
            ones[i, 1] += int(np.count_nonzero(yk & (hk == 1)))
            batch_dep[i] += np.bincount(bidx, weights=(pk == 0).astype(float), minlength=nb)
        wrong = (table[code] != h)[keep]
        errors += int(np.count_nonzero(wrong))
        batch_err += np.bincount(bidx, weights=wrong.astype(float), minlength=nb)

    sensors = []
    for i in range(n):
        hh = hist[i]
        sensors.append(
            SensorStats(
                battery_histogram=(hh / kept).tolist(),
                depletion_frequency=float(hh[0] / kept),
                depletion_stderr=_batch_stderr(batch_dep[i], batch_size),
                py1_given_h0=float(ones[i, 0] / count_h[0]) if count_h[0] else float("nan"),
                py1_given_h1=float(ones[i, 1] / count_h[1]) if count_h[1] else float("nan"),
                ones_given_h0=int(ones[i, 0]),
                ones_given_h1=int(ones[i, 1]),
                transmissions=int(sent[i]),
            )
        )
    return SimReport(
        steps=config.steps,
        burn_in=config.burn_in,
        seed=seed,
        samples=kept,
        count_h0=int(count_h[0]),
        count_h1=int(count_h[1]),
        fc_errors=errors,
        fc_error_frequency=errors / kept,
        fc_error_stderr=_batch_stderr(batch_err, batch_size),
        sensors=sensors,
    )
