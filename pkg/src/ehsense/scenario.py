"""Scenario files: JSON documents validated against ``data/scenario.schema.json``."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, replace
from importlib import resources

import jsonschema

from .errors import InvalidParameterError
from .metrics import ChannelModel
from .observation import ObservationModel, RayleighRician, TableModel

__all__ = ["ScenarioError", "SensorSpec", "Scenario", "load_schema", "parse_scenario", "load_scenario"]


class ScenarioError(InvalidParameterError):
    """Scenario file is malformed; the message names the line or field."""


def load_schema() -> dict:
    return json.loads(resources.files("ehsense").joinpath("data/scenario.schema.json").read_text())


@dataclass(frozen=True)
class SensorSpec:
    model: ObservationModel
    K: float | int
    p_e: float
    channel: ChannelModel
    tau: float | None = None


@dataclass(frozen=True)
class Scenario:
    prior: float
    channel: ChannelModel
    sensors: tuple
    sweep: dict | None = None
    sim: dict | None = None

    def with_seed(self, seed: int) -> "Scenario":
        sim = dict(self.sim or {})
        sim["seed"] = seed
        return replace(self, sim=sim)


def _field(path) -> str:
    parts = [str(p) for p in path]
    return "/".join(parts) if parts else "<root>"


def _model(d: dict) -> ObservationModel:
    if d["kind"] == "rayleigh_rician":
        return RayleighRician(float(d["s"]), float(d.get("sigma0", 1.0)), float(d.get("sigma1", 1.0)))
    return TableModel(tuple(d["thresholds"]), tuple(d["q0"]), tuple(d["q1"]))


def _channel(d: dict | None, default: ChannelModel) -> ChannelModel:
    if d is None:
        return default
    return ChannelModel(float(d.get("eps0", 0.0)), float(d.get("eps1", 0.0)))


def parse_scenario(doc: dict) -> Scenario:
    """Validate a decoded document and build the typed scenario."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        raise ScenarioError(f"field {_field(e.absolute_path)}: {e.message}")
    channel = _channel(doc.get("channel"), ChannelModel())
    sensors = []
    for i, s in enumerate(doc["sensors"]):
        where = f"field sensors/{i}"
        try:
            model = _model(s["model"])
        except InvalidParameterError as exc:
            raise ScenarioError(f"{where}/model: {exc}") from None
        K = math.inf if s["K"] == "inf" else int(s["K"])
        tau = s.get("tau")
        if tau is not None and isinstance(model, RayleighRician) and tau < 0:
            raise ScenarioError(f"{where}/tau: threshold must be >= 0")
        spec = SensorSpec(model, K, float(s["p_e"]), _channel(s.get("channel"), channel), tau)
        sensors.extend([spec] * s.get("count", 1))
    sweep = copy.deepcopy(doc.get("sweep"))
    if sweep is not None:
        lo, hi = sweep["range"]
        if hi < lo:
            raise ScenarioError("field sweep/range: stop must not be below start")
        if sweep["variable"] == "p_e" and hi > 1:
            raise ScenarioError("field sweep/range: p_e must lie in [0, 1]")
        if sweep["variable"] == "K" and lo < 1:
            raise ScenarioError("field sweep/range: capacities start at 1")
    sim = copy.deepcopy(doc.get("sim"))
    if sim is not None:
        burn = sim.get("burn_in", 10_000)
        if burn >= sim["steps"]:
            raise ScenarioError("field sim/burn_in: must be smaller than sim/steps")
    return Scenario(float(doc["prior"]), channel, tuple(sensors), sweep, sim)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc)
