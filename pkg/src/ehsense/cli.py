"""Command-line front end.

Subcommands ``design``, ``sweep``, ``simulate`` and ``bound`` read a
scenario file (see ``data/scenario.schema.json``) and write CSV or JSON.
Exit codes: 0 ok, 2 input error, 3 degenerate objective.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .battery import BatteryParams, depletion_probability
from .design import DesignResult, default_grid, optimize_constrained, optimize_unconstrained
from .errors import DegenerateObjectiveError, InvalidParameterError, NetworkSizeError
from .metrics import SensorDesign, bd_upper_bound, kailath_bound
from .network import MAX_ENUM_SENSORS, NetworkScenario, map_error_probability, total_bd
from .observation import RayleighRician
from .scenario import Scenario, ScenarioError, SensorSpec, load_scenario
from .sim import SimConfig, run

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3

DESIGN_COLUMNS = [
    "sensor", "K", "p_e", "eps0", "eps1",
    "tau_star", "tau_star_u", "bd_star", "bd_star_u", "p0_star", "p0_star_u", "bd_bound",
]
SWEEP_COLUMNS = ["value", "bd_star", "bd_star_u", "bd_bound", "pe_star", "pe_star_u", "kailath_bound"]
BOUND_COLUMNS = ["sensor", "K", "p_e", "prior", "eps0", "eps1", "p0_bar", "bd_bound"]
COMPARE_COLUMNS = ["quantity", "sensor", "analytic", "empirical", "sigma", "z", "status"]


class GridOptions:
    def __init__(self, points=4096, tau_max=None, rounds=3):
        self.points = points
        self.tau_max = tau_max
        self.rounds = rounds

    def grid(self, model):
        return default_grid(model, points=self.points, rounds=self.rounds, tau_max=self.tau_max)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if (math.isinf(v) or math.isnan(v)) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _capacity(K):
    return "inf" if isinstance(K, float) and math.isinf(K) else int(K)


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_json_value(r) for r in rows], indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# design helpers
# ---------------------------------------------------------------------------

def design_pair(spec: SensorSpec, prior: float, grid: GridOptions, tolerate_degenerate=False):
    """Adapted and unconstrained optima for one sensor.

    With ``tolerate_degenerate`` an uninformative sensor gets the largest
    grid threshold (the tie-break rule) instead of raising.
    """
    g = grid.grid(spec.model)
    try:
        a = optimize_constrained(spec.model, spec.K, spec.p_e, prior, spec.channel, g)
        u = optimize_unconstrained(spec.model, prior, spec.channel, g)
    except DegenerateObjectiveError:
        if not tolerate_degenerate:
            raise
        t = g.tau_max
        a = u = DesignResult(t, 0.0, math.nan, math.nan, math.nan, np.empty((0, 2)))
    return a, u


def _sensor(spec: SensorSpec, tau: float) -> SensorDesign:
    return SensorDesign(spec.model, tau, spec.K, spec.p_e, spec.channel)


def design_rows(sc: Scenario, grid: GridOptions) -> list[dict]:
    rows = []
    cache = {}
    for i, spec in enumerate(sc.sensors):
        if spec not in cache:
            cache[spec] = design_pair(spec, sc.prior, grid)
        a, u = cache[spec]
        da, du = _sensor(spec, a.tau_star), _sensor(spec, u.tau_star)
        oa, ou = da.operating_point(sc.prior), du.operating_point(sc.prior)
        rows.append({
            "sensor": i,
            "K": _capacity(spec.K),
            "p_e": spec.p_e,
            "eps0": spec.channel.eps0,
            "eps1": spec.channel.eps1,
            "tau_star": a.tau_star,
            "tau_star_u": u.tau_star,
            "bd_star": oa.bd,
            "bd_star_u": ou.bd,
            "p0_star": oa.p0,
            "p0_star_u": ou.p0,
            "bd_bound": bd_upper_bound(spec.K, spec.p_e, sc.prior, spec.channel),
        })
    return rows


def _apply_sweep(spec: SensorSpec, variable: str, value: float) -> SensorSpec:
    if variable == "s":
        if not isinstance(spec.model, RayleighRician):
            raise InvalidParameterError("an s-sweep needs rayleigh_rician sensors")
        return replace(spec, model=replace(spec.model, s=float(value)))
    if variable == "K":
        return replace(spec, K=int(round(value)))
    if variable == "p_e":
        return replace(spec, p_e=float(value))
    if variable == "tau":
        return replace(spec, tau=float(value))
    raise InvalidParameterError(f"unknown sweep variable {variable!r}")


def sweep_values(sweep: dict) -> np.ndarray:
    lo, hi = sweep["range"]
    vals = np.linspace(lo, hi, sweep["points"])
    if sweep["variable"] == "K":
        vals = np.round(vals)
    return vals


def sweep_point(args) -> dict:
    sc, value, grid = args
    variable = sc.sweep["variable"]
    specs = [_apply_sweep(s, variable, value) for s in sc.sensors]
    adapted, plain = [], []
    cache = {}
    for spec in specs:
        if variable == "tau":
            adapted.append(_sensor(spec, spec.tau))
            plain.append(_sensor(replace(spec, p_e=1.0), spec.tau))  # energy always available
            continue
        if spec not in cache:
            cache[spec] = design_pair(spec, sc.prior, grid, tolerate_degenerate=True)
        a, u = cache[spec]
        adapted.append(_sensor(spec, a.tau_star))
        plain.append(_sensor(spec, u.tau_star))
    net_a = NetworkScenario(sc.prior, adapted)
    net_u = NetworkScenario(sc.prior, plain)
    bd_a = total_bd(net_a)
    return {
        "value": int(value) if variable == "K" else float(value),
        "bd_star": bd_a,
        "bd_star_u": total_bd(net_u),
        "bd_bound": float(sum(bd_upper_bound(s.K, s.p_e, sc.prior, s.channel) for s in specs)),
        "pe_star": map_error_probability(net_a),
        "pe_star_u": map_error_probability(net_u),
        "kailath_bound": kailath_bound(bd_a, sc.prior),
    }


def sweep_rows(sc: Scenario, grid: GridOptions, workers: int = 1) -> list[dict]:
    if sc.sweep is None:
        raise ScenarioError("field sweep: a sweep block is required for this command")
    if len(sc.sensors) > MAX_ENUM_SENSORS:
        raise NetworkSizeError(f"sweeps report exact error probabilities and support at most {MAX_ENUM_SENSORS} sensors")
    if sc.sweep["variable"] == "s" and any(not isinstance(s.model, RayleighRician) for s in sc.sensors):
        raise ScenarioError("field sweep/variable: an s-sweep needs rayleigh_rician sensors")
    jobs = [(sc, v, grid) for v in sweep_values(sc.sweep)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(sweep_point, jobs))  # map keeps input order
    return [sweep_point(j) for j in jobs]


def bound_rows(sc: Scenario) -> list[dict]:
    rows = []
    for i, spec in enumerate(sc.sensors):
        p0 = depletion_probability(BatteryParams(spec.K, spec.p_e, sc.prior))
        rows.append({
            "sensor": i,
            "K": _capacity(spec.K),
            "p_e": spec.p_e,
            "prior": sc.prior,
            "eps0": spec.channel.eps0,
            "eps1": spec.channel.eps1,
            "p0_bar": p0,
            "bd_bound": bd_upper_bound(spec.K, spec.p_e, sc.prior, spec.channel),
        })
    return rows


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _compare(quantity, sensor, analytic, empirical, sigma):
    z = (empirical - analytic) / sigma if sigma > 0 else (0.0 if empirical == analytic else math.inf)
    return {
        "quantity": quantity,
        "sensor": sensor,
        "analytic": analytic,
        "empirical": empirical,
        "sigma": sigma,
        "z": z,
        "status": "PASS" if abs(z) <= 3.0 else "FAIL",
    }


def simulate(sc: Scenario, grid: GridOptions):
    if sc.sim is None:
        raise ScenarioError("field sim: a sim block is required for this command")
    for i, spec in enumerate(sc.sensors):
        if isinstance(spec.K, float) and math.isinf(spec.K):
            raise ScenarioError(f"field sensors/{i}/K: finite capacity required for simulation")
    designs = []
    cache = {}
    for spec in sc.sensors:
        tau = spec.tau
        if tau is None:
            if spec not in cache:
                cache[spec] = optimize_constrained(spec.model, spec.K, spec.p_e, sc.prior, spec.channel, grid.grid(spec.model))
            tau = cache[spec].tau_star
        designs.append(_sensor(spec, tau))
    net = NetworkScenario(sc.prior, designs)
    sim = sc.sim
    config = SimConfig(
        net,
        steps=sim["steps"],
        seed=sim.get("seed", 0),
        burn_in=sim.get("burn_in", 10_000),
        initial_battery=sim.get("initial_battery", "empty"),
    )
    report = run(config)
    rows = []
    for i, (op, st) in enumerate(zip(net.operating_points, report.sensors)):
        rows.append(_compare("p0", i, op.p0, st.depletion_frequency, st.depletion_stderr))
        for h, analytic, emp, n in (
            (0, op.py1_h0, st.py1_given_h0, report.count_h0),
            (1, op.py1_h1, st.py1_given_h1, report.count_h1),
        ):
            sig = math.sqrt(analytic * (1 - analytic) / n) if n else math.nan
            rows.append(_compare(f"py1_h{h}", i, analytic, emp, sig))
    pe = map_error_probability(net) if net.n <= MAX_ENUM_SENSORS else math.nan
    sig = math.sqrt(pe * (1 - pe) / report.samples)
    rows.append(_compare("pe", "fc", pe, report.fc_error_frequency, sig))
    return report, rows


def _summary(rows) -> str:
    lines = [f"{'quantity':<9} {'sensor':>6} {'analytic':>12} {'empirical':>12} {'sigma':>10} {'z':>8}  status"]
    for r in rows:
        lines.append(
            f"{r['quantity']:<9} {str(r['sensor']):>6} {r['analytic']:>12.6g} {r['empirical']:>12.6g} "
            f"{r['sigma']:>10.3g} {r['z']:>8.2f}  {r['status']}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ehsense", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("design", "adapted and unconstrained thresholds per sensor"),
        ("sweep", "figure-style curves over one parameter"),
        ("simulate", "Monte Carlo run with analytic comparison"),
        ("bound", "upper bound on each sensor's Bhattacharyya distance"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="json" if name == "simulate" else "csv")
        sp.add_argument("--grid-points", type=int, default=4096)
        sp.add_argument("--grid-max", type=float, default=None, help="upper end of the threshold grid")
        sp.add_argument("--refine", type=int, default=3, help="refinement rounds")
        sp.add_argument("--workers", type=int, default=None, help="parallel sweep workers (env EHSENSE_WORKERS)")
        sp.add_argument("--seed", type=int, default=None, help="override the sim block seed")
    return p


def _workers(arg) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("EHSENSE_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"EHSENSE_WORKERS must be an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.grid_points < 2 or args.refine < 0:
            raise InvalidParameterError("--grid-points must be >= 2 and --refine >= 0")
        if args.grid_max is not None and not args.grid_max > 0:
            raise InvalidParameterError("--grid-max must be positive")
        sc = load_scenario(args.scenario)
        if args.seed is not None:
            if args.seed < 0:
                raise InvalidParameterError("--seed must be non-negative")
            sc = sc.with_seed(args.seed)
        grid = GridOptions(args.grid_points, args.grid_max, args.refine)
        if args.command == "design":
            _emit(render(design_rows(sc, grid), DESIGN_COLUMNS, args.format), args.out)
        elif args.command == "sweep":
            _emit(render(sweep_rows(sc, grid, _workers(args.workers)), SWEEP_COLUMNS, args.format), args.out)
        elif args.command == "bound":
            _emit(render(bound_rows(sc), BOUND_COLUMNS, args.format), args.out)
        else:
            report, rows = simulate(sc, grid)
            if args.format == "json":
                doc = {"report": _json_value(report.to_dict()), "comparison": _json_value(rows)}
                text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            else:
                text = render(rows, COMPARE_COLUMNS, "csv")
            _emit(text, args.out)
            sys.stderr.write(_summary(rows))
    except DegenerateObjectiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InvalidParameterError, NetworkSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
