"""Compare the numba and pure-numpy simulation paths.

Two measurements:

* the battery-recursion kernel alone, both implementations in this process;
* a full N=4 simulator run, once per path, each in a fresh interpreter so
  ``EHSENSE_DISABLE_JIT`` takes effect at import time.

Usage: ``python3 benchmarks/bench_sim.py [--steps N] [--kernel-steps N]``
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

CHILD = r"""
import json, sys, time
from ehsense import _kernels
from ehsense.design import optimize_constrained
from ehsense.metrics import ChannelModel, SensorDesign
from ehsense.network import NetworkScenario
from ehsense.observation import RayleighRician
from ehsense.sim import SimConfig, run

steps = int(sys.argv[1])
model, ch = RayleighRician(5.0), ChannelModel(0.1, 0.2)
tau = optimize_constrained(model, 2, 0.15, 0.2, ch).tau_star
scen = NetworkScenario(0.2, (SensorDesign(model, tau, 2, 0.15, ch),) * 4)
run(SimConfig(scen, 20_000, seed=1, burn_in=0))  # warm-up, includes JIT compile
t0 = time.perf_counter()
rep = run(SimConfig(scen, steps, seed=2017))
elapsed = time.perf_counter() - t0
print(json.dumps({"jit": _kernels.USE_NUMBA, "seconds": elapsed, "report": rep.to_json()}))
"""


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernel(n):
    from ehsense import _kernels

    rng = np.random.default_rng(0)
    intent = rng.random(n) < 0.2
    arrive = (rng.random(n) < 0.15).astype(np.int64)
    out_a = np.empty(n, dtype=np.int64)
    out_b = np.empty(n, dtype=np.int64)
    rows = {}
    if _kernels.USE_NUMBA:
        _kernels.battery_path_jit(0, intent[:10], arrive[:10], 2, out_a[:10])
        rows["numba"] = best_of(lambda: _kernels.battery_path_jit(0, intent, arrive, 2, out_a))
    rows["numpy"] = best_of(lambda: _kernels.battery_path_numpy(0, intent, arrive, 2, out_b))
    if "numba" in rows:
        assert np.array_equal(out_a, out_b), "kernel paths disagree"
    return rows


def bench_full(steps):
    results = {}
    for label, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, EHSENSE_DISABLE_JIT=disable)
        proc = subprocess.run([sys.executable, "-c", CHILD, str(steps)], env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--steps", type=int, default=2_000_000, help="simulator steps for the full run")
    ap.add_argument("--kernel-steps", type=int, default=1 << 20)
    args = ap.parse_args()

    k = bench_kernel(args.kernel_steps)
    print(f"battery kernel, {args.kernel_steps} steps (best of 3):")
    for name, t in k.items():
        print(f"  {name:<6} {t * 1e3:9.2f} ms")
    if "numba" in k:
        print(f"  speedup {k['numpy'] / k['numba']:.1f}x")

    full = bench_full(args.steps)
    print(f"full N=4 simulation, {args.steps} steps:")
    for name, r in full.items():
        print(f"  {name:<6} {r['seconds']:8.2f} s  (jit active: {r['jit']})")
    same = full["numba"]["report"] == full["numpy"]["report"]
    print(f"  reports identical across paths: {same}")


if __name__ == "__main__":
    main()
