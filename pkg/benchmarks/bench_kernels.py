"""Sampler throughput with and without numba.

Runs the same seeded Metropolis-Hastings chain once with the compiled
kernels and once with CERGM_DISABLE_NUMBA=1 (plain Python), each in a fresh
subprocess, and checks that both produce identical draws.

    python3 benchmarks/bench_kernels.py [--cases 100] [--steps 200000]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import hashlib, json, sys, time
import numpy as np
from cergm import backend
from cergm.model import full_model
from cergm.sampler import McmcControl, simulate
from cergm.statistics import change_stats, global_stats
from cergm.synthetic import TRUE_THETA, generate_dataset

cases, steps = int(sys.argv[1]), int(sys.argv[2])
ds = generate_dataset(n_terms=3, cases_per_term=cases, seed=11,
                      control=McmcControl(burnin=2000, interval=1, nsim=1))
net = ds.network(2)
spec = full_model()
ctl = McmcControl(burnin=0, interval=100, nsim=max(steps // 100, 1), seed=5)
warm = McmcControl(burnin=0, interval=10, nsim=2, seed=5)
simulate(net, spec, TRUE_THETA, warm)          # compile outside the timing
t = time.perf_counter()
sample = simulate(net, spec, TRUE_THETA, ctl)
sim = time.perf_counter() - t

n_toggle = min(2000, net.n_free_dyads)
t = time.perf_counter()
for d in range(n_toggle):
    change_stats(net, spec, tuple(net.free_dyads[d]))
chg = time.perf_counter() - t
t = time.perf_counter()
global_stats(net, spec)
glob = time.perf_counter() - t

print(json.dumps({
    "backend": backend(),
    "free_dyads": net.n_free_dyads,
    "proposals": ctl.nsim * ctl.interval,
    "steps_per_s": ctl.nsim * ctl.interval / sim,
    "change_stats_us": 1e6 * chg / n_toggle,
    "global_stats_ms": 1e3 * glob,
    "digest": hashlib.sha256(sample.stats.tobytes()).hexdigest(),
}))
"""


def run(disable, cases, steps):
    env = dict(os.environ)
    if disable:
        env["CERGM_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CERGM_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", CHILD, str(cases), str(steps)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=100, help="cases per synthetic term")
    ap.add_argument("--steps", type=int, default=200_000, help="proposals for the numba run")
    ap.add_argument("--python-steps", type=int, default=20_000, help="proposals for the plain run")
    args = ap.parse_args()

    fast = run(False, args.cases, args.steps)
    slow = run(True, args.cases, args.python_steps)
    same = run(False, args.cases, args.python_steps)["digest"] == slow["digest"]
    print(f"free dyads: {fast['free_dyads']}")
    print(f"{'backend':10s} {'proposals/s':>14s} {'change_stats us':>16s} {'global_stats ms':>16s}")
    for r in (fast, slow):
        print(f"{r['backend']:10s} {r['steps_per_s']:14,.0f} {r['change_stats_us']:16.1f} {r['global_stats_ms']:16.2f}")
    print(f"speedup: {fast['steps_per_s'] / slow['steps_per_s']:.0f}x")
    print(f"identical draws: {same}")


if __name__ == "__main__":
    main()
