"""Compare the compiled integrator core against the pure-Python fallback.

Both backends expose the same ``integrate_period`` hot kernel that
``caffeine.dynamics.simulate`` drives once per zero-order-hold control
period.  This script runs an identical chained workload through each
backend, checks that they produce bit-identical states, and reports wall
times and the speedup.

Usage:
    python benchmarks/bench_backends.py [--periods N] [--repeats R]
                                        [--dt DT] [--json]
"""

import argparse
import json
import sys
import time

from caffeine.dynamics import TRUE_PARAMS
from caffeine import _engine_py

try:
    from caffeine import _engine
except ImportError:                                    # pure-only install
    _engine = None


def run_workload(backend, periods, dt, rtol, atol):
    """Chained zero-order-hold periods from a pinned state; returns
    (final_state, total_steps, seconds)."""
    p = TRUE_PARAMS
    th1, th2, w1, w2 = 1.0, -0.5, 0.3, 0.1
    h = 0.0
    total_steps = 0
    t0 = time.perf_counter()
    for i in range(periods):
        # slowly varying held input, same deterministic schedule per backend
        u1 = 0.3 if (i // 50) % 2 == 0 else -0.3
        u2 = -0.2 if (i // 75) % 2 == 0 else 0.2
        th1, th2, w1, w2, h, steps, status = backend.integrate_period(
            p.m1, p.m2, p.l1, p.l2, p.g, th1, th2, w1, w2, u1, u2,
            dt, rtol, atol, h)
        if status != 0:
            raise RuntimeError("integrator failed at period %d" % i)
        total_steps += steps
    elapsed = time.perf_counter() - t0
    return (th1, th2, w1, w2), total_steps, elapsed


def bench(periods=2000, repeats=5, dt=0.01, rtol=1e-9, atol=1e-9):
    backends = [("pure", _engine_py)]
    if _engine is not None:
        backends.insert(0, ("compiled", _engine))
    results = {}
    for name, mod in backends:
        best = float("inf")
        for _ in range(repeats):
            state, steps, elapsed = run_workload(mod, periods, dt, rtol, atol)
            best = min(best, elapsed)
        results[name] = {"seconds": best, "steps": steps, "state": state,
                         "periods": periods}
    if len(results) == 2:
        if results["compiled"]["state"] != results["pure"]["state"]:
            raise AssertionError("backends disagree: %r vs %r"
                                 % (results["compiled"]["state"],
                                    results["pure"]["state"]))
        if results["compiled"]["steps"] != results["pure"]["steps"]:
            raise AssertionError("backends took different step counts")
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", type=int, default=2000,
                    help="held-input periods to integrate (default 2000)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats; best is reported (default 5)")
    ap.add_argument("--dt", type=float, default=0.01,
                    help="period length in seconds (default 0.01)")
    ap.add_argument("--json", action="store_true",
                    help="machine-readable output")
    args = ap.parse_args(argv)

    results = bench(periods=args.periods, repeats=args.repeats, dt=args.dt)
    if args.json:
        out = {name: {k: v for k, v in r.items() if k != "state"}
               for name, r in results.items()}
        if "compiled" in results:
            out["speedup"] = (results["pure"]["seconds"]
                              / results["compiled"]["seconds"])
        json.dump(out, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    print("workload: %d periods of %.3g s each (%d adaptive steps)"
          % (args.periods, args.dt, results["pure"]["steps"]))
    for name in ("compiled", "pure"):
        if name in results:
            r = results[name]
            print("  %-8s %8.4f s   (%.2f us/period)"
                  % (name, r["seconds"], 1e6 * r["seconds"] / r["periods"]))
    if "compiled" in results:
        print("  speedup: %.1fx (states bit-identical)"
              % (results["pure"]["seconds"] / results["compiled"]["seconds"]))
    else:
        print("  compiled backend unavailable; timed the fallback only")
    return 0


if __name__ == "__main__":
    sys.exit(main())
