#!/usr/bin/env python3
"""Compare the compiled (numba) and interpreted (python) kernel backends.

Runs the same scenario in two subprocesses, one per backend, and reports
wall time, event throughput, and whether the run digests match (they
must: both backends execute the same kernel source).

Usage:
    python benchmarks/compare_backends.py [--nodes 200] [--blocks 300]
"""

import argparse
import json
import os
import subprocess
import sys
import time

SNIPPET = """
import json, time
import chainsim
from chainsim.scenario import Scenario
scn = Scenario(name="bench", n_nodes={nodes}, block_size_bytes=200_000,
               target_interval_ms=60_000, stop_blocks={blocks}, degree=8,
               seed=99)
chainsim.run(scn, seed=99)  # warm the compile cache before timing
t0 = time.perf_counter()
rep = chainsim.run(scn, seed=99)
dt = time.perf_counter() - t0
print(json.dumps({{
    "backend": chainsim.BACKEND,
    "seconds": dt,
    "events": rep.counters["events_processed_seq"],
    "digest": rep.digest(),
}}))
"""


def run_backend(backend, nodes, blocks):
    env = dict(os.environ)
    env["CHAINSIM_BACKEND"] = backend
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-c", SNIPPET.format(nodes=nodes, blocks=blocks)],
        capture_output=True, text=True, env=env,
    )
    total = time.perf_counter() - t0
    if proc.returncode != 0:
        print(f"{backend}: FAILED\n{proc.stderr}", file=sys.stderr)
        return None
    row = json.loads(proc.stdout.splitlines()[-1])
    row["total_seconds"] = total
    return row


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--blocks", type=int, default=300)
    args = ap.parse_args()

    rows = []
    for backend in ("numba", "python"):
        row = run_backend(backend, args.nodes, args.blocks)
        if row:
            rows.append(row)

    print(f"\n{args.nodes} nodes, {args.blocks} blocks")
    print(f"{'backend':<8} {'run time':>10} {'events/sec':>12}")
    for r in rows:
        print(f"{r['backend']:<8} {r['seconds']:>9.2f}s "
              f"{r['events'] / r['seconds']:>12,.0f}")
    if len(rows) == 2:
        print(f"speedup: {rows[1]['seconds'] / rows[0]['seconds']:.1f}x")
        same = rows[0]["digest"] == rows[1]["digest"]
        print(f"digests match: {same}")
        if not same:
            sys.exit(1)


if __name__ == "__main__":
    main()
