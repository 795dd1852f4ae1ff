#!/usr/bin/env python3
"""Wall-time scaling probe for the modulo-counting pipeline on growing grids.

Runs the fixed query ``Emod[0,2] y . adj(x, y)`` (is the assigned vertex's
degree even?) on grid graphs whose vertex count doubles at each step,
verifies every verdict against the naive evaluator, and reports the
wall-time ratio between consecutive sizes.  Near-linear behaviour shows up
as ratios close to 2.  The ratio report is informational: the exit status
reflects only whether every verdict matched the naive evaluator.
"""

import argparse
import json
import sys
import time

from modcheck.elimination import eval_pipeline
from modcheck.logic import eval_naive, parse_formula
from modcheck.structures import GuidedStructure, Signature

QUERY = "Emod[0,2] y . adj(x, y)"


def grid_structure(rows: int, cols: int) -> GuidedStructure:
    """Plain rows x cols grid graph as a mark- and function-free structure."""

    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    sig = Signature((), ())
    return GuidedStructure(sig, tuple(range(rows * cols)), tuple(edges), {}, {})


def measure(rows: int, cols: int, reps: int) -> dict:
    m = grid_structure(rows, cols)
    phi = parse_formula(QUERY, m.signature)
    valuation = {"x": 0}
    best = float("inf")
    result = None
    for _ in range(max(1, reps)):
        t0 = time.perf_counter()
        result = eval_pipeline(m, phi, valuation)
        best = min(best, time.perf_counter() - t0)
    verified = result == eval_naive(m, phi, valuation)
    return {
        "rows": rows,
        "cols": cols,
        "vertices": rows * cols,
        "seconds": best,
        "result": result,
        "verified": verified,
    }


def run(base_rows: int, base_cols: int, doublings: int, reps: int) -> list:
    sizes = [(base_rows, base_cols)]
    for step in range(doublings):
        r, c = sizes[-1]
        sizes.append((r, 2 * c) if step % 2 == 0 else (2 * r, c))
    return [measure(r, c, reps) for r, c in sizes]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base-rows", type=int, default=8)
    ap.add_argument("--base-cols", type=int, default=8)
    ap.add_argument("--doublings", type=int, default=3)
    ap.add_argument("--reps", type=int, default=2, help="timed runs per size (best is kept)")
    ap.add_argument("--threshold", type=float, default=2.5, help="informational ratio bound")
    ap.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    args = ap.parse_args(argv)

    rows = run(args.base_rows, args.base_cols, args.doublings, args.reps)
    ratios = [
        rows[i]["seconds"] / rows[i - 1]["seconds"] if rows[i - 1]["seconds"] > 0 else float("inf")
        for i in range(1, len(rows))
    ]
    verified = all(row["verified"] for row in rows)
    within = all(r <= args.threshold for r in ratios)

    if args.json:
        print(
            json.dumps(
                {
                    "query": QUERY,
                    "sizes": [[row["rows"], row["cols"]] for row in rows],
                    "vertices": [row["vertices"] for row in rows],
                    "seconds": [row["seconds"] for row in rows],
                    "results": [row["result"] for row in rows],
                    "ratios": ratios,
                    "threshold": args.threshold,
                    "within_threshold": within,
                    "verified": verified,
                },
                sort_keys=True,
            )
        )
    else:
        print(f"query: {QUERY}  (x assigned to vertex 0)")
        print(f"{'grid':>10} {'vertices':>9} {'seconds':>9} {'ratio':>7} verified")
        prev = None
        for row in rows:
            ratio = "" if prev is None else f"{row['seconds'] / prev:7.2f}"
            print(
                f"{row['rows']:>4}x{row['cols']:<5} {row['vertices']:>9}"
                f" {row['seconds']:>9.3f} {ratio:>7} {row['verified']}"
            )
            prev = row["seconds"]
        print(f"all ratios <= {args.threshold}: {within}   (informational)")
    if not verified:
        print("mismatch against the naive evaluator", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
