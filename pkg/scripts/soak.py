#!/usr/bin/env python3
"""Long-running conformance soak: bigger batches than the test suite runs.

Prints one summary row per check family plus any violating records in
full, and exits nonzero if a violation turned up.  Reports are a pure
function of --seed, so a failing row can be rerun exactly.
"""

from __future__ import annotations

import argparse
import collections
import statistics
import sys
import time

from greff import conformance as conf


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cases", type=int, default=300, help="cases per check family")
    ap.add_argument("--fuel", type=int, default=200_000)
    args = ap.parse_args()

    t0 = time.perf_counter()
    report = conf.run_conformance(seed=args.seed, cases_per_law=args.cases, fuel=args.fuel)
    elapsed = time.perf_counter() - t0

    by_check: dict[str, list[conf.CaseRecord]] = collections.defaultdict(list)
    for r in report.records:
        by_check[r.check].append(r)

    print(f"{'check':24s} {'cases':>6s} {'holds':>6s} {'inconc':>6s} {'viol':>5s} "
          f"{'steps p50':>9s} {'steps max':>9s}")
    for check, recs in sorted(by_check.items()):
        verdicts = collections.Counter(r.verdict for r in recs)
        steps = sorted(r.steps_left for r in recs) or [0]
        print(f"{check:24s} {len(recs):6d} {verdicts['holds']:6d} "
              f"{verdicts['inconclusive']:6d} {verdicts['violated']:5d} "
              f"{int(statistics.median(steps)):9d} {steps[-1]:9d}")

    print(f"\n{len(report.records)} cases in {elapsed:.1f}s "
          f"(seed {args.seed}, fuel {args.fuel})")
    for r in report.violations:
        print("VIOLATION", r.to_json())
    return 1 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())
