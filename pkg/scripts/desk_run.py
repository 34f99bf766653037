"""Desk-scale run plus the regularity checklist.

    python scripts/desk_run.py --out out/desk [--seed 0]
"""
from __future__ import annotations

import argparse
import time

from agentecon import desk_config, run
from agentecon.analysis import analyze
from agentecon.catalog import load_goods


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/desk")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    result = run(desk_config(seed=args.seed), out_dir=args.out)
    elapsed = time.perf_counter() - t0
    if result.error:
        raise SystemExit(f"run failed: {result.error}")
    last = result.trace.records[-1]["indicators"]
    print(f"{len(result.trace.records)} steps in {elapsed:.2f}s; final GDP {last['nominal_gdp'] / 100:.2f}, "
          f"unemployment {last['unemployment']:.3f}, firms {last['firms']}")
    for rep in analyze(result.trace, f"{args.out}/analysis", names=[g.name for g in load_goods()]):
        print(f"  {rep.regularity:11s} {rep.verdict}")


if __name__ == "__main__":
    main()
