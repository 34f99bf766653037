"""Price-impulse experiment: the same seeded economy with an upward and a
downward shock to seven goods, and months until each returns near its
pre-shock mean.

    python scripts/impulse_experiment.py --out out/impulse [--trigger 30] [--desk]
"""
from __future__ import annotations

import argparse

from agentecon import RunConfig, Scenario, desk_config, run
from agentecon.analysis import impulse_report, write_impulse
from agentecon.catalog import load_goods


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/impulse")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trigger", type=int, default=None, help="shock step (default: 12 months into phase 2)")
    ap.add_argument("--desk", action="store_true", help="use the 20-household desk configuration")
    args = ap.parse_args()
    base = desk_config(seed=args.seed) if args.desk else RunConfig(seed=args.seed)
    trigger = args.trigger if args.trigger is not None else base.phase1_steps + 12
    names = [g.name for g in load_goods()]
    for kind in ("price-impulse-up", "price-impulse-down"):
        cfg = base.replace(scenarios=(Scenario(kind, trigger),)).validate()
        result = run(cfg, out_dir=f"{args.out}/{kind}")
        if result.error:
            raise SystemExit(f"{kind} failed: {result.error}")
        rep = impulse_report(result.trace, kind)
        write_impulse(rep, f"{args.out}/{kind}/impulse.csv")
        print(f"{kind} at step {trigger} (x{rep.factor}):")
        for g in rep.goods:
            back = "censored" if g.censored else f"{g.months_to_return} months"
            print(f"  {names[g.good]:18s} pre-mean {g.pre_mean / 100:8.2f}  back within 10%: {back}")


if __name__ == "__main__":
    main()
