"""Command-line entry point: run, shock, resume, analyze and map export."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis
from .catalog import load_goods
from .config import ConfigError, RunConfig, Scenario, load_config
from .engine import CheckpointIOError, SchemaVersionMismatch, resume, run
from .spatial import export_snapshot, replay_map
from .trace import TraceError, read_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STEP = 3
EXIT_CHECKPOINT = 4
EXIT_ANALYSIS = 5
EXIT_IO = 6


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "backend", None):
        changes["backend"] = args.backend
    if changes:
        cfg = cfg.replace(**changes)
    return cfg.validate()


def _progress(quiet: bool):
    if quiet:
        return None

    def show(rec):
        ind = rec["indicators"]
        print(f"step {rec['step']:4d}  phase {rec['phase']}  population {ind['population']:4d}  "
              f"firms {ind['firms']:4d}  unemployment {ind['unemployment']:.3f}", file=sys.stderr)
    return show


def _finish_run(result, out: Optional[str]) -> int:
    if result.error is not None:
        print(f"error: StepError: {result.error}", file=sys.stderr)
        return EXIT_STEP
    if out:
        print(f"wrote {Path(out) / 'trace.jsonl'}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.out_dir
    return _finish_run(run(cfg, out_dir=out, until=args.until, on_step=_progress(args.quiet)), out)


def cmd_shock(args) -> int:
    cfg = _config(args)
    sc = Scenario(args.scenario, args.trigger, args.goods, args.magnitude)
    cfg = cfg.replace(scenarios=cfg.scenarios + (sc,)).validate()
    out = args.out or cfg.out_dir
    return _finish_run(run(cfg, out_dir=out, until=args.until, on_step=_progress(args.quiet)), out)


def cmd_resume(args) -> int:
    out = args.out or str(Path(args.checkpoint).parent)
    return _finish_run(resume(args.checkpoint, out_dir=out, until=args.until, on_step=_progress(args.quiet)), out)


def cmd_analyze(args) -> int:
    trace = read_trace(args.trace)
    only = None if args.regularity in (None, "all") else args.regularity.split(",")
    if only:
        bad = [r for r in only if r not in analysis.CHECKLIST]
        if bad:
            raise analysis.AnalysisError(f"unknown regularities {bad}; choose from {analysis.CHECKLIST}")
    names = [g.name for g in load_goods()]
    reports = analysis.analyze(trace, args.out, only, names)
    if args.external:
        q = analysis.load_external_quarters(args.external)
        ext = []
        for fn in (analysis.phillips, analysis.okun, analysis.beveridge, analysis.volatility):
            try:
                ext.append(fn(q))
            except analysis.InsufficientData as exc:
                ext.append(analysis.RegularityReport(fn.__name__, "insufficient-data", note=str(exc)))
        analysis.write_report(ext, Path(args.out) / "external_regularities.csv")
    for rep in reports:
        print(f"{rep.regularity:11s} {rep.verdict}")
    return EXIT_OK


def cmd_map(args) -> int:
    trace = read_trace(args.trace)
    initial = trace.header.get("initial_map")
    if initial is None:
        raise TraceError("trace header carries no initial map")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    last = trace.records[-1]["step"] if trace.records else -1
    try:
        steps = ([-1 if s.strip() == "initial" else int(s) for s in args.steps.split(",")]
                 if args.steps else [last])
    except ValueError as exc:
        raise TraceError(f"bad --steps value {args.steps!r}") from exc
    for step in steps:
        if not -1 <= step <= last:
            raise TraceError(f"step {step} not in trace (0..{last})")
        name = "map_initial.svg" if step < 0 else f"map_{step:04d}.svg"
        path = export_snapshot(replay_map(initial, trace.records, step), step, out / name)
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agentecon", description="Agent-based city economy simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings from the engine")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--config", help="YAML run configuration (defaults if omitted)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--backend", choices=("heuristic", "remote", "replay"))
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--until", type=int, help="stop before this step (checkpoint and resume later)")
        sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("run", help="run a simulation")
    run_opts(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("shock", help="run with an ad-hoc price-impulse scenario")
    run_opts(sp)
    sp.add_argument("--scenario", required=True, choices=("price-impulse-up", "price-impulse-down"))
    sp.add_argument("--trigger", type=int, required=True, help="step at which prices jump")
    sp.add_argument("--goods", type=int, default=7, help="number of goods hit")
    sp.add_argument("--magnitude", type=float, help="relative price change (default +0.5 / -0.5)")
    sp.set_defaults(func=cmd_shock)

    sp = sub.add_parser("resume", help="continue a checkpointed run")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--out", help="directory holding the trace to extend (default: checkpoint's directory)")
    sp.add_argument("--until", type=int)
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_resume)

    sp = sub.add_parser("analyze", help="compute the stylized-facts checklist over a trace")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--regularity", default="all",
                    help="all, or a comma list of " + ",".join(analysis.CHECKLIST))
    sp.add_argument("--external", help="external quarterly CSV with u, pi, gdp, v columns")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("map", help="city map snapshots")
    msub = sp.add_subparsers(dest="map_command", required=True)
    ep = msub.add_parser("export", help="write one SVG per requested step from a trace")
    ep.add_argument("--trace", required=True)
    ep.add_argument("--steps", help="comma list of steps (default: last); 'initial' is the layout before step 0")
    ep.add_argument("--out", required=True)
    ep.set_defaults(func=cmd_map)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointIOError, SchemaVersionMismatch) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (analysis.AnalysisError, TraceError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
