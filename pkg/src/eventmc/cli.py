"""Command-line front end.

Subcommands: generate-library, run, bench, compare-modes, scaling.
Exit codes: 0 success, 2 configuration error, 3 runtime error,
4 reproducibility-tripwire failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import config as cfgmod
from . import presets, report, xslib
from .errors import ConfigurationError, EventMCError, ReproducibilityError
from .geometry import Pincell
from .replication import run_replicated, warm_up, weak_scaling_study
from .transport import RunConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_TRIPWIRE = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--out", default="eventmc_out", metavar="DIR",
                   help="output directory (default: eventmc_out)")
    p.add_argument("--quiet", action="store_true",
                   help="suppress progress output")


def _add_run_flags(p: argparse.ArgumentParser, workers: bool = True) -> None:
    p.add_argument("--particles", type=int, default=None)
    p.add_argument("--inactive", type=int, default=None)
    p.add_argument("--active", type=int, default=None)
    p.add_argument("--mode", choices=("history", "event"), default=None)
    p.add_argument("--sort", dest="sort", action="store_true", default=None)
    p.add_argument("--no-sort", dest="sort", action="store_false")
    p.add_argument("--sort-every-n", type=int, default=None)
    p.add_argument("--max-in-flight", type=int, default=None)
    p.add_argument("--tally-mode", choices=("fused", "naive"), default=None)
    p.add_argument("--accel",
                   choices=("binary", "double_index", "unionized"),
                   default=None)
    if workers:
        p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reduction", choices=("deterministic", "fast"),
                   default=None)
    p.add_argument("--gridpoints", type=int, default=None)
    p.add_argument("--n-axial", type=int, default=None)


_FLAG_TO_KEY = {
    "particles": "particles", "inactive": "inactive", "active": "active",
    "mode": "mode", "sort": "sort", "sort_every_n": "sort_every_n",
    "max_in_flight": "max_in_flight", "tally_mode": "tally_mode",
    "accel": "accel", "workers": "workers", "reduction": "reduction",
    "gridpoints": "gridpoints", "n_axial": "n_axial", "seed": "seed",
}


def _overrides_from(args: argparse.Namespace) -> dict:
    out = {}
    for attr, key in _FLAG_TO_KEY.items():
        val = getattr(args, attr, None)
        if val is not None:
            out[key] = val
    return out


def _say(args, *msg) -> None:
    if not args.quiet:
        print(*msg)


def cmd_generate_library(args) -> int:
    lib = xslib.generate_synthetic_library(
        args.nuclides, args.gridpoints, args.materials, args.per_material,
        args.seed if args.seed is not None else 42)
    outdir = os.path.dirname(os.path.abspath(args.output))
    os.makedirs(outdir, exist_ok=True)
    xslib.save_library(lib, args.output)
    _say(args, f"wrote {args.output} "
               f"({lib.n_nuclides} nuclides, {lib.n_materials} materials, "
               f"fingerprint {xslib.library_fingerprint(lib)[:16]})")
    return EXIT_OK


def cmd_run(args) -> int:
    values = cfgmod.parse_config_file(args.config)
    if values.get("library") and not os.path.isabs(values["library"]):
        values["library"] = os.path.join(
            os.path.dirname(os.path.abspath(args.config)), values["library"])
    values.update(_overrides_from(args))
    problem = cfgmod.build_problem(values)
    _say(args, f"running {problem.run.mode} mode, "
               f"{problem.run.particles_per_batch} particles x "
               f"{problem.run.n_batches} batches")
    result = run_replicated(problem.run, problem.library, problem.pincell)
    report.write_run_outputs(args.out, result)
    _say(args, report.summary_text(result))
    _say(args, f"outputs in {args.out}/")
    return EXIT_OK


def _bench_problem(args) -> cfgmod.Problem:
    values = {"preset": "depleted_pincell", "particles": 10000,
              "inactive": 5, "active": 5}
    values.update(_overrides_from(args))
    if getattr(args, "inactive_only", False):
        values["active"] = 0
    return cfgmod.build_problem(values)


def cmd_bench(args) -> int:
    problem = _bench_problem(args)
    _say(args, "warming up kernels ...")
    warm_up()
    cfg = problem.run
    _say(args, f"depleted pincell bench: mode={cfg.mode} sort={cfg.sort_enabled} "
               f"cap={cfg.max_in_flight} tally={cfg.tally_mode} accel={cfg.accel}")
    result = run_replicated(cfg, problem.library, problem.pincell)
    os.makedirs(args.out, exist_ok=True)
    inactive_only = bool(args.inactive_only)
    row = {
        "mode": cfg.mode, "sort": cfg.sort_enabled,
        "max_in_flight": cfg.max_in_flight if cfg.mode == "event" else "-",
        "tally_mode": cfg.tally_mode, "accel": cfg.accel,
        "inactive_rate": result.inactive_rate or 0.0,
    }
    if not inactive_only:
        row["active_rate"] = result.active_rate or 0.0
    for key in report.TIMING_KEYS:
        row[key] = result.timings.get(key, 0.0)
    report.write_bench_csv(os.path.join(args.out, "bench.csv"), row,
                           inactive_only)
    report.write_summary(os.path.join(args.out, "summary.txt"), result)
    report.write_timings_csv(os.path.join(args.out, "timings.csv"), result)
    _say(args, f"inactive particles/sec: {result.inactive_rate:,.0f}")
    if not inactive_only and result.active_rate:
        _say(args, f"active particles/sec:   {result.active_rate:,.0f}")
    _say(args, "kernel seconds: " + "  ".join(
        f"{k}={result.timings.get(k, 0.0):.3f}" for k in report.TIMING_KEYS))
    _say(args, f"outputs in {args.out}/")
    return EXIT_OK


def _parse_list(raw: str, conv, what: str):
    try:
        return [conv(tok.strip()) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse {what} list {raw!r}")


def cmd_compare_modes(args) -> int:
    modes = _parse_list(args.modes, str, "mode")
    sorts = [s in ("on", "true", "1") for s in
             _parse_list(args.sorts, str, "sort")]
    caps = _parse_list(args.caps, int, "cap")
    tmodes = _parse_list(args.tally_modes, str, "tally mode")
    values = {"preset": "depleted_pincell", "particles": 2000,
              "inactive": 2, "active": 3}
    values.update(_overrides_from(args))
    problem = cfgmod.build_problem(values)
    warm_up()

    cells = []
    for mode in modes:
        if mode == "history":
            for tm in tmodes:
                cells.append((mode, None, None, tm))
        else:
            for sort in sorts:
                for cap in caps:
                    for tm in tmodes:
                        cells.append((mode, sort, cap, tm))
    index = xslib.build_unionized_index(
        problem.library, merged=problem.run.accel == "unionized") \
        if problem.run.accel != "binary" else None

    rows = []
    fingerprints = {}
    for i, (mode, sort, cap, tm) in enumerate(cells):
        cfg = replace(problem.run, mode=mode, tally_mode=tm,
                      sort_enabled=bool(sort) if sort is not None else True,
                      max_in_flight=cap if cap is not None else 10000,
                      perturb_particle=(args.perturb_stream
                                        if i == len(cells) - 1 else -1))
        _say(args, f"cell {i + 1}/{len(cells)}: mode={mode} sort={sort} "
                   f"cap={cap} tally={tm}")
        result = run_replicated(cfg, problem.library, problem.pincell,
                                index=index)
        rows.append({
            "mode": mode, "sort": "-" if sort is None else str(sort).lower(),
            "max_in_flight": "-" if cap is None else cap,
            "tally_mode": tm, "accel": cfg.accel,
            "inactive_rate": result.inactive_rate or 0.0,
            "active_rate": result.active_rate or 0.0,
        })
        fingerprints[(mode, sort, cap, tm)] = result.physics_fingerprint()

    # verify bit-identical physics across all cells before reporting
    unique = set(fingerprints.values())
    if len(unique) != 1:
        print("REPRODUCIBILITY FAILURE: physics outputs differ across cells",
              file=sys.stderr)
        for cell, fp in fingerprints.items():
            print(f"  {cell}: {fp}", file=sys.stderr)
        raise ReproducibilityError(
            f"{len(unique)} distinct physics fingerprints across "
            f"{len(cells)} cells")

    os.makedirs(args.out, exist_ok=True)
    report.write_compare_csv(os.path.join(args.out, "compare.csv"), rows)
    if args.svg:
        labels = [f"{m}/{'s' if s else 'ns'}/{c}/{t}"
                  if m == "event" else f"{m}/{t}"
                  for (m, s, c, t) in cells]
        report.svg_bar_chart(os.path.join(args.out, "compare.svg"), labels,
                             [r["active_rate"] for r in rows],
                             "mode comparison (depleted pincell)",
                             "active particles/sec")
    _say(args, f"PASS: all {len(cells)} cells produced bit-identical physics "
               f"({unique.pop()[:16]}...)")
    _say(args, f"outputs in {args.out}/")
    return EXIT_OK


def cmd_scaling(args) -> int:
    workers = _parse_list(args.workers, int, "workers")
    values = {"preset": "depleted_pincell", "inactive": 2, "active": 3,
              "particles": args.particles_per_worker}
    overrides = _overrides_from(args)
    overrides.pop("workers", None)  # scaling owns the worker list
    values.update(overrides)
    problem = cfgmod.build_problem(values)
    warm_up()
    _say(args, f"weak scaling over workers {workers}, "
               f"{args.particles_per_worker} particles per worker")
    rows = weak_scaling_study(problem.run, problem.library, problem.pincell,
                              workers, args.particles_per_worker)
    os.makedirs(args.out, exist_ok=True)
    report.write_scaling_csv(os.path.join(args.out, "scaling.csv"), rows)
    if args.svg:
        report.svg_scaling_chart(os.path.join(args.out, "scaling.svg"), rows,
                                 "weak scaling (fixed particles per worker)")
    for r in rows:
        _say(args, f"  W={r.workers:<3d} particles={r.workers * r.particles_per_worker:<8d} "
                   f"inactive={r.inactive_rate:,.0f}/s "
                   f"active={r.active_rate:,.0f}/s "
                   f"efficiency={r.efficiency:.3f}")
    _say(args, f"outputs in {args.out}/")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eventmc",
        description="Miniature continuous-energy Monte Carlo transport "
                    "engine with history- and event-based executors.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-library",
                       help="write a synthetic cross-section library file")
    g.add_argument("--nuclides", type=int, required=True)
    g.add_argument("--gridpoints", type=int, required=True)
    g.add_argument("--materials", type=int, required=True)
    g.add_argument("--per-material", type=int, required=True)
    g.add_argument("-o", "--output", required=True)
    _add_common(g)
    g.set_defaults(func=cmd_generate_library)

    r = sub.add_parser("run", help="run a config file")
    r.add_argument("config", help="path to a key = value config file")
    _add_run_flags(r)
    _add_common(r)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench",
                       help="depleted-pincell benchmark (251 fuel nuclides)")
    _add_run_flags(b)
    b.add_argument("--inactive-only", action="store_true",
                   help="measure inactive batches only (no tallying)")
    _add_common(b)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("compare-modes",
                       help="run a mode/sort/cap/tally matrix and verify "
                            "bit-identical physics")
    c.add_argument("--modes", default="history,event")
    c.add_argument("--sorts", default="on,off")
    c.add_argument("--caps", default="1000,10000")
    c.add_argument("--tally-modes", default="fused,naive")
    c.add_argument("--svg", action="store_true")
    c.add_argument("--perturb-stream", type=int, default=-1,
                   help=argparse.SUPPRESS)
    _add_run_flags(c)
    _add_common(c)
    c.set_defaults(func=cmd_compare_modes)

    s = sub.add_parser("scaling", help="weak-scaling study")
    s.add_argument("--workers", default="1,2,4")
    s.add_argument("--particles-per-worker", type=int, default=5000)
    s.add_argument("--svg", action="store_true")
    _add_run_flags(s, workers=False)
    _add_common(s)
    s.set_defaults(func=cmd_scaling)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReproducibilityError as exc:
        print(f"reproducibility tripwire: {exc}", file=sys.stderr)
        return EXIT_TRIPWIRE
    except EventMCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
