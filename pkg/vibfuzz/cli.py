"""
Command-line frontend: extract → compile → diagnose / experiment / bench / plot, plus a synthetic fixture emitter.

Exit codes: 0 on success (an undefined score is a success), 1 on usage errors, 2 on data, schema,
configuration or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from vibfuzz.harness.config import FAMILY_KINDS, PipelineConfig, load_config
from vibfuzz.harness.diagharness import FAMILY_ORDER, Diagnoser, DiagnosticHarness
from vibfuzz.storage.artifacts import ArtifactStorage, dumps
from vibfuzz.tools import fixture_gen, plots, report_builder
from vibfuzz.tools.fuzzcore import build_families, build_output_universe, infer, render_decomposition
from vibfuzz.tools.intervalgebra import diagnostics_report
from vibfuzz.tools.vibdata import iter_frames, summarize_frames

logger = logging.getLogger("vibfuzz")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

FAMILY_FLAGS = ("kind", "sigma_divisor", "shoulder_fraction", "gauss_floor")


class UsageError(Exception):
    pass


class VibParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def cmd_extract(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    data_path = _require(args.data or config.data_path, "--data")
    summary = summarize_frames(iter_frames(Path(data_path)))
    table = summary.table
    for state, share in summary.distribution.items():
        print(f"{state.code}: {100.0 * share:.1f}%")
    for row in table.rows:
        print(f"  {row.state.code}  v=[{row.iv.lo:.6g}, {row.iv.hi:.6g}]  g=[{row.ig.lo:.6g}, {row.ig.hi:.6g}]")

    out = args.out or config.table_path
    if out:
        storage.save_table(Path(out), table)
    if args.per_position:
        for position, sub_table in summary.by_position.items():
            print(f"[{position}] {len(sub_table)} states")
            if out:
                target = Path(out)
                storage.save_table(target.with_name(f"{target.stem}.{position}{target.suffix}"), sub_table)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    table_path = _require(args.table or config.table_path, "--table")
    table = storage.load_table(Path(table_path))
    diagnoser = Diagnoser.from_table(table, config)
    print(diagnoser.rulebase.summary())
    print(diagnostics_report(diagnoser.rulebase))
    out = args.out or config.rulebase_path
    if out:
        storage.save_rulebase(Path(out), diagnoser.rulebase, diagnoser.families)
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    if not (math.isfinite(args.x_v) and math.isfinite(args.x_g)):
        raise UsageError("x_v and x_g must be finite numbers")
    diagnoser = _load_diagnoser(args, config, storage)
    result = diagnoser.diagnose(args.x_v, args.x_g)
    if not result.fired:
        print(f"no rule fired latency={result.latency_us:.1f}us")
    else:
        print(
            f"score={result.score:.2f} {render_decomposition(result.decomposition)} "
            f"latency={result.latency_us:.1f}us"
        )
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    table_path = _require(args.table or config.table_path, "--table")
    table = storage.load_table(Path(table_path))
    harness = DiagnosticHarness(config)
    harness.compile(table)
    results = harness.experiment(table, [args.kind] if args.kind else None)

    if args.format == "json":
        text = dumps(report_builder.build_experiment_payload(results, harness.logs))
        suffix = ".json"
    else:
        text = report_builder.build_comparison_markdown(results)
        suffix = ".md"
    out_dir = args.out_dir or config.report_dir
    if out_dir:
        storage.save_text(Path(out_dir) / f"experiment{suffix}", text)
    else:
        sys.stdout.write(text)
    for rank, result in enumerate(results, start=1):
        print(
            f"{rank}. {result.kind}: detection {100.0 * result.summary['detection_rate']:.2f}% "
            f"usable {100.0 * result.summary['usable_rate']:.2f}% undefined {result.summary['undefined']}",
            file=sys.stderr if not out_dir else sys.stdout,
        )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    diagnoser = _load_diagnoser(args, config, storage)
    stats = DiagnosticHarness(config).bench(diagnoser)
    kind = diagnoser.families.kind
    payload = report_builder.build_bench_payload(stats, kind)
    if args.format == "md":
        text = report_builder.build_bench_markdown(stats, kind)
    else:
        text = json.dumps(payload, sort_keys=True) + "\n"
    out_dir = args.out_dir or config.report_dir
    if out_dir:
        target = Path(out_dir) / f"bench.{args.format}"
        if args.format == "json":
            storage.save(target, payload)
        else:
            storage.save_text(target, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    out_dir = Path(_require(args.out_dir or config.report_dir, "--out-dir"))
    table = None
    if args.table or not (args.rulebase or config.rulebase_path):
        table = storage.load_table(Path(_require(args.table or config.table_path, "--table or --rulebase")))
        rulebase = DiagnosticHarness(config).compile(table)
    else:
        rulebase, _ = storage.load_rulebase(Path(args.rulebase or config.rulebase_path))
    kinds = [args.kind] if args.kind else list(FAMILY_ORDER)
    families = [
        build_families(rulebase, kind, config.sigma_divisor, config.shoulder_fraction, config.gauss_floor)
        for kind in kinds
    ]
    universe = build_output_universe(config.grid_points)
    aggregated = None
    if args.at:
        x_v, x_g = args.at
        chosen = next(family for family in families if family.kind == config.kind)
        aggregated = infer(x_v, x_g, rulebase, chosen, universe)
    for name, path in plots.render_all(out_dir, table, families, universe, aggregated).items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_gen_fixture(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> int:
    frames = fixture_gen.generate_frames(seed=config.seed, n_frames=args.frames)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        fixture_gen.write_csv(frames, out)
    else:
        fixture_gen.write_ndjson(frames, out)
    if args.table_out:
        storage.save_table(Path(args.table_out), fixture_gen.seven_state_table(config.seed))
    print(f"wrote {len(frames)} frames to {out}")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "compile": cmd_compile,
    "diagnose": cmd_diagnose,
    "experiment": cmd_experiment,
    "bench": cmd_bench,
    "plot": cmd_plot,
    "gen-fixture": cmd_gen_fixture,
}


def build_parser() -> VibParser:
    parser = VibParser(prog="vibfuzz", description="Fuzzy vibration diagnosis pipeline.")
    parser.add_argument("--config", type=Path, help="key=value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="derive per-state RMS intervals from labeled frames")
    extract.add_argument("--data", help="NDJSON or CSV frames")
    extract.add_argument("--out", help="interval table JSON")
    extract.add_argument("--per-position", action="store_true", help="also extract one table per sensor position")

    compile_ = sub.add_parser("compile", help="compile an interval table into a rule base")
    compile_.add_argument("--table", help="interval table JSON")
    compile_.add_argument("--out", help="rule base JSON")
    _family_args(compile_)

    diagnose = sub.add_parser("diagnose", help="diagnose one (v, g) reading")
    diagnose.add_argument("x_v", type=float, help="RMS of the velocity spectrum")
    diagnose.add_argument("x_g", type=float, help="RMS of the acceleration spectrum")
    diagnose.add_argument("--rulebase", help="rule base JSON")
    _family_args(diagnose)

    experiment = sub.add_parser("experiment", help="run the 14-probe protocol for every membership family")
    experiment.add_argument("--table", help="interval table JSON")
    experiment.add_argument("--out-dir", help="directory for the report")
    experiment.add_argument("--format", choices=("md", "json"), default="md")
    _family_args(experiment)
    experiment.add_argument("--probe-offset", type=float, help="probe offset as a fraction of interval width")

    bench = sub.add_parser("bench", help="measure single-diagnosis latency")
    bench.add_argument("--rulebase", help="rule base JSON")
    bench.add_argument("--out-dir", help="directory for bench.json or bench.md")
    bench.add_argument("--format", choices=("md", "json"), default="json")
    bench.add_argument("--iterations", type=int, help="timed iterations")
    _family_args(bench)

    plot = sub.add_parser("plot", help="render interval, membership and output figures")
    plot.add_argument("--table", help="interval table JSON (also draws the interval chart)")
    plot.add_argument("--rulebase", help="rule base JSON, used when no table is given")
    plot.add_argument("--out-dir", help="directory for the PNG files")
    plot.add_argument("--at", nargs=2, type=float, metavar=("X_V", "X_G"), help="overlay the aggregated output for this reading")
    _family_args(plot)

    gen = sub.add_parser("gen-fixture", help="emit a seeded synthetic dataset")
    gen.add_argument("--out", required=True, help="target file (.ndjson or .csv)")
    gen.add_argument("--seed", type=int, help="random seed")
    gen.add_argument("--frames", type=int, default=1000, help="number of frames")
    gen.add_argument("--table-out", help="also write the ground-truth interval table")
    return parser


def _family_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=FAMILY_KINDS, help="membership family")
    parser.add_argument("--sigma-divisor", type=float, help="gaussian sigma = width / divisor")
    parser.add_argument("--shoulder-fraction", type=float, help="trapezoid shoulder as a fraction of width")
    parser.add_argument("--gauss-floor", type=float, help="gaussian degrees below this do not fire rules")


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    mapping = {
        "kind": "kind",
        "sigma_divisor": "sigma_divisor",
        "shoulder_fraction": "shoulder_fraction",
        "gauss_floor": "gauss_floor",
        "probe_offset": "probe_offset",
        "iterations": "bench_iterations",
        "seed": "seed",
    }
    return {field: getattr(args, attr) for attr, field in mapping.items() if getattr(args, attr, None) is not None}


def _load_diagnoser(args: argparse.Namespace, config: PipelineConfig, storage: ArtifactStorage) -> Diagnoser:
    path = _require(args.rulebase or config.rulebase_path, "--rulebase")
    rulebase, families = storage.load_rulebase(Path(path))
    # any family flag rebuilds the stored families; the stored kind is kept unless --kind names another
    if families is None or any(getattr(args, flag) is not None for flag in FAMILY_FLAGS):
        kind = args.kind or (families.kind if families is not None else None)
        return Diagnoser.from_rulebase(rulebase, config, kind)
    return Diagnoser(rulebase, families, build_output_universe(config.grid_points))


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise UsageError(f"{flag} is required (or set it in the configuration)")
    return value


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](args, config, ArtifactStorage())
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        # FrameValidationError, SchemaError and ConfigError are ValueErrors
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
