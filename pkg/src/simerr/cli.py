"""Command line entry point.

Exit status: 0 on success, 1 when the run finished with warnings, 2 on error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .covariance import CovModeConfig
from .exceptions import SimErrError
from .fileio import dumps, ingest, read_config_file, read_report
from .harness import CoverageReport, CoverageStudyConfig, summarize_coverage
from .pipeline import AnalysisConfig, analyze, parse_targets
from .region import ConfidenceRegion
from .replicate import coverage_payload, run_presets, run_study

log = logging.getLogger("simerr")

EXIT_OK, EXIT_WARN, EXIT_ERROR = 0, 1, 2


def _batch_size(text: str) -> int | None:
    if text.lower() == "auto":
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("batch size must be a positive integer or 'auto'")
    return value


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _add_mode_flags(p: argparse.ArgumentParser, default_mode: str | None = "iid") -> None:
    p.add_argument("--mode", choices=["iid", "mcmc"], default=default_mode,
                   help="IID sample covariance or batch means (default: %(default)s)")
    p.add_argument("--batch-size", type=_batch_size, default=None, metavar="auto|INT",
                   help="batch size for --mode mcmc (default: floor(sqrt(n)))")


def _add_input_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--input", type=Path, required=required, help="CSV or JSON file of draws")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="input format (default: from the file extension)")
    p.add_argument("--no-header", dest="header", action="store_false",
                   help="CSV has no header row; columns are named c1..cd")
    p.add_argument("--burn-in", type=int, default=0, help="leading draws to discard")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simerr",
        description="Simultaneous Monte Carlo error for sample means and quantiles.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate targets and build confidence regions")
    p.add_argument("--config", type=Path, help="key = value file supplying flag defaults")
    _add_input_flags(p, required=False)
    p.add_argument("--means", default="", help="comma-separated columns whose means to estimate")
    p.add_argument("--quantiles", default="", metavar="col:q[,col:q...]",
                   help="quantile targets")
    p.add_argument("--alpha", type=float, default=0.10)
    _add_mode_flags(p)
    p.add_argument("--seed", type=int, default=0, help="MVN integration seed")
    p.add_argument("--cov-tol", type=float, default=1e-3)
    p.add_argument("--out", type=Path, help="report JSON path (default: stdout)")
    p.add_argument("--svg", type=Path, help="density-with-bands figure")
    p.add_argument("--csv", type=Path, help="interval table")

    p = sub.add_parser("coverage-study", help="repeated-experiment coverage of the three regions")
    p.add_argument("--config", type=Path)
    p.add_argument("--sampler", choices=["iid", "mh"], default="iid")
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--n", type=int, default=10_000, help="draws per replication")
    p.add_argument("--alphas", type=_float_list, default=(0.10, 0.20))
    p.add_argument("--burn-in", type=int, default=0)
    _add_mode_flags(p, default_mode=None)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--meta-alpha", type=float, default=0.05,
                   help="level of the intervals on the coverage estimates")
    p.add_argument("--paper-scale", action="store_true", help="2000 replications")
    p.add_argument("--out", type=Path)
    p.add_argument("--svg", type=Path, help="coverage chart")

    p = sub.add_parser("plot", help="render a figure from a saved report")
    p.add_argument("--kind", choices=["density", "coverage", "panels"], required=True)
    p.add_argument("--report", type=Path, required=True)
    _add_input_flags(p, required=False)
    p.add_argument("--column", help="column to draw for --kind density")
    p.add_argument("--method", choices=["uncorrected", "simultaneous", "bonferroni"],
                   default="simultaneous")
    p.add_argument("--meta-alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", type=Path, required=True)

    p = sub.add_parser("replicate-paper", help="run the worked examples end to end")
    p.add_argument("--preset", choices=["mixture", "coverage", "schools", "all"], default="all")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--quick", action="store_true", help="small sizes for smoke testing")
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Inject ``--key value`` pairs from a --config file ahead of explicit flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    injected: list[str] = []
    for key, value in read_config_file(argv[i + 1]).items():
        if key == "no-header":
            if value.lower() in ("1", "true", "yes"):
                injected.append("--no-header")
            continue
        injected += [f"--{key}", value]
    rest = argv[:i] + argv[i + 2 :]
    # explicit flags come later, so they override the file
    return rest[:1] + injected + rest[1:]


def _cmd_analyze(args) -> int:
    if args.input is None:
        raise SimErrError("analyze needs --input (or an input key in --config)")
    spec = parse_targets(args.means, args.quantiles)
    config = AnalysisConfig(
        input=args.input,
        spec=spec,
        format=args.format,
        mode=CovModeConfig(args.mode, args.batch_size),
        alpha=args.alpha,
        burn_in=args.burn_in,
        seed=args.seed,
        header=args.header,
        out=args.out,
        svg=args.svg,
        csv=args.csv,
        cov_tol=args.cov_tol,
    )
    report = analyze(config)
    if args.out is None:
        sys.stdout.write(dumps(report.to_dict()))
    for msg in report.warnings:
        log.warning(msg)
    return EXIT_WARN if report.warnings else EXIT_OK


def _cmd_coverage(args) -> int:
    from .plotting import plot_coverage_chart

    mode = CovModeConfig(args.mode, args.batch_size) if args.mode else None
    config = CoverageStudyConfig(
        sampler=args.sampler,
        replications=2000 if args.paper_scale else args.replications,
        n_per_rep=args.n,
        alphas=args.alphas,
        master_seed=args.seed,
        cov_mode=mode,
        burn_in=args.burn_in,
    )
    report, summary, notes = run_study(config, args.workers, args.meta_alpha, args.seed)
    text = dumps(coverage_payload(report, summary, notes))
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.svg:
        plot_coverage_chart(summary, args.svg)
    for msg in notes:
        log.warning(msg)
    return EXIT_WARN if notes else EXIT_OK


def _cmd_plot(args) -> int:
    from .plotting import plot_coverage_chart, plot_credible_panels, plot_density_bands

    if args.kind == "coverage":
        raw = json.loads(args.report.read_text(encoding="utf-8"))
        if "summary" in raw:
            summary = ConfidenceRegion.from_dict(raw["summary"])
        else:
            summary = summarize_coverage(CoverageReport.from_dict(raw), args.meta_alpha, args.seed)
        plot_coverage_chart(summary, args.svg)
        return EXIT_OK
    if args.input is None:
        raise SimErrError(f"--kind {args.kind} needs --input with the draws")
    report = read_report(args.report)
    samples = ingest(args.input, args.format, args.burn_in, args.header)
    if args.kind == "density":
        plot_density_bands(samples, report, args.svg, column=args.column, method=args.method)
    else:
        plot_credible_panels(samples, report, args.svg, method=args.method)
    return EXIT_OK


def _cmd_replicate(args) -> int:
    notes = run_presets(args.preset, args.out, seed=args.seed, workers=args.workers,
                        replications=args.replications, quick=args.quick)
    for msg in notes:
        log.warning(msg)
    return EXIT_WARN if notes else EXIT_OK


COMMANDS = {
    "analyze": _cmd_analyze,
    "coverage-study": _cmd_coverage,
    "plot": _cmd_plot,
    "replicate-paper": _cmd_replicate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        # global flags sit before the subcommand
        head = [a for a in argv[:1] if a in ("-v", "--verbose")]
        rest = argv[len(head):]
        args = parser.parse_args(head + _apply_config_file(rest))
    except SimErrError as exc:
        print(f"simerr: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="simerr: %(levelname)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (SimErrError, ValueError, OSError) as exc:
        module = getattr(exc, "module", None)
        where = f" [{module}]" if module else ""
        print(f"simerr: error{where}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
