"""Command-line entry point: ``fgiqa score|batch|eval|sweep|dump-filters``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .batch import (
    SCORE_COLUMNS,
    RunConfig,
    load_manifest,
    read_scores_csv,
    run_batch,
    write_batch_json,
    write_failures_csv,
    write_scores_csv,
)
from .config import ABLATION_PRESETS, SOBEL_MODES, MetricConfig, load_config
from .errors import FgiqaError
from .evaluation import EvalRecord, evaluate_groups
from .fusion import psnr, score_pair
from .images import load_image
from .sweep import format_table, parse_range, sweep
from .texture import build_bank, write_bank

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2

log = logging.getLogger("fgiqa")


def _metric_config(args) -> MetricConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.sobel:
        overrides["sobel"] = args.sobel
    if args.texture_normalize:
        tex = dataclasses.replace(cfg.texture, normalize=args.texture_normalize == "on")
        overrides["texture"] = tex
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _run_config(args) -> RunConfig:
    return RunConfig(
        metric=_metric_config(args),
        workers=getattr(args, "workers", 1),
        output_format=getattr(args, "format", "csv"),
        fit_before_plcc=not getattr(args, "no_fit", False),
        pooled_plcc=getattr(args, "pooled_plcc", False),
        ablation=args.ablation,
    )


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_score(args) -> int:
    run = _run_config(args)
    ref = load_image(args.ref)
    dis = load_image(args.dist)
    score = score_pair(ref, dis, run.effective_metric)
    db = psnr(ref, dis)
    payload = {
        "ref": args.ref,
        "dist": args.dist,
        "q": score.q,
        "e_g": score.e_g,
        "std_g": score.std_g,
        "e_t": score.e_t,
        "std_t": score.std_t,
        "psnr_db": "inf" if db == float("inf") else db,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return EXIT_OK


def _report_failures(result, args) -> None:
    for f in result.failures:
        log.error("line %d (%s, %s): %s", f.line, f.ref, f.dist, f.error)
    if args.failures and result.failures:
        Path(args.failures).write_text(write_failures_csv(result.failures), encoding="utf-8")


def cmd_batch(args) -> int:
    run = _run_config(args)
    manifest = load_manifest(args.manifest)
    result = run_batch(manifest, run)
    text = write_batch_json(result) + "\n" if run.output_format == "json" else write_scores_csv(result.records)
    _emit(text, args.output)
    _report_failures(result, args)
    return EXIT_PARTIAL if result.failures else EXIT_OK


def _load_scored(path: str, args):
    """Scores CSV as-is, or a manifest with ground truth scored on the fly."""
    text = Path(path).read_text(encoding="utf-8")
    header = text.splitlines()[0].split(",") if text else []
    if tuple(h.strip() for h in header[: len(SCORE_COLUMNS)]) == SCORE_COLUMNS:
        return read_scores_csv(text), []
    manifest = load_manifest(path)
    if not manifest.has_ground_truth:
        raise FgiqaError(f"{path}: manifest has no gt column values to evaluate against")
    result = run_batch(manifest, _run_config(args))
    _report_failures(result, args)
    return result.records, result.failures


def cmd_eval(args) -> int:
    run = _run_config(args)
    records, failures = _load_scored(args.input, args)
    if any(r.ground_truth is None for r in records):
        raise FgiqaError("every scored record needs a ground-truth value (gt column)")
    evals = [EvalRecord(r.group, r.bitrate, r.q, r.ground_truth) for r in records]
    report = evaluate_groups(evals, fit_before_plcc=run.fit_before_plcc, pooled_plcc=run.pooled_plcc)
    _emit(report.to_json() + "\n" if run.output_format == "json" else report.to_csv(), args.output)
    if report.excluded_cells:
        log.warning("%d cell(s) had undefined correlations and were excluded", len(report.excluded_cells))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_sweep(args) -> int:
    run = _run_config(args)
    records, failures = _load_scored(args.input, args)
    alphas = parse_range(args.alpha)
    betas = parse_range(args.beta)
    table = sweep(records, alphas, betas, run.effective_metric)
    _emit(format_table(table, alphas, betas), args.output)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_dump_filters(args) -> int:
    cfg = _metric_config(args)
    bank = build_bank(args.width, args.height, cfg.texture)
    if not args.output or args.output == "-":
        write_bank(bank, sys.stdout.buffer)
    else:
        with open(args.output, "wb") as fh:
            write_bank(bank, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config overriding the defaults (falls back to $FGIQA_CONFIG)")
    common.add_argument("--ablation", choices=ABLATION_PRESETS + ("custom",), type=str.upper, default=None)
    common.add_argument("--sobel", choices=SOBEL_MODES, default=None)
    common.add_argument("--texture-normalize", choices=("on", "off"), default=None)
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    pooled = argparse.ArgumentParser(add_help=False)
    pooled.add_argument("--workers", type=int, default=1)
    pooled.add_argument("--format", choices=("csv", "json"), default="csv")
    pooled.add_argument("--failures", help="write per-row failures to this CSV")

    parser = argparse.ArgumentParser(prog="fgiqa", description="Fine-grained compressed image quality metric.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="score one reference/distorted pair (JSON)")
    p.add_argument("ref")
    p.add_argument("dist")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch", parents=[common, pooled], help="score every row of a manifest CSV")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", parents=[common, pooled], help="grouped SRCC/KRCC/PLCC report")
    p.add_argument("input", help="scores CSV with a gt column, or a manifest with gt")
    p.add_argument("--no-fit", action="store_true", help="skip the logistic fit before PLCC")
    p.add_argument("--pooled-plcc", action="store_true", help="PLCC over all records of a bitrate")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common, pooled], help="(alpha, beta) grid of average SRCC")
    p.add_argument("input", help="scores CSV with a gt column, or a manifest with gt")
    p.add_argument("--alpha", default="0.1:1.0:0.1")
    p.add_argument("--beta", default="0.1:1.0:0.1")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dump-filters", parents=[common], help="write the Log-Gabor gains in binary form")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.set_defaults(func=cmd_dump_filters)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (FgiqaError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
