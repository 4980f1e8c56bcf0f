"""Manifest parsing, batch scoring and the scores CSV format."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .config import MetricConfig, apply_ablation
from .errors import FgiqaError, InvalidInputError
from .fusion import psnr, score_pair
from .images import load_image

MANIFEST_COLUMNS = ("ref", "dist", "group", "bitrate")
SCORE_COLUMNS = ("ref", "dist", "group", "bitrate", "q", "e_g", "std_g", "e_t", "std_t", "psnr_db")


class ManifestError(InvalidInputError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    ref: str
    dist: str
    group: str
    bitrate: str
    ground_truth: float | None = None
    base_dir: str = ""
    line: int = 0

    @property
    def ref_path(self) -> Path:
        return Path(self.base_dir, self.ref)

    @property
    def dist_path(self) -> Path:
        return Path(self.base_dir, self.dist)


@dataclass
class Manifest:
    rows: list[ManifestRow] = field(default_factory=list)

    @property
    def has_ground_truth(self) -> bool:
        return bool(self.rows) and self.rows[0].ground_truth is not None

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def parse_manifest(text: str | io.TextIOBase, base_dir: str | os.PathLike = "") -> Manifest:
    """Parse a ``ref,dist,group,bitrate[,gt]`` CSV.

    Paths stay as written; relative ones resolve against ``base_dir``.
    Errors name the offending line number.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise ManifestError("line 1: missing header row")
    header = [h.strip() for h in header]
    if tuple(header[:4]) != MANIFEST_COLUMNS or len(header) > 5 or (len(header) == 5 and header[4] != "gt"):
        raise ManifestError(f"line 1: header must be ref,dist,group,bitrate[,gt], got {','.join(header)}")
    ncols = len(header)
    rows = []
    gt_seen = set()
    for fields in reader:
        line = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != ncols:
            raise ManifestError(f"line {line}: expected {ncols} columns, got {len(fields)}")
        ref, dist, group, bitrate = (f.strip() for f in fields[:4])
        if not (ref and dist and group and bitrate):
            raise ManifestError(f"line {line}: empty path or identifier")
        gt = None
        if ncols == 5 and fields[4].strip():
            try:
                gt = float(fields[4])
            except ValueError:
                raise ManifestError(f"line {line}: ground truth {fields[4]!r} is not a number") from None
            if not math.isfinite(gt):
                raise ManifestError(f"line {line}: ground truth must be finite")
        gt_seen.add(gt is not None)
        rows.append(ManifestRow(ref, dist, group, bitrate, gt, os.fspath(base_dir), line))
    if len(gt_seen) > 1:
        raise ManifestError("ground truth must be given for every row or for none")
    return Manifest(rows)


def load_manifest(path: str | os.PathLike) -> Manifest:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_manifest(fh.read(), base_dir=path.parent)


@dataclass(frozen=True)
class ScoreRecord:
    ref: str
    dist: str
    group: str
    bitrate: str
    q: float
    e_g: float | None
    std_g: float | None
    e_t: float | None
    std_t: float | None
    psnr_db: float
    ground_truth: float | None = None

    def to_json_dict(self) -> dict:
        out = {
            "ref": self.ref,
            "dist": self.dist,
            "group": self.group,
            "bitrate": self.bitrate,
            "q": self.q,
            "e_g": self.e_g,
            "std_g": self.std_g,
            "e_t": self.e_t,
            "std_t": self.std_t,
            "psnr_db": _json_float(self.psnr_db),
        }
        if self.ground_truth is not None:
            out["gt"] = self.ground_truth
        return out


@dataclass(frozen=True)
class RowFailure:
    line: int
    ref: str
    dist: str
    error: str


@dataclass
class BatchResult:
    records: list[ScoreRecord]
    failures: list[RowFailure]


@dataclass(frozen=True)
class RunConfig:
    metric: MetricConfig = field(default_factory=MetricConfig)
    workers: int = 1
    output_format: str = "csv"
    fit_before_plcc: bool = True
    pooled_plcc: bool = False
    ablation: str | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise InvalidInputError(f"workers must be positive, got {self.workers}")
        if self.output_format not in ("csv", "json"):
            raise InvalidInputError(f"output format must be csv or json, got {self.output_format!r}")

    @property
    def effective_metric(self) -> MetricConfig:
        if self.ablation and self.ablation.lower() != "custom":
            return apply_ablation(self.metric, self.ablation)
        return self.metric


def _json_float(x: float):
    return "inf" if math.isinf(x) else x


def score_row(row: ManifestRow, cfg: MetricConfig) -> ScoreRecord:
    ref = load_image(row.ref_path)
    dis = load_image(row.dist_path)
    score = score_pair(ref, dis, cfg)
    return ScoreRecord(
        row.ref,
        row.dist,
        row.group,
        row.bitrate,
        score.q,
        score.e_g,
        score.std_g,
        score.e_t,
        score.std_t,
        psnr(ref, dis),
        row.ground_truth,
    )


def _score_indexed(args):
    idx, row, cfg = args
    try:
        return idx, score_row(row, cfg), None
    except (FgiqaError, OSError) as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"


def run_batch(manifest: Manifest | Sequence[ManifestRow], cfg: RunConfig | None = None) -> BatchResult:
    """Score every manifest row, preserving order; failing rows are collected, not raised."""
    cfg = cfg or RunConfig()
    metric = cfg.effective_metric
    rows = list(manifest)
    jobs = [(i, row, metric) for i, row in enumerate(rows)]
    if cfg.workers == 1 or len(rows) < 2:
        results = [_score_indexed(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (cfg.workers * 4))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_score_indexed, jobs, chunksize=chunk))
    records, failures = [], []
    for idx, rec, err in results:
        if rec is not None:
            records.append(rec)
        else:
            row = rows[idx]
            failures.append(RowFailure(row.line or idx + 2, row.ref, row.dist, err))
    return BatchResult(records, failures)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def write_scores_csv(records: Sequence[ScoreRecord]) -> str:
    """Scores CSV; a trailing ``gt`` column appears when every record has ground truth."""
    with_gt = bool(records) and all(r.ground_truth is not None for r in records)
    columns = SCORE_COLUMNS + (("gt",) if with_gt else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in records:
        values = [r.ref, r.dist, r.group, r.bitrate, r.q, r.e_g, r.std_g, r.e_t, r.std_t, r.psnr_db]
        if with_gt:
            values.append(r.ground_truth)
        writer.writerow([_fmt(v) for v in values])
    return buf.getvalue()


def _opt_float(text: str) -> float | None:
    text = text.strip()
    return float(text) if text else None


def read_scores_csv(text: str) -> list[ScoreRecord]:
    reader = csv.DictReader(io.StringIO(text))
    fields = tuple(reader.fieldnames or ())
    if fields[: len(SCORE_COLUMNS)] != SCORE_COLUMNS:
        raise InvalidInputError(f"scores CSV header must start with {','.join(SCORE_COLUMNS)}")
    out = []
    for rec in reader:
        try:
            out.append(
                ScoreRecord(
                    rec["ref"],
                    rec["dist"],
                    rec["group"],
                    rec["bitrate"],
                    float(rec["q"]),
                    _opt_float(rec["e_g"]),
                    _opt_float(rec["std_g"]),
                    _opt_float(rec["e_t"]),
                    _opt_float(rec["std_t"]),
                    float(rec["psnr_db"]),
                    _opt_float(rec.get("gt") or ""),
                )
            )
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"line {reader.line_num}: {exc}") from None
    return out


def write_batch_json(result: BatchResult) -> str:
    payload = {
        "records": [r.to_json_dict() for r in result.records],
        "failures": [vars(f) for f in result.failures],
    }
    return json.dumps(payload, indent=2)


def write_failures_csv(failures: Sequence[RowFailure]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("line", "ref", "dist", "error"))
    for f in failures:
        writer.writerow((f.line, f.ref, f.dist, f.error))
    return buf.getvalue()
