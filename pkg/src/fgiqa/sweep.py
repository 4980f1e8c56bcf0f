"""Exponent grid search over cached pooled features."""

from __future__ import annotations

import csv
import dataclasses
import io
from typing import Sequence

import numpy as np

from .batch import ScoreRecord
from .config import MetricConfig
from .errors import InvalidInputError
from .evaluation import EvalRecord, evaluate_groups
from .fusion import fuse
from .gradient import PooledStats


def parse_range(text: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive stop) or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise InvalidInputError(f"range must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise InvalidInputError(f"empty or invalid range {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def rescore(records: Sequence[ScoreRecord], cfg: MetricConfig) -> list[float]:
    """Recompute Q from the recorded features under new exponents."""
    out = []
    for r in records:
        grad = PooledStats(r.e_g, r.std_g) if r.e_g is not None else None
        tex = PooledStats(r.e_t, r.std_t) if r.e_t is not None else None
        out.append(fuse(grad, tex, cfg).q)
    return out


def sweep(
    records: Sequence[ScoreRecord],
    alphas: Sequence[float],
    betas: Sequence[float],
    cfg: MetricConfig | None = None,
) -> np.ndarray:
    """Average SRCC for every (alpha, beta); rows follow ``alphas``, columns ``betas``."""
    cfg = cfg or MetricConfig()
    if not records:
        raise InvalidInputError("no cached features to sweep over")
    if any(r.ground_truth is None for r in records):
        raise InvalidInputError("sweep needs ground truth for every record")
    table = np.full((len(alphas), len(betas)), np.nan)
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            trial = dataclasses.replace(cfg, alpha=a, beta=b)
            qs = rescore(records, trial)
            evals = [EvalRecord(r.group, r.bitrate, q, r.ground_truth) for r, q in zip(records, qs)]
            srcc = evaluate_groups(evals, fit_before_plcc=False).overall_average.srcc
            if srcc is not None:
                table[i, j] = srcc
    return table


def format_table(table: np.ndarray, alphas: Sequence[float], betas: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha\\beta"] + [repr(b) for b in betas])
    for a, row in zip(alphas, table):
        writer.writerow([repr(a)] + ["undefined" if np.isnan(v) else f"{v:.4f}" for v in row])
    return buf.getvalue()
