"""Correlation statistics and the grouped evaluation protocol.

Correlations return ``None`` when undefined (one side constant). Cells of
(group, bitrate) are scored separately and averaged per bitrate; undefined
cells are left out of the averages and counted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit
from scipy.stats import rankdata

from .errors import InvalidInputError

MIN_FIT_POINTS = 5
REPORT_COLUMNS = ("bitrate_id", "n_groups", "n_excluded", "srcc", "krcc", "plcc")


def _pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size != y.size:
        raise InvalidInputError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise InvalidInputError("correlation needs at least two points")
    return x, y


def _clip(r: float) -> float:
    return min(1.0, max(-1.0, r))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    x, y = _pair(xs, ys)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return None
    return _clip(float(np.dot(dx, dy)) / denom)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation of average-tie ranks."""
    x, y = _pair(xs, ys)
    return pearson(rankdata(x), rankdata(y))


def kendall(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Kendall tau-b over all pairs (O(n^2), fine for small groups)."""
    x, y = _pair(xs, ys)
    n = x.size
    iu = np.triu_indices(n, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    n0 = n * (n - 1) // 2
    untied_x = n0 - int(np.count_nonzero(sx == 0))
    untied_y = n0 - int(np.count_nonzero(sy == 0))
    if untied_x == 0 or untied_y == 0:
        return None
    s = float(np.sum(sx * sy))
    return _clip(s / math.sqrt(untied_x * untied_y))


@dataclass
class LogisticFit:
    tau: tuple[float, ...]
    fitted: list[float]
    converged: bool


def logistic5(q, tau) -> np.ndarray:
    """Five-parameter monotone logistic mapping with a linear term."""
    t1, t2, t3, t4, t5 = tau
    q = np.asarray(q, dtype=np.float64)
    # 1 / (1 + exp(z)) == expit(-z)
    return t1 * (0.5 - expit(-t2 * (q - t3))) + t4 * q + t5


def _logistic_jac(tau, q) -> np.ndarray:
    t1, t2, t3, _, _ = tau
    z = t2 * (q - t3)
    p = expit(-z)  # 1 / (1 + e^z)
    dp_dz = -p * (1.0 - p)
    jac = np.empty((q.size, 5))
    jac[:, 0] = 0.5 - p
    jac[:, 1] = -t1 * dp_dz * (q - t3)
    jac[:, 2] = t1 * dp_dz * t2
    jac[:, 3] = q
    jac[:, 4] = 1.0
    return jac


def logistic_fit(preds: Sequence[float], gts: Sequence[float], max_iter: int = 2000) -> LogisticFit:
    """Least-squares fit of :func:`logistic5` mapping ``preds`` onto ``gts``.

    Fewer than five points, or constant predictions, return the identity
    mapping with ``converged=False``.
    """
    q = np.asarray(preds, dtype=np.float64).ravel()
    g = np.asarray(gts, dtype=np.float64).ravel()
    if q.size != g.size:
        raise InvalidInputError(f"length mismatch: {q.size} vs {g.size}")
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(g))):
        raise InvalidInputError("logistic fit inputs must be finite")
    identity = (0.0, 0.0, 0.0, 1.0, 0.0)
    if q.size < MIN_FIT_POINTS or np.all(q == q[0]):
        return LogisticFit(identity, q.tolist(), False)

    tau0 = np.array([g.max() - g.min(), 1.0 / q.std(), q.mean(), 0.0, g.mean()])

    def residual(tau):
        return logistic5(q, tau) - g

    rss0 = float(np.sum(residual(tau0) ** 2))
    result = least_squares(
        residual,
        tau0,
        jac=lambda tau: _logistic_jac(tau, q),
        method="lm",
        ftol=1e-10,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=max_iter,
    )
    tau = result.x
    rss = float(np.sum(residual(tau) ** 2))
    converged = bool(result.success)
    if not np.isfinite(rss) or rss > rss0:
        tau, converged = tau0, False
    return LogisticFit(tuple(float(t) for t in tau), logistic5(q, tau).tolist(), converged)


@dataclass(frozen=True)
class EvalRecord:
    group_id: Hashable
    bitrate_id: Hashable
    predicted: float
    ground_truth: float


@dataclass
class CorrelationRow:
    n_groups: int
    n_excluded: int
    srcc: float | None
    krcc: float | None
    plcc: float | None


@dataclass
class CorrelationReport:
    per_bitrate: dict[str, CorrelationRow]
    overall_average: CorrelationRow
    excluded_cells: list[tuple[str, str]] = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        rows = []
        for bitrate, row in list(self.per_bitrate.items()) + [("average", self.overall_average)]:
            rows.append({"bitrate_id": bitrate, **asdict(row)})
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.to_rows():
            writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "per_bitrate": {b: asdict(r) for b, r in self.per_bitrate.items()},
            "average": asdict(self.overall_average),
            "excluded_cells": [list(c) for c in self.excluded_cells],
        }
        return json.dumps(payload, indent=2, sort_keys=False)

    @classmethod
    def from_csv(cls, text: str) -> CorrelationReport:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise InvalidInputError(f"report header must be {','.join(REPORT_COLUMNS)}")
        per_bitrate, overall = {}, None
        for rec in reader:
            row = CorrelationRow(
                int(rec["n_groups"]),
                int(rec["n_excluded"]),
                _parse_opt(rec["srcc"]),
                _parse_opt(rec["krcc"]),
                _parse_opt(rec["plcc"]),
            )
            if rec["bitrate_id"] == "average":
                overall = row
            else:
                per_bitrate[rec["bitrate_id"]] = row
        if overall is None:
            raise InvalidInputError("report has no average row")
        return cls(per_bitrate, overall)


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    return repr(value) if isinstance(value, float) else str(value)


def _parse_opt(text: str) -> float | None:
    return None if text == "undefined" else float(text)


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def _sort_key(value) -> tuple:
    # Numeric-aware ordering so "b10" follows "b9" and ints sort as numbers.
    text = str(value)
    parts = []
    num = ""
    for ch in text + "\0":
        if ch.isdigit():
            num += ch
            continue
        if num:
            parts.append((0, int(num), ""))
            num = ""
        if ch != "\0":
            parts.append((1, 0, ch))
    return tuple(parts)


def _plcc(pred: np.ndarray, gt: np.ndarray, fit: bool) -> float | None:
    if fit and pred.size >= MIN_FIT_POINTS:
        lf = logistic_fit(pred, gt)
        if lf.converged:
            return pearson(lf.fitted, gt)
    return pearson(pred, gt)


def evaluate_groups(
    records: Sequence[EvalRecord],
    fit_before_plcc: bool = True,
    pooled_plcc: bool = False,
) -> CorrelationReport:
    """Per-(group, bitrate) SRCC/KRCC/PLCC averaged per bitrate, then overall.

    SRCC and KRCC use raw scores. PLCC uses logistic-fitted scores when
    ``fit_before_plcc`` and the cell has at least five points. With
    ``pooled_plcc`` the PLCC of a bitrate is computed once over all of its
    records instead of averaged over groups.
    """
    if not records:
        raise InvalidInputError("no records to evaluate")
    cells: dict[tuple[str, str], list[EvalRecord]] = defaultdict(list)
    for rec in records:
        cells[(str(rec.bitrate_id), str(rec.group_id))].append(rec)

    by_bitrate: dict[str, list] = defaultdict(list)
    excluded = []
    for bitrate, group in sorted(cells, key=lambda k: (_sort_key(k[0]), _sort_key(k[1]))):
        # Canonical in-cell order makes the result independent of input order.
        recs = sorted(cells[(bitrate, group)], key=lambda r: (r.predicted, r.ground_truth))
        if len(recs) < 2:
            raise InvalidInputError(f"cell (group={group}, bitrate={bitrate}) has fewer than 2 records")
        pred = np.array([r.predicted for r in recs], dtype=np.float64)
        gt = np.array([r.ground_truth for r in recs], dtype=np.float64)
        s = spearman(pred, gt)
        k = kendall(pred, gt)
        p = None if pooled_plcc else _plcc(pred, gt, fit_before_plcc)
        if s is None or k is None or (p is None and not pooled_plcc):
            excluded.append((bitrate, group))
        by_bitrate[bitrate].append((s, k, p, pred, gt))

    per_bitrate = {}
    for bitrate, results in by_bitrate.items():
        n_excl = sum(1 for b, _ in excluded if b == bitrate)
        if pooled_plcc:
            order = np.lexsort((np.concatenate([r[4] for r in results]), np.concatenate([r[3] for r in results])))
            pred_all = np.concatenate([r[3] for r in results])[order]
            gt_all = np.concatenate([r[4] for r in results])[order]
            plcc = _plcc(pred_all, gt_all, fit_before_plcc)
        else:
            plcc = _mean(r[2] for r in results)
        per_bitrate[bitrate] = CorrelationRow(
            n_groups=len(results),
            n_excluded=n_excl,
            srcc=_mean(r[0] for r in results),
            krcc=_mean(r[1] for r in results),
            plcc=plcc,
        )

    rows = list(per_bitrate.values())
    overall = CorrelationRow(
        n_groups=sum(r.n_groups for r in rows),
        n_excluded=sum(r.n_excluded for r in rows),
        srcc=_mean(r.srcc for r in rows),
        krcc=_mean(r.krcc for r in rows),
        plcc=_mean(r.plcc for r in rows),
    )
    return CorrelationReport(per_bitrate, overall, excluded)
