"""Pairwise post-hoc comparisons: Tukey-Kramer HSD and Dunnett's C."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basic import StatsError
from .omnibus import GroupSample, _arrays
from .srange import studentized_range_quantile


@dataclass(frozen=True)
class PairwiseComparison:
    group_i: str
    group_j: str
    mean_difference: float
    standard_error: float
    ci_low: float
    ci_high: float
    significant: bool
    degenerate: bool = False

    def reversed(self) -> "PairwiseComparison":
        return PairwiseComparison(
            self.group_j,
            self.group_i,
            -self.mean_difference,
            self.standard_error,
            -self.ci_high,
            -self.ci_low,
            self.significant,
            self.degenerate,
        )


def _ids(groups: Sequence) -> list[str]:
    return [g.group_id if isinstance(g, GroupSample) else str(i + 1) for i, g in enumerate(groups)]


def _pair(gi, gj, diff, se, half, degenerate=False) -> PairwiseComparison:
    lo, hi = diff - half, diff + half
    # a bound landing exactly on zero counts as not significant
    return PairwiseComparison(gi, gj, diff, se, lo, hi, not (lo <= 0.0 <= hi), degenerate)


def _both_orientations(upper: dict[tuple[int, int], PairwiseComparison], k: int):
    out = []
    for i in range(k):
        for j in range(k):
            if i < j:
                out.append(upper[i, j])
            elif i > j:
                out.append(upper[j, i].reversed())
    return out


def tukey_hsd(groups: Sequence, alpha: float = 0.05) -> list[PairwiseComparison]:
    """Tukey-Kramer intervals from the pooled within-group variance.

    ``standard_error`` is ``sqrt(MSW (1/n_i + 1/n_j))`` and the half-width is
    ``q(alpha, k, N - k) / sqrt(2) * standard_error``. Returns every ordered pair.
    """
    arrays = _arrays(groups)
    if any(a.size < 2 for a in arrays):
        raise StatsError("Tukey HSD needs n >= 2 per group")
    ids = _ids(groups)
    k = len(arrays)
    df = sum(a.size for a in arrays) - k
    msw = sum(((a - a.mean()) ** 2).sum() for a in arrays) / df
    q = studentized_range_quantile(alpha, k, df)
    upper = {}
    for i in range(k):
        for j in range(i + 1, k):
            ai, aj = arrays[i], arrays[j]
            se = math.sqrt(msw * (1 / ai.size + 1 / aj.size))
            upper[i, j] = _pair(ids[i], ids[j], float(ai.mean() - aj.mean()), se, q / math.sqrt(2) * se, se == 0.0)
    return _both_orientations(upper, k)


def dunnett_c_halfwidth(var_i: float, n_i: int, var_j: float, n_j: int, k: int, alpha: float) -> tuple[float, float]:
    """Standard error and critical range of one Dunnett's C comparison.

    Each group contributes its studentized-range quantile on ``n - 1`` df,
    weighted by its share of the variance of the difference:
    ``(q_i v_i + q_j v_j) / (v_i + v_j) * SE / sqrt(2)`` with ``v = s^2 / n``.
    """
    vi, vj = var_i / n_i, var_j / n_j
    se = math.sqrt(vi + vj)
    if se == 0.0:
        return 0.0, 0.0
    qi = studentized_range_quantile(alpha, k, n_i - 1)
    qj = studentized_range_quantile(alpha, k, n_j - 1)
    return se, (qi * vi + qj * vj) / (vi + vj) * se / math.sqrt(2)


def dunnett_c(groups: Sequence, alpha: float = 0.05) -> list[PairwiseComparison]:
    """Dunnett's C pairwise intervals, not assuming equal variances."""
    arrays = _arrays(groups)
    if any(a.size < 2 for a in arrays):
        raise StatsError("Dunnett's C needs n >= 2 per group")
    ids = _ids(groups)
    k = len(arrays)
    means = [float(a.mean()) for a in arrays]
    variances = [float(a.var(ddof=1)) for a in arrays]
    upper = {}
    for i in range(k):
        for j in range(i + 1, k):
            se, half = dunnett_c_halfwidth(variances[i], arrays[i].size, variances[j], arrays[j].size, k, alpha)
            upper[i, j] = _pair(ids[i], ids[j], means[i] - means[j], se, half, se == 0.0)
    return _both_orientations(upper, k)


def pairwise_csv(rows: Sequence[PairwiseComparison]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group_i", "group_j", "mean_difference", "std_error", "ci_low", "ci_high", "significant"])
    for r in rows:
        w.writerow(
            [r.group_i, r.group_j, f"{r.mean_difference:.9f}", f"{r.standard_error:.9f}",
             f"{r.ci_low:.9f}", f"{r.ci_high:.9f}", int(r.significant)]
        )
    return buf.getvalue()
