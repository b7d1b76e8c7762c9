"""Descriptive statistics and correlation coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class StatsError(ValueError):
    pass


def _as_finite(xs, name: str = "xs") -> np.ndarray:
    a = np.asarray(xs, dtype=float).ravel()
    if not np.all(np.isfinite(a)):
        raise StatsError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class Descriptives:
    n: int
    mean: float
    median: float
    _ss: float

    @property
    def variance(self) -> float:
        if self.n < 2:
            raise StatsError("sample variance needs n >= 2")
        return self._ss / (self.n - 1)

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def descriptives(xs) -> Descriptives:
    a = _as_finite(xs)
    if a.size == 0:
        raise StatsError("empty sample")
    m = float(a.mean())
    return Descriptives(int(a.size), m, float(np.median(a)), float(((a - m) ** 2).sum()))


def pearson(xs, ys) -> float:
    x, y = _as_finite(xs), _as_finite(ys, "ys")
    if x.size != y.size:
        raise StatsError("series differ in length")
    if x.size < 3:
        raise StatsError("need at least 3 pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise StatsError("correlation undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def midranks(xs) -> np.ndarray:
    """1-based ranks with ties assigned the mean of the positions they span."""
    a = _as_finite(xs)
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    ranks = np.empty(a.size)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[j + 1] == s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    x, y = _as_finite(xs), _as_finite(ys, "ys")
    if x.size != y.size:
        raise StatsError("series differ in length")
    return pearson(midranks(x), midranks(y))


def correlation_matrix(columns: dict[str, list[float]]) -> tuple[list[str], np.ndarray]:
    """Pearson below the diagonal, Spearman above it, ones on it."""
    names = list(columns)
    k = len(names)
    m = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            m[j, i] = pearson(columns[names[i]], columns[names[j]])
            m[i, j] = spearman(columns[names[i]], columns[names[j]])
    return names, m
