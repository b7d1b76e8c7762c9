"""Omnibus tests over k independent groups, plus a normality check."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .basic import StatsError, _as_finite, midranks


@dataclass(frozen=True)
class GroupSample:
    group_id: str
    observations: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(float(x) for x in self.observations))

    @property
    def n(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class OmnibusResult:
    test_name: str
    statistic: float
    df: tuple[float, ...]
    p_value: float
    degenerate: bool = False


def _arrays(groups: Sequence) -> list[np.ndarray]:
    out = []
    for g in groups:
        obs = g.observations if isinstance(g, GroupSample) else g
        a = _as_finite(obs, "group")
        if a.size == 0:
            raise StatsError("empty group")
        out.append(a)
    if len(out) < 2:
        raise StatsError("need at least two groups")
    return out


def f_sf(f: float, df1: float, df2: float) -> float:
    return float(np.clip(special.fdtrc(df1, df2, f), 0.0, 1.0))


def chi2_sf(x: float, df: float) -> float:
    return float(np.clip(special.chdtrc(df, x), 0.0, 1.0))


_REL_ZERO = 1e-13


def _oneway(arrays: list[np.ndarray]) -> tuple[float, float, int, int]:
    """Between and within sums of squares with their degrees of freedom.

    The between sum uses pairwise mean differences, so groups with equal means
    give exactly zero. A within sum that is rounding noise relative to the
    total is returned as zero.
    """
    sizes = [a.size for a in arrays]
    means = [float(a.mean()) for a in arrays]
    total = sum(sizes)
    ssb = 0.0
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            ssb += sizes[i] * sizes[j] * (means[i] - means[j]) ** 2
    ssb /= total
    ssw = float(sum(((a - m) ** 2).sum() for a, m in zip(arrays, means)))
    if ssw <= _REL_ZERO * (ssb + ssw):
        ssw = 0.0
    return ssb, ssw, len(arrays) - 1, total - len(arrays)


def anova_oneway(groups: Sequence) -> OmnibusResult:
    arrays = _arrays(groups)
    ssb, ssw, df_b, df_w = _oneway(arrays)
    if df_w < 1:
        raise StatsError("total n must exceed the number of groups")
    if ssw == 0.0:
        if ssb == 0.0:
            return OmnibusResult("anova", 0.0, (df_b, df_w), 1.0, degenerate=True)
        return OmnibusResult("anova", math.inf, (df_b, df_w), 0.0, degenerate=True)
    f = (ssb / df_b) / (ssw / df_w)
    return OmnibusResult("anova", f, (df_b, df_w), f_sf(f, df_b, df_w))


def levene(groups: Sequence, center: str = "mean") -> OmnibusResult:
    """Levene's test: one-way ANOVA on absolute deviations from the group center.

    ``center="median"`` gives the Brown-Forsythe variant.
    """
    arrays = _arrays(groups)
    if any(a.size < 2 for a in arrays):
        raise StatsError("Levene's test needs n >= 2 per group")
    if center == "mean":
        z = [np.abs(a - a.mean()) for a in arrays]
    elif center == "median":
        z = [np.abs(a - np.median(a)) for a in arrays]
    else:
        raise ValueError(f"unknown center {center!r}")
    ssb, ssw, df_b, df_w = _oneway(z)
    if ssw == 0.0:
        # all deviations equal within groups; F taken as 0 when no spread at all
        if ssb == 0.0:
            return OmnibusResult("levene", 0.0, (df_b, df_w), 1.0, degenerate=True)
        return OmnibusResult("levene", math.inf, (df_b, df_w), 0.0, degenerate=True)
    f = (ssb / df_b) / (ssw / df_w)
    return OmnibusResult("levene", f, (df_b, df_w), f_sf(f, df_b, df_w))


_EXACT_LIMIT = 500_000


def kruskal_wallis(
    groups: Sequence, method: str = "asymptotic", n_resamples: int = 100_000, seed: int = 0
) -> OmnibusResult:
    """Kruskal-Wallis H with tie correction.

    Parameters
    ----------
    method : {"asymptotic", "exact", "permutation"}
        ``asymptotic`` refers H to chi-square on k-1 df. ``exact`` enumerates
        every distinct assignment of the pooled ranks to groups (at most
        500,000 of them). ``permutation`` draws ``n_resamples`` random
        assignments from a generator seeded with ``seed`` and reports
        ``(hits + 1) / (n_resamples + 1)``.
    """
    if method not in ("asymptotic", "exact", "permutation"):
        raise StatsError(f"unknown method {method!r}")
    arrays = _arrays(groups)
    sizes = [a.size for a in arrays]
    ranks = midranks(np.concatenate(arrays))
    n = ranks.size
    k = len(arrays)
    bounds = np.cumsum([0, *sizes])
    h = 12.0 / (n * (n + 1)) * sum(
        ranks[bounds[i] : bounds[i + 1]].sum() ** 2 / sizes[i] for i in range(k)
    ) - 3.0 * (n + 1)
    _, counts = np.unique(ranks, return_counts=True)
    ties = float((counts**3 - counts).sum())
    correction = 1.0 - ties / (n**3 - n) if n > 1 else 0.0
    if correction <= 0.0:
        return OmnibusResult("kruskal_wallis", 0.0, (k - 1,), 1.0, degenerate=True)
    h = max(h / correction, 0.0)
    if method == "exact":
        p = _kw_exact_p(ranks, sizes)
    elif method == "permutation":
        p = _kw_permutation_p(ranks, sizes, n_resamples, seed)
    else:
        p = chi2_sf(h, k - 1)
    return OmnibusResult("kruskal_wallis", h, (k - 1,), p)


def _kw_exact_p(ranks: np.ndarray, sizes: list[int]) -> float:
    # H is increasing in sum(R_i^2 / n_i) once the tie correction is fixed.
    # Doubled midranks are integers and scaling by lcm(sizes) keeps the
    # comparison in exact integer arithmetic.
    total = math.factorial(sum(sizes)) // math.prod(math.factorial(s) for s in sizes)
    if total > _EXACT_LIMIT:
        raise StatsError(f"{total} assignments exceed the exact limit; use method='permutation'")
    twice = [int(round(2 * r)) for r in ranks]
    scale = [math.lcm(*sizes) // s for s in sizes]
    bounds = np.cumsum([0, *sizes])
    observed = sum(sum(twice[bounds[i] : bounds[i + 1]]) ** 2 * scale[i] for i in range(len(sizes)))
    last = len(sizes) - 1

    def count(pool: tuple[int, ...], g: int, acc: int) -> int:
        if g == last:
            return int(acc + sum(pool) ** 2 * scale[g] >= observed)
        hits = 0
        for chosen in itertools.combinations(range(len(pool)), sizes[g]):
            picked = set(chosen)
            r = sum(pool[i] for i in chosen)
            rest = tuple(v for i, v in enumerate(pool) if i not in picked)
            hits += count(rest, g + 1, acc + r * r * scale[g])
        return hits

    return count(tuple(twice), 0, 0) / total


def _kw_permutation_p(ranks: np.ndarray, sizes: list[int], n_resamples: int, seed: int) -> float:
    if n_resamples < 1:
        raise StatsError("n_resamples must be positive")
    sizes_a = np.asarray(sizes, dtype=float)
    starts = np.cumsum([0, *sizes[:-1]])
    observed = float((np.add.reduceat(ranks, starts) ** 2 / sizes_a).sum())
    tol = 1e-9 * observed
    rng = np.random.default_rng(seed)
    hits, left = 0, n_resamples
    while left:
        b = min(left, 10_000)
        perm = rng.permuted(np.broadcast_to(ranks, (b, ranks.size)), axis=1)
        stat = (np.add.reduceat(perm, starts, axis=1) ** 2 / sizes_a).sum(axis=1)
        hits += int((stat >= observed - tol).sum())
        left -= b
    return (hits + 1) / (n_resamples + 1)


def lilliefors_pvalue(d: float, n: int) -> float:
    """Approximate p-value of the Kolmogorov-Smirnov statistic with estimated mean and sd.

    Dallal & Wilkinson's (1986) analytic approximation is used when it gives
    p <= 0.1; above that, Stephens' modified statistic with the piecewise
    polynomial fit used by R's ``nortest::lillie.test``.
    """
    if n > 100:
        kd, nd = d * (n / 100.0) ** 0.49, 100
    else:
        kd, nd = d, n
    p = math.exp(
        -7.01256 * kd**2 * (nd + 2.78019)
        + 2.99587 * kd * math.sqrt(nd + 2.78019)
        - 0.122119
        + 0.974598 / math.sqrt(nd)
        + 1.67997 / nd
    )
    if p <= 0.1:
        return p
    kk = (math.sqrt(n) - 0.01 + 0.85 / math.sqrt(n)) * d
    if kk <= 0.302:
        return 1.0
    if kk <= 0.5:
        p = 2.76773 - 19.828315 * kk + 80.709644 * kk**2 - 138.55152 * kk**3 + 81.218052 * kk**4
    elif kk <= 0.9:
        p = -4.901232 + 40.662806 * kk - 97.490286 * kk**2 + 94.029866 * kk**3 - 32.355711 * kk**4
    elif kk <= 1.31:
        p = 6.198765 - 19.558097 * kk + 23.186922 * kk**2 - 12.234627 * kk**3 + 2.423045 * kk**4
    else:
        p = 0.0
    return min(max(p, 0.0), 1.0)


def ks_normality(xs) -> OmnibusResult:
    """Kolmogorov-Smirnov distance to the normal with sample mean and sd (Lilliefors)."""
    a = np.sort(_as_finite(xs))
    n = a.size
    if n < 5:
        raise StatsError("normality test needs n >= 5")
    sd = a.std(ddof=1)
    if sd == 0.0:
        raise StatsError("constant sample")
    cdf = special.ndtr((a - a.mean()) / sd)
    i = np.arange(1, n + 1)
    d = float(max((i / n - cdf).max(), (cdf - (i - 1) / n).max()))
    return OmnibusResult("ks_normality", d, (n,), lilliefors_pvalue(d, n))
