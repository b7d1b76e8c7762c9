"""Studentized range distribution: CDF by numerical integration, quantile by root finding.

For ``k`` independent standard normals and an independent ``s`` with
``df * s**2 ~ chi2(df)``, ``Q = (max - min) / s``. With ``W(w)`` the CDF of the
range of ``k`` normals,

    P(Q <= q) = integral_0^inf g_df(s) W(q s) ds
    W(w)      = k * integral phi(z) (Phi(z + w) - Phi(z))**(k-1) dz

Both integrals use composite Gauss-Legendre rules: the inner one on
[-8.5, 8.5] (the normal density is below 1e-16 outside), the outer one between
the 1e-17 and 1 - 1e-17 quantiles of ``s``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .basic import StatsError

_Z_PANELS, _S_PANELS = 8, 12
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(20)
_TINY = 1e-17


def _panel_grid(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    z = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    w = (half[:, None] * _WEIGHTS[None, :]).ravel()
    return z, w


_Z, _WZ = _panel_grid(-8.5, 8.5, _Z_PANELS)
_PHI_Z = np.exp(-0.5 * _Z**2) / math.sqrt(2 * math.pi)
_CDF_Z = special.ndtr(_Z)


def range_cdf(w, k: int):
    """CDF of the range of ``k`` iid standard normals, vectorized over ``w``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.zeros(w.shape)
    pos = w > 0
    if np.any(pos):
        diff = special.ndtr(_Z[None, :] + w[pos, None]) - _CDF_Z[None, :]
        out[pos] = k * (diff ** (k - 1) * _PHI_Z[None, :]) @ _WZ
    return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=None)
def _range_bounds(k: int) -> tuple[float, float]:
    """Ranges below/above which W is within 1e-17 of 0/1 (union bounds)."""
    w_lo = (_TINY / k) ** (1.0 / (k - 1)) * math.sqrt(2 * math.pi)
    w_hi = -2.0 * float(special.ndtri(_TINY / (2 * k)))
    return w_lo, w_hi


def _log_s_density(s: np.ndarray, df: float) -> np.ndarray:
    """Log density of sqrt(chi2_df / df), arranged to stay accurate for huge df."""
    x = df / 2
    if x > 50:
        # x log x - x - lgamma(x) via Stirling with its error series
        const = 0.5 * math.log(x / (2 * math.pi)) - (1 / (12 * x) - 1 / (360 * x**3) + 1 / (1260 * x**5))
    else:
        const = x * math.log(x) - x - math.lgamma(x)
    d = (s - 1) * (s + 1)
    return math.log(2.0) + const + x * (np.log1p(d) - d) - np.log(s)


@lru_cache(maxsize=None)
def _s_support(df: float) -> tuple[float, float]:
    lo = math.sqrt(2 * special.gammaincinv(df / 2, _TINY) / df)
    hi = math.sqrt(2 * special.gammainccinv(df / 2, _TINY) / df)
    return lo, hi


def srange_cdf(q: float, k: int, df: float = math.inf) -> float:
    """P(Q <= q) for the studentized range with ``k`` means and ``df`` degrees of freedom.

    The outer integral only covers the s-interval where ``W(q s)`` is strictly
    between 0 and 1; beyond it ``W = 1`` and the chi tail is added in closed form.
    """
    if k < 2:
        raise StatsError("k must be >= 2")
    if q <= 0:
        return 0.0
    if math.isinf(df):
        return float(range_cdf(q, k)[0])
    if df < 1:
        raise StatsError("df must be >= 1")
    w_lo, w_hi = _range_bounds(k)
    s_lo, s_hi = _s_support(df)
    a, b = max(s_lo, w_lo / q), min(s_hi, w_hi / q)
    tail = float(special.chdtrc(df, df * b * b)) if b < s_hi else 0.0
    if a >= b:
        return min(max(tail, 0.0), 1.0)
    nodes, weights = _panel_grid(a, b, _S_PANELS)
    logdens = _log_s_density(nodes, df)
    body = float((weights * np.exp(logdens)) @ range_cdf(q * nodes, k))
    return min(max(body + tail, 0.0), 1.0)


@lru_cache(maxsize=4096)
def studentized_range_quantile(alpha: float, k: int, df: float = math.inf) -> float:
    """Upper ``alpha`` critical value: q with P(Q <= q) = 1 - alpha."""
    if not 0 < alpha < 1:
        raise StatsError("alpha must lie in (0, 1)")
    if k < 2:
        raise StatsError("k must be >= 2")
    if not math.isinf(df) and df < 1:
        raise StatsError("df must be >= 1")
    target = 1 - alpha
    if math.isinf(df):
        lo, hi = 0.0, 4.0
        while srange_cdf(hi, k, df) < target:
            lo, hi = hi, hi * 2
    else:
        lo, hi = _bracket(target, k, df, studentized_range_quantile(alpha, k))
    q, res = optimize.brentq(
        lambda x: srange_cdf(x, k, df) - target, lo, hi, xtol=1e-11, rtol=4e-15, full_output=True
    )
    if not res.converged:
        raise StatsError(
            f"quantile root finding did not converge (alpha={alpha}, k={k}, df={df}, "
            f"iterations={res.iterations}, last={q})"
        )
    return q


def _bracket(target: float, k: int, df: float, guess: float) -> tuple[float, float]:
    """Geometric search outward from the infinite-df quantile."""
    step = 1.25
    if srange_cdf(guess, k, df) < target:
        lo, hi = guess, guess * step
        while srange_cdf(hi, k, df) < target:
            lo, hi, step = hi, hi * step, step * step
            if hi > 1e7:
                raise StatsError(f"no bracket for quantile k={k}, df={df}")
        return lo, hi
    lo, hi = guess / step, guess
    while srange_cdf(lo, k, df) >= target:
        lo, hi = lo / step, lo
    return lo, hi
