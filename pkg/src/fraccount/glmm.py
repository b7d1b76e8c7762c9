"""Two-level random-intercept models for journal indicators clustered in fields.

Poisson model::

    y_ij | u_j ~ Poisson(exp(beta0 + u_j)),   u_j ~ N(0, sigma2)

For non-integer outcomes (impact-factor-like values) the kernel
``y * eta - exp(eta) - lgamma(y + 1)`` is used as a quasi-likelihood; the
``lgamma`` term is a constant offset. The marginal likelihood of each cluster
is a one-dimensional integral evaluated by adaptive Gauss-Hermite quadrature
centred on the posterior mode of ``u_j``; one node is the Laplace
approximation. Optimization runs on ``(beta0, log sigma)`` so the variance can
never go negative; a zero variance is detected separately through the score
at ``sigma2 = 0``.

The lognormal variant fits the Gaussian one-way random-effects model to
``log y`` by maximum likelihood.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize, special
from scipy.stats import norm

__all__ = [
    "ClusteredOutcomes",
    "FitResult",
    "GLMMError",
    "VarianceComparison",
    "fit_lognormal_ri",
    "fit_poisson_ri",
    "marginal_loglik",
    "model_report_csv",
    "run_model_suite",
    "sandwich_se",
    "variance_reduction",
    "wald_variance_test",
]


class GLMMError(ValueError):
    pass


@dataclass(frozen=True)
class ClusteredOutcomes:
    y: np.ndarray
    cluster: np.ndarray
    labels: tuple[str, ...] = ()

    @classmethod
    def from_pairs(cls, ys: Sequence[float], clusters: Sequence, labels: Sequence[str] = ()) -> "ClusteredOutcomes":
        y = np.asarray(ys, dtype=float)
        if y.ndim != 1 or y.size != len(clusters):
            raise GLMMError("outcomes and cluster labels differ in length")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise GLMMError("outcomes must be finite and non-negative")
        _, idx = np.unique(np.asarray([str(c) for c in clusters]), return_inverse=True)
        return cls(y, idx.astype(int), tuple(labels))

    @property
    def n_clusters(self) -> int:
        return int(self.cluster.max()) + 1 if self.cluster.size else 0

    def cluster_sums(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-cluster sum of y, count, and sum of lgamma(y + 1)."""
        j = self.n_clusters
        s = np.bincount(self.cluster, weights=self.y, minlength=j)
        n = np.bincount(self.cluster, minlength=j).astype(float)
        c = np.bincount(self.cluster, weights=special.gammaln(self.y + 1), minlength=j)
        return s, n, c


@dataclass
class FitResult:
    model: str
    beta0: float
    sigma2: float
    se_beta0_naive: float
    se_beta0_sandwich: float
    se_sigma2: float
    se_sigma2_naive: float
    loglik: float
    n_quadrature: int
    converged: bool
    n_obs: int
    n_clusters: int
    diagnostics: dict = field(default_factory=dict)
    loglik_trace: list[float] = field(default_factory=list)
    boundary: bool = False


@dataclass(frozen=True)
class VarianceComparison:
    sigma2_base: float
    sigma2_alt: float
    reduction_percent: float


# ---------------------------------------------------------------- quadrature


def _posterior_mode(s, n, beta0, sigma2):
    """Mode of u for each cluster: root of s - n exp(beta0 + u) - u / sigma2.

    With v = sigma2 * s - u the condition is v + log v = log(n sigma2 e^beta0) + sigma2 s,
    solved by safeguarded Newton in v > 0.
    """
    c = np.log(n * sigma2) + beta0 + sigma2 * s
    v = np.where(c > 1.0, c - np.log(np.maximum(c, 1.0)), np.exp(np.minimum(c, 1.0)))
    for _ in range(100):
        g = v + np.log(v) - c
        step = g / (1.0 + 1.0 / v)
        v_new = np.where(v - step > 0, v - step, v / 2)
        if np.all(np.abs(v_new - v) <= 1e-15 * np.maximum(1.0, v)):
            v = v_new
            break
        v = v_new
    return sigma2 * s - v


def _gh(n_nodes: int):
    x, w = special.roots_hermite(n_nodes)
    return x, w


def _cluster_terms(theta, s, n, c, n_nodes, need_grad=True):
    """Per-cluster log marginal likelihoods and (optionally) their gradients in (beta0, log sigma)."""
    beta0, psi = float(theta[0]), float(theta[1])
    sigma2 = math.exp(2 * psi)
    x, w = _gh(n_nodes)
    u_hat = _posterior_mode(s, n, beta0, sigma2)
    mu_hat = n * np.exp(beta0 + u_hat)
    d = mu_hat + 1.0 / sigma2
    tau = 1.0 / np.sqrt(d)
    u = u_hat[:, None] + math.sqrt(2) * tau[:, None] * x[None, :]
    eta = beta0 + u
    mu = n[:, None] * np.exp(eta)
    h = s[:, None] * eta - mu - c[:, None] - u**2 / (2 * sigma2) - psi - 0.5 * math.log(2 * math.pi)
    a = h + x[None, :] ** 2 + np.log(w)[None, :]
    ll = 0.5 * math.log(2) + np.log(tau) + special.logsumexp(a, axis=1)
    if not need_grad:
        return ll, None
    pi = np.exp(a - special.logsumexp(a, axis=1, keepdims=True))
    hprime = s[:, None] - mu - u / sigma2
    # implicit derivatives of the mode and the curvature scale
    du_db = -mu_hat / d
    du_dp = 2 * u_hat / (sigma2 * d)
    dd_db = mu_hat * (1 + du_db)
    dd_dp = mu_hat * du_dp - 2.0 / sigma2
    dlt_db = -0.5 * dd_db / d
    dlt_dp = -0.5 * dd_dp / d
    dh_db = s[:, None] - mu
    dh_dp = u**2 / sigma2 - 1.0
    r2x = math.sqrt(2) * x[None, :] * tau[:, None]
    g_b = dlt_db + (pi * (dh_db + hprime * (du_db[:, None] + r2x * dlt_db[:, None]))).sum(axis=1)
    g_p = dlt_dp + (pi * (dh_dp + hprime * (du_dp[:, None] + r2x * dlt_dp[:, None]))).sum(axis=1)
    return ll, np.column_stack([g_b, g_p])


def marginal_loglik(theta, data: ClusteredOutcomes, n_quadrature: int = 15, grad: bool = False):
    """Marginal quasi-log-likelihood at ``theta = (beta0, log sigma)``; optionally its gradient."""
    s, n, c = data.cluster_sums()
    ll, g = _cluster_terms(np.asarray(theta, float), s, n, c, n_quadrature, need_grad=grad)
    total = math.fsum(ll)
    if grad:
        return total, g.sum(axis=0)
    return total


def _boundary_loglik(s, n, c):
    beta0 = math.log(s.sum() / n.sum())
    return beta0, math.fsum(s * beta0 - n * math.exp(beta0) - c)


def _fd_hessian(gradf, theta, h=1e-5):
    p = theta.size
    hess = np.empty((p, p))
    for i in range(p):
        e = np.zeros(p)
        e[i] = h
        hess[:, i] = (gradf(theta + e) - gradf(theta - e)) / (2 * h)
    return (hess + hess.T) / 2


def _safe_inv(a):
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise GLMMError(f"information matrix is singular (condition number {cond:.3e})")
    return np.linalg.inv(a)


# ---------------------------------------------------------------- Poisson fit


def fit_poisson_ri(
    data: ClusteredOutcomes,
    n_quadrature: int = 15,
    max_iter: int = 200,
    gtol: float = 1e-8,
    xtol: float = 1e-10,
    model: str = "poisson_ri",
) -> FitResult:
    """Maximum (quasi-)likelihood fit of the two-level random-intercept Poisson model.

    Damped Newton iterations with a finite-difference Hessian of the analytic
    gradient and a backtracking line search that never lets the
    log-likelihood decrease.
    """
    if n_quadrature < 1:
        raise GLMMError("n_quadrature must be >= 1")
    if data.n_clusters < 2:
        raise GLMMError("at least two clusters are needed to identify sigma2")
    s, n, c = data.cluster_sums()
    if s.sum() <= 0:
        raise GLMMError("all outcomes are zero")
    diagnostics = {
        "outcome_mean": float(data.y.mean()),
        "outcome_variance": float(data.y.var(ddof=1)) if data.y.size > 1 else 0.0,
    }

    b0_bnd, ll_bnd = _boundary_loglik(s, n, c)
    # score for sigma2 at sigma2 = 0; non-positive means the maximum sits on the boundary
    lam = n * math.exp(b0_bnd)
    boundary_score = 0.5 * math.fsum((s - lam) ** 2 - lam)
    diagnostics["boundary_score"] = boundary_score
    if boundary_score <= 0:
        return _boundary_fit(data, s, n, c, b0_bnd, ll_bnd, n_quadrature, model, diagnostics)

    def f_and_g(t):
        ll, g = _cluster_terms(t, s, n, c, n_quadrature)
        return math.fsum(ll), g.sum(axis=0)

    def gradf(t):
        return f_and_g(t)[1]

    pos = s > 0
    logmeans = np.log(s[pos] / n[pos])
    sd0 = max(float(logmeans.std(ddof=1)) if logmeans.size > 1 else 0.0, 0.1)
    theta = np.array([math.log(s.sum() / n.sum()), math.log(sd0)])
    ll, g = f_and_g(theta)
    trace = [ll]
    converged = False
    note = ""
    for it in range(max_iter):
        hess = _fd_hessian(gradf, theta)
        evals, evecs = np.linalg.eigh(hess)
        # force a descent direction for -ll when the Hessian is not negative definite
        evals = -np.maximum(np.abs(evals), 1e-6)
        step = -(evecs @ ((evecs.T @ g) / evals))
        if np.linalg.norm(g) < gtol and np.linalg.norm(step) < xtol:
            converged = True
            break
        t = 1.0
        while True:
            cand = theta + t * step
            ll_c, g_c = f_and_g(cand)
            if np.isfinite(ll_c) and ll_c >= ll + 1e-4 * t * float(g @ step):
                break
            t /= 2
            if t < 1e-12:
                break
        if t < 1e-12:
            # no representable improvement along the Newton direction
            if np.linalg.norm(g) < 1e-5:
                converged = True
                note = f"stopped at rounding level (|grad|={np.linalg.norm(g):.2e})"
            break
        theta, ll, g = cand, ll_c, g_c
        trace.append(ll)
        if theta[1] < math.log(1e-6) and ll <= ll_bnd + 1e-10:
            return _boundary_fit(data, s, n, c, b0_bnd, ll_bnd, n_quadrature, model, diagnostics)
    diagnostics["iterations"] = len(trace) - 1
    diagnostics["grad_norm"] = float(np.linalg.norm(g))
    if note:
        diagnostics["note"] = note
    if ll_bnd > ll:
        return _boundary_fit(data, s, n, c, b0_bnd, ll_bnd, n_quadrature, model, diagnostics)

    fit = FitResult(
        model=model,
        beta0=float(theta[0]),
        sigma2=math.exp(2 * theta[1]),
        se_beta0_naive=math.nan,
        se_beta0_sandwich=math.nan,
        se_sigma2=math.nan,
        se_sigma2_naive=math.nan,
        loglik=ll,
        n_quadrature=n_quadrature,
        converged=converged,
        n_obs=int(data.y.size),
        n_clusters=data.n_clusters,
        diagnostics=diagnostics,
        loglik_trace=trace,
    )
    try:
        rob = sandwich_se(fit, data)
    except GLMMError as exc:
        diagnostics["se_error"] = str(exc)
        return fit
    fit.se_beta0_naive = rob["se_beta0_naive"]
    fit.se_sigma2_naive = rob["se_sigma2_naive"]
    fit.se_beta0_sandwich = rob["se_beta0_sandwich"]
    fit.se_sigma2 = rob["se_sigma2_sandwich"]
    return fit


def _boundary_fit(data, s, n, c, beta0, ll, n_quadrature, model, diagnostics) -> FitResult:
    mu = n * math.exp(beta0)
    info = mu.sum()
    score = s - mu
    diagnostics["boundary"] = "sigma2 = 0 maximizes the likelihood"
    return FitResult(
        model=model,
        beta0=beta0,
        sigma2=0.0,
        se_beta0_naive=math.sqrt(1 / info),
        se_beta0_sandwich=math.sqrt(float(score @ score)) / info,
        se_sigma2=math.nan,
        se_sigma2_naive=math.nan,
        loglik=ll,
        n_quadrature=n_quadrature,
        converged=True,
        n_obs=int(data.y.size),
        n_clusters=data.n_clusters,
        diagnostics=diagnostics,
        loglik_trace=[ll],
        boundary=True,
    )


def sandwich_se(fit: FitResult, data: ClusteredOutcomes) -> dict[str, float]:
    """Naive and cluster-robust standard errors of ``beta0`` and ``sigma2``.

    ``A`` is the observed information of the marginal likelihood in
    ``(beta0, log sigma)``, ``B`` the sum of outer products of per-cluster
    scores; ``A^-1 B A^-1`` is mapped to ``(beta0, sigma2)`` by the delta
    method. The summed cluster scores are returned as ``score_sum``.
    """
    if not fit.converged:
        raise GLMMError("fit did not converge")
    if fit.boundary or fit.sigma2 <= 0:
        raise GLMMError("sigma2 on the boundary; sandwich in log sigma undefined")
    s, n, c = data.cluster_sums()
    theta = np.array([fit.beta0, 0.5 * math.log(fit.sigma2)])

    def gradf(t):
        return _cluster_terms(t, s, n, c, fit.n_quadrature)[1].sum(axis=0)

    a = -_fd_hessian(gradf, theta)
    a_inv = _safe_inv(a)
    scores = _cluster_terms(theta, s, n, c, fit.n_quadrature)[1]
    b = scores.T @ scores
    v_rob = a_inv @ b @ a_inv
    jac = np.diag([1.0, 2 * fit.sigma2])
    v_naive = jac @ a_inv @ jac
    v_rob = jac @ v_rob @ jac
    return {
        "se_beta0_naive": math.sqrt(v_naive[0, 0]),
        "se_sigma2_naive": math.sqrt(v_naive[1, 1]),
        "se_beta0_sandwich": math.sqrt(v_rob[0, 0]),
        "se_sigma2_sandwich": math.sqrt(v_rob[1, 1]),
        "score_sum": float(np.linalg.norm(scores.sum(axis=0))),
        "condition_number": float(np.linalg.cond(a)),
    }


# ---------------------------------------------------------------- lognormal fit


def _lognormal_parts(z, cluster, j):
    n = np.bincount(cluster, minlength=j).astype(float)
    zbar = np.bincount(cluster, weights=z, minlength=j) / n
    within = np.bincount(cluster, weights=(z - zbar[cluster]) ** 2, minlength=j)
    return n, zbar, within


def _lognormal_cluster_ll(params, n, zbar, within):
    beta0, su2, se2 = params
    v = se2 + n * su2
    r = zbar - beta0
    return -0.5 * (n * math.log(2 * math.pi) + (n - 1) * np.log(se2) + np.log(v) + within / se2 + n * r**2 / v)


def _lognormal_cluster_scores(params, n, zbar, within):
    beta0, su2, se2 = params
    v = se2 + n * su2
    r = zbar - beta0
    g_b = n * r / v
    g_u = -0.5 * (n / v - n**2 * r**2 / v**2)
    g_e = -0.5 * ((n - 1) / se2 + 1 / v - within / se2**2 - n * r**2 / v**2)
    return np.column_stack([g_b, g_u, g_e])


def _lognormal_profile(lam, n, zbar, within):
    w = n / (1 + n * lam)
    beta0 = float(w @ zbar / w.sum())
    se2 = float((within.sum() + (w * (zbar - beta0) ** 2).sum()) / n.sum())
    return beta0, lam * se2, se2


def _polish_ratio(loglam, n, zbar, within):
    # The profile is flat near its peak, so Brent stalls around 1e-8. By the
    # envelope argument the sigma2 score at the profiled point vanishes there;
    # root-find it instead.
    def score(t):
        p = np.array(_lognormal_profile(math.exp(t), n, zbar, within))
        return float(_lognormal_cluster_scores(p, n, zbar, within).sum(axis=0)[1])

    step = 1e-3
    for _ in range(30):
        lo, hi = loglam - step, loglam + step
        if score(lo) > 0 > score(hi):
            return optimize.brentq(score, lo, hi, xtol=1e-14, rtol=1e-15)
        step *= 2
        if step > 5:
            break
    return loglam


def fit_lognormal_ri(data: ClusteredOutcomes, offset: float | None = None, model: str = "lognormal_ri") -> FitResult:
    """Gaussian random-intercept model for ``log y`` (or ``log(y + offset)``), fitted by ML.

    The likelihood is profiled over the variance ratio ``sigma2 / residual``,
    which is maximized by bounded Brent search and compared against ratio 0.
    """
    if data.n_clusters < 2:
        raise GLMMError("at least two clusters are needed to identify sigma2")
    y = data.y
    if offset is None:
        bad = np.flatnonzero(y <= 0)
        if bad.size:
            names = [data.labels[i] if data.labels else str(i) for i in bad[:20]]
            raise GLMMError("zero outcomes need an offset: " + ", ".join(names))
        z = np.log(y)
    else:
        z = np.log(y + offset)
    j = data.n_clusters
    n, zbar, within = _lognormal_parts(z, data.cluster, j)

    def neg_profile(loglam):
        p = _lognormal_profile(math.exp(loglam), n, zbar, within)
        return -math.fsum(_lognormal_cluster_ll(p, n, zbar, within))

    if np.ptp(z) == 0:
        # constant logs: the variance components are both zero and the likelihood is unbounded
        return FitResult(
            model=model, beta0=float(z[0]), sigma2=0.0, se_beta0_naive=math.nan, se_beta0_sandwich=math.nan,
            se_sigma2=math.nan, se_sigma2_naive=math.nan, loglik=math.inf, n_quadrature=0, converged=True,
            n_obs=int(y.size), n_clusters=j,
            diagnostics={"outcome_mean": float(y.mean()), "outcome_variance": 0.0, "residual_variance": 0.0},
            boundary=True,
        )
    if float(np.sum(within)) <= 0:
        raise GLMMError("no within-cluster variation in log outcomes")
    p0 = _lognormal_profile(0.0, n, zbar, within)
    ll0 = math.fsum(_lognormal_cluster_ll(p0, n, zbar, within))
    res = optimize.minimize_scalar(neg_profile, bounds=(-40.0, 15.0), method="bounded", options={"xatol": 1e-12})
    loglam = _polish_ratio(res.x, n, zbar, within)
    params = _lognormal_profile(math.exp(loglam), n, zbar, within)
    ll = -neg_profile(loglam)
    boundary = ll0 >= ll
    if boundary:
        params, ll = p0, ll0
    diagnostics = {
        "outcome_mean": float(y.mean()),
        "outcome_variance": float(y.var(ddof=1)) if y.size > 1 else 0.0,
        "residual_variance": params[2],
    }
    fit = FitResult(
        model=model,
        beta0=params[0],
        sigma2=0.0 if boundary else params[1],
        se_beta0_naive=math.nan,
        se_beta0_sandwich=math.nan,
        se_sigma2=math.nan,
        se_sigma2_naive=math.nan,
        loglik=ll,
        n_quadrature=0,
        converged=bool(res.success) or boundary,
        n_obs=int(y.size),
        n_clusters=j,
        diagnostics=diagnostics,
        loglik_trace=[ll],
        boundary=boundary,
    )
    if boundary:
        info = float((n / params[2]).sum())
        sc = n * (zbar - params[0]) / params[2]
        fit.se_beta0_naive = math.sqrt(1 / info)
        fit.se_beta0_sandwich = math.sqrt(float(sc @ sc)) / info
        return fit
    p = np.array(params, dtype=float)

    def gradf(t):
        return _lognormal_cluster_scores(t, n, zbar, within).sum(axis=0)

    h = 1e-6 * np.maximum(np.abs(p), 1e-3)
    hess = np.empty((3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h[i]
        hess[:, i] = (gradf(p + e) - gradf(p - e)) / (2 * h[i])
    a = -(hess + hess.T) / 2
    try:
        a_inv = _safe_inv(a)
    except GLMMError as exc:
        diagnostics["se_error"] = str(exc)
        return fit
    sc = _lognormal_cluster_scores(p, n, zbar, within)
    v_rob = a_inv @ (sc.T @ sc) @ a_inv
    fit.se_beta0_naive = math.sqrt(a_inv[0, 0])
    fit.se_sigma2_naive = math.sqrt(a_inv[1, 1])
    fit.se_beta0_sandwich = math.sqrt(v_rob[0, 0])
    fit.se_sigma2 = math.sqrt(v_rob[1, 1])
    return fit


# ---------------------------------------------------------------- tests and suite


def wald_variance_test(fit_or_sigma2, se: float | None = None, alpha: float = 0.05, two_sided: bool = True) -> dict:
    """Wald z for the level-2 variance.

    Two-sided by default. Testing a variance on the boundary of its parameter
    space this way is conservative.
    """
    if isinstance(fit_or_sigma2, FitResult):
        sigma2, se = fit_or_sigma2.sigma2, fit_or_sigma2.se_sigma2
    else:
        sigma2 = float(fit_or_sigma2)
    if sigma2 == 0:
        return {"z": 0.0, "p_value": 1.0, "significant": False}
    if se is None or not math.isfinite(se) or se <= 0:
        raise GLMMError("standard error of sigma2 unavailable")
    z = sigma2 / se
    p = 2 * norm.sf(abs(z)) if two_sided else norm.sf(z)
    return {"z": z, "p_value": float(min(p, 1.0)), "significant": bool(p < alpha)}


def variance_reduction(sigma2_base: float, sigma2_alt: float) -> VarianceComparison:
    if sigma2_base <= 0:
        raise GLMMError("base variance must be positive")
    # rational evaluation, rounded once: (.48, .09) gives exactly 81.25
    base, alt = Fraction(sigma2_base), Fraction(sigma2_alt)
    return VarianceComparison(sigma2_base, sigma2_alt, float((base - alt) / base * 100))


MODEL_COLUMNS = {
    "M1": ("reference_if", "reference IF"),
    "M2": ("quasi_if_integer", "quasi-IF, integer counting"),
    "M3": ("quasi_if_fractional", "quasi-IF, fractional counting"),
    "M4": ("cp_fractional", "fractional c/p ratio"),
}


@dataclass
class ModelSuite:
    fits: dict[str, FitResult]
    comparisons: dict[str, VarianceComparison]
    notices: list[str]
    n_fields: int


def run_model_suite(rows, field_map: dict[str, str] | None = None, n_quadrature: int = 15) -> ModelSuite:
    """Fit M1-M4 on the same field-assigned journals; M4 drops journals without a c/p ratio.

    M1 needs a reference IF for every journal in the common set and is skipped
    with a notice otherwise.
    """
    notices: list[str] = []
    base = []
    for r in rows:
        fld = field_map.get(r.journal_id) if field_map is not None else r.field_id
        if fld is None:
            notices.append(f"{r.journal_id}: no field assignment, dropped")
            continue
        base.append((r, fld))
    n_fields = len({f for _, f in base})
    if n_fields < 2:
        raise GLMMError("fewer than two fields after filtering")
    fits: dict[str, FitResult] = {}
    for mid, (attr, _) in MODEL_COLUMNS.items():
        use = [(r, f) for r, f in base if getattr(r, attr) is not None]
        if mid == "M1" and len(use) < len(base):
            notices.append("M1 skipped: reference IF missing for some journals")
            continue
        if len(use) < len(base):
            notices.append(f"{mid}: {len(base) - len(use)} journals without a value dropped")
        data = ClusteredOutcomes.from_pairs(
            [getattr(r, attr) for r, _ in use], [f for _, f in use], [r.journal_id for r, _ in use]
        )
        fits[mid] = fit_poisson_ri(data, n_quadrature=n_quadrature, model=mid)
    comparisons = {}
    if "M2" in fits and fits["M2"].sigma2 > 0:
        for mid in ("M3", "M4"):
            if mid in fits:
                comparisons[mid] = variance_reduction(fits["M2"].sigma2, fits[mid].sigma2)
    return ModelSuite(fits, comparisons, notices, n_fields)


def model_report_csv(suite: ModelSuite) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["model_id", "beta0", "se_beta0_naive", "se_beta0_sandwich", "sigma2", "se_sigma2", "z", "p",
         "n_journals", "n_fields", "loglik", "converged"]
    )
    for mid, fit in suite.fits.items():
        try:
            wt = wald_variance_test(fit)
            z, p = f"{wt['z']:.6f}", f"{wt['p_value']:.6f}"
        except GLMMError:
            z = p = ""
        w.writerow(
            [mid, _num(fit.beta0), _num(fit.se_beta0_naive), _num(fit.se_beta0_sandwich),
             _num(fit.sigma2), _num(fit.se_sigma2), z, p, fit.n_obs, fit.n_clusters,
             _num(fit.loglik), int(fit.converged)]
        )
    return buf.getvalue()


def _num(x: float) -> str:
    return "" if not math.isfinite(x) else f"{x:.6f}"
