"""Rank correlation, multiple-comparison correction and annotator agreement."""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import DomainError, TooSmall, UndefinedAgreement, UndefinedCorrelation

PERMUTATIONS = 100_000
ASYMPTOTIC_MIN_N = 30


@dataclass
class CorrelationResult:
    rho: float
    p_raw: float
    p_adjusted: float = None
    n: int = 0


def rankdata_average(xs):
    """Ranks starting at 1, ties receive the average of their rank range."""
    xs = np.asarray(xs, dtype=np.float64)
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs), dtype=np.float64)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x, y):
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt(np.sum(x * x) * np.sum(y * y))
    if denom == 0.0:
        raise UndefinedCorrelation("zero variance")
    return float(np.clip(np.sum(x * y) / denom, -1.0, 1.0))


def _asymptotic_p(rho, n):
    # Two-sided p for t = rho * sqrt((n-2)/(1-rho^2)) with n-2 df,
    # via the regularized incomplete beta function.
    if abs(rho) >= 1.0:
        return 0.0
    df = n - 2
    t2 = rho * rho * df / (1.0 - rho * rho)
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def _permutation_p(xr, yr, rho, seed, permutations=PERMUTATIONS):
    rng = np.random.default_rng(seed)
    n = len(xr)
    xc = xr - xr.mean()
    yc = yr - yr.mean()
    denom = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
    perms = np.tile(yc, (permutations, 1))
    perms = rng.permuted(perms, axis=1)
    rhos = perms @ xc / denom
    hits = int(np.sum(np.abs(rhos) >= abs(rho) - 1e-12))
    return (hits + 1) / (permutations + 1)


def spearman(xs, ys, seed=0, method=None):
    """Spearman rank correlation with average-rank ties.

    The two-sided p-value is asymptotic (t-distribution) for n >= 30 and a
    seeded Monte-Carlo permutation p otherwise; `method` in {"asymptotic",
    "permutation"} overrides the cutoff.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise DomainError("inputs differ in length")
    n = len(xs)
    if n < 3:
        raise TooSmall(f"need at least 3 pairs, got {n}")
    xr = rankdata_average(xs)
    yr = rankdata_average(ys)
    rho = _pearson(xr, yr)
    if method is None:
        method = "asymptotic" if n >= ASYMPTOTIC_MIN_N else "permutation"
    if method == "asymptotic":
        p = _asymptotic_p(rho, n)
    elif method == "permutation":
        p = _permutation_p(xr, yr, rho, seed)
    else:
        raise DomainError(f"unknown method {method!r}")
    return CorrelationResult(rho=rho, p_raw=p, n=n)


def holm_bonferroni(p_values):
    """Step-down Holm adjustment, returned in the original order."""
    ps = np.asarray(p_values, dtype=np.float64)
    if np.any((ps < 0) | (ps > 1)) or np.any(np.isnan(ps)):
        raise DomainError("p-values must lie in [0, 1]")
    m = len(ps)
    order = np.argsort(ps, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * ps[idx]))
        adjusted[idx] = running
    return adjusted.tolist()


def _ordinal_deltas(values, marginals):
    # delta^2(c, k) = (sum_{g=c..k} n_g - (n_c + n_k)/2)^2 on the marginals.
    k = len(values)
    cum = np.concatenate([[0.0], np.cumsum(marginals)])
    delta = np.zeros((k, k))
    for c in range(k):
        for d in range(c + 1, k):
            span = cum[d + 1] - cum[c]
            delta[c, d] = delta[d, c] = (span - (marginals[c] + marginals[d]) / 2.0) ** 2
    return delta


def krippendorff_alpha(ratings, level="ordinal"):
    """Krippendorff's alpha from a {(unit, annotator): value} mapping.

    Units with fewer than two ratings are excluded.  Supported levels:
    nominal, ordinal, interval.
    """
    units = {}
    for (unit, _annotator), value in ratings.items():
        units.setdefault(unit, []).append(value)
    units = {u: vals for u, vals in units.items() if len(vals) >= 2}
    if len(units) < 1:
        raise UndefinedAgreement("no unit has two or more ratings")
    if len(units) < 2:
        raise UndefinedAgreement("need at least 2 multiply-rated units")

    values = sorted({v for vals in units.values() for v in vals})
    vindex = {v: i for i, v in enumerate(values)}
    k = len(values)

    # Coincidence matrix: ordered value pairs within units, weighted 1/(m_u - 1).
    coincidence = np.zeros((k, k))
    for vals in units.values():
        m = len(vals)
        for i, vi in enumerate(vals):
            for j, vj in enumerate(vals):
                if i != j:
                    coincidence[vindex[vi], vindex[vj]] += 1.0 / (m - 1)
    marginals = coincidence.sum(axis=1)
    total = marginals.sum()

    if level == "nominal":
        delta = 1.0 - np.eye(k)
    elif level == "interval":
        arr = np.asarray(values, dtype=np.float64)
        delta = (arr[:, None] - arr[None, :]) ** 2
    elif level == "ordinal":
        delta = _ordinal_deltas(values, marginals)
    else:
        raise DomainError(f"unknown level {level!r}")

    d_observed = float(np.sum(coincidence * delta))
    d_expected = float(np.sum(np.outer(marginals, marginals) * delta)) / (total - 1.0)
    if d_expected == 0.0:
        if d_observed == 0.0:
            return 1.0
        raise UndefinedAgreement("zero expected disagreement with nonzero observed")
    return 1.0 - d_observed / d_expected
