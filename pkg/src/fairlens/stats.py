"""Assumption-checked hypothesis tests over per-speaker score samples.

All tests are two-sided. Tail probabilities come from the incomplete beta
and gamma functions in :mod:`fairlens._special`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from statistics import NormalDist
from typing import Literal, Sequence

import numpy as np

from . import _special
from .errors import DegenerateSampleError, UnsupportedSampleError

__all__ = [
    "Sample",
    "TestResult",
    "DecisionTrace",
    "shapiro_wilk",
    "levene",
    "student_t",
    "welch_t",
    "mann_whitney_u",
    "one_way_anova",
    "welch_anova",
    "kruskal_wallis",
    "significance_stars",
    "select_and_test",
]

TestName = Literal[
    "shapiro_wilk",
    "levene",
    "student_t",
    "welch_t",
    "mann_whitney_u",
    "anova",
    "welch_anova",
    "kruskal_wallis",
]

MWU_EXACT_MAX_N = 20


@dataclass(frozen=True)
class Sample:
    group: str
    values: tuple[float, ...]

    def __init__(self, group: str, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"sample {group!r} contains non-finite values")
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    test_name: TestName
    statistic: float
    p_value: float
    degrees_of_freedom: tuple[float, ...] | None = None
    note: str | None = None


@dataclass
class DecisionTrace:
    groups: list[str]
    sizes: list[int]
    normality_results: dict[str, TestResult | None] = field(default_factory=dict)
    variance_result: TestResult | None = None
    all_normal: bool | None = None
    equal_variances: bool | None = None
    chosen_test: TestName | None = None
    final: TestResult | None = None
    significance_stars: str = ""
    alpha_assumption: float = 0.05
    reason: str = ""
    testable: bool = True


def _values(x: Sample | Sequence[float]) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Sample) else x, dtype=float)


def _clip_p(p: float) -> float:
    return min(1.0, max(0.0, p))


# --------------------------------------------------------------------------
# Shapiro-Wilk, Royston (1995) AS R94

_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coefs: Sequence[float], x: float) -> float:
    out = 0.0
    for c in reversed(coefs):
        out = out * x + c
    return out


@lru_cache(maxsize=256)
def _sw_coefficients(n: int) -> np.ndarray:
    """Full antisymmetric coefficient vector for sorted data of size n."""
    half = n // 2
    if n == 3:
        lower = np.array([math.sqrt(0.5)])
    else:
        inv = NormalDist().inv_cdf
        m = np.array([inv((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
        summ2 = 2.0 * float(np.dot(m, m))
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
            lower = -m / fac
            lower[1] = a2
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
            lower = -m / fac
        lower[0] = a1
    full = np.zeros(n)
    full[:half] = -lower
    full[n - half :] = lower[::-1]
    return full


def shapiro_wilk(values: Sample | Sequence[float]) -> TestResult:
    """Shapiro-Wilk normality test (W statistic and p-value), 3 <= n <= 5000."""
    x = np.sort(_values(values))
    n = x.size
    if n < 3 or n > 5000:
        raise UnsupportedSampleError(f"Shapiro-Wilk supports 3 <= n <= 5000, got n={n}")
    rng = x[-1] - x[0]
    if rng < 1e-19 * max(1.0, abs(x[0])):
        raise DegenerateSampleError("Shapiro-Wilk is undefined when all values are identical")
    a = _sw_coefficients(n)
    xc = (x - x.mean()) / rng
    w = float(np.dot(a, xc) ** 2 / (np.dot(a, a) * np.dot(xc, xc)))
    w = min(w, 1.0)
    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        return TestResult("shapiro_wilk", w, _clip_p(p))
    w1 = 1.0 - w
    if w1 <= 0.0:
        return TestResult("shapiro_wilk", w, 1.0)
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return TestResult("shapiro_wilk", w, 0.0)
        y = -math.log(gamma - y)
        mean = _poly(_C3, n)
        sd = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mean = _poly(_C5, ln)
        sd = math.exp(_poly(_C6, ln))
    return TestResult("shapiro_wilk", w, _clip_p(_special.norm_sf((y - mean) / sd)))


# --------------------------------------------------------------------------
# variance homogeneity


def levene(samples: Sequence[Sample | Sequence[float]], center: Literal["mean", "median"] = "mean") -> TestResult:
    """Levene's test; ``center="median"`` gives the Brown-Forsythe variant."""
    if len(samples) < 2:
        raise ValueError("Levene's test needs at least two samples")
    groups = [_values(s) for s in samples]
    if any(g.size < 2 for g in groups):
        raise UnsupportedSampleError("Levene's test needs n >= 2 in every sample")
    k = len(groups)
    n_total = sum(g.size for g in groups)
    centre = np.mean if center == "mean" else np.median
    z = [np.abs(g - centre(g)) for g in groups]
    zbar_i = np.array([zi.mean() for zi in z])
    sizes = np.array([g.size for g in groups], dtype=float)
    zbar = float(np.dot(sizes, zbar_i) / n_total)
    between = float(np.dot(sizes, (zbar_i - zbar) ** 2))
    within = float(sum(np.sum((zi - m) ** 2) for zi, m in zip(z, zbar_i)))
    dfn, dfd = k - 1, n_total - k
    stat, p = _ratio_stat(between / dfn, within / dfd if dfd else 0.0, dfn, dfd)
    return TestResult("levene", stat, p, (float(dfn), float(dfd)), note=f"center={center}")


def _ratio_stat(num: float, den: float, dfn: float, dfd: float) -> tuple[float, float]:
    # zero-denominator conventions: 0/0 -> (0, 1); x/0 -> (inf, 0)
    if den <= 0.0 or dfd <= 0:
        if num <= 1e-300:
            return 0.0, 1.0
        return math.inf, 0.0
    stat = num / den
    return stat, _clip_p(_special.f_sf(stat, dfn, dfd))


# --------------------------------------------------------------------------
# two-sample location tests


def _t_result(name: TestName, diff: float, se2: float, df: float, note: str | None = None) -> TestResult:
    if se2 <= 0.0:
        if diff == 0.0:
            return TestResult(name, 0.0, 1.0, (df,), note="zero variance, equal means")
        return TestResult(name, math.copysign(math.inf, diff), 0.0, (df,), note="zero variance, unequal means")
    t = diff / math.sqrt(se2)
    return TestResult(name, t, _clip_p(_special.t_sf_two_sided(t, df)), (df,), note)


def student_t(a: Sample | Sequence[float], b: Sample | Sequence[float]) -> TestResult:
    """Two-sample t-test with pooled variance."""
    x, y = _values(a), _values(b)
    na, nb = x.size, y.size
    if na < 2 or nb < 2:
        raise UnsupportedSampleError("t-test needs n >= 2 in both samples")
    df = na + nb - 2
    ss = float(np.sum((x - x.mean()) ** 2) + np.sum((y - y.mean()) ** 2))
    pooled = ss / df
    return _t_result("student_t", float(x.mean() - y.mean()), pooled * (1.0 / na + 1.0 / nb), float(df))


def welch_t(a: Sample | Sequence[float], b: Sample | Sequence[float]) -> TestResult:
    """Two-sample t-test without the equal-variance assumption (Welch-Satterthwaite df)."""
    x, y = _values(a), _values(b)
    na, nb = x.size, y.size
    if na < 2 or nb < 2:
        raise UnsupportedSampleError("t-test needs n >= 2 in both samples")
    va, vb = float(x.var(ddof=1)) / na, float(y.var(ddof=1)) / nb
    se2 = va + vb
    if se2 > 0:
        fa, fb = va / se2, vb / se2  # ratio form avoids underflow for tiny variances
        df = 1.0 / (fa * fa / (na - 1) + fb * fb / (nb - 1))
    else:
        df = float(na + nb - 2)
    return _t_result("welch_t", float(x.mean() - y.mean()), se2, float(df))


def _rank(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks (1-based) and the sizes of tied blocks."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size)
    ties = []
    i = 0
    n = values.size
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        if j > i:
            ties.append(j - i + 1)
        i = j + 1
    return ranks, np.array(ties, dtype=float)


@lru_cache(maxsize=512)
def _mwu_counts(na: int, nb: int) -> tuple[int, ...]:
    """Number of arrangements giving each U in 0..na*nb under the null."""
    # f[m][n] as a list over u; built bottom-up with f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u)
    prev_row = [[1] for _ in range(nb + 1)]  # m = 0: only U = 0
    for m in range(1, na + 1):
        row = [[1]]  # n = 0: only U = 0
        for n in range(1, nb + 1):
            size = m * n + 1
            dist = [0] * size
            for u, c in enumerate(prev_row[n]):  # (m-1, n) shifted by n
                dist[u + n] += c
            for u, c in enumerate(row[n - 1]):  # (m, n-1)
                dist[u] += c
            row.append(dist)
        prev_row = row
    return tuple(prev_row[nb])


def mann_whitney_u(
    a: Sample | Sequence[float],
    b: Sample | Sequence[float],
    mode: Literal["exact", "normal_approx", "auto"] = "auto",
) -> TestResult:
    """Mann-Whitney U test; the statistic is U for the first sample.

    ``exact`` enumerates the permutation null and needs a tie-free sample
    with n_a + n_b <= 20. ``normal_approx`` applies tie and continuity
    corrections. ``auto`` uses the exact null whenever it is allowed.
    """
    x, y = _values(a), _values(b)
    na, nb = x.size, y.size
    if na < 1 or nb < 1:
        raise UnsupportedSampleError("Mann-Whitney U needs n >= 1 in both samples")
    ranks, ties = _rank(np.concatenate([x, y]))
    u = float(ranks[:na].sum() - na * (na + 1) / 2.0)
    exact_ok = ties.size == 0 and na + nb <= MWU_EXACT_MAX_N
    if mode == "exact" and not exact_ok:
        raise UnsupportedSampleError("exact Mann-Whitney needs tie-free data with n_a + n_b <= 20")
    if mode == "exact" or (mode == "auto" and exact_ok):
        counts = _mwu_counts(na, nb)
        k = int(round(u))
        total = math.comb(na + nb, na)
        le = sum(counts[: k + 1])
        ge = sum(counts[k:])
        p = min(1.0, 2 * min(le, ge) / total)
        return TestResult("mann_whitney_u", u, p, note="exact")
    n = na + nb
    mu = na * nb / 2.0
    tie_term = float(np.sum(ties**3 - ties)) / (n * (n - 1)) if n > 1 else 0.0
    var = na * nb / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return TestResult("mann_whitney_u", u, 1.0, note="normal_approx; all values tied")
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    p = 2.0 * _special.norm_sf(z) if z > 0 else 1.0
    return TestResult("mann_whitney_u", u, _clip_p(p), note="normal_approx")


# --------------------------------------------------------------------------
# k-sample tests


def _check_k(samples) -> list[np.ndarray]:
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    groups = [_values(s) for s in samples]
    if any(g.size < 2 for g in groups):
        raise UnsupportedSampleError("every sample needs n >= 2")
    return groups


def one_way_anova(samples: Sequence[Sample | Sequence[float]]) -> TestResult:
    groups = _check_k(samples)
    k = len(groups)
    n_total = sum(g.size for g in groups)
    grand = float(np.concatenate(groups).mean())
    between = float(sum(g.size * (g.mean() - grand) ** 2 for g in groups))
    within = float(sum(np.sum((g - g.mean()) ** 2) for g in groups))
    dfn, dfd = k - 1, n_total - k
    stat, p = _ratio_stat(between / dfn, within / dfd, dfn, dfd)
    return TestResult("anova", stat, p, (float(dfn), float(dfd)))


def welch_anova(samples: Sequence[Sample | Sequence[float]]) -> TestResult:
    """Welch's heteroscedastic one-way ANOVA."""
    groups = _check_k(samples)
    k = len(groups)
    variances = np.array([g.var(ddof=1) for g in groups])
    means = np.array([g.mean() for g in groups])
    sizes = np.array([g.size for g in groups], dtype=float)
    if np.all(variances == 0):
        stat, p = _ratio_stat(float(np.ptp(means)), 0.0, k - 1, 1)
        return TestResult("welch_anova", stat, p, note="all within-group variances are zero")
    if np.any(variances == 0):
        raise DegenerateSampleError("Welch ANOVA is undefined when some group has zero variance")
    w = sizes / variances
    wsum = float(w.sum())
    mw = float(np.dot(w, means) / wsum)
    a = float(np.dot(w, (means - mw) ** 2)) / (k - 1)
    tmp = float(np.sum((1.0 - w / wsum) ** 2 / (sizes - 1.0)))
    b = 1.0 + 2.0 * (k - 2) / (k * k - 1.0) * tmp
    stat = a / b
    dfn, dfd = float(k - 1), (k * k - 1.0) / (3.0 * tmp)
    return TestResult("welch_anova", stat, _clip_p(_special.f_sf(stat, dfn, dfd)), (dfn, dfd))


def kruskal_wallis(samples: Sequence[Sample | Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H test with tie correction (chi-squared reference)."""
    groups = _check_k(samples)
    k = len(groups)
    pooled = np.concatenate(groups)
    n = pooled.size
    ranks, ties = _rank(pooled)
    correction = 1.0 - float(np.sum(ties**3 - ties)) / (n**3 - n)
    if correction <= 0.0:
        return TestResult("kruskal_wallis", 0.0, 1.0, (float(k - 1),), note="all values tied")
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + g.size]
        h += r.sum() ** 2 / g.size
        start += g.size
    h = (12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)) / correction
    h = max(h, 0.0)
    return TestResult("kruskal_wallis", h, _clip_p(_special.chi2_sf(h, k - 1)), (float(k - 1),))


# --------------------------------------------------------------------------
# decision procedure


def significance_stars(p: float | None) -> str:
    """'***' below 0.001, '**' below 0.01, '*' below 0.05, else ''."""
    if p is None or math.isnan(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def select_and_test(
    samples: Sequence[Sample],
    alpha_assumption: float = 0.05,
    levene_center: Literal["mean", "median"] = "mean",
    mwu_mode: Literal["exact", "normal_approx", "auto"] = "auto",
) -> DecisionTrace:
    """Check normality and equal variances, then run the matching comparison.

    Two groups: Student t, Welch t, or Mann-Whitney U. Three or more: ANOVA,
    Welch ANOVA, or Kruskal-Wallis. A group with zero spread counts as
    non-normal. Groups too small to check are reported as untestable rather
    than raising.
    """
    if not 0.0 < alpha_assumption < 1.0:
        raise ValueError("alpha_assumption must lie in (0, 1)")
    trace = DecisionTrace(
        groups=[s.group for s in samples],
        sizes=[len(s) for s in samples],
        alpha_assumption=alpha_assumption,
    )
    if len(samples) < 2:
        trace.testable = False
        trace.reason = "fewer than two groups"
        return trace
    small = [s.group for s in samples if len(s) < 3]
    if small:
        trace.testable = False
        trace.reason = f"group(s) below the minimum of 3 speakers: {', '.join(small)}"
        return trace

    all_normal = True
    for s in samples:
        try:
            res = shapiro_wilk(s.values[:5000] if len(s) > 5000 else s.values)
        except DegenerateSampleError:
            trace.normality_results[s.group] = None
            all_normal = False
            continue
        trace.normality_results[s.group] = res
        if res.p_value < alpha_assumption:
            all_normal = False
    trace.variance_result = levene(samples, center=levene_center)
    equal_var = trace.variance_result.p_value >= alpha_assumption
    trace.all_normal, trace.equal_variances = all_normal, equal_var

    two = len(samples) == 2
    if not all_normal:
        if two:
            trace.chosen_test = "mann_whitney_u"
            trace.final = mann_whitney_u(samples[0], samples[1], mode=mwu_mode)
        else:
            trace.chosen_test = "kruskal_wallis"
            trace.final = kruskal_wallis(samples)
        trace.reason = "normality rejected for at least one group"
    elif equal_var:
        trace.chosen_test = "student_t" if two else "anova"
        trace.final = student_t(samples[0], samples[1]) if two else one_way_anova(samples)
        trace.reason = "normal groups with homogeneous variances"
    else:
        trace.chosen_test = "welch_t" if two else "welch_anova"
        trace.final = welch_t(samples[0], samples[1]) if two else welch_anova(samples)
        trace.reason = "normal groups with heterogeneous variances"
    trace.significance_stars = significance_stars(trace.final.p_value)
    return trace
