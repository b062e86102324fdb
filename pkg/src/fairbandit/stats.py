"""Hypothesis tests and effect sizes for the run-level comparisons.

Welch's unequal-variance t-test compares the women's and men's run-level
values; the directional alternatives say whether women's performance is
better, worse, or simply unequal. For metrics where smaller is better
(the suboptimal-action fraction) callers pass ``larger_is_better=False``
and the tails flip accordingly. Cohen's d uses the classic pooled standard
deviation; confidence intervals use the 1.96 normal approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _sps

from .errors import ContractViolationError, DegenerateDataError


class Alternative(Enum):
    WOMEN_BETTER = "women_better"
    WOMEN_WORSE = "women_worse"
    UNEQUAL = "unequal"


@dataclass
class TestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    alternative: Alternative


@dataclass
class EffectSize:
    cohens_d: float


def welch_test(sample_women, sample_men, alternative: Alternative,
               larger_is_better: bool = True) -> TestResult:
    """Welch's t-test of women's values against men's.

    The t statistic is (mean_w - mean_m) / sqrt(s_w^2/n_w + s_m^2/n_m) with
    Welch-Satterthwaite degrees of freedom; one-sided p-values come from the
    t tail in the direction named by ``alternative``, and the two-sided
    p-value is 2 * min(p, 1 - p) of the upper-tail probability.
    """
    a = np.asarray(sample_women, dtype=np.float64)
    b = np.asarray(sample_men, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ContractViolationError("each sample needs at least 2 elements")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateDataError("both samples have zero variance")
    sa2 = va / a.size
    sb2 = vb / b.size
    se = math.sqrt(sa2 + sb2)
    t = (float(np.mean(a)) - float(np.mean(b))) / se
    df = (sa2 + sb2) ** 2 / (sa2 ** 2 / (a.size - 1) + sb2 ** 2 / (b.size - 1))
    # upper-tail probability of observing women above men
    p_upper = float(_sps.t.sf(t, df))
    if alternative is Alternative.UNEQUAL:
        p = 2.0 * min(p_upper, 1.0 - p_upper)
    elif (alternative is Alternative.WOMEN_BETTER) == larger_is_better:
        p = p_upper
    else:
        p = 1.0 - p_upper
    return TestResult(t_statistic=t, degrees_of_freedom=df, p_value=p,
                      alternative=alternative)


def pooled_welch_variant(sample_women, sample_men,
                         alternative: Alternative,
                         larger_is_better: bool = True) -> TestResult:
    """Equal-variance (pooled) variant, offered for sensitivity analysis."""
    a = np.asarray(sample_women, dtype=np.float64)
    b = np.asarray(sample_men, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ContractViolationError("each sample needs at least 2 elements")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateDataError("both samples have zero variance")
    df = a.size + b.size - 2
    sp2 = ((a.size - 1) * va + (b.size - 1) * vb) / df
    se = math.sqrt(sp2 * (1.0 / a.size + 1.0 / b.size))
    t = (float(np.mean(a)) - float(np.mean(b))) / se
    p_upper = float(_sps.t.sf(t, df))
    if alternative is Alternative.UNEQUAL:
        p = 2.0 * min(p_upper, 1.0 - p_upper)
    elif (alternative is Alternative.WOMEN_BETTER) == larger_is_better:
        p = p_upper
    else:
        p = 1.0 - p_upper
    return TestResult(t_statistic=t, degrees_of_freedom=float(df), p_value=p,
                      alternative=alternative)


def cohens_d(mean_a: float, std_a: float, n_a: int,
             mean_b: float, std_b: float, n_b: int) -> EffectSize:
    """Signed pooled-standard-deviation effect size (mean_a - mean_b)."""
    if n_a < 2 or n_b < 2:
        raise ContractViolationError("cohens_d needs n >= 2 per sample")
    if std_a < 0.0 or std_b < 0.0:
        raise ContractViolationError("standard deviations must be >= 0")
    pooled = math.sqrt(((n_a - 1) * std_a ** 2 + (n_b - 1) * std_b ** 2)
                       / (n_a + n_b - 2))
    if pooled == 0.0:
        raise DegenerateDataError("pooled standard deviation is zero")
    return EffectSize(cohens_d=(mean_a - mean_b) / pooled)


def ci95(samples) -> tuple[float, float]:
    """Normal-approximation 95% interval: mean +/- 1.96 * sd / sqrt(n)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ContractViolationError("ci95 needs at least 2 samples")
    mean = float(np.mean(x))
    half = 1.96 * float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return mean - half, mean + half
