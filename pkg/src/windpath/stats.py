"""Comparison statistics: percent differences and unpaired t-tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


def percent_diff(single: float, all_: float) -> float:
    """100 * (all - single) / all: how much worse the balanced strategy is
    than the single-objective one, in percent of the balanced cost."""
    if all_ <= 0:
        raise ValueError("denominator cost must be positive")
    return 100.0 * (all_ - single) / all_


@dataclass(frozen=True)
class TTestReport:
    """Unpaired two-sample t-test. mean_diff is mean(a) - mean(b); the output
    always states this convention and the variance variant used."""

    mean_diff: float
    t_stat: float
    dof: float
    p_value: float
    ci_low: float
    ci_high: float
    n_a: int
    n_b: int
    variant: str  # "pooled" | "unpooled"

    def summary(self) -> str:
        return (f"{self.variant} unpaired t-test (mean diff = mean(a)-mean(b)): "
                f"diff={self.mean_diff:.2f}, t={self.t_stat:.4f}, dof={self.dof:.1f}, "
                f"two-tailed p={self.p_value:.4f}, "
                f"95% CI [{self.ci_low:.2f}, {self.ci_high:.2f}], "
                f"n=({self.n_a}, {self.n_b})")


def ttest_unpaired(a, b, variant: str = "pooled") -> TTestReport:
    """Student's pooled-variance t by default; 'unpooled' gives Welch."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if variant not in ("pooled", "unpooled"):
        raise ValueError(f"variant must be pooled/unpooled, got {variant!r}")
    mean_diff = float(a.mean() - b.mean())
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = a.size, b.size

    if va == 0.0 and vb == 0.0:
        if mean_diff == 0.0:  # degenerate: identical constants
            return TTestReport(0.0, 0.0, float(na + nb - 2), 1.0, 0.0, 0.0,
                               na, nb, variant)
        raise ValueError("zero variance in both samples with unequal means")

    if variant == "pooled":
        dof = na + nb - 2
        sp2 = ((na - 1) * va + (nb - 1) * vb) / dof
        se = np.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    else:
        se = np.sqrt(va / na + vb / nb)
        dof = (va / na + vb / nb) ** 2 / (
            (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    t = mean_diff / se
    p = float(2.0 * sps.t.sf(abs(t), dof))
    half = float(sps.t.ppf(0.975, dof) * se)
    return TTestReport(mean_diff=mean_diff, t_stat=float(t), dof=float(dof),
                       p_value=p, ci_low=mean_diff - half, ci_high=mean_diff + half,
                       n_a=int(na), n_b=int(nb), variant=variant)
