"""Pairwise significance testing over per-run summary values.

The decision tree applied to every pair of treatments: Shapiro-Wilk on
each sample; if either looks non-Gaussian at the 5% level the p-value
comes from a two-group Kruskal-Wallis rank sum test, otherwise Levene's
test (mean-centred) routes to Welch's t-test for unequal variances or a
one-way ANOVA for equal ones. Directionality compares sample medians and
is reported only when the chosen test is significant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as sps

ALPHA = 0.05

KRUSKAL_WALLIS = "KruskalWallis"
WELCH = "Welch"
ANOVA = "ANOVA"


@dataclass(frozen=True)
class ComparisonResult:
    test_used: str       # KruskalWallis | Welch | ANOVA
    p_value: float
    direction: str       # '<', '>' or '='
    degenerate: bool = False

    def cell_text(self) -> str:
        return f"{self.direction} {self.p_value:.3g}"


def _looks_normal(sample: np.ndarray, alpha: float) -> bool:
    # A zero-variance sample has no Shapiro-Wilk statistic; treat it as
    # non-Gaussian so it routes to the rank-based branch.
    if np.ptp(sample) == 0.0:
        return False
    return sps.shapiro(sample).pvalue >= alpha


def compare(a: Sequence[float], b: Sequence[float], alpha: float = ALPHA) -> ComparisonResult:
    """Run the branch tree on two samples of per-run values.

    Degenerate inputs (every value identical across both samples) cannot
    be tested and report '=' with p = 1 and the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 3 or b.size < 3:
        raise ValueError(f"need at least 3 values per sample, got {a.size} and {b.size}")

    pooled = np.concatenate([a, b])
    if np.ptp(pooled) == 0.0:
        return ComparisonResult(KRUSKAL_WALLIS, 1.0, "=", degenerate=True)

    if not (_looks_normal(a, alpha) and _looks_normal(b, alpha)):
        test_used = KRUSKAL_WALLIS
        p = float(sps.kruskal(a, b).pvalue)
    else:
        if sps.levene(a, b, center="mean").pvalue < alpha:
            test_used = WELCH
            p = float(sps.ttest_ind(a, b, equal_var=False).pvalue)
        else:
            test_used = ANOVA
            p = float(sps.f_oneway(a, b).pvalue)
    if np.isnan(p):
        # scipy reports nan when between-group variation is exactly zero
        # (e.g. identical samples); that is the no-evidence limit.
        p = 1.0

    if p >= alpha:
        direction = "="
    else:
        med_a, med_b = float(np.median(a)), float(np.median(b))
        direction = "=" if med_a == med_b else ("<" if med_a < med_b else ">")
    return ComparisonResult(test_used, p, direction)


def pairwise_table(samples: dict[str, Sequence[float]], alpha: float = ALPHA) -> list[list[str]]:
    """Upper-triangle comparison matrix over named treatments.

    First row is a header; each following row holds the row treatment's
    comparisons against every later treatment ('dir p' cells).
    """
    names = list(samples)
    header = [""] + names[1:]
    rows = [header]
    for i, row_name in enumerate(names[:-1]):
        row = [row_name]
        for j, col_name in enumerate(names[1:], start=1):
            if j <= i:
                row.append("")
            else:
                row.append(compare(samples[row_name], samples[col_name], alpha).cell_text())
        rows.append(row)
    return rows


def write_pairwise_csv(samples: dict[str, Sequence[float]], path: Path,
                       alpha: float = ALPHA) -> None:
    with open(path, "w", newline="") as f:
        csv.writer(f).writerows(pairwise_table(samples, alpha))
