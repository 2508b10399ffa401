"""Paired comparison of two estimators over Monte Carlo replications."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import ConfigurationError

__all__ = ["PairedComparison", "mse", "wilcoxon_one_sided", "compare", "EXACT_MAX"]

EXACT_MAX = 12


def mse(estimates, theta=0.0):
    """Mean squared deviation of ``estimates`` from ``theta``."""
    e = np.asarray(estimates, dtype=float).ravel()
    if e.size == 0:
        raise ConfigurationError("no estimates")
    return float(np.mean((e - theta) ** 2))


def _exact_upper_tail(ranks, observed):
    """P(W+ >= observed) under random signs, by dynamic programming over doubled ranks."""
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    top = 0
    for r in doubled:
        counts[r:top + r + 1] = counts[r:top + r + 1] + counts[:top + 1]
        top += r
    threshold = int(round(2.0 * observed))
    return float(counts[threshold:].sum() / 2.0 ** ranks.size)


def wilcoxon_one_sided(abs_err_self, abs_err_other):
    """One-sided signed-rank p-value that ``self`` has smaller absolute errors.

    Differences ``d = other - self`` equal to zero are dropped and tied
    ``|d|`` get midranks.  The statistic is the sum of ranks of positive
    ``d``.  With at most 12 nonzero differences the p-value is exact;
    otherwise it uses the normal approximation with continuity correction
    and the tie-corrected variance.  All-zero differences give ``p = 1``.
    """
    a = np.asarray(abs_err_self, dtype=float).ravel()
    b = np.asarray(abs_err_other, dtype=float).ravel()
    if a.size != b.size:
        raise ConfigurationError("error lists differ in length")
    d = b - a
    d = d[d != 0]
    m = d.size
    if m == 0:
        return 1.0
    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if m <= EXACT_MAX:
        return min(1.0, _exact_upper_tail(ranks, w_plus))
    mean = m * (m + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    return float(special.ndtr(-z))


@dataclass(frozen=True)
class PairedComparison:
    mse_ratio: float
    win_proportion: float
    p_value: float
    m: int

    def as_dict(self):
        return {"mse_ratio": self.mse_ratio, "win_proportion": self.win_proportion,
                "p_value": self.p_value, "m": self.m}


def compare(estimates_self, estimates_other, theta=0.0):
    """MSE ratio (self / other), strict-win proportion and signed-rank p-value."""
    a = np.asarray(estimates_self, dtype=float).ravel()
    b = np.asarray(estimates_other, dtype=float).ravel()
    if a.size != b.size:
        raise ConfigurationError("estimate lists differ in length")
    err_a, err_b = np.abs(a - theta), np.abs(b - theta)
    mse_a, mse_b = mse(a, theta), mse(b, theta)
    if mse_b > 0:
        ratio = mse_a / mse_b
    else:
        ratio = 1.0 if mse_a == 0 else math.inf
    wins = float(np.mean(err_a < err_b))
    return PairedComparison(ratio, wins, wilcoxon_one_sided(err_a, err_b), int(a.size))
