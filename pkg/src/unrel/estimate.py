"""Log-space estimates and their aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .graph import GraphInputError


class Case(str, Enum):
    EXACT = "Exact"
    MONTE_CARLO = "MonteCarlo"
    RELIABLE = "Reliable"
    VERY_RELIABLE = "VeryReliable"
    CONTRACTED = "Contracted"


@dataclass
class Estimate:
    """Nonnegative estimate stored as a natural log (``-inf`` is zero).

    ``relvar`` is the empirical relative variance of one sample when the
    estimate is an average, 0 for exact values.  ``biased`` marks estimators
    whose expectation may differ from u_G(p) by a small relative amount.
    """

    log_value: float
    samples: int
    relvar: float
    case: Case
    depth: int = 0
    biased: bool = False
    info: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf


def log_mean(log_x: np.ndarray) -> float:
    log_x = np.asarray(log_x, dtype=float)
    if len(log_x) == 0:
        raise GraphInputError("mean of no samples")
    if np.all(log_x == -np.inf):
        return -math.inf
    return float(logsumexp(log_x) - math.log(len(log_x)))


def relative_variance(log_x: np.ndarray) -> float:
    """Sample variance over squared mean, computed after rescaling by the max."""
    log_x = np.asarray(log_x, dtype=float)
    if len(log_x) < 2 or np.all(log_x == -np.inf):
        return 0.0
    x = np.exp(log_x - log_x.max())
    mu = x.mean()
    return float(x.var(ddof=1) / (mu * mu))


def aggregate_median_of_means(log_samples, groups: int, case: Case = Case.MONTE_CARLO) -> Estimate:
    """Median (lower median for even counts) of the means of ``groups`` consecutive blocks."""
    log_samples = np.asarray(log_samples, dtype=float)
    if groups < 1:
        raise GraphInputError("need at least one group")
    if len(log_samples) < groups:
        raise GraphInputError(f"{len(log_samples)} samples cannot fill {groups} groups")
    means = sorted(log_mean(block) for block in np.array_split(log_samples, groups))
    return Estimate(means[(groups - 1) // 2], len(log_samples), relative_variance(log_samples), case)


def lower_median(values) -> float:
    vals = sorted(values)
    return vals[(len(vals) - 1) // 2]
