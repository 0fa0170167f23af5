"""Analysis of result sets: rank-sum testing with effect sizes, the
best-half-per-segment filter for the dependency-counting function, and
running medians with quartile bands for plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SEGMENTS = 20  # 5% segments of the initial-fraction axis


@dataclass(frozen=True)
class WilcoxonResult:
    u: float   # U statistic of the first sample
    z: float
    p: float
    r: float   # |z| / sqrt(n1 + n2)

    def astuple(self):
        return (self.u, self.z, self.p, self.r)


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """1-based ranks; ties share the mean of the ranks they cover."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon_ranksum(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sided Mann-Whitney rank-sum test via the normal approximation
    with midrank ties, tie-corrected variance, and continuity correction.

    Degenerate input (every pooled value identical) yields z = 0, p = 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be nonempty")
    n = n1 + n2
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u1 = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2

    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    variance = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    mean_u = n1 * n2 / 2
    if variance <= 0:
        return WilcoxonResult(u=u1, z=0.0, p=1.0, r=0.0)
    sd = math.sqrt(variance)
    # continuity correction of half a step toward the mean
    if u1 > mean_u:
        z = (u1 - mean_u - 0.5) / sd
    elif u1 < mean_u:
        z = (u1 - mean_u + 0.5) / sd
    else:
        z = 0.0
    p = min(1.0, 2 * _normal_sf(abs(z)))
    return WilcoxonResult(u=u1, z=z, p=p, r=abs(z) / math.sqrt(n))


def median_diff(a: Sequence[float], b: Sequence[float]) -> float:
    """median(a) - median(b); even-length medians average the central pair."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    return float(np.median(a) - np.median(b))


def _segment_of(fraction: float) -> int:
    return min(int(fraction * SEGMENTS), SEGMENTS - 1)


def ca_filter(series: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Keep the best half per 5% initial-fraction segment.

    Rows are bucketed into [0, 0.05), ..., [0.95, 1); each bucket keeps its
    top ceil(n/2) rows by F1 (stable order on ties). The surviving rows
    come back in their original order.
    """
    buckets: dict[int, list[int]] = {}
    for idx, (fraction, _) in enumerate(series):
        buckets.setdefault(_segment_of(fraction), []).append(idx)
    keep: set[int] = set()
    for indices in buckets.values():
        ranked = sorted(indices, key=lambda i: -series[i][1])
        keep.update(ranked[: math.ceil(len(ranked) / 2)])
    return [row for idx, row in enumerate(series) if idx in keep]


def running_median(
    series: Sequence[tuple[float, float]],
    window_fraction: float,
    grid: Optional[Sequence[float]] = None,
) -> list[tuple[float, float, float, float]]:
    """(fraction, median, p25, p75) at each grid point, over the F1 values
    of samples whose initial fraction lies within half a window of the
    point. Grid points with empty windows are omitted. Percentiles use
    linear interpolation between order statistics."""
    if not 0.0 < window_fraction < 1.0:
        raise ValueError("window_fraction must be in (0, 1)")
    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    fractions = np.asarray([f for f, _ in series], dtype=float)
    scores = np.asarray([s for _, s in series], dtype=float)
    half = window_fraction / 2
    out = []
    for g in grid:
        mask = np.abs(fractions - g) <= half
        if not mask.any():
            continue
        window = scores[mask]
        p25, med, p75 = np.percentile(window, [25, 50, 75])
        out.append((float(g), float(med), float(p25), float(p75)))
    return out
