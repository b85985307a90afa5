"""Delivery and buffering metrics over simulation results."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import SimResult


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRecord:
    dr_pct: float
    dd_mean_s: float | None
    dd_max_s: float | None
    bo_mean_pct: float
    bo_max_pct: float
    n_delivered: int


@dataclass(frozen=True)
class CIStat:
    mean: float
    half_width_95: float
    n: int


def delivery_ratio(result: SimResult) -> float:
    """Percentage of generated files that reached their destination."""
    if result.generated == 0:
        raise MetricsError("empty traffic")
    return 100.0 * result.delivered / result.generated


def delivery_delay_stats(result: SimResult) -> tuple[float, float] | None:
    """(mean, max) delay in seconds over delivered files; None if nothing arrived."""
    delays = []
    for b in result.bundles:
        if b.delivered_at_ms is None:
            continue
        if b.delivered_at_ms < b.t_gen_ms:
            raise MetricsError(f"bundle {b.bundle_id} delivered before generation")
        delays.append((b.delivered_at_ms - b.t_gen_ms) / 1000.0)
    if not delays:
        return None
    return sum(delays) / len(delays), max(delays)


def total_generated_bits(result: SimResult) -> int:
    return sum(b.size_bits for b in result.bundles)


def buffer_occupation(result: SimResult, node: str) -> tuple[float, float]:
    """Time-weighted mean and pointwise max of a node's buffered volume,
    as a percentage of all generated traffic."""
    if node not in result.bo_series:
        raise MetricsError(f"unknown node {node!r}")
    total = total_generated_bits(result)
    if total == 0 or result.duration_ms == 0:
        return 0.0, 0.0
    mean_bits, max_bits = series_stats(result.bo_series[node], result.duration_ms)
    return 100.0 * mean_bits / total, 100.0 * max_bits / total


def series_stats(series: list[tuple[int, int]], duration_ms: int) -> tuple[float, float]:
    """Time-weighted mean and max of an event-stepped (t_ms, value) series."""
    area = 0
    peak = 0
    prev_t, prev_v = 0, 0
    for t, v in series:
        t = min(t, duration_ms)
        area += prev_v * (t - prev_t)
        peak = max(peak, v)
        prev_t, prev_v = t, v
    area += prev_v * (duration_ms - prev_t)
    return area / duration_ms, peak


def combine_series(series_list: list[list[tuple[int, int]]]) -> list[tuple[int, int]]:
    """Pointwise sum of several event-stepped series."""
    if not series_list:
        return [(0, 0)]
    points = sorted({t for s in series_list for t, _ in s})
    out = []
    idx = [0] * len(series_list)
    cur = [0] * len(series_list)
    for t in points:
        for k, s in enumerate(series_list):
            while idx[k] < len(s) and s[idx[k]][0] <= t:
                cur[k] = s[idx[k]][1]
                idx[k] += 1
        out.append((t, sum(cur)))
    return out


def ci95(samples: list[float]) -> CIStat:
    """Normal-approximation 95% confidence interval: mean +/- 1.96 s/sqrt(n).

    The sample standard deviation uses the n-1 denominator.  With the
    sweep default of many replications the difference from a t-interval
    is negligible.
    """
    n = len(samples)
    if n < 2:
        raise MetricsError("insufficient samples")
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    return CIStat(mean=mean, half_width_95=1.96 * math.sqrt(var / n), n=n)
