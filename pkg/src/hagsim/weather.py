"""Cloud-cover availability model.

Each ground site alternates between clear sky and cloud cover following
an exponential on/off renewal process.  The two inputs are the mean
clear-sky duration TCC (so the cloud-cover onset rate is 1/TCC) and the
mean cloud-cover duration TCS.  Sampling the process over a horizon
yields a weather plan: the list of blocked intervals per site.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .rng import Stream

SECONDS_PER_HOUR = 3600.0


class WeatherFormatError(ValueError):
    """Raised for malformed weather plan text."""


@dataclass(frozen=True)
class WeatherModel:
    """Mean clear-sky duration (TCC) and mean cloud-cover duration (TCS), hours."""

    tcc_hours: float
    tcs_hours: float

    def __post_init__(self):
        if self.tcc_hours <= 0:
            raise ValueError(f"tcc_hours must be positive, got {self.tcc_hours}")
        if self.tcs_hours <= 0:
            raise ValueError(f"tcs_hours must be positive, got {self.tcs_hours}")

    @property
    def blocked_fraction(self) -> float:
        """Stationary probability of being cloud-covered."""
        return self.tcs_hours / (self.tcc_hours + self.tcs_hours)


@dataclass(frozen=True, order=True)
class BlockedInterval:
    """One cloud-covered interval at a site, integer milliseconds."""

    site_id: str
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if not (0 <= self.start_ms < self.end_ms):
            raise ValueError(
                f"invalid blocked interval [{self.start_ms}, {self.end_ms}] ms"
            )

    @property
    def start_s(self) -> float:
        return self.start_ms / 1000.0

    @property
    def end_s(self) -> float:
        return self.end_ms / 1000.0


@dataclass
class WeatherPlan:
    """Blocked intervals per site over a common horizon.

    `intervals` maps each known site to a sorted, pairwise-disjoint list
    clipped to [0, horizon].  A site with no cloud events is present with
    an empty list; carving treats a missing site as a hard error.
    """

    horizon_ms: int
    intervals: dict[str, list[BlockedInterval]] = field(default_factory=dict)

    def __post_init__(self):
        for site, ivs in self.intervals.items():
            prev_end = -1
            for iv in ivs:
                if iv.site_id != site:
                    raise ValueError(f"interval for {iv.site_id} filed under {site}")
                if iv.start_ms < prev_end:
                    raise ValueError(f"intervals for {site} overlap or are unsorted")
                if iv.end_ms > self.horizon_ms:
                    raise ValueError(f"interval for {site} exceeds horizon")
                prev_end = iv.end_ms

    def ensure_sites(self, site_ids) -> None:
        """Register sites that happen to have no blocked intervals."""
        for sid in site_ids:
            self.intervals.setdefault(sid, [])

    def blocked_at(self, site_id: str, t_ms: int) -> bool:
        """Whether `site_id` is cloud-covered at `t_ms` ([start, end) convention)."""
        ivs = self.intervals[site_id]
        i = bisect.bisect_right(ivs, t_ms, key=lambda iv: iv.start_ms) - 1
        return i >= 0 and t_ms < ivs[i].end_ms


def cloud_cover_cdf(model: WeatherModel, t_hours: float) -> float:
    """Probability that cloud cover has set in within `t_hours` of clear sky.

    This is the exponential CDF 1 - exp(-t/TCC); it is 0 at t=0, strictly
    increasing, and tends to 1.
    """
    if t_hours < 0:
        raise ValueError(f"t_hours must be non-negative, got {t_hours}")
    import math

    return 1.0 - math.exp(-t_hours / model.tcc_hours)


def sample_weather_plan(
    model: WeatherModel,
    site_id: str,
    horizon_s: float,
    stream: Stream,
    start: str = "stationary",
) -> list[BlockedInterval]:
    """Draw the blocked intervals of one site over [0, horizon_s].

    The process alternates clear ~ Exp(TCC) and blocked ~ Exp(TCS).  With
    `start="stationary"` the initial state is blocked with probability
    TCS/(TCC+TCS) and the first residual duration is exponential with the
    full state mean, which is the stationary law by memorylessness.
    `start="clear"` forces a clear sky at t=0.
    """
    if horizon_s <= 0:
        raise ValueError(f"horizon_s must be positive, got {horizon_s}")
    if start not in ("stationary", "clear"):
        raise ValueError(f"unknown start policy {start!r}")

    tcc_s = model.tcc_hours * SECONDS_PER_HOUR
    tcs_s = model.tcs_hours * SECONDS_PER_HOUR
    horizon_ms = round(horizon_s * 1000.0)

    if start == "stationary":
        blocked = stream.next_float() < model.blocked_fraction
    else:
        blocked = False

    out: list[BlockedInterval] = []
    t_ms = 0
    while t_ms < horizon_ms:
        mean = tcs_s if blocked else tcc_s
        dur_ms = round(stream.exponential(mean) * 1000.0)
        if blocked and dur_ms > 0:
            end_ms = min(t_ms + dur_ms, horizon_ms)
            if out and out[-1].end_ms == t_ms:
                # sub-millisecond clear gap rounded away; merge
                out[-1] = BlockedInterval(site_id, out[-1].start_ms, end_ms)
            else:
                out.append(BlockedInterval(site_id, t_ms, end_ms))
        t_ms += dur_ms
        blocked = not blocked
    return out


def sample_plan_for_sites(
    model: WeatherModel,
    site_ids,
    horizon_s: float,
    seed: int,
    replication: int,
    start: str = "stationary",
) -> WeatherPlan:
    """Weather plan for several sites from per-site substreams."""
    from .rng import substream

    plan = WeatherPlan(horizon_ms=round(horizon_s * 1000.0))
    for sid in site_ids:
        ivs = sample_weather_plan(
            model, sid, horizon_s, substream(seed, sid, replication), start=start
        )
        plan.intervals[sid] = ivs
    return plan


def parse_weather_plan(text: str, horizon_s: float | None = None) -> WeatherPlan:
    """Parse `blocked <site> <start_s> <end_s>` lines into a WeatherPlan."""
    per_site: dict[str, list[BlockedInterval]] = {}
    max_end = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "blocked" or len(parts) != 4:
            raise WeatherFormatError(f"line {lineno}: expected 'blocked <site> <start_s> <end_s>'")
        site = parts[1]
        try:
            start_ms = round(float(parts[2]) * 1000.0)
            end_ms = round(float(parts[3]) * 1000.0)
        except ValueError:
            raise WeatherFormatError(f"line {lineno}: non-numeric interval bound") from None
        if start_ms >= end_ms:
            raise WeatherFormatError(f"line {lineno}: empty blocked interval")
        per_site.setdefault(site, []).append(BlockedInterval(site, start_ms, end_ms))
        max_end = max(max_end, end_ms)

    horizon_ms = round(horizon_s * 1000.0) if horizon_s is not None else max_end
    for ivs in per_site.values():
        ivs.sort()
    return WeatherPlan(horizon_ms=horizon_ms, intervals=per_site)


def serialize_weather_plan(plan: WeatherPlan) -> str:
    """Canonical text form, sorted by (site_id, start)."""
    from .plan import format_seconds

    lines = []
    for site in sorted(plan.intervals):
        for iv in plan.intervals[site]:
            lines.append(
                f"blocked {site} {format_seconds(iv.start_ms)} {format_seconds(iv.end_ms)}"
            )
    return "\n".join(lines) + ("\n" if lines else "")
