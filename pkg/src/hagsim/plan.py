"""Contact plan data model, text format, and weather carving.

A contact is a directed transmission opportunity between two nodes with
a time window and a rate.  Windows are held as integer milliseconds so
that event ordering and interval arithmetic are exact; the text format
speaks decimal seconds.  Contacts that pass through weather (satellite
to ground, or high platform to ground) carry the ground site whose cloud
cover can interrupt them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .weather import WeatherPlan


class PlanFormatError(ValueError):
    """Raised for malformed contact plan text."""


class CarveError(ValueError):
    """Raised when a contact references an unknown weather site."""


class NodeKind(enum.Enum):
    LEO = "leo"
    HAGS = "hags"
    GS = "gs"


@dataclass(frozen=True)
class Node:
    node_id: str
    kind: NodeKind
    over_gs: str | None = None  # set for HAGS: the ground station underneath

    def __post_init__(self):
        if self.kind is NodeKind.HAGS and not self.over_gs:
            raise ValueError(f"HAGS node {self.node_id} must reference its GS")
        if self.kind is not NodeKind.HAGS and self.over_gs:
            raise ValueError(f"{self.kind.value} node {self.node_id} cannot sit over a GS")


@dataclass(frozen=True)
class Contact:
    """Directed transmission opportunity [start_ms, end_ms) at rate_bps."""

    contact_id: str
    tx: str
    rx: str
    start_ms: int
    end_ms: int
    rate_bps: int
    weather_site: str | None = None

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValueError(f"contact {self.contact_id}: empty contact window")
        if self.rate_bps <= 0:
            raise ValueError(f"contact {self.contact_id}: rate must be positive")

    @property
    def start_s(self) -> float:
        return self.start_ms / 1000.0

    @property
    def end_s(self) -> float:
        return self.end_ms / 1000.0

    @property
    def capacity_bits(self) -> int:
        return self.rate_bps * (self.end_ms - self.start_ms) // 1000


def _sort_key(c: Contact) -> tuple:
    return (c.start_ms, c.contact_id)


@dataclass
class ContactPlan:
    horizon_ms: int
    contacts: list[Contact] = field(default_factory=list)

    def __post_init__(self):
        self.contacts = sorted(self.contacts, key=_sort_key)
        seen = set()
        for c in self.contacts:
            if c.contact_id in seen:
                raise ValueError(f"duplicate contact id {c.contact_id}")
            seen.add(c.contact_id)
            if c.start_ms < 0 or c.end_ms > self.horizon_ms:
                raise ValueError(
                    f"contact {c.contact_id} outside horizon [0, {self.horizon_ms}] ms"
                )

    @property
    def horizon_s(self) -> float:
        return self.horizon_ms / 1000.0

    def node_ids(self) -> set[str]:
        ids = set()
        for c in self.contacts:
            ids.add(c.tx)
            ids.add(c.rx)
        return ids

    def by_id(self) -> dict[str, Contact]:
        return {c.contact_id: c for c in self.contacts}


def carve(plan: ContactPlan, weather: WeatherPlan) -> ContactPlan:
    """Subtract per-site blocked intervals from weather-dependent contacts.

    Each weather-dependent contact is replaced by the set difference of
    its window and the blocked intervals of its site, yielding zero or
    more sub-contacts named `<parent>.<k>`.  Sub-contacts no longer carry
    the weather tag: their windows avoid the blocked intervals, so a
    second carve with the same plan passes them through unchanged.
    Weather-independent contacts are kept as-is.
    """
    out: list[Contact] = []
    for c in plan.contacts:
        if c.weather_site is None:
            out.append(c)
            continue
        if c.weather_site not in weather.intervals:
            raise CarveError(f"unresolved weather site {c.weather_site!r}")
        k = 0
        cursor = c.start_ms
        for iv in weather.intervals[c.weather_site]:
            if iv.end_ms <= cursor:
                continue
            if iv.start_ms >= c.end_ms:
                break
            if iv.start_ms > cursor:
                out.append(
                    replace(
                        c,
                        contact_id=f"{c.contact_id}.{k}",
                        start_ms=cursor,
                        end_ms=iv.start_ms,
                        weather_site=None,
                    )
                )
                k += 1
            cursor = max(cursor, iv.end_ms)
        if cursor < c.end_ms:
            out.append(
                replace(
                    c,
                    contact_id=f"{c.contact_id}.{k}",
                    start_ms=cursor,
                    end_ms=c.end_ms,
                    weather_site=None,
                )
            )
    return ContactPlan(horizon_ms=plan.horizon_ms, contacts=out)


def format_seconds(ms: int) -> str:
    """Milliseconds as decimal seconds, no trailing zeros (`12.5`, `100`)."""
    if ms % 1000 == 0:
        return str(ms // 1000)
    s = f"{ms / 1000.0:.3f}"
    return s.rstrip("0").rstrip(".")


def parse_contact_plan(text: str, horizon_s: float | None = None) -> ContactPlan:
    """Parse contact lines; ids are assigned `c0`, `c1`, ... in file order.

    The text format carries no horizon, so unless one is supplied the
    horizon is the latest contact end.
    """
    contacts: list[Contact] = []
    max_end = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "contact" or len(parts) not in (6, 7):
            raise PlanFormatError(
                f"line {lineno}: expected 'contact <start_s> <end_s> <tx> <rx> <rate_bps>"
                " [weather_site=<site>]'"
            )
        try:
            start_ms = round(float(parts[1]) * 1000.0)
            end_ms = round(float(parts[2]) * 1000.0)
            rate_bps = int(float(parts[5]))
        except ValueError:
            raise PlanFormatError(f"line {lineno}: non-numeric field") from None
        if start_ms >= end_ms:
            raise PlanFormatError(f"line {lineno}: empty contact window")
        if rate_bps <= 0:
            raise PlanFormatError(f"line {lineno}: rate must be positive")
        weather_site = None
        if len(parts) == 7:
            if not parts[6].startswith("weather_site="):
                raise PlanFormatError(f"line {lineno}: unknown trailing token {parts[6]!r}")
            weather_site = parts[6].split("=", 1)[1]
            if not weather_site:
                raise PlanFormatError(f"line {lineno}: empty weather site")
        contacts.append(
            Contact(
                contact_id=f"c{len(contacts)}",
                tx=parts[3],
                rx=parts[4],
                start_ms=start_ms,
                end_ms=end_ms,
                rate_bps=rate_bps,
                weather_site=weather_site,
            )
        )
        max_end = max(max_end, end_ms)

    horizon_ms = round(horizon_s * 1000.0) if horizon_s is not None else max_end
    return ContactPlan(horizon_ms=horizon_ms, contacts=contacts)


def serialize_contact_plan(plan: ContactPlan) -> str:
    """Canonical text form: sorted by (start, contact id), LF endings."""
    lines = []
    for c in plan.contacts:
        fields = [
            "contact",
            format_seconds(c.start_ms),
            format_seconds(c.end_ms),
            c.tx,
            c.rx,
            str(c.rate_bps),
        ]
        if c.weather_site is not None:
            fields.append(f"weather_site={c.weather_site}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")
