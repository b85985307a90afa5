"""Scenario configuration: what one experiment cell looks like.

A scenario fixes the constellation, the ground segment, the traffic to
evacuate, the link rate, the weather parameters, and the mode.  Scenario
files are flat `key value` UTF-8 text so they diff cleanly and need no
format library.  The evaluated scenarios use a single traffic-generating
satellite drawn from the constellation and deliver every file to a
common ground sink reachable from any ground station over a fast,
weather-free terrestrial link, so "delivered" means "reached any ground
station" regardless of how many stations a scheme deploys.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import (
    CircularOrbit,
    GroundSite,
    VisibilityRule,
    generate_contacts,
    parse_sites,
    walker_orbits,
)
from .plan import Contact, ContactPlan, Node, NodeKind
from .weather import WeatherModel, WeatherPlan, sample_plan_for_sites

SOURCE_ID = "LEO1"
SINK_ID = "SINK"
HAGS_ALTITUDE_KM = 20.0


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficSpec:
    count: int = 50
    size_bytes: int = 100_000_000_000
    schedule: str = "at_start"  # or "uniform"

    def __post_init__(self):
        if self.count < 0:
            raise ScenarioError("traffic_count must be >= 0")
        if self.size_bytes <= 0:
            raise ScenarioError("traffic_size_bytes must be positive")
        if self.schedule not in ("at_start", "uniform"):
            raise ScenarioError(f"unknown traffic schedule {self.schedule!r}")

    @property
    def size_bits(self) -> int:
        return self.size_bytes * 8


@dataclass(frozen=True)
class ConstellationSpec:
    planes: int = 6
    per_plane: int = 11
    inclination_deg: float = 86.4
    altitude_km: float = 780.0
    phasing: int = 1
    raan_spread_deg: float = 180.0

    def orbits(self) -> list[CircularOrbit]:
        return walker_orbits(
            self.planes,
            self.per_plane,
            self.inclination_deg,
            self.altitude_km,
            self.phasing,
            self.raan_spread_deg,
        )


@dataclass
class ScenarioConfig:
    seed: int = 1
    duration_s: float = 604800.0
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    rate_bps: int = 8_000_000_000
    sink_rate_bps: int = 8_000_000_000_000
    sites: list[GroundSite] = field(default_factory=list)
    gs_count: int = 1
    hags_over: list[str] = field(default_factory=list)
    weather_model: WeatherModel = field(default_factory=lambda: WeatherModel(5.0, 5.0))
    weather_mode: str = "oracle"
    weather_start: str = "stationary"
    rule: VisibilityRule = field(default_factory=VisibilityRule)
    constellation: ConstellationSpec = field(default_factory=ConstellationSpec)
    traffic_leo_index: int = 0
    step_s: float = 10.0
    buffer_cap_bytes: int | None = None
    direct_gs_under_hags: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        if self.rate_bps <= 0 or self.sink_rate_bps <= 0:
            raise ScenarioError("link rates must be positive")
        if not 0 <= self.gs_count <= len(self.sites):
            raise ScenarioError(
                f"gs_count {self.gs_count} exceeds the {len(self.sites)} configured sites"
            )
        used = {s.site_id for s in self.used_gs_sites()}
        for gid in self.hags_over:
            if gid not in used:
                raise ScenarioError(f"hags_over references unused site {gid!r}")
        if len(set(self.hags_over)) != len(self.hags_over):
            raise ScenarioError("duplicate entries in hags_over")
        if self.weather_mode not in ("oracle", "reactive"):
            raise ScenarioError(f"unknown weather mode {self.weather_mode!r}")
        if self.weather_start not in ("stationary", "clear"):
            raise ScenarioError(f"unknown weather start {self.weather_start!r}")
        if not 0 <= self.traffic_leo_index < self.constellation.planes * self.constellation.per_plane:
            raise ScenarioError("traffic_leo_index outside the constellation")
        if self.step_s <= 0:
            raise ScenarioError("step_s must be positive")

    # -- derived structure -------------------------------------------------

    def used_gs_sites(self) -> list[GroundSite]:
        return self.sites[: self.gs_count]

    def hags_id(self, gs_id: str) -> str:
        return f"HAGS-{gs_id}"

    @property
    def source_id(self) -> str:
        return SOURCE_ID

    @property
    def destination_id(self) -> str:
        return SINK_ID

    @property
    def buffer_cap_bits(self) -> int | None:
        return None if self.buffer_cap_bytes is None else self.buffer_cap_bytes * 8

    def traffic_orbit(self) -> CircularOrbit:
        return self.constellation.orbits()[self.traffic_leo_index]

    def build_nodes(self) -> list[Node]:
        nodes = [Node(SOURCE_ID, NodeKind.LEO)]
        for s in self.used_gs_sites():
            nodes.append(Node(s.site_id, NodeKind.GS))
        for gid in self.hags_over:
            nodes.append(Node(self.hags_id(gid), NodeKind.HAGS, over_gs=gid))
        nodes.append(Node(SINK_ID, NodeKind.GS))
        return nodes

    def traffic_bundles(self) -> list[dict]:
        out = []
        width = max(3, len(str(max(self.traffic.count - 1, 0))))
        for i in range(self.traffic.count):
            if self.traffic.schedule == "at_start":
                t_gen_ms = 0
            else:
                t_gen_ms = round(i * self.duration_s * 1000.0 / self.traffic.count)
            out.append(
                {
                    "bundle_id": f"b{i:0{width}d}",
                    "size_bits": self.traffic.size_bits,
                    "t_gen_ms": t_gen_ms,
                    "src": SOURCE_ID,
                    "dst": SINK_ID,
                }
            )
        return out

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "duration_s": self.duration_s,
            "traffic_count": self.traffic.count,
            "traffic_size_bytes": self.traffic.size_bytes,
            "rate_bps": self.rate_bps,
            "gs_sites": [s.site_id for s in self.used_gs_sites()],
            "hags_over": list(self.hags_over),
            "tcc_hours": self.weather_model.tcc_hours,
            "tcs_hours": self.weather_model.tcs_hours,
            "mode": self.weather_mode,
            "weather_start": self.weather_start,
        }


def build_contact_plan(cfg: ScenarioConfig) -> ContactPlan:
    """Geometric contacts, feeder links, and the ground backhaul."""
    orbit = cfg.traffic_orbit()
    geo_sites = list(cfg.used_gs_sites())
    covered = set(cfg.hags_over)
    for gs in cfg.used_gs_sites():
        if gs.site_id in covered:
            geo_sites.append(
                GroundSite(cfg.hags_id(gs.site_id), gs.lat_deg, gs.lon_deg, HAGS_ALTITUDE_KM)
            )

    contacts = generate_contacts(
        [orbit],
        geo_sites,
        cfg.rule,
        horizon_s=cfg.duration_s,
        step_s=cfg.step_s,
        rate_bps=cfg.rate_bps,
        orbit_ids=[SOURCE_ID],
    )

    if not cfg.direct_gs_under_hags:
        # a station under a platform receives through the platform only
        contacts = [
            c
            for c in contacts
            if not (
                (c.tx == SOURCE_ID and c.rx in covered) or (c.rx == SOURCE_ID and c.tx in covered)
            )
        ]

    horizon_ms = round(cfg.duration_s * 1000.0)
    for gs in cfg.used_gs_sites():
        contacts.append(
            Contact(
                contact_id=f"{gs.site_id}:{SINK_ID}:bh",
                tx=gs.site_id,
                rx=SINK_ID,
                start_ms=0,
                end_ms=horizon_ms,
                rate_bps=cfg.sink_rate_bps,
            )
        )
    return ContactPlan(horizon_ms=horizon_ms, contacts=contacts)


def sample_scenario_weather(cfg: ScenarioConfig, replication: int) -> WeatherPlan:
    """Weather for every ground site from (seed, site, replication) substreams."""
    return sample_plan_for_sites(
        cfg.weather_model,
        [s.site_id for s in cfg.used_gs_sites()],
        cfg.duration_s,
        cfg.seed,
        replication,
        start=cfg.weather_start,
    )


def builtin_sites() -> list[GroundSite]:
    text = importlib.resources.files("hagsim.data").joinpath("ksat_sites.txt").read_text("utf-8")
    return parse_sites(text)


_SCENARIO_KEYS = {
    "seed",
    "duration_s",
    "traffic_count",
    "traffic_size_bytes",
    "traffic_schedule",
    "rate_bps",
    "sink_rate_bps",
    "mode",
    "tcc_hours",
    "tcs_hours",
    "weather_start",
    "min_elevation_deg",
    "min_grazing_altitude_km",
    "step_s",
    "gs_count",
    "hags_count",
    "hags_over",
    "sites_file",
    "site",
    "constellation_planes",
    "constellation_per_plane",
    "constellation_inclination_deg",
    "constellation_altitude_km",
    "constellation_phasing",
    "constellation_raan_spread_deg",
    "traffic_leo_index",
    "buffer_cap_bytes",
    "direct_gs_under_hags",
}


def read_kv_lines(text: str) -> list[tuple[int, str, list[str]]]:
    """(lineno, key, values) triples from flat key-value text."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        out.append((lineno, parts[0], parts[1:]))
    return out


def parse_scenario(text: str, base_dir: Path | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from flat key-value text.

    `sites_file` paths resolve against `base_dir`; the special value
    `builtin` selects the packaged station list.  Inline `site` lines may
    be used instead of a file.
    """
    kv: dict[str, list[str]] = {}
    inline_sites: list[str] = []
    for lineno, key, values in read_kv_lines(text):
        if key not in _SCENARIO_KEYS:
            raise ScenarioError(f"line {lineno}: unknown scenario key {key!r}")
        if key == "site":
            inline_sites.append("site " + " ".join(values))
            continue
        if not values:
            raise ScenarioError(f"line {lineno}: key {key!r} has no value")
        kv[key] = values

    def get(key: str, default):
        return kv[key][0] if key in kv else default

    if inline_sites and "sites_file" in kv:
        raise ScenarioError("give either inline site lines or sites_file, not both")
    if inline_sites:
        sites = parse_sites("\n".join(inline_sites))
    else:
        ref = get("sites_file", "builtin")
        if ref == "builtin":
            sites = builtin_sites()
        else:
            path = Path(ref)
            if not path.is_absolute():
                path = (base_dir or Path.cwd()) / path
            sites = parse_sites(path.read_text("utf-8"))

    gs_count = int(get("gs_count", len(sites)))
    if "hags_over" in kv:
        hags_over = list(kv["hags_over"])
    else:
        hags_count = int(get("hags_count", 0))
        if hags_count > gs_count:
            raise ScenarioError("hags_count exceeds gs_count")
        hags_over = [s.site_id for s in sites[:hags_count]]

    cap = get("buffer_cap_bytes", None)
    try:
        return ScenarioConfig(
            seed=int(get("seed", 1)),
            duration_s=float(get("duration_s", 604800.0)),
            traffic=TrafficSpec(
                count=int(get("traffic_count", 50)),
                size_bytes=int(float(get("traffic_size_bytes", 100_000_000_000))),
                schedule=get("traffic_schedule", "at_start"),
            ),
            rate_bps=int(float(get("rate_bps", 8_000_000_000))),
            sink_rate_bps=int(float(get("sink_rate_bps", 8_000_000_000_000))),
            sites=sites,
            gs_count=gs_count,
            hags_over=hags_over,
            weather_model=WeatherModel(
                tcc_hours=float(get("tcc_hours", 5.0)),
                tcs_hours=float(get("tcs_hours", 5.0)),
            ),
            weather_mode=get("mode", "oracle"),
            weather_start=get("weather_start", "stationary"),
            rule=VisibilityRule(
                min_elevation_deg=float(get("min_elevation_deg", 10.0)),
                min_grazing_altitude_km=float(get("min_grazing_altitude_km", 18.0)),
            ),
            constellation=ConstellationSpec(
                planes=int(get("constellation_planes", 6)),
                per_plane=int(get("constellation_per_plane", 11)),
                inclination_deg=float(get("constellation_inclination_deg", 86.4)),
                altitude_km=float(get("constellation_altitude_km", 780.0)),
                phasing=int(get("constellation_phasing", 1)),
                raan_spread_deg=float(get("constellation_raan_spread_deg", 180.0)),
            ),
            traffic_leo_index=int(get("traffic_leo_index", 0)),
            step_s=float(get("step_s", 10.0)),
            buffer_cap_bytes=None if cap in (None, "none") else int(float(cap)),
            direct_gs_under_hags=get("direct_gs_under_hags", "false").lower() == "true",
        )
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e)) from None


def with_scheme(cfg: ScenarioConfig, kind: str, n: int) -> ScenarioConfig:
    """Scenario for one evaluated scheme: n ground stations, or n platforms
    each above its own ground station."""
    if kind == "gs":
        return replace(cfg, gs_count=n, hags_over=[])
    if kind == "hags":
        ids = [s.site_id for s in cfg.sites[:n]]
        return replace(cfg, gs_count=n, hags_over=ids)
    raise ScenarioError(f"unknown scheme kind {kind!r}")
