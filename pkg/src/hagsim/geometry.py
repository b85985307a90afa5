"""Orbit propagation, site geometry, and contact plan generation.

Orbits are circular and Keplerian over a spherical rotating Earth: no
oblateness, drag, or refraction.  That is adequate for week-scale
contact statistics and keeps every position an analytic function of
time.  Ground stations are fixed to the (rotating) Earth, so all
positions are expressed in Earth-fixed Cartesian kilometres and sites
need no per-epoch transform.

Visibility uses two rules: satellites are visible from a terrestrial
station above a minimum elevation, while a high-altitude platform sees
a satellite whenever the connecting ray keeps a minimum grazing
altitude above the Earth surface (the platform looks over the horizon
of its ground station, well above cloud tops).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .plan import Contact


@dataclass(frozen=True)
class EarthModel:
    radius_km: float = 6371.0
    mu_km3s2: float = 398600.4418
    rotation_rate_rad_s: float = 7.2921159e-5

    def __post_init__(self):
        if self.radius_km <= 0 or self.mu_km3s2 <= 0 or self.rotation_rate_rad_s <= 0:
            raise ValueError("EarthModel fields must be strictly positive")


EARTH = EarthModel()


def _norm_deg(x: float) -> float:
    return x % 360.0


@dataclass(frozen=True)
class CircularOrbit:
    altitude_km: float
    inclination_deg: float
    raan_deg: float
    initial_anomaly_deg: float
    epoch_s: float = 0.0

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be positive, got {self.altitude_km}")
        object.__setattr__(self, "inclination_deg", _norm_deg(self.inclination_deg))
        object.__setattr__(self, "raan_deg", _norm_deg(self.raan_deg))
        object.__setattr__(self, "initial_anomaly_deg", _norm_deg(self.initial_anomaly_deg))

    def period_s(self, earth: EarthModel = EARTH) -> float:
        a = earth.radius_km + self.altitude_km
        return 2.0 * math.pi * math.sqrt(a**3 / earth.mu_km3s2)


@dataclass(frozen=True)
class GroundSite:
    site_id: str
    lat_deg: float
    lon_deg: float
    altitude_km: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"{self.site_id}: lat_deg out of [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"{self.site_id}: lon_deg out of [-180, 180]")
        if self.altitude_km < 0:
            raise ValueError(f"{self.site_id}: altitude_km must be >= 0")


@dataclass(frozen=True)
class VisibilityRule:
    min_elevation_deg: float = 10.0  # LEO to ground station
    min_grazing_altitude_km: float = 18.0  # LEO to high platform, ray above cloud tops

    def __post_init__(self):
        if not 0.0 <= self.min_elevation_deg <= 90.0:
            raise ValueError("min_elevation_deg out of [0, 90]")
        if self.min_grazing_altitude_km < 0:
            raise ValueError("min_grazing_altitude_km must be >= 0")


def propagate(orbit: CircularOrbit, earth: EarthModel, t: float) -> np.ndarray:
    """Earth-fixed position (km) of a circular orbit at time t (s).

    The inertial and Earth-fixed frames coincide at t=0; Earth rotation
    makes prograde ground tracks drift westward between passes.
    """
    return propagate_many(orbit, earth, np.asarray([t], dtype=float))[0]


def propagate_many(orbit: CircularOrbit, earth: EarthModel, t: np.ndarray) -> np.ndarray:
    """Vectorized `propagate`; returns an (n, 3) array."""
    a = earth.radius_km + orbit.altitude_km
    n = math.sqrt(earth.mu_km3s2 / a**3)  # mean motion, rad/s
    u = math.radians(orbit.initial_anomaly_deg) + n * (t - orbit.epoch_s)
    inc = math.radians(orbit.inclination_deg)
    raan = math.radians(orbit.raan_deg)

    cos_u, sin_u = np.cos(u), np.sin(u)
    x_eci = a * (cos_u * math.cos(raan) - sin_u * math.sin(raan) * math.cos(inc))
    y_eci = a * (cos_u * math.sin(raan) + sin_u * math.cos(raan) * math.cos(inc))
    z_eci = a * (sin_u * math.sin(inc))

    theta = earth.rotation_rate_rad_s * t
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x = cos_t * x_eci + sin_t * y_eci
    y = -sin_t * x_eci + cos_t * y_eci
    return np.stack([x, y, np.broadcast_to(z_eci, x.shape)], axis=-1)


def site_ecef(site: GroundSite, earth: EarthModel = EARTH) -> np.ndarray:
    """Earth-fixed position (km) of a site on the spherical Earth."""
    r = earth.radius_km + site.altitude_km
    lat = math.radians(site.lat_deg)
    lon = math.radians(site.lon_deg)
    return np.array(
        [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
    )


def elevation_deg(site: GroundSite, sat_position, earth: EarthModel = EARTH) -> float:
    """Elevation of a satellite above the site's local horizontal plane."""
    s = site_ecef(site, earth)
    d = np.asarray(sat_position, dtype=float) - s
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        return 90.0
    sin_el = float(np.dot(s, d)) / (float(np.linalg.norm(s)) * dist)
    return math.degrees(math.asin(max(-1.0, min(1.0, sin_el))))


def _elevations_many(site: GroundSite, sat_positions: np.ndarray, earth: EarthModel) -> np.ndarray:
    s = site_ecef(site, earth)
    d = sat_positions - s
    dist = np.linalg.norm(d, axis=-1)
    sin_el = (d @ s) / (np.linalg.norm(s) * np.maximum(dist, 1e-12))
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def los_grazing_altitude_km(p1, p2, earth: EarthModel = EARTH) -> float:
    """Minimum altitude above the sphere reached by the segment p1-p2.

    Negative values mean the line of sight passes through the Earth.  If
    the closest approach of the infinite line falls outside the segment,
    the minimum is attained at an endpoint.
    """
    a = np.asarray(p1, dtype=float)
    b = np.asarray(p2, dtype=float)
    d = b - a
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return float(np.linalg.norm(a)) - earth.radius_km
    t = -float(np.dot(a, d)) / dd
    if t <= 0.0 or t >= 1.0:
        return min(float(np.linalg.norm(a)), float(np.linalg.norm(b))) - earth.radius_km
    closest = a + t * d
    return float(np.linalg.norm(closest)) - earth.radius_km


def _grazing_many(site_pos: np.ndarray, sat_positions: np.ndarray, earth: EarthModel) -> np.ndarray:
    d = sat_positions - site_pos
    dd = np.einsum("ij,ij->i", d, d)
    t = -(d @ site_pos) / np.maximum(dd, 1e-12)
    closest = site_pos + t[:, None] * d
    dist_line = np.linalg.norm(closest, axis=-1)
    dist_ends = np.minimum(np.linalg.norm(site_pos), np.linalg.norm(sat_positions, axis=-1))
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, dist_line, dist_ends) - earth.radius_km


# A site is treated as a high platform when another site shares its
# lat/lon at lower altitude; the colocated pair also gets a permanent
# feeder contact in both directions, weather-tagged with the ground
# station's id.
def _classify_sites(sites: list[GroundSite]) -> dict[str, GroundSite | None]:
    by_loc: dict[tuple[float, float], list[GroundSite]] = {}
    for s in sites:
        by_loc.setdefault((s.lat_deg, s.lon_deg), []).append(s)
    platform_over: dict[str, GroundSite | None] = {}
    for group in by_loc.values():
        group = sorted(group, key=lambda s: s.altitude_km)
        platform_over[group[0].site_id] = None  # lowest is the ground station
        for elevated in group[1:]:
            platform_over[elevated.site_id] = group[0]
    return platform_over


def generate_contacts(
    orbits: list[CircularOrbit],
    sites: list[GroundSite],
    rule: VisibilityRule,
    horizon_s: float,
    step_s: float = 10.0,
    rate_bps: int = 8_000_000_000,
    earth: EarthModel = EARTH,
    orbit_ids: list[str] | None = None,
) -> list[Contact]:
    """Contact list over [0, horizon_s] from sampled visibility.

    Visibility is sampled every `step_s` seconds and each transition is
    refined by bisection to under one second, then snapped to whole
    seconds.  Every pass is emitted as two directed contacts.  Colocated
    ground/platform pairs additionally get a permanent feeder contact
    pair spanning the whole horizon.
    """
    if horizon_s <= 0:
        raise ValueError("horizon_s must be positive")
    if step_s <= 0:
        raise ValueError("step_s must be positive")

    if orbit_ids is None:
        orbit_ids = [f"LEO{i + 1}" for i in range(len(orbits))]
    if len(orbit_ids) != len(orbits):
        raise ValueError("orbit_ids must match orbits")

    platform_over = _classify_sites(sites)
    contacts: list[Contact] = []
    horizon_ms = round(horizon_s * 1000.0)

    t_grid = np.arange(0.0, horizon_s + step_s, step_s)
    t_grid = t_grid[t_grid <= horizon_s]

    for orbit, sat_id in zip(orbits, orbit_ids):
        positions = propagate_many(orbit, earth, t_grid)

        for site in sites:
            over = platform_over[site.site_id]
            if over is None:
                visible = _elevations_many(site, positions, earth) >= rule.min_elevation_deg

                def predicate(t: float, _site=site) -> bool:
                    p = propagate(orbit, earth, t)
                    return elevation_deg(_site, p, earth) >= rule.min_elevation_deg

            else:
                spos = site_ecef(site, earth)
                visible = _grazing_many(spos, positions, earth) >= rule.min_grazing_altitude_km

                def predicate(t: float, _spos=spos) -> bool:
                    p = propagate(orbit, earth, t)
                    return los_grazing_altitude_km(_spos, p, earth) >= rule.min_grazing_altitude_km

            windows = _visible_windows(t_grid, visible, predicate, horizon_s)
            weather = site.site_id if over is None else None
            for k, (w0, w1) in enumerate(windows):
                start_ms, end_ms = round(w0) * 1000, round(w1) * 1000
                if start_ms >= end_ms:
                    continue
                base = f"{sat_id}:{site.site_id}:{k}"
                contacts.append(
                    Contact(base, sat_id, site.site_id, start_ms, end_ms, rate_bps, weather)
                )
                contacts.append(
                    Contact(base + ":up", site.site_id, sat_id, start_ms, end_ms, rate_bps, weather)
                )

    for site in sites:
        over = platform_over[site.site_id]
        if over is None:
            continue
        base = f"{site.site_id}:{over.site_id}:feeder"
        contacts.append(
            Contact(base, site.site_id, over.site_id, 0, horizon_ms, rate_bps, over.site_id)
        )
        contacts.append(
            Contact(base + ":up", over.site_id, site.site_id, 0, horizon_ms, rate_bps, over.site_id)
        )
    return contacts


def _visible_windows(t_grid, visible, predicate, horizon_s: float) -> list[tuple[float, float]]:
    """Maximal visibility windows from a sampled boolean track.

    Boundaries between grid samples are refined by bisection to <= 1 s;
    a rising edge keeps the first surely-visible time, a falling edge the
    last one, so windows never extend past the sampled truth.
    """
    windows = []
    n = len(t_grid)
    i = 0
    while i < n:
        if not visible[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and visible[j + 1]:
            j += 1
        start = t_grid[i]
        if i > 0:
            start = _bisect_edge(t_grid[i - 1], t_grid[i], predicate, rising=True)
        end = t_grid[j]
        if j + 1 < n:
            end = _bisect_edge(t_grid[j], t_grid[j + 1], predicate, rising=False)
        elif t_grid[j] < horizon_s:
            end = min(horizon_s, t_grid[j])
        windows.append((float(start), float(end)))
        i = j + 1
    return windows


def _bisect_edge(lo: float, hi: float, predicate, rising: bool, tol_s: float = 1.0) -> float:
    # invariant: predicate(lo) != predicate(hi); returns the visible side
    while hi - lo > tol_s:
        mid = 0.5 * (lo + hi)
        if predicate(mid) == rising:
            hi = mid
        else:
            lo = mid
    return hi if rising else lo


def walker_orbits(
    planes: int,
    per_plane: int,
    inclination_deg: float,
    altitude_km: float,
    phasing: int = 1,
    raan_spread_deg: float = 180.0,
) -> list[CircularOrbit]:
    """Walker constellation orbits, star pattern by default (planes over 180 deg)."""
    if planes <= 0 or per_plane <= 0:
        raise ValueError("planes and per_plane must be positive")
    total = planes * per_plane
    orbits = []
    for p in range(planes):
        raan = p * raan_spread_deg / planes
        for s in range(per_plane):
            anomaly = s * 360.0 / per_plane + p * phasing * 360.0 / total
            orbits.append(
                CircularOrbit(
                    altitude_km=altitude_km,
                    inclination_deg=inclination_deg,
                    raan_deg=raan,
                    initial_anomaly_deg=anomaly,
                )
            )
    return orbits


def parse_sites(text: str) -> list[GroundSite]:
    """Parse `site <id> <lat_deg> <lon_deg> <alt_km>` lines."""
    sites = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "site" or len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 'site <id> <lat> <lon> <alt_km>'")
        if parts[1] in seen:
            raise ValueError(f"line {lineno}: duplicate site id {parts[1]}")
        seen.add(parts[1])
        try:
            sites.append(GroundSite(parts[1], float(parts[2]), float(parts[3]), float(parts[4])))
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
    return sites
