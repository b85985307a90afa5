"""Experiment sweeps over scheme x TCC x TCS x replication.

The sweep executes every cell deterministically (cells are independent,
so a worker pool only changes wall time, never output), writes one CSV
row per cell plus aggregate rows with 95% confidence intervals, and
extracts ground-station/high-platform equivalency points: the TCC values
where a platform scheme's curve crosses a station scheme's curve, per
metric, TCS, and replication.
"""

from __future__ import annotations

import csv
import io
import multiprocessing
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import engine
from .metrics import (
    buffer_occupation,
    ci95,
    combine_series,
    delivery_delay_stats,
    delivery_ratio,
    series_stats,
    total_generated_bits,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    build_contact_plan,
    parse_scenario,
    read_kv_lines,
    sample_scenario_weather,
    with_scheme,
)

RESULTS_HEADER = "scheme,n_gs,n_hags,tcc_h,tcs_h,rep,dr_pct,dd_mean_s,dd_max_s,bo_mean_pct,bo_max_pct"
EQUIVALENCY_HEADER = "metric,n_hags,n_gs,tcc_h,tcs_h,rep"
AGGREGATES_HEADER = (
    "scheme,n_gs,n_hags,tcc_h,tcs_h,n,dr_mean,dr_ci95,dd_mean,dd_ci95,dd_max_mean,"
    "dd_max_ci95,bo_mean_mean,bo_mean_ci95,bo_max_mean,bo_max_ci95"
)


class GridError(ValueError):
    pass


@dataclass
class SweepGrid:
    base: ScenarioConfig
    gs_counts: list[int] = field(default_factory=list)
    hags_counts: list[int] = field(default_factory=list)
    tcc_hours: list[float] = field(default_factory=lambda: [0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 40])
    tcs_hours: list[float] = field(default_factory=lambda: [5, 10, 15, 20, 25])
    reps: int = 100

    def schemes(self) -> list[tuple[str, int]]:
        out = [("gs", n) for n in self.gs_counts]
        out += [("hags", n) for n in self.hags_counts]
        return out

    def cells(self) -> list[tuple[str, int, float, float, int]]:
        return [
            (kind, n, tcc, tcs, rep)
            for kind, n in self.schemes()
            for tcc in self.tcc_hours
            for tcs in self.tcs_hours
            for rep in range(self.reps)
        ]

    def validate(self):
        if not self.schemes():
            raise GridError("empty grid")
        if not self.tcc_hours or not self.tcs_hours or self.reps < 1:
            raise GridError("empty grid")
        for n in self.gs_counts + self.hags_counts:
            if not 1 <= n <= len(self.base.sites):
                raise GridError(f"scheme size {n} exceeds the configured site list")


_GRID_KEYS = {"gs_counts", "hags_counts", "tcc_hours", "tcs_hours", "reps"}


def parse_grid(text: str, base_dir: Path | None = None) -> SweepGrid:
    """Grid files carry the sweep lists plus any base scenario keys."""
    grid_kv: dict[str, list[str]] = {}
    scenario_lines: list[str] = []
    for lineno, key, values in read_kv_lines(text):
        if key in _GRID_KEYS:
            if not values:
                raise GridError(f"line {lineno}: key {key!r} has no value")
            grid_kv[key] = values
        else:
            scenario_lines.append(f"{key} {' '.join(values)}")
    try:
        base = parse_scenario("\n".join(scenario_lines), base_dir)
    except ScenarioError as e:
        raise GridError(str(e)) from None
    grid = SweepGrid(
        base=base,
        gs_counts=[int(v) for v in grid_kv.get("gs_counts", [])],
        hags_counts=[int(v) for v in grid_kv.get("hags_counts", [])],
        reps=int(grid_kv["reps"][0]) if "reps" in grid_kv else 100,
    )
    if "tcc_hours" in grid_kv:
        grid.tcc_hours = [float(v) for v in grid_kv["tcc_hours"]]
    if "tcs_hours" in grid_kv:
        grid.tcs_hours = [float(v) for v in grid_kv["tcs_hours"]]
    grid.validate()
    return grid


def scheme_label(kind: str, n: int) -> str:
    return f"{n}{kind}"


# Contact plans depend only on the scheme, not on weather or replication,
# so workers build each one once and reuse it across cells.
_plan_cache: dict = {}
_worker_grid: SweepGrid | None = None


def _scheme_setup(grid: SweepGrid, kind: str, n: int):
    key = (kind, n)
    if key not in _plan_cache:
        cfg = with_scheme(grid.base, kind, n)
        _plan_cache[key] = (cfg, build_contact_plan(cfg))
    return _plan_cache[key]


def run_cell(grid: SweepGrid, cell: tuple[str, int, float, float, int]) -> dict:
    kind, n, tcc, tcs, rep = cell
    cfg, plan = _scheme_setup(grid, kind, n)
    cfg = replace(
        cfg, weather_model=replace(cfg.weather_model, tcc_hours=tcc, tcs_hours=tcs)
    )
    weather = sample_scenario_weather(cfg, rep)
    result = engine.run(cfg, plan, weather, rep)

    dr = delivery_ratio(result)
    dd = delivery_delay_stats(result)
    hags_nodes = [cfg.hags_id(g) for g in cfg.hags_over]
    if hags_nodes:
        combined = combine_series([result.bo_series[h] for h in hags_nodes])
        mean_bits, max_bits = series_stats(combined, result.duration_ms)
        total = total_generated_bits(result)
        bo_mean = 100.0 * mean_bits / total if total else 0.0
        bo_max = 100.0 * max_bits / total if total else 0.0
    else:
        bo_mean, bo_max = 0.0, 0.0

    # a platform scheme still uses n ground stations, one under each platform
    return {
        "scheme": scheme_label(kind, n),
        "n_gs": n,
        "n_hags": n if kind == "hags" else 0,
        "tcc_h": tcc,
        "tcs_h": tcs,
        "rep": rep,
        "dr_pct": dr,
        "dd_mean_s": None if dd is None else dd[0],
        "dd_max_s": None if dd is None else dd[1],
        "bo_mean_pct": bo_mean,
        "bo_max_pct": bo_max,
    }


def _init_worker(grid: SweepGrid):
    global _worker_grid
    _worker_grid = grid
    _plan_cache.clear()


def _worker(cell):
    return run_cell(_worker_grid, cell)


def run_sweep(grid: SweepGrid, jobs: int = 1) -> list[dict]:
    """Every cell of the grid, in deterministic order regardless of jobs."""
    grid.validate()
    cells = grid.cells()
    if jobs <= 1:
        _init_worker(grid)
        return [_worker(c) for c in cells]
    # fork keeps workers independent of __main__, so library callers need
    # no guard; ordered map makes output independent of scheduling
    method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    with multiprocessing.get_context(method).Pool(
        processes=jobs, initializer=_init_worker, initargs=(grid,)
    ) as pool:
        return list(pool.map(_worker, cells, chunksize=max(1, len(cells) // (jobs * 8))))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def write_results_csv(rows: list[dict], path: Path | str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = RESULTS_HEADER.split(",")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in header])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


def read_results_csv(path) -> list[dict]:
    return parse_results_csv(Path(path).read_text("utf-8"))


def parse_results_csv(text: str) -> list[dict]:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    missing = set(RESULTS_HEADER.split(",")) - set(reader.fieldnames or ())
    if missing:
        raise GridError(f"results CSV missing columns: {', '.join(sorted(missing))}")
    for rec in reader:
        rows.append(
            {
                "scheme": rec["scheme"],
                "n_gs": int(rec["n_gs"]),
                "n_hags": int(rec["n_hags"]),
                "tcc_h": float(rec["tcc_h"]),
                "tcs_h": float(rec["tcs_h"]),
                "rep": int(rec["rep"]),
                "dr_pct": float(rec["dr_pct"]),
                "dd_mean_s": float(rec["dd_mean_s"]) if rec["dd_mean_s"] else None,
                "dd_max_s": float(rec["dd_max_s"]) if rec["dd_max_s"] else None,
                "bo_mean_pct": float(rec["bo_mean_pct"]),
                "bo_max_pct": float(rec["bo_max_pct"]),
            }
        )
    return rows


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """Mean and 95% CI across replications, per (scheme, tcc, tcs)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["scheme"], r["n_gs"], r["n_hags"], r["tcc_h"], r["tcs_h"]), []).append(r)

    def stat(values):
        values = [v for v in values if v is not None]
        if not values:
            return None, None
        if len(values) == 1:
            return values[0], None
        s = ci95(values)
        return s.mean, s.half_width_95

    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[3], k[4])):
        cell_rows = groups[key]
        scheme, n_gs, n_hags, tcc, tcs = key
        agg = {
            "scheme": scheme,
            "n_gs": n_gs,
            "n_hags": n_hags,
            "tcc_h": tcc,
            "tcs_h": tcs,
            "n": len(cell_rows),
        }
        for col, (mean_name, ci_name) in {
            "dr_pct": ("dr_mean", "dr_ci95"),
            "dd_mean_s": ("dd_mean", "dd_ci95"),
            "dd_max_s": ("dd_max_mean", "dd_max_ci95"),
            "bo_mean_pct": ("bo_mean_mean", "bo_mean_ci95"),
            "bo_max_pct": ("bo_max_mean", "bo_max_ci95"),
        }.items():
            mean, hw = stat([r[col] for r in cell_rows])
            agg[mean_name] = mean
            agg[ci_name] = hw
        out.append(agg)
    return out


def write_aggregates_csv(aggregates: list[dict], path: Path | str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = AGGREGATES_HEADER.split(",")
    writer.writerow(header)
    for r in aggregates:
        writer.writerow([_fmt(r[k]) for k in header])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


@dataclass(frozen=True)
class EquivalencyPoint:
    metric: str  # "DR" or "DD"
    n_hags: int
    n_gs: int
    tcc_hours: float
    tcs_hours: float
    replication: int

    def __post_init__(self):
        if self.n_hags < 1 or self.n_gs < 1:
            raise ValueError("equivalency points need at least one node per side")


def _series_by_tcc(rows: list[dict]) -> dict[tuple, dict[float, dict]]:
    """(scheme, tcs, rep) -> {tcc: row}."""
    out: dict[tuple, dict[float, dict]] = {}
    for r in rows:
        out.setdefault((r["scheme"], r["tcs_h"], r["rep"]), {})[r["tcc_h"]] = r
    return out


def extract_equivalency_points(rows: list[dict]) -> list[EquivalencyPoint]:
    """Curve crossings between platform and station schemes.

    For each replication, TCS, metric, and (platform scheme, station
    scheme) pair, the metric is read as a piecewise-linear function of
    TCC over the shared sample grid.  Delay comparisons only count where
    both schemes delivered everything, mirroring how delay curves are
    greyed out below full delivery.  A sign change between adjacent grid
    points yields one interpolated crossing; exact equality at a grid
    point yields one crossing at that point (deduplicated, so identical
    curves contribute one point per grid sample).
    """
    table = _series_by_tcc(rows)
    hags_schemes = sorted({(r["scheme"], r["n_hags"]) for r in rows if r["n_hags"] > 0})
    gs_schemes = sorted({(r["scheme"], r["n_gs"]) for r in rows if r["n_hags"] == 0})
    tcs_values = sorted({r["tcs_h"] for r in rows})
    reps = sorted({r["rep"] for r in rows})

    points: list[EquivalencyPoint] = []
    for rep in reps:
        for tcs in tcs_values:
            for h_scheme, n_hags in hags_schemes:
                h_rows = table.get((h_scheme, tcs, rep))
                if not h_rows:
                    continue
                for g_scheme, n_gs in gs_schemes:
                    g_rows = table.get((g_scheme, tcs, rep))
                    if not g_rows:
                        continue
                    grid = sorted(set(h_rows) & set(g_rows))
                    for metric in ("DR", "DD"):
                        for tcc in _crossings(metric, grid, h_rows, g_rows):
                            points.append(
                                EquivalencyPoint(metric, n_hags, n_gs, tcc, tcs, rep)
                            )
    return points


def _metric_series(metric: str, grid: list[float], h_rows, g_rows):
    """Per-grid-point differences; None marks points excluded from comparison."""
    diffs: list[float | None] = []
    for tcc in grid:
        h, g = h_rows[tcc], g_rows[tcc]
        if metric == "DR":
            diffs.append(h["dr_pct"] - g["dr_pct"])
        else:
            if h["dr_pct"] == 100.0 and g["dr_pct"] == 100.0:
                diffs.append(h["dd_mean_s"] - g["dd_mean_s"])
            else:
                diffs.append(None)
    return diffs


def _crossings(metric: str, grid: list[float], h_rows, g_rows) -> list[float]:
    diffs = _metric_series(metric, grid, h_rows, g_rows)
    found: list[float] = []
    seen: set[float] = set()
    for i, (x, d) in enumerate(zip(grid, diffs)):
        if d == 0.0 and x not in seen:
            seen.add(x)
            found.append(x)
        if i + 1 < len(grid):
            d2 = diffs[i + 1]
            if d is not None and d2 is not None and d * d2 < 0.0:
                x2 = grid[i + 1]
                cross = x + (x2 - x) * d / (d - d2)
                if cross not in seen:
                    seen.add(cross)
                    found.append(cross)
    return found


def validate_equivalency_point(rows: list[dict], point: EquivalencyPoint) -> bool:
    """Re-check the sign-change condition for one point against the raw table."""
    table = _series_by_tcc(rows)
    h_scheme = scheme_label("hags", point.n_hags)
    g_scheme = scheme_label("gs", point.n_gs)
    h_rows = table.get((h_scheme, point.tcs_hours, point.replication))
    g_rows = table.get((g_scheme, point.tcs_hours, point.replication))
    if not h_rows or not g_rows:
        return False
    grid = sorted(set(h_rows) & set(g_rows))
    diffs = _metric_series(point.metric, grid, h_rows, g_rows)
    for i, x in enumerate(grid):
        d = diffs[i]
        if d == 0.0 and x == point.tcc_hours:
            return True
        if i + 1 < len(grid):
            d2 = diffs[i + 1]
            if (
                d is not None
                and d2 is not None
                and d * d2 < 0.0
                and x <= point.tcc_hours <= grid[i + 1]
            ):
                return True
    return False


def write_equivalency_csv(points: list[EquivalencyPoint], path: Path | str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EQUIVALENCY_HEADER.split(","))
    for p in points:
        writer.writerow(
            [p.metric, p.n_hags, p.n_gs, _fmt(p.tcc_hours), _fmt(p.tcs_hours), p.replication]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, "utf-8")
    return text


def read_equivalency_csv(path) -> list[EquivalencyPoint]:
    reader = csv.DictReader(io.StringIO(Path(path).read_text("utf-8")))
    missing = set(EQUIVALENCY_HEADER.split(",")) - set(reader.fieldnames or ())
    if missing:
        raise GridError(f"equivalency CSV missing columns: {', '.join(sorted(missing))}")
    return [
        EquivalencyPoint(
            metric=rec["metric"],
            n_hags=int(rec["n_hags"]),
            n_gs=int(rec["n_gs"]),
            tcc_hours=float(rec["tcc_h"]),
            tcs_hours=float(rec["tcs_h"]),
            replication=int(rec["rep"]),
        )
        for rec in reader
    ]
