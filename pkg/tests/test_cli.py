"""Command-line workflows: files in, files out, stable exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from hagsim.cli import main
from hagsim.plan import parse_contact_plan
from hagsim.scenario import parse_scenario
from hagsim.weather import parse_weather_plan

REPO = Path(__file__).resolve().parents[1]
PAPER_SCENARIO = REPO / "scenarios" / "paper_default.scenario"

SMALL_SCENARIO = """\
seed 7
duration_s 86400
traffic_count 5
traffic_size_bytes 100000000000
rate_bps 8000000000
mode oracle
tcc_hours 2
tcs_hours 5
gs_count 1
hags_count 1
sites_file builtin
"""

SMALL_GRID = """\
gs_counts 1
hags_counts 1
tcc_hours 0.5 5
tcs_hours 5
reps 2
seed 7
duration_s 86400
traffic_count 5
sites_file builtin
"""


@pytest.fixture
def small_scenario(tmp_path):
    p = tmp_path / "small.scenario"
    p.write_text(SMALL_SCENARIO, "utf-8")
    return p


class TestScenarioFiles:
    def test_paper_default_matches_evaluation_invariants(self):
        cfg = parse_scenario(PAPER_SCENARIO.read_text("utf-8"), PAPER_SCENARIO.parent)
        assert cfg.duration_s == 604800.0
        assert cfg.traffic.count == 50
        assert cfg.traffic.size_bytes == 100_000_000_000
        assert cfg.rate_bps == 8_000_000_000
        assert cfg.constellation.planes * cfg.constellation.per_plane == 66
        assert cfg.constellation.inclination_deg == 86.4
        assert cfg.constellation.altitude_km == 780.0

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.scenario"
        p.write_text("banana 3\n", "utf-8")
        assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 1


class TestCommands:
    def test_gen_contacts(self, small_scenario, tmp_path, capsys):
        out = tmp_path / "plan.txt"
        assert main(["gen-contacts", "--scenario", str(small_scenario), "--out", str(out)]) == 0
        plan = parse_contact_plan(out.read_text("utf-8"), horizon_s=86400.0)
        assert plan.contacts
        feeders = [c for c in plan.contacts if c.tx.startswith("HAGS-")]
        assert feeders and feeders[0].end_ms == 86_400_000

    def test_gen_weather(self, small_scenario, tmp_path):
        out = tmp_path / "weather.txt"
        assert main(
            ["gen-weather", "--scenario", str(small_scenario), "--rep", "0", "--out", str(out)]
        ) == 0
        plan = parse_weather_plan(out.read_text("utf-8"), horizon_s=86400.0)
        assert sum(len(v) for v in plan.intervals.values()) > 0

    def test_run_twice_byte_identical(self, small_scenario, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main(
                ["run", "--scenario", str(small_scenario), "--rep", "3", "--out", str(out)]
            ) == 0
        assert (out1 / "result.json").read_bytes() == (out2 / "result.json").read_bytes()
        assert (out1 / "events.log").read_bytes() == (out2 / "events.log").read_bytes()
        doc = json.loads((out1 / "result.json").read_text("utf-8"))
        assert doc["generated"] == 5
        assert {"bundle_id", "t_gen_s", "delivered_at_s", "custodian_path"} <= set(
            doc["bundles"][0]
        )

    def test_sweep_and_extract(self, tmp_path):
        grid = tmp_path / "g.grid"
        grid.write_text(SMALL_GRID, "utf-8")
        out = tmp_path / "sweep"
        assert main(["sweep", "--grid", str(grid), "--out", str(out), "--jobs", "1"]) == 0
        results = out / "results.csv"
        assert results.exists() and (out / "aggregates.csv").exists()
        assert len(results.read_text("utf-8").splitlines()) == 1 + 2 * 2 * 2
        eq = tmp_path / "eq.csv"
        assert main(["extract-equivalency", "--results", str(results), "--out", str(eq)]) == 0
        assert eq.read_text("utf-8").splitlines()[0] == "metric,n_hags,n_gs,tcc_h,tcs_h,rep"

    def test_empty_grid_exits_1(self, tmp_path, capsys):
        grid = tmp_path / "empty.grid"
        grid.write_text("seed 3\n", "utf-8")
        rc = main(["sweep", "--grid", str(grid), "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "empty grid" in capsys.readouterr().err

    def test_unknown_subcommand_exits_1(self):
        assert main(["frobnicate"]) == 1

    def test_seed_flag_changes_weather(self, small_scenario, tmp_path):
        a, b, c = tmp_path / "a.txt", tmp_path / "b.txt", tmp_path / "c.txt"
        base = ["gen-weather", "--scenario", str(small_scenario), "--rep", "0"]
        assert main(base + ["--out", str(a), "--seed", "1"]) == 0
        assert main(base + ["--out", str(b), "--seed", "2"]) == 0
        assert main(base + ["--out", str(c), "--seed", "1"]) == 0
        assert a.read_bytes() == c.read_bytes()
        assert a.read_bytes() != b.read_bytes()

    def test_seed_env_fallback(self, small_scenario, tmp_path, monkeypatch):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        base = ["gen-weather", "--scenario", str(small_scenario), "--rep", "0"]
        monkeypatch.setenv("HAGS_SIM_SEED", "2")
        assert main(base + ["--out", str(a)]) == 0
        monkeypatch.delenv("HAGS_SIM_SEED")
        assert main(base + ["--out", str(b), "--seed", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestProcessInvocation:
    def test_module_entrypoint(self, tmp_path, small_scenario):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "hagsim.cli",
                "gen-weather",
                "--scenario",
                str(small_scenario),
                "--out",
                str(tmp_path / "w.txt"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "w.txt").exists()
