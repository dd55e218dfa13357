import dataclasses
import json
import os

import pytest

from heomcorr.config import parse_config
from heomcorr.runner import (
    CSV_COLUMNS,
    read_trajectory_csv,
    run,
    sweep,
    validation_suite,
)

# a cheap but physically meaningful configuration for fast pipeline tests
FAST = parse_config(
    "t_max = 2.0\ngrid_dt = 0.05\nmatsubara_cutoff = 2\ndepth = 2\n"
    "n_theta = 32\nn_phi = 64\n"
)


@pytest.fixture(scope="module")
def fast_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("fastrun")
    cfg = dataclasses.replace(FAST, output_dir=str(out))
    return run(cfg)


class TestRun:
    def test_outputs_exist(self, fast_report):
        for name in ("trajectory_csv", "events", "report", "config"):
            assert os.path.exists(fast_report.paths[name])

    def test_csv_schema(self, fast_report):
        with open(fast_report.paths["trajectory_csv"]) as fh:
            header = fh.readline().strip().split(",")
            assert header == list(CSV_COLUMNS)
            rows = fh.read().strip().splitlines()
        assert len(rows) == 41  # t_max / grid_dt + 1

    def test_bell_start_row(self, fast_report):
        points = fast_report.points
        assert points[0].mutual_info == pytest.approx(2.0, abs=1e-7)
        assert points[0].classical == pytest.approx(1.0, abs=1e-7)
        assert points[0].discord == pytest.approx(1.0, abs=1e-7)

    def test_oracles_pass(self, fast_report):
        assert fast_report.oracle_failures() == []

    def test_report_json_structure(self, fast_report):
        with open(fast_report.paths["report"]) as fh:
            doc = json.load(fh)
        assert doc["truncation"]["cutoff"] == 2
        assert doc["truncation"]["depth"] == 2
        assert doc["diagnostics"]["max_trace_drift"] < 1e-8
        assert {o["name"] for o in doc["oracles"]} >= {"rhs-agreement", "closed-system"}

    def test_csv_round_trip(self, fast_report):
        points = read_trajectory_csv(fast_report.paths["trajectory_csv"])
        assert len(points) == len(fast_report.points)
        for a, b in zip(points, fast_report.points):
            assert a.classical == pytest.approx(b.classical, abs=1e-11)
            assert a.discord == pytest.approx(b.discord, abs=1e-11)

    def test_determinism_byte_identical_csv(self, tmp_path):
        texts = []
        for sub in ("a", "b"):
            cfg = dataclasses.replace(FAST, output_dir=str(tmp_path / sub))
            report = run(cfg)
            with open(report.paths["trajectory_csv"], "rb") as fh:
                texts.append(fh.read())
        assert texts[0] == texts[1]

    def test_decoupled_run_is_static(self, tmp_path):
        cfg = parse_config(
            "eta = 0\nt_max = 1.0\ngrid_dt = 0.1\nmatsubara_cutoff = 0\ndepth = 0\n"
        )
        cfg = dataclasses.replace(cfg, output_dir=str(tmp_path))
        report = run(cfg)
        for p in report.points:
            assert p.mutual_info == pytest.approx(2.0, abs=1e-7)
            assert p.classical == pytest.approx(1.0, abs=1e-7)
            assert p.discord == pytest.approx(1.0, abs=1e-7)


class TestAutoTruncation:
    def test_decoupled_auto_stops_immediately(self, tmp_path):
        cfg = parse_config(
            "eta = 0\nt_max = 1.0\ngrid_dt = 0.1\n"
            "matsubara_cutoff = auto\ndepth = auto\n"
        )
        cfg = dataclasses.replace(cfg, output_dir=str(tmp_path))
        report = run(cfg)
        assert report.truncation["auto"]
        assert report.truncation["cutoff"] == 0
        assert report.truncation["depth"] == 0


class TestSweep:
    def test_two_point_sweep(self, tmp_path):
        cfg = dataclasses.replace(FAST, output_dir=str(tmp_path))
        report = sweep(cfg, [0.0, 0.5])
        assert sorted(report.reports) == [0.0, 0.5]
        assert report.failures == {}
        with open(report.paths["sweep_csv"]) as fh:
            header = fh.readline().strip().split(",")
        assert header == ["t", "Q_zeta_0", "Q_zeta_0.5"]
        assert os.path.exists(tmp_path / "zeta_0" / "trajectory.csv")
        assert os.path.exists(tmp_path / "zeta_0.5" / "trajectory.csv")

    def test_singleton_sweep_matches_run(self, tmp_path):
        cfg = dataclasses.replace(FAST, output_dir=str(tmp_path / "s"))
        swept = sweep(cfg, [0.0])
        single = run(dataclasses.replace(FAST, zeta=0.0,
                                         output_dir=str(tmp_path / "r")))
        qa = [p.discord for p in swept.reports[0.0].points]
        qb = [p.discord for p in single.points]
        assert qa == qb

    def test_failure_isolation(self, tmp_path):
        # an impossible budget for one run must not sink the sweep
        cfg = dataclasses.replace(FAST, max_ados=3, output_dir=str(tmp_path))
        report = sweep(cfg, [0.0])
        assert report.reports == {}
        assert 0.0 in report.failures
        assert "CapacityError" in report.failures[0.0]

    def test_empty_sweep_rejected(self, tmp_path):
        from heomcorr.errors import HeomcorrError
        cfg = dataclasses.replace(FAST, output_dir=str(tmp_path))
        with pytest.raises(HeomcorrError):
            sweep(cfg, [])


class TestValidationSuite:
    def test_small_suite_passes(self):
        cfg = dataclasses.replace(FAST)
        reports = validation_suite(cfg, n_x_states=5, grid_shape=(96, 192))
        assert all(r.passed for r in reports), [
            (r.name, r.max_deviation) for r in reports if not r.passed
        ]
        names = {r.name for r in reports}
        assert "rhs-agreement-K1-L3" in names
        assert "closed-system-zeta1" in names
        assert "bell-exact" in names
