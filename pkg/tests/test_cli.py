import os

import pytest

from heomcorr.cli import main

FAST_CONFIG = """\
t_max = 2.0
grid_dt = 0.05
matsubara_cutoff = 2
depth = 2
n_theta = 32
n_phi = 64
"""


@pytest.fixture
def fast_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(FAST_CONFIG + f"output_dir = {tmp_path / 'out'}\n")
    return str(path)


class TestRunVerb:
    def test_run_success(self, fast_config_file, tmp_path, capsys):
        assert main(["run", fast_config_file]) == 0
        out = capsys.readouterr().out
        assert "truncation: K=2 L=2" in out
        assert "oracles:" in out
        assert os.path.exists(tmp_path / "out" / "trajectory.csv")

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("beta = -1\n")
        assert main(["run", str(path)]) == 1
        assert "beta" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        assert main(["run", "/nonexistent/path.cfg"]) == 1

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("zeta_typo = 1\n")
        assert main(["run", str(path)]) == 1

    def test_capacity_failure_exit_code(self, tmp_path, capsys):
        path = tmp_path / "big.cfg"
        path.write_text(FAST_CONFIG + f"max_ados = 3\noutput_dir = {tmp_path}\n")
        assert main(["run", str(path)]) == 2


class TestOracleExitCode:
    def test_failed_oracle_maps_to_exit_3(self, fast_config_file, monkeypatch, capsys):
        import heomcorr.runner as runner_mod
        from heomcorr.oracles import OracleReport

        def doomed(cfg, model, bath_params, rho0):
            return [OracleReport.from_deviation("rigged", 1.0, 1e-9, "synthetic")]

        monkeypatch.setattr(runner_mod, "_standard_oracles", doomed)
        assert main(["run", fast_config_file]) == 3
        assert "FAIL" in capsys.readouterr().out


class TestSweepVerb:
    def test_sweep_two_values(self, fast_config_file, tmp_path, capsys):
        assert main(["sweep", fast_config_file, "--zeta", "0,0.5"]) == 0
        out = capsys.readouterr().out
        assert "zeta=0:" in out
        assert "zeta=0.5:" in out
        assert os.path.exists(tmp_path / "out" / "sweep.csv")

    def test_empty_zeta_list(self, fast_config_file):
        assert main(["sweep", fast_config_file, "--zeta", ""]) == 1


class TestEventsVerb:
    def test_events_rerun_from_csv(self, fast_config_file, tmp_path, capsys):
        main(["run", fast_config_file])
        capsys.readouterr()
        csv_path = str(tmp_path / "out" / "trajectory.csv")
        assert main(["events", csv_path]) == 0

    def test_wrong_csv_rejected(self, tmp_path, capsys):
        path = tmp_path / "junk.csv"
        path.write_text("a,b,c\n1,2,3\n")
        assert main(["events", str(path)]) == 2


class TestValidateVerb:
    def test_validate_fast(self, tmp_path, capsys):
        path = tmp_path / "v.cfg"
        path.write_text(FAST_CONFIG)
        # full-size validation is exercised by the acceptance suite; here we
        # only check the verb wiring, so monkeypatching the suite size is
        # avoided by accepting the runtime of the real one being too long
        # and instead calling the library with small sizes elsewhere.
        # The CLI contract check: a passing suite returns 0.
        # (kept fast by the short t_max in the config)
        import heomcorr.cli as cli_mod
        import heomcorr.runner as runner_mod
        orig = runner_mod.validation_suite

        def small_suite(cfg):
            return orig(cfg, n_x_states=3, grid_shape=(64, 128))

        cli_mod.validation_suite = small_suite
        try:
            assert main(["validate", str(path)]) == 0
            out = capsys.readouterr().out
            assert "[pass]" in out
        finally:
            cli_mod.validation_suite = orig
