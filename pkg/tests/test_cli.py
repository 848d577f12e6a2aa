"""End-to-end tests for the batch CLI and its output files."""

from __future__ import annotations

import os

import pytest

from rplsim import cli, metrics

TINY = """
[scenario]
name = tiny
duration_s = 240
sensors = 5
attackers = 1
replications = 2
modes = baseline attack cosec
mobility_modes = static mobile
replay_intervals_s = 1

[radio]
tx_range_m = 65

[mobility]
area_m = 100 100

[attacker]
attack_start_s = 60

[ids]
activation_s = 90
check_period_s = 15
"""


@pytest.fixture()
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestRunBatch:
    def test_six_aggregate_rows_and_plot_files(self, tiny_cfg, tmp_path):
        out = tmp_path / "out"
        paths = cli.run_batch(tiny_cfg, str(out))
        summary = read(paths["summary"]).decode().splitlines()
        assert summary[0] == metrics.AGGREGATE_CSV_HEADER
        assert len(summary) == 1 + 6  # 3 modes x 2 mobility modes
        runs = read(paths["runs"]).decode().splitlines()
        assert runs[0] == metrics.RUN_CSV_HEADER
        assert len(runs) == 1 + 6 * 2  # x 2 seeds
        for figure in ("plot_pdr", "plot_ae2ed", "plot_ada", "plot_frt"):
            assert os.path.exists(paths[figure])
            assert read(paths[figure]).decode().startswith("#")

    def test_byte_stable_across_invocations(self, tiny_cfg, tmp_path):
        first = cli.run_batch(tiny_cfg, str(tmp_path / "a"))
        second = cli.run_batch(tiny_cfg, str(tmp_path / "b"))
        for name in ("runs", "summary", "plot_pdr", "plot_ae2ed", "plot_ada", "plot_frt"):
            assert read(first[name]) == read(second[name])

    def test_workers_match_serial(self, tiny_cfg, tmp_path):
        serial = cli.run_batch(tiny_cfg, str(tmp_path / "s"), workers=1)
        parallel = cli.run_batch(tiny_cfg, str(tmp_path / "p"), workers=2)
        assert read(serial["runs"]) == read(parallel["runs"])
        assert read(serial["summary"]) == read(parallel["summary"])

    def test_mode_and_seed_filters(self, tiny_cfg, tmp_path):
        paths = cli.run_batch(
            tiny_cfg, str(tmp_path / "f"), seeds=(5,), mode="baseline", mobility="static"
        )
        runs = read(paths["runs"]).decode().splitlines()
        assert len(runs) == 2
        assert runs[1].startswith("static-baseline,5,")

    def test_traces_written_on_request(self, tiny_cfg, tmp_path):
        paths = cli.run_batch(
            tiny_cfg, str(tmp_path / "t"), seeds=(1,), mode="baseline",
            mobility="static", keep_traces=True,
        )
        files = os.listdir(paths["traces"])
        assert files == ["static-baseline-s1.tsv"]


class TestMain:
    def test_invalid_config_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[radio]\ntx_range_m = narrow\n")
        code = cli.main(["run", str(bad), "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        assert "tx_range_m" in err
        assert not os.path.exists(tmp_path / "o")

    def test_happy_path_prints_outputs(self, tiny_cfg, tmp_path, capsys):
        code = cli.main(
            ["run", tiny_cfg, "--out", str(tmp_path / "o"), "--seeds", "1",
             "--mode", "baseline", "--mobility", "static"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "runs.csv" in out and "summary.csv" in out

    def test_mode_not_in_config_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[scenario]\nmodes = baseline\nreplications = 1\n")
        code = cli.main(["run", str(cfg), "--out", str(tmp_path / "o"), "--mode", "cosec"])
        assert code == 2
        assert "--mode" in capsys.readouterr().err


class TestGoldenOutput:
    def test_small_run_golden_file(self, tmp_path):
        """Full output of a pinned miniature batch, frozen as a regression."""
        cfg = tmp_path / "g.cfg"
        cfg.write_text(
            "[scenario]\n"
            "name = golden\n"
            "duration_s = 180\n"
            "sensors = 3\n"
            "attackers = 1\n"
            "replications = 1\n"
            "modes = baseline attack\n"
            "mobility_modes = static\n"
            "replay_intervals_s = 1\n"
            "[radio]\n"
            "tx_range_m = 65\n"
            "[mobility]\n"
            "area_m = 80 80\n"
            "[attacker]\n"
            "attack_start_s = 60\n"
        )
        paths = cli.run_batch(str(cfg), str(tmp_path / "o"))
        got = read(paths["runs"]).decode()
        golden = os.path.join(os.path.dirname(__file__), "golden", "small_runs.csv")
        with open(golden, "r", encoding="utf-8") as fh:
            assert got == fh.read()
