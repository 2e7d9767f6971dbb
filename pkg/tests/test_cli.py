import json

import numpy as np
import pytest
from click.testing import CliRunner

import amdtk.cli as cli
from amdtk.cli import EXIT_PARSE, EXIT_POOL, EXIT_VERIFY, main
from amdtk.quotient import PoolExhaustedError
from amdtk.verify import VerifyVerdict


@pytest.fixture()
def runner():
    return CliRunner()


def read_perm(path, n):
    vals = [int(line) for line in path.read_text().splitlines()]
    assert sorted(vals) == list(range(n))
    return vals


class TestOrderBasics:
    def test_generated_path_orders_cleanly(self, runner):
        res = runner.invoke(main, ["order", "--gen", "path:5"])
        assert res.exit_code == 0, res.output
        assert "fill=0" in res.output
        assert "mean fill 0.0" in res.output

    def test_oracle_md_mode(self, runner):
        res = runner.invoke(main, ["order", "--gen", "path:6",
                                   "--mode", "oracle-md"])
        assert res.exit_code == 0
        assert "fill=0" in res.output

    def test_parallel_mode_with_verify(self, runner):
        res = runner.invoke(main, ["order", "--gen", "grid2d:5", "--mode",
                                   "parallel", "--workers", "2", "--verify"])
        assert res.exit_code == 0, res.output
        assert "verified" in res.output

    def test_runs_are_reproducible(self, runner, tmp_path):
        out = []
        for d in ("a", "b"):
            perm = tmp_path / f"{d}.perm"
            res = runner.invoke(main, ["order", "--gen", "grid2d:6",
                                       "--mode", "parallel", "--workers", "4",
                                       "--seed", "3",
                                       "--perm-out", str(perm)])
            assert res.exit_code == 0
            fills = [l.split(" seconds=")[0]
                     for l in res.output.splitlines() if "fill=" in l]
            out.append((perm.read_bytes(), fills))
        assert out[0] == out[1]

    def test_perm_out_is_original_labeling(self, runner, tmp_path):
        perm = tmp_path / "order.txt"
        res = runner.invoke(main, ["order", "--gen", "grid2d:4",
                                   "--perm-out", str(perm)])
        assert res.exit_code == 0
        read_perm(perm, 16)

    def test_repeats_write_suffixed_files(self, runner, tmp_path):
        perm = tmp_path / "p.txt"
        res = runner.invoke(main, ["order", "--gen", "grid2d:5",
                                   "--repeats", "3", "--perm-out", str(perm)])
        assert res.exit_code == 0
        assert res.output.count("repeat ") == 3
        perms = []
        for r in range(3):
            f = tmp_path / f"p.txt.r{r}"
            assert f.exists()
            perms.append(read_perm(f, 25))
        assert not perm.exists()  # only the suffixed files
        assert perms[0] != perms[1]  # different repeat seeds


class TestInputErrors:
    def test_missing_file_exits_parse_code(self, runner, tmp_path):
        stats = tmp_path / "s.json"
        res = runner.invoke(main, ["order", str(tmp_path / "nope.mtx"),
                                   "--stats", str(stats)])
        assert res.exit_code == EXIT_PARSE
        assert "cannot read" in res.stderr
        assert not stats.exists()

    def test_malformed_file_exits_parse_code(self, runner, tmp_path):
        bad = tmp_path / "bad.mtx"
        bad.write_text("%%MatrixMarket matrix array real general\n1 1\n1\n")
        res = runner.invoke(main, ["order", str(bad)])
        assert res.exit_code == EXIT_PARSE

    def test_bad_gen_spec_is_usage_error(self, runner):
        res = runner.invoke(main, ["order", "--gen", "torus:9"])
        assert res.exit_code == 2

    def test_both_input_and_gen_rejected(self, runner, tmp_path):
        f = tmp_path / "x.mtx"
        f.write_text("%%MatrixMarket matrix coordinate pattern general\n1 1 0\n")
        res = runner.invoke(main, ["order", str(f), "--gen", "path:3"])
        assert res.exit_code == 2

    def test_neither_input_nor_gen_rejected(self, runner):
        res = runner.invoke(main, ["order"])
        assert res.exit_code == 2

    def test_error_codes_are_distinct(self):
        assert len({EXIT_PARSE, EXIT_POOL, EXIT_VERIFY, 0, 2}) == 5


class TestPoolRetry:
    def test_retry_ladder_then_pool_exit(self, runner, monkeypatch):
        calls = []

        def always_exhausted(pattern, cfg, **kw):
            calls.append(cfg.augmentation)
            raise PoolExhaustedError(1000, 10)

        monkeypatch.setattr(cli, "parallel_amd", always_exhausted)
        res = runner.invoke(main, ["order", "--gen", "grid2d:4",
                                   "--mode", "parallel"])
        assert res.exit_code == EXIT_POOL
        assert len(calls) == cli.MAX_POOL_ATTEMPTS
        for a, b in zip(calls, calls[1:]):
            assert b == 2 * a
        assert res.stderr.count("retrying with augmentation") == len(calls)
        assert "still exhausted" in res.stderr

    def test_single_retry_recovers(self, runner, monkeypatch):
        real = cli.parallel_amd
        state = {"failed": False}

        def flaky(pattern, cfg, **kw):
            if not state["failed"]:
                state["failed"] = True
                raise PoolExhaustedError(50, 10)
            return real(pattern, cfg, **kw)

        monkeypatch.setattr(cli, "parallel_amd", flaky)
        res = runner.invoke(main, ["order", "--gen", "grid2d:4",
                                   "--mode", "parallel", "--workers", "2"])
        assert res.exit_code == 0
        assert "retrying with augmentation 3" in res.stderr


class TestVerifyFailure:
    def test_failed_verification_exits_verify_code(self, runner, monkeypatch):
        monkeypatch.setattr(
            cli, "verify_result",
            lambda pattern, result: VerifyVerdict(False, ["synthetic failure"]))
        res = runner.invoke(main, ["order", "--gen", "path:4", "--verify"])
        assert res.exit_code == EXIT_VERIFY
        assert "verification failed: synthetic failure" in res.stderr


class TestStatsOutput:
    def test_json_stats_with_figures(self, runner, tmp_path):
        stats = tmp_path / "run.json"
        res = runner.invoke(main, ["order", "--gen", "grid2d:5", "--repeats",
                                   "2", "--stats", str(stats)])
        assert res.exit_code == 0
        assert "wrote" in res.output
        doc = json.loads(stats.read_text())
        assert doc["input"] == "grid2d:5"
        assert doc["n"] == 25
        assert len(doc["repeats"]) == 2
        assert doc["repeats"][0]["seed"] == 0
        assert doc["repeats"][1]["seed"] == 1
        assert (tmp_path / "run_steps.png").exists()
        assert (tmp_path / "run_phases.png").exists()

    def test_no_plots(self, runner, tmp_path):
        stats = tmp_path / "run.json"
        res = runner.invoke(main, ["order", "--gen", "path:6",
                                   "--stats", str(stats), "--no-plots"])
        assert res.exit_code == 0
        assert list(tmp_path.iterdir()) == [stats]

    def test_csv_format(self, runner, tmp_path):
        stats = tmp_path / "run.csv"
        res = runner.invoke(main, ["order", "--gen", "grid2d:4",
                                   "--repeats", "3", "--stats", str(stats),
                                   "--format", "csv", "--no-plots"])
        assert res.exit_code == 0
        lines = stats.read_text().strip().splitlines()
        assert len(lines) == 4  # header plus one row per repeat


class TestEnvPrefix:
    def test_env_sets_mode(self, tmp_path):
        runner = CliRunner(env={"AMDTK_ORDER_MODE": "oracle-md"})
        stats = tmp_path / "s.json"
        res = runner.invoke(main, ["order", "--gen", "path:5",
                                   "--stats", str(stats), "--no-plots"])
        assert res.exit_code == 0
        assert json.loads(stats.read_text())["mode"] == "oracle-md"

    def test_env_sets_seed(self, tmp_path):
        files = {}
        for env_seed in ("7", "8"):
            runner = CliRunner(env={"AMDTK_ORDER_SEED": env_seed})
            perm = tmp_path / f"perm{env_seed}.txt"
            res = runner.invoke(main, ["order", "--gen", "grid2d:5",
                                       "--perm-out", str(perm)])
            assert res.exit_code == 0
            files[env_seed] = perm.read_text()
        assert files["7"] != files["8"]


class TestGen:
    def test_round_trip_through_file(self, runner, tmp_path):
        mtx = tmp_path / "g.mtx"
        res = runner.invoke(main, ["gen", "grid2d:4", "-o", str(mtx)])
        assert res.exit_code == 0
        assert "wrote grid2d:4: n=16 entries=24" in res.output
        from_file = runner.invoke(main, ["order", str(mtx)])
        from_spec = runner.invoke(main, ["order", "--gen", "grid2d:4"])
        assert from_file.exit_code == from_spec.exit_code == 0
        def fills(r):
            return [l.split(" seconds=")[0]
                    for l in r.output.splitlines() if "fill=" in l]
        assert fills(from_file) == fills(from_spec)

    def test_bad_spec(self, runner, tmp_path):
        res = runner.invoke(main, ["gen", "blob:1", "-o",
                                   str(tmp_path / "x.mtx")])
        assert res.exit_code == 2

    def test_version_flag(self, runner):
        res = runner.invoke(main, ["--version"])
        assert res.exit_code == 0
