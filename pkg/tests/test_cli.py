import json

import pytest

from waitbench.cli import main, parse_cli
from waitbench.data import load_dataset


class TestParse:
    def test_run_with_overrides(self):
        args = parse_cli(["run", "--config", "c.txt", "--seed", "7"])
        assert args.command == "run" and args.config == "c.txt" and args.seed == 7

    def test_no_args_usage_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_cli([])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_seed_names_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_cli(["run", "--seed", "abc"])
        assert exc.value.code == 2
        assert "--seed" in capsys.readouterr().err

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_cli(["run", "--frobnicate"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_rejected(self):
        with pytest.raises(SystemExit) as exc:
            parse_cli(["dance"])
        assert exc.value.code == 2


class TestGenerate:
    def test_writes_loadable_csv(self, tmp_path, capsys):
        out = tmp_path / "cohort.csv"
        cfg = tmp_path / "cohort.cfg"
        cfg.write_text("n_children = 4\nseed = 3\n")
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
        ds = load_dataset(out)
        assert len(ds) == 24

    def test_seed_override_changes_output(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        cfg = tmp_path / "cohort.cfg"
        cfg.write_text("n_children = 4\n")
        main(["generate", "--config", str(cfg), "--out", str(a), "--seed", "1"])
        main(["generate", "--config", str(cfg), "--out", str(b), "--seed", "2"])
        assert a.read_bytes() != b.read_bytes()


class TestClusterCmd:
    def test_writes_heatmaps(self, tmp_path):
        data = tmp_path / "d.csv"
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_children = 5\nseed = 2\n")
        main(["generate", "--config", str(cfg), "--out", str(data)])
        out = tmp_path / "clus"
        assert main(["cluster", "--input", str(data), "--out", str(out)]) == 0
        assert len(sorted(out.glob("*.svg"))) == 6
        rows = json.loads((out / "clusters.json").read_text())
        assert len(rows) == 6
        for row in rows:
            assert set(row["predictors"]) | set(row["responses"]) == {
                f"c{i:03d}" for i in range(5)
            }


class TestRunAndReport:
    def test_run_and_rerender(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "n_children = 5\nseed = 4\n"
            "forest.n_trees = 6\nboost.n_rounds = 4\nlstm.epochs = 4\nlstm.hidden_size = 6\n"
            f"out_dir = {tmp_path / 'out'}\n"
        )
        assert main(["run", "--config", str(cfg)]) == 0
        stdout = capsys.readouterr().out
        assert "run complete:" in stdout and "rmse" in stdout
        run_dir = next((tmp_path / "out").glob("run-*"))
        (run_dir / "plots" / "table.txt").unlink()
        assert main(["report", "--run", str(run_dir), "--style", "table"]) == 0
        assert (run_dir / "plots" / "table.txt").exists()

    def test_report_missing_dir(self, tmp_path, capsys):
        assert main(["report", "--run", str(tmp_path)]) == 1
        assert "report.json" in capsys.readouterr().err

    def test_runtime_error_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("unknown_thing = 1\n")
        assert main(["run", "--config", str(cfg)]) == 1
        assert "error:" in capsys.readouterr().err


class TestSelftestCmd:
    def test_single_fast_criterion(self, capsys):
        assert main(["selftest", "--only", "7"]) == 0
        out = capsys.readouterr().out
        assert "criterion 7" in out and "PASS" in out
