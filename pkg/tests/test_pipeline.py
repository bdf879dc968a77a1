import dataclasses
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from waitbench.errors import ConfigError, EmptyReport
from waitbench.linear import EnetConfig
from waitbench.lstm import LstmConfig
from waitbench.metrics import EvalReport, MetricTriple
from waitbench.pipeline import (
    RunConfig,
    render_report,
    run_config_from_text,
    run_pipeline,
)
from waitbench.synth import CohortConfig
from waitbench.trees import BoostConfig, ForestConfig


def small_config(tmp_path, **over):
    base = dict(
        cohort=CohortConfig(n_children=5, seed=21),
        forest=ForestConfig(n_trees=8),
        boost=BoostConfig(n_rounds=6),
        lstm=LstmConfig(epochs=6, hidden_size=8),
        out_dir=str(tmp_path / "out"),
    )
    base.update(over)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = small_config(tmp)
    return cfg, run_pipeline(cfg)


class TestRunPipeline:
    def test_outputs_present(self, finished_run):
        _, run_dir = finished_run
        assert len(sorted((run_dir / "heatmaps").glob("*.svg"))) == 6
        assert len(sorted((run_dir / "heatmaps").glob("*.csv"))) == 6
        for name in ("report.json", "report.csv", "traces.json", "clusters.json",
                     "config.digest", "config.resolved.txt"):
            assert (run_dir / name).exists()
        doc = json.loads((run_dir / "report.json").read_text())
        n = sum(len(c) for a in doc["entries"].values() for c in a.values())
        assert n == 24 and doc["complete"]

    def test_model_dumps_written(self, finished_run):
        _, run_dir = finished_run
        child_dirs = sorted((run_dir / "models").glob("age*/*"))
        assert child_dirs
        for d in child_dirs:
            names = {p.name for p in d.iterdir()}
            assert {"boosted_trees.txt", "random_forest.txt", "elastic_net.txt",
                    "lstm.txt", "lstm_loss.csv"} <= names

    def test_loss_curve_csv_schema(self, finished_run):
        _, run_dir = finished_run
        curve = next((run_dir / "models").glob("age*/*/lstm_loss.csv"))
        lines = curve.read_text().strip().split("\n")
        assert lines[0] == "epoch,train_loss"
        assert len(lines) >= 3

    def test_deterministic_bytes(self, finished_run, tmp_path):
        cfg, run_dir = finished_run
        again = run_pipeline(dataclasses.replace(cfg, out_dir=str(tmp_path / "b")))
        assert (run_dir / "report.json").read_bytes() == (again / "report.json").read_bytes()
        assert (run_dir / "traces.json").read_bytes() == (again / "traces.json").read_bytes()

    def test_thread_count_invariant(self, finished_run, tmp_path):
        cfg, run_dir = finished_run
        threaded = run_pipeline(
            dataclasses.replace(cfg, out_dir=str(tmp_path / "t"), n_threads=4)
        )
        assert (run_dir / "report.json").read_bytes() == (threaded / "report.json").read_bytes()

    def test_run_id_from_digest(self, finished_run):
        cfg, run_dir = finished_run
        assert run_dir.name == f"run-{cfg.digest()[:12]}"
        assert (run_dir / "config.digest").read_text().strip() == cfg.digest()

    def test_plots_rendered(self, finished_run):
        _, run_dir = finished_run
        svgs = sorted((run_dir / "plots").glob("*.svg"))
        assert len(svgs) == 4
        for p in svgs:
            ET.fromstring(p.read_text())
        assert (run_dir / "plots" / "table.txt").exists()


class TestDegenerateCohort:
    def test_all_silent_cohort_runs_clean(self, tmp_path):
        # Zero onset hazard: every series is all-zero, every distance is
        # zero, CH is degenerate, every column is constant. The pipeline
        # must still produce a complete report with zero errors.
        from waitbench.data import AGES, CATEGORIES
        from waitbench.synth import BurstProfile

        profiles = {(a, c): BurstProfile(0.0, 3.0) for a in AGES for c in CATEGORIES}
        cfg = small_config(tmp_path, cohort=CohortConfig(n_children=5, seed=1,
                                                         profiles=profiles))
        run_dir = run_pipeline(cfg)
        doc = json.loads((run_dir / "report.json").read_text())
        assert doc["complete"]
        for ages in doc["entries"].values():
            for cats in ages.values():
                for t in cats.values():
                    assert t["rmse"] == 0.0 and t["mbe"] == 0.0
        clusters = json.loads((run_dir / "clusters.json").read_text())
        assert all(row["degenerate"] for row in clusters)


class TestDigest:
    def test_execution_knobs_excluded(self, tmp_path):
        a = small_config(tmp_path)
        b = dataclasses.replace(a, n_threads=8, out_dir="/elsewhere")
        assert a.digest() == b.digest()

    def test_semantic_change_alters_digest(self, tmp_path):
        a = small_config(tmp_path)
        assert a.digest() != dataclasses.replace(a, seed=99).digest()
        assert a.digest() != dataclasses.replace(a, bin_width_s=20).digest()

    def test_resolved_config_reproduces_digest(self, finished_run):
        # The written run directory carries everything needed to re-run
        # bit-identically: parsing config.resolved.txt recovers the digest.
        cfg, run_dir = finished_run
        resolved = (run_dir / "config.resolved.txt").read_text()
        rebuilt = run_config_from_text(resolved)
        assert rebuilt.digest() == cfg.digest()

    def test_file_input_digest_pins_content(self, tmp_path):
        from waitbench.data import write_dataset
        from waitbench.synth import CohortConfig, generate_cohort

        path = tmp_path / "data.csv"
        write_dataset(generate_cohort(CohortConfig(n_children=4, seed=1)), path)
        a = RunConfig(input=str(path)).digest()
        write_dataset(generate_cohort(CohortConfig(n_children=4, seed=2)), path)
        b = RunConfig(input=str(path)).digest()
        assert a != b
        # A recorded hash that no longer matches the file is rejected.
        with pytest.raises(ConfigError):
            run_config_from_text(
                f"input = {path}\ninput_sha256 = {'0' * 64}\n"
            )


class TestRunConfigText:
    def test_defaults(self):
        cfg = run_config_from_text("")
        assert cfg.input == "synth" and cfg.seed == 7
        assert cfg.cohort.n_children == 12 and cfg.cohort.seed == 7

    def test_overrides(self):
        text = """
        seed = 3
        n_children = 8
        bin_width_s = 20
        forest.n_trees = 50
        boost.loss = squared
        lstm.epochs = 12
        enet.alpha = 0.9
        var_half = false
        age4.problem.onset_hazard = 0.05
        """
        cfg = run_config_from_text(text)
        assert cfg.seed == 3 and cfg.cohort.seed == 3
        assert cfg.cohort.n_children == 8
        assert cfg.bin_width_s == 20
        assert cfg.forest.n_trees == 50
        assert cfg.boost.loss == "squared"
        assert cfg.lstm.epochs == 12
        assert cfg.enet.alpha == 0.9
        assert cfg.var_half is False
        assert cfg.cohort.profiles[(4, "problem")].onset_hazard == 0.05

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            run_config_from_text("typo_key = 1")
        with pytest.raises(ConfigError):
            run_config_from_text("forest.typo = 1")

    def test_bad_bool(self):
        with pytest.raises(ConfigError):
            run_config_from_text("var_half = maybe")


class TestRenderReport:
    def fake_report(self):
        entries = {}
        averages = {}
        from waitbench.data import AGES, CATEGORIES

        for m in ("m_a", "m_b"):
            for age in AGES:
                for cat in CATEGORIES:
                    entries[(m, age, cat)] = MetricTriple(1.0, 0.5, 0.1)
            averages[m] = MetricTriple(1.0, 0.5, 0.1)
        return EvalReport(entries, averages)

    def test_empty_report_rejected(self, tmp_path):
        with pytest.raises(EmptyReport):
            render_report(EvalReport({}, {}), tmp_path)

    def test_table_only_without_traces(self, tmp_path):
        written = render_report(self.fake_report(), tmp_path, style="both")
        assert [p.name for p in written] == ["table.txt"]

    def test_svgs_with_traces(self, tmp_path):
        traces = {
            m: {
                f"{age}/{cat}": [
                    {"response_id": "x", "actual": [1, 2], "predicted": [1.5, 2.5]}
                ]
                for age in (3, 4, 5)
                for cat in ("problem", "unrelated")
            }
            for m in ("m_a", "m_b")
        }
        written = render_report(self.fake_report(), tmp_path, traces=traces, style="svg")
        assert sorted(p.name for p in written) == ["m_a.svg", "m_b.svg"]
        for p in written:
            ET.fromstring(p.read_text())
