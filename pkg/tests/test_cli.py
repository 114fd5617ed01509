import json

import numpy as np
import pytest

from wolfsearch.cli import main
from wolfsearch.presets import standard_experiment_config

from conftest import oracle_command


def small_doc(seed=0, iterations=8):
    """A fast end-to-end config: full scenario shrunk to seconds."""
    doc = standard_experiment_config(seed=seed, iterations=iterations)
    doc["synth"]["identities"] = 24
    doc["synth"]["items_per_identity"] = 2
    return doc


@pytest.fixture
def workspace(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(small_doc()))
    out = tmp_path / "run"
    return cfg, out


def run(*argv):
    return main([str(a) for a in argv])


class TestSynth:
    def test_writes_all_files(self, workspace, capsys):
        cfg, out = workspace
        assert run("synth", "--config", cfg, "--out", out) == 0
        for name in ("enrollment.csv", "dev.csv", "eval.csv", "synth_provenance.json"):
            assert (out / name).exists()
        printed = capsys.readouterr().out
        assert "enrollment.csv (48 rows)" in printed

    def test_split_counts(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        dev_rows = (out / "dev.csv").read_text().count("\n") - 1
        eval_rows = (out / "eval.csv").read_text().count("\n") - 1
        assert dev_rows == 24  # 12 identities x 2 items
        assert eval_rows == 24

    def test_provenance_contents(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        doc = json.loads((out / "synth_provenance.json").read_text())
        assert doc["seed"] == 0
        assert doc["sample_seed"] == 1
        assert doc["split_seed"] == 2
        assert doc["identities"] == 24
        assert len(doc["clusters"]) == 4

    def test_missing_synth_section(self, tmp_path):
        doc = small_doc()
        del doc["synth"]
        cfg = tmp_path / "nosynth.json"
        cfg.write_text(json.dumps(doc))
        assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 1

    def test_rerun_byte_identical(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        first = (out / "enrollment.csv").read_bytes()
        run("synth", "--config", cfg, "--out", out)
        assert (out / "enrollment.csv").read_bytes() == first


class TestLve:
    def test_pipeline_outputs(self, workspace, capsys):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        assert run("lve", "--config", cfg, "--out", out) == 0
        assert (out / "result.json").exists()
        assert (out / "trace.csv").exists()
        assert (out / "master.csv").exists()
        assert "best_score=" in capsys.readouterr().out

    def test_trace_rows_match_iterations(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        run("lve", "--config", cfg, "--out", out)
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "iteration,best_score,system_0_mean,system_0_fmr"
        assert len(lines) == 1 + 8

    def test_result_consistent_with_trace(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        run("lve", "--config", cfg, "--out", out)
        doc = json.loads((out / "result.json").read_text())
        rows = [l.split(",") for l in (out / "trace.csv").read_text().splitlines()[1:]]
        best_scores = [float(r[1]) for r in rows]
        assert doc["best_score"] == max(best_scores)
        assert doc["best_iteration"] == int(np.argmax(best_scores))
        assert doc["iterations"] == 8
        assert doc["systems"] == ["arc_a"]

    def test_master_csv_matches_result_embedding(self, workspace):
        from wolfsearch.storage import read_master_csv

        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        run("lve", "--config", cfg, "--out", out)
        doc = json.loads((out / "result.json").read_text())
        emb = read_master_csv(out / "master.csv")
        assert [float(v) for v in emb] == doc["best_embedding"]

    def test_setting_flag(self, workspace, capsys):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        assert run("lve", "--config", cfg, "--out", out, "--setting", "single-a") == 0
        doc = json.loads((out / "result.json").read_text())
        assert doc["setting"] == "single-a"

    def test_unknown_setting(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        assert run("lve", "--config", cfg, "--out", out, "--setting", "wat") == 1

    def test_seed_override_changes_result(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        run("lve", "--config", cfg, "--out", out)
        base = json.loads((out / "result.json").read_text())
        # note: --seed reseeds the search stream only; the enrollment
        # files on disk stay as synth wrote them
        run("lve", "--config", cfg, "--out", out, "--seed", "5")
        other = json.loads((out / "result.json").read_text())
        assert other["seed"] == 5
        assert other["best_latent"] != base["best_latent"]

    def test_missing_enrollment_file(self, workspace):
        cfg, out = workspace
        assert run("lve", "--config", cfg, "--out", out) == 1

    def test_two_system_trace_columns(self, tmp_path):
        doc = small_doc()
        second = dict(doc["systems"][0])
        second = {**second, "name": "arc_b"}
        doc["systems"].append(second)
        cfg = tmp_path / "two.json"
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "run2"
        run("synth", "--config", cfg, "--out", out)
        assert run("lve", "--config", cfg, "--out", out) == 0
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == (
            "iteration,best_score,system_0_mean,system_1_mean,"
            "system_0_fmr,system_1_fmr"
        )

    def test_external_matcher_failure_is_runtime_error(self, tmp_path):
        doc = small_doc(iterations=2)
        doc["systems"][0]["matcher"] = {
            "kind": "external",
            "command": list(oracle_command("misbehave_oracle.py", "garbage")),
        }
        cfg = tmp_path / "ext.json"
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "rune"
        run("synth", "--config", cfg, "--out", out)
        # auto threshold derivation hits the broken oracle first; either
        # way the failure is a runtime error, not a usage error
        assert run("lve", "--config", cfg, "--out", out) == 2


class TestEvalAndDensity:
    def full_pipeline(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        run("lve", "--config", cfg, "--out", out)
        return cfg, out

    def test_eval_report(self, workspace, capsys):
        cfg, out = self.full_pipeline(workspace)
        assert run("eval", "--config", cfg, "--out", out) == 0
        doc = json.loads((out / "eval_report.json").read_text())
        assert set(doc) == {
            "threshold", "threshold_source", "eer", "normal_fmr_dev",
            "normal_fmr_eval", "master_fmr_dev", "master_fmr_eval",
            "matched_identities", "n_matched", "success",
        }
        assert doc["threshold_source"] == "dev.csv"
        assert isinstance(doc["success"], bool)
        assert "success=" in capsys.readouterr().out

    def test_eval_explicit_master(self, workspace):
        cfg, out = self.full_pipeline(workspace)
        assert run(
            "eval", "--config", cfg, "--out", out, "--master", out / "master.csv"
        ) == 0

    def test_eval_missing_master(self, workspace):
        cfg, out = workspace
        run("synth", "--config", cfg, "--out", out)
        assert run("eval", "--config", cfg, "--out", out) == 1

    def test_eval_dim_mismatch(self, workspace):
        cfg, out = self.full_pipeline(workspace)
        (out / "short.csv").write_text("identity,item,x0\nmaster,best,1.0\n")
        assert run(
            "eval", "--config", cfg, "--out", out, "--master", "short.csv"
        ) == 1

    def test_density_outputs(self, workspace, capsys):
        cfg, out = self.full_pipeline(workspace)
        assert run("density", "--config", cfg, "--out", out) == 0
        doc = json.loads((out / "density.json").read_text())
        assert 0.0 <= doc["percentile"] <= 1.0
        assert doc["n_reference"] == 48
        lines = (out / "projection.csv").read_text().splitlines()
        assert lines[0] == "identity,item,x,y"
        assert len(lines) == 1 + 48 + 1
        assert lines[-1].startswith("master,best,")
        assert "percentile=" in capsys.readouterr().out

    def test_density_rerun_byte_identical(self, workspace):
        cfg, out = self.full_pipeline(workspace)
        run("density", "--config", cfg, "--out", out)
        first = (out / "density.json").read_bytes()
        run("density", "--config", cfg, "--out", out)
        assert (out / "density.json").read_bytes() == first


class TestUsageErrors:
    def test_unknown_flag(self, workspace, capsys):
        cfg, out = workspace
        assert run("synth", "--config", cfg, "--out", out, "--frobnicate") == 1
        capsys.readouterr()

    def test_unknown_subcommand(self, capsys):
        assert run("launch") == 1
        capsys.readouterr()

    def test_missing_required_flag(self, capsys):
        assert run("synth", "--out", "somewhere") == 1
        capsys.readouterr()

    def test_missing_config_file(self, tmp_path):
        assert run("synth", "--config", tmp_path / "ghost.json", "--out", tmp_path) == 1

    def test_negative_seed(self, workspace):
        cfg, out = workspace
        assert run("synth", "--config", cfg, "--out", out, "--seed", "-3") == 1
