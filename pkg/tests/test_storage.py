import copy
import json

import numpy as np
import pytest

from wolfsearch.lve import LveResult
from wolfsearch.presets import standard_experiment_config
from wolfsearch.storage import (
    ConfigError,
    load_experiment_config,
    read_master_csv,
    resolve_path,
    write_json,
    write_master_csv,
    write_result_json,
    write_trace_csv,
)


@pytest.fixture
def config_doc():
    return standard_experiment_config(seed=0, iterations=10)


def write_config(tmp_path, doc, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def fake_result(n=3, k=1, with_fmr=True):
    rng = np.random.Generator(np.random.PCG64(0))
    scores = rng.random(n)
    return LveResult(
        best_latent=rng.standard_normal(4),
        best_embedding=rng.standard_normal(5),
        best_score=float(scores.max()),
        best_iteration=int(np.argmax(scores)),
        iteration_best_scores=scores,
        iteration_best_latents=rng.standard_normal((n, 4)),
        system_score_traces=rng.random((k, n)),
        system_fmr_traces=rng.random((k, n)) if with_fmr else None,
        system_names=tuple(f"s{i}" for i in range(k)),
    )


class TestLoadConfig:
    def test_full_round_trip(self, tmp_path, config_doc):
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        assert cfg.seed == 0
        assert cfg.synth.embed_dim == 32
        assert cfg.synth.identities == 100
        assert cfg.synth.seed == 1  # sampling stream is seed + 1
        assert cfg.dev_fraction == 0.5
        assert cfg.generator.kind == "cluster_warp"
        assert cfg.generator.matrix.shape == (32, 32)
        assert len(cfg.systems) == 1
        assert cfg.systems[0].name == "arc_a"
        assert cfg.systems[0].weight == 1.0
        assert cfg.lve.population == 22
        assert cfg.lve.iterations == 10
        assert cfg.lve.fmr_trace == "auto"
        assert cfg.lve.settings == {"single-a": ("arc_a",)}
        assert cfg.eval.matcher_kind == "cosine"
        assert cfg.output.result == "result.json"

    def test_seed_override(self, tmp_path, config_doc):
        cfg = load_experiment_config(write_config(tmp_path, config_doc), seed_override=42)
        assert cfg.seed == 42
        assert cfg.synth.seed == 43

    def test_minimal_config(self, tmp_path):
        p = write_config(tmp_path, {})
        cfg = load_experiment_config(p)
        assert cfg.seed == 0
        assert cfg.synth is None
        assert cfg.generator is None
        assert cfg.systems == ()
        assert cfg.lve.iterations == 1000
        assert cfg.output.trace == "trace.csv"

    def test_config_values_reproduce_generator(self, tmp_path, config_doc):
        from wolfsearch.presets import standard_generator_spec, standard_mixture_spec

        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        want = standard_generator_spec(0, standard_mixture_spec(0))
        assert np.array_equal(cfg.generator.matrix, want.matrix)
        assert np.array_equal(cfg.generator.bias, want.bias)
        assert np.array_equal(cfg.generator.centroids, want.centroids)
        assert cfg.generator.tau == want.tau


class TestConfigErrors:
    def test_unknown_root_key(self, tmp_path, config_doc):
        config_doc["surprise"] = 1
        with pytest.raises(ConfigError, match="unknown key 'surprise' in section '\\(root\\)'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_unknown_synth_key(self, tmp_path, config_doc):
        config_doc["synth"]["extra"] = 1
        with pytest.raises(ConfigError, match="unknown key 'extra' in section 'synth'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_missing_synth_key(self, tmp_path, config_doc):
        del config_doc["synth"]["identities"]
        with pytest.raises(ConfigError, match="missing key 'identities'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_unknown_cluster_key(self, tmp_path, config_doc):
        config_doc["synth"]["clusters"][0]["radius"] = 2.0
        with pytest.raises(ConfigError, match=r"synth.clusters\[0\]"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_wrong_type_integer(self, tmp_path, config_doc):
        config_doc["lve"]["iterations"] = "many"
        with pytest.raises(ConfigError, match="lve.iterations must be an integer"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_bool_is_not_integer(self, tmp_path, config_doc):
        config_doc["seed"] = True
        with pytest.raises(ConfigError, match="seed must be an integer"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_bad_dev_fraction(self, tmp_path, config_doc):
        config_doc["synth"]["dev_fraction"] = 1.5
        with pytest.raises(ConfigError, match="dev_fraction must be in"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_generator_validation_bubbles_up(self, tmp_path, config_doc):
        config_doc["generator"]["tau"] = 3.0
        with pytest.raises(ConfigError, match="generator: tau must be in"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_command_only_for_external_generator(self, tmp_path, config_doc):
        config_doc["generator"]["command"] = ["prog"]
        with pytest.raises(ConfigError, match="only applies to kind 'external'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_unknown_matcher_kind(self, tmp_path, config_doc):
        config_doc["systems"][0]["matcher"]["kind"] = "hamming"
        with pytest.raises(ConfigError, match="unknown matcher kind 'hamming'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_duplicate_system_name(self, tmp_path, config_doc):
        config_doc["systems"].append(copy.deepcopy(config_doc["systems"][0]))
        with pytest.raises(ConfigError, match="duplicate system name 'arc_a'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_setting_references_unknown_system(self, tmp_path, config_doc):
        config_doc["lve"]["settings"]["bad"] = ["nonexistent"]
        with pytest.raises(ConfigError, match="references unknown system 'nonexistent'"):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_bad_fmr_trace(self, tmp_path, config_doc):
        config_doc["lve"]["fmr_trace"] = "yes please"
        with pytest.raises(ConfigError, match='"auto", null, or a list'):
            load_experiment_config(write_config(tmp_path, config_doc))

    def test_fmr_trace_null_and_list(self, tmp_path, config_doc):
        config_doc["lve"]["fmr_trace"] = None
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        assert cfg.lve.fmr_trace is None
        config_doc["lve"]["fmr_trace"] = [0.5]
        cfg = load_experiment_config(write_config(tmp_path, config_doc, "c2.json"))
        assert cfg.lve.fmr_trace == (0.5,)

    def test_not_json(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_experiment_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_experiment_config(tmp_path / "absent.json")

    def test_root_must_be_object(self, tmp_path):
        p = tmp_path / "list.json"
        p.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="root must be a JSON object"):
            load_experiment_config(p)

    def test_output_overrides(self, tmp_path, config_doc):
        config_doc["output"] = {"result": "r.json", "trace": "t.csv"}
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        assert cfg.output.result == "r.json"
        assert cfg.output.trace == "t.csv"
        assert cfg.output.master == "master.csv"

    def test_unknown_output_key(self, tmp_path, config_doc):
        config_doc["output"] = {"results": "r.json"}
        with pytest.raises(ConfigError, match="unknown key 'results' in section 'output'"):
            load_experiment_config(write_config(tmp_path, config_doc))


class TestExternalEndpoints:
    def test_external_generator_parsed(self, tmp_path, config_doc):
        config_doc["generator"] = {
            "kind": "external",
            "latent_dim": 8,
            "embed_dim": 16,
            "command": ["mygen", "--fast"],
            "timeout_ms": 500,
        }
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        ep = cfg.generator.external
        assert ep.command == ("mygen", "--fast")
        assert ep.verbs == frozenset({"GEN"})
        assert ep.latent_dim == 8
        assert ep.embed_dim == 16
        assert ep.timeout_ms == 500

    def test_external_matcher_parsed(self, tmp_path, config_doc):
        config_doc["systems"][0]["matcher"] = {
            "kind": "external",
            "command": ["mymatch"],
        }
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        sc = cfg.systems[0]
        assert sc.matcher_kind == "external"
        assert sc.matcher_endpoint.verbs == frozenset({"MATCH"})
        spec = sc.matcher_spec(32)
        assert spec.external.embed_dim == 32

    def test_external_matcher_needs_command(self, tmp_path, config_doc):
        config_doc["systems"][0]["matcher"] = {"kind": "external"}
        with pytest.raises(ConfigError, match="command must be a nonempty list"):
            load_experiment_config(write_config(tmp_path, config_doc))


class TestResolveSetting:
    def test_none_means_all(self, tmp_path, config_doc):
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        assert cfg.resolve_setting(None) == cfg.systems

    def test_named_setting(self, tmp_path, config_doc):
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        systems = cfg.resolve_setting("single-a")
        assert [s.name for s in systems] == ["arc_a"]

    def test_unknown_setting(self, tmp_path, config_doc):
        cfg = load_experiment_config(write_config(tmp_path, config_doc))
        with pytest.raises(ConfigError, match="unknown setting 'solo'; config defines: single-a"):
            cfg.resolve_setting("solo")


def test_resolve_path():
    assert resolve_path("r.json", "/out") == "/out/r.json"
    assert resolve_path("/abs/r.json", "/out") == "/abs/r.json"


class TestMasterCsv:
    def test_round_trip(self, tmp_path):
        emb = np.array([0.1, -2.5, 1e-12])
        p = tmp_path / "master.csv"
        write_master_csv(emb, p)
        assert np.array_equal(read_master_csv(p), emb)
        first = p.read_text().split("\n")[1]
        assert first.startswith("master,best,")

    def test_multi_row_rejected(self, tmp_path):
        p = tmp_path / "master.csv"
        p.write_text("identity,item,x0\nmaster,best,1.0\nmaster,other,2.0\n")
        with pytest.raises(ValueError, match="exactly one master embedding row, got 2"):
            read_master_csv(p)


class TestTraceCsv:
    def test_header_and_rows_with_fmr(self, tmp_path):
        res = fake_result(n=3, k=2, with_fmr=True)
        p = tmp_path / "trace.csv"
        write_trace_csv(res, p)
        lines = p.read_text().splitlines()
        assert lines[0] == (
            "iteration,best_score,system_0_mean,system_1_mean,"
            "system_0_fmr,system_1_fmr"
        )
        assert len(lines) == 4
        row = lines[1].split(",")
        assert row[0] == "0"
        assert float(row[1]) == res.iteration_best_scores[0]
        assert float(row[2]) == res.system_score_traces[0, 0]
        assert float(row[5]) == res.system_fmr_traces[1, 0]

    def test_header_without_fmr(self, tmp_path):
        res = fake_result(n=2, k=1, with_fmr=False)
        p = tmp_path / "trace.csv"
        write_trace_csv(res, p)
        assert p.read_text().splitlines()[0] == "iteration,best_score,system_0_mean"

    def test_floats_survive_round_trip(self, tmp_path):
        res = fake_result(n=3, k=1)
        p = tmp_path / "trace.csv"
        write_trace_csv(res, p)
        rows = [line.split(",") for line in p.read_text().splitlines()[1:]]
        got = np.array([float(r[1]) for r in rows])
        assert np.array_equal(got, res.iteration_best_scores)


class TestJsonWriters:
    def test_write_json_deterministic_bytes(self, tmp_path):
        doc = {"b": 2, "a": [1.5, 0.1], "nested": {"z": True, "a": None}}
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json(doc, p1)
        write_json(doc, p2)
        b1 = p1.read_bytes()
        assert b1 == p2.read_bytes()
        assert b1.endswith(b"\n")
        assert b1.index(b'"a"') < b1.index(b'"b"')

    def test_write_json_rejects_nan(self, tmp_path):
        with pytest.raises(ValueError):
            write_json({"x": float("nan")}, tmp_path / "nan.json")

    def test_result_json_contents(self, tmp_path):
        res = fake_result(n=4, k=2)
        p = tmp_path / "result.json"
        write_result_json(
            res, p, seed=7, population=22, setting="joint", fmr_thresholds=(0.5, 0.6)
        )
        doc = json.loads(p.read_text())
        assert doc["setting"] == "joint"
        assert doc["seed"] == 7
        assert doc["population"] == 22
        assert doc["iterations"] == 4
        assert doc["systems"] == ["s0", "s1"]
        assert doc["fmr_thresholds"] == [0.5, 0.6]
        assert doc["best_score"] == res.best_score
        assert doc["best_iteration"] == res.best_iteration
        assert doc["best_latent"] == [float(v) for v in res.best_latent]
        assert doc["final_system_means"] == [
            float(v) for v in res.system_score_traces[:, -1]
        ]
        assert doc["final_system_fmrs"] == [
            float(v) for v in res.system_fmr_traces[:, -1]
        ]

    def test_result_json_without_fmr(self, tmp_path):
        res = fake_result(n=2, k=1, with_fmr=False)
        p = tmp_path / "result.json"
        write_result_json(res, p, seed=0, population=8)
        doc = json.loads(p.read_text())
        assert doc["final_system_fmrs"] is None
        assert doc["fmr_thresholds"] is None
        assert doc["setting"] is None
