"""Tests for the config-driven pipeline and the command line tool."""

import json

import pytest

from mcmforms.cli import main
from mcmforms.pipeline import (
    RunConfig,
    SCHEMA_VERSION,
    STAGE_DEPS,
    STAGE_ORDER,
    _expand_stages,
    default_config_text,
    parse_config,
    replay,
    report_to_json,
    run_pipeline,
    strip_timings,
)
from mcmforms.schedule import ProblemShape


def small_config(**overrides) -> RunConfig:
    cfg = RunConfig(shape=ProblemShape(3, 2, 0), seed=3,
                    census_shapes=((2, 2, 2), (2, 3, 2)))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


# ----- config parsing -----


def test_parse_default_config_round_trip():
    cfg = parse_config(default_config_text())
    assert cfg.shape == ProblemShape(4, 3, 0)
    assert cfg.mode == "mcm"
    assert cfg.field_spec == "5"
    assert cfg.seed == 1
    assert cfg.stages == STAGE_ORDER


def test_parse_config_sections():
    text = """
[run]
schema = 1
seed = 17
stages = schedule twist-ledger census

[shape]
N = 3
c = 2
r = 0

[family]
mode = general_fermat
field = 101
lambdas = 2 2 2 2
degrees = 3 4

[budgets]
max_terms = 500
max_census = 1024

[census]
shapes = 2 2 2; 2 3 2
"""
    cfg = parse_config(text)
    assert cfg.seed == 17
    assert cfg.stages == ("schedule", "twist-ledger", "census")
    assert cfg.shape == ProblemShape(3, 2, 0)
    assert cfg.mode == "general_fermat"
    assert cfg.lambdas == (2, 2, 2, 2)
    assert cfg.degrees == (3, 4)
    assert cfg.max_terms == 500
    assert cfg.max_census == 1024
    assert cfg.census_shapes == ((2, 2, 2), (2, 3, 2))


def test_parse_config_rejects_wrong_schema():
    with pytest.raises(ValueError, match="schema"):
        parse_config("[run]\nschema = 99\n")


def test_parse_config_rejects_missing_run_section():
    with pytest.raises(ValueError, match="run"):
        parse_config("[shape]\nN = 3\nc = 2\n")


def test_parse_config_rejects_unknown_stage():
    with pytest.raises(ValueError, match="unknown stages"):
        parse_config("[run]\nschema = 1\nstages = schedule warp\n")


def test_parse_config_rejects_garbage():
    with pytest.raises(ValueError, match="parse error"):
        parse_config("this is not ini\n[run\n")


def test_expand_stages_pulls_dependencies_in_order():
    assert _expand_stages(("twist-ledger",)) == ["schedule", "twist-ledger"]
    assert _expand_stages(("crosscheck",)) == [
        "schedule", "build", "smoothness", "crosscheck"]
    assert _expand_stages(("census",)) == ["census"]
    assert _expand_stages(STAGE_ORDER) == list(STAGE_ORDER)


def test_stage_dependencies_point_backwards():
    for stage, deps in STAGE_DEPS.items():
        for dep in deps:
            assert STAGE_ORDER.index(dep) < STAGE_ORDER.index(stage)


# ----- pipeline runs -----


def test_default_pipeline_all_stages_pass():
    report = run_pipeline(parse_config(default_config_text()))
    statuses = {name: entry["status"] for name, entry in report["stages"].items()}
    assert statuses == {name: "PASS" for name in STAGE_ORDER}
    assert report["ok"]
    assert report["schema"] == SCHEMA_VERSION
    sched = report["stages"]["schedule"]["report"]["schedule"]
    assert sched["d"] == 64845
    census = report["stages"]["census"]["report"]["censuses"]
    assert [c["count"] for c in census] == [148, 596, 1737, 273344]


def test_schedule_only_stage_list():
    report = run_pipeline(small_config(stages=("schedule",)))
    assert list(report["stages"].keys()) == ["schedule"]
    assert report["ok"]


def test_pipeline_determinism_modulo_timings():
    r1 = run_pipeline(small_config())
    r2 = run_pipeline(small_config())
    assert r1["timings"] != {}
    assert report_to_json(strip_timings(r1)) == report_to_json(strip_timings(r2))


def test_budget_change_keeps_executed_units_identical():
    base = run_pipeline(small_config())
    tight = run_pipeline(small_config(max_census=10))
    for stage in ("schedule", "build", "divisibility", "gluing", "transition",
                  "twist-ledger", "smoothness"):
        assert base["stages"][stage] == tight["stages"][stage]
    base_census = base["stages"]["census"]["report"]["censuses"]
    tight_census = tight["stages"]["census"]["report"]["censuses"]
    assert [c["count"] for c in base_census] == [148, 596]
    assert any(c["forced_sample"] for c in tight_census)


def test_characteristic_guard_skips_differential_stages():
    cfg = RunConfig(shape=ProblemShape(3, 2, 0), mode="general_fermat",
                    field_spec="2", lambdas=(2, 2, 2, 2), degrees=(3, 4),
                    seed=3, stages=("gluing", "transition"))
    report = run_pipeline(cfg)
    assert report["stages"]["gluing"]["status"] == "SKIP"
    assert report["stages"]["gluing"]["reason"] == "characteristic guard"
    assert report["stages"]["transition"]["status"] == "SKIP"
    assert report["ok"]


def test_rational_family_skips_finite_scans_and_blocks_dependents():
    cfg = small_config(field_spec="Q")
    report = run_pipeline(cfg)
    assert report["stages"]["smoothness"]["status"] == "SKIP"
    assert "rational" in report["stages"]["smoothness"]["reason"]
    assert report["stages"]["base-locus"]["status"] == "SKIP"
    assert report["stages"]["base-locus"]["reason"] == "blocked by smoothness"
    assert report["stages"]["crosscheck"]["status"] == "SKIP"
    assert report["stages"]["gluing"]["status"] == "PASS"
    assert report["ok"]


def test_stage_error_blocks_dependents_and_fails_run():
    cfg = small_config(field_spec="4")
    report = run_pipeline(cfg)
    assert report["stages"]["schedule"]["status"] == "PASS"
    assert report["stages"]["build"]["status"] == "ERROR"
    assert "prime" in report["stages"]["build"]["report"]["error"]
    assert report["stages"]["build"]["witness"]["stage"] == "build"
    assert report["stages"]["divisibility"]["status"] == "SKIP"
    assert report["stages"]["divisibility"]["reason"] == "blocked by build"
    assert not report["ok"]


def test_point_budget_skips_base_locus():
    cfg = RunConfig(shape=ProblemShape(3, 2, 0), mode="general_fermat",
                    field_spec="11", lambdas=(2, 2, 2, 2), degrees=(3, 4),
                    seed=5, stages=("base-locus",), max_points=1000)
    report = run_pipeline(cfg)
    assert report["stages"]["base-locus"]["status"] == "SKIP"
    assert "point budget" in report["stages"]["base-locus"]["reason"]
    assert report["ok"]


def test_forced_failure_blocks_dependents(monkeypatch):
    from mcmforms import pipeline as pl

    def broken(cfg, ctx):
        return "FAIL", {"planted": True}, {"schema": SCHEMA_VERSION,
                                           "stage": "smoothness"}

    monkeypatch.setitem(pl._STAGE_FNS, "smoothness", broken)
    report = run_pipeline(small_config())
    assert report["stages"]["smoothness"]["status"] == "FAIL"
    assert report["stages"]["base-locus"]["reason"] == "blocked by smoothness"
    assert report["stages"]["crosscheck"]["status"] == "SKIP"
    assert report["stages"]["census"]["status"] == "PASS"
    assert not report["ok"]


def test_general_pipeline_passes_with_defaulted_exponents():
    cfg = RunConfig(shape=ProblemShape(3, 2, 0), mode="general_fermat",
                    field_spec="11", seed=5,
                    stages=("divisibility", "gluing", "transition", "smoothness"))
    report = run_pipeline(cfg)
    executed = {n: e["status"] for n, e in report["stages"].items()}
    assert executed["divisibility"] == "PASS"
    assert executed["gluing"] == "PASS"
    assert executed["transition"] == "PASS"
    assert executed["smoothness"] == "PASS"
    assert cfg.lambdas is not None and cfg.degrees is not None


# ----- replay -----


def test_replay_census_witness_reproduces_count():
    witness = {"schema": SCHEMA_VERSION, "stage": "census", "a": 2, "b": 2,
               "q": 2, "mode": "exhaustive", "seed": 0, "budget": 2 ** 28,
               "count": 148}
    rep = replay(witness)
    assert rep["replayed"] == "census"
    assert rep["count"] == 148
    assert rep["ok"]


def test_replay_gluing_witness_reruns_exact_unit():
    witness = {
        "schema": SCHEMA_VERSION,
        "stage": "gluing",
        "family": {"shape": [3, 2, 0], "mode": "mcm", "field": "5",
                   "heart": 2, "eps": None, "lambdas": None, "degrees": None,
                   "seed": 42},
        "unit": {"which": ["K_nu", 0], "selection": [1], "j1": 0, "j2": 1},
        "mode": "exact",
        "seed": 3,
    }
    rep = replay(witness)
    assert rep["replayed"] == "gluing"
    assert rep["ok"]
    assert rep["checks"][0]["verdict"] == "pass"


def test_replay_smoothness_witness_reproduces_singular_family():
    witness = {"schema": SCHEMA_VERSION, "stage": "smoothness",
               "family": {"shape": [4, 3, 0], "mode": "mcm", "field": "5",
                          "heart": 2, "eps": None, "lambdas": None,
                          "degrees": None, "seed": 11},
               "q": 5}
    rep = replay(witness)
    assert rep["replayed"] == "smoothness"
    assert not rep["ok"]
    assert rep["singular"]


def test_replay_rejects_stale_schema():
    with pytest.raises(ValueError, match="stale witness"):
        replay({"schema": 99, "stage": "census"})


def test_replay_rejects_unknown_stage():
    with pytest.raises(ValueError, match="no replayable stage"):
        replay({"schema": SCHEMA_VERSION, "stage": "warp"})


# ----- command line -----


def run_cli(tmp_path, *argv, expect=0):
    code = main(list(argv))
    assert code == expect
    return code


def test_cli_schedule_report(tmp_path, capsys):
    out = tmp_path / "sched.json"
    assert main(["schedule", "--N", "4", "--c", "3", "--r", "0", "--heart", "2",
                 "--json", str(out)]) == 0
    capsys.readouterr()
    report = json.loads(out.read_text())
    assert report["d"] == 64845
    assert report["mu"]["4,4"] == 12969
    assert report["ledger"]["ok"]
    assert report["bounds"]["verdict"] == "PASS"
    assert set(report) >= {"shape", "delta", "mu", "d", "ledger", "bounds"}


def test_cli_build_verify_scan_round_trip(tmp_path, capsys):
    fam_path = tmp_path / "family.json"
    assert main(["build", "--shape", "3,2,0", "--mode", "mcm", "--field", "5",
                 "--seed", "3", "--out", str(fam_path)]) == 0
    assert fam_path.exists()

    report_path = tmp_path / "verify.json"
    assert main(["verify", "forms", "--family", str(fam_path),
                 "--json", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["ok"]
    assert all(c["verdict"] == "pass" for c in report["checks"])

    scan_path = tmp_path / "scan.json"
    assert main(["scan", "smooth", "--family", str(fam_path),
                 "--json", str(scan_path)]) == 0
    scan = json.loads(scan_path.read_text())
    assert scan["op"] == "smoothness"

    capsys.readouterr()


def test_cli_scan_census(tmp_path, capsys):
    out = tmp_path / "census.json"
    assert main(["scan", "census", "--a", "2", "--b", "2", "--q", "2",
                 "--json", str(out)]) == 0
    capsys.readouterr()
    report = json.loads(out.read_text())
    assert report["count"] == 148
    assert report["verdict"] == "pass"


def test_cli_coup_split_exit_codes(capsys):
    assert main(["coup", "split", "--d", "7", "--s", "3"]) == 0
    assert main(["coup", "split", "--d", "5", "--s", "3"]) == 1
    out = capsys.readouterr().out
    assert '"p": 1' in out and '"q": 1' in out


def test_cli_coup_decompose(capsys):
    assert main(["coup", "decompose", "--shape", "2,1,0", "--q", "3",
                 "--field", "3", "--factors",
                 "1 * z0^1 + 1 * z1^1; 1 * z1^1 + 2 * z2^1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"]
    assert report["lhs_count"] == report["rhs_count"] == 10


def test_cli_run_and_replay(tmp_path, capsys):
    config = tmp_path / "run.ini"
    config.write_text(
        "[run]\nschema = 1\nseed = 3\nstages = schedule twist-ledger\n\n"
        "[shape]\nN = 3\nc = 2\nr = 0\n")
    out = tmp_path / "run.json"
    assert main(["run", "--config", str(config), "--json", str(out)]) == 0
    capsys.readouterr()
    report = json.loads(out.read_text())
    assert report["ok"]
    assert set(report["stages"]) == {"schedule", "twist-ledger"}

    witness = tmp_path / "wit.json"
    witness.write_text(json.dumps(
        {"schema": SCHEMA_VERSION, "stage": "census", "a": 2, "b": 2, "q": 2,
         "mode": "exhaustive", "seed": 0, "budget": 2 ** 28, "count": 148}))
    assert main(["replay", "--witness", str(witness)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["count"] == 148


def test_cli_replay_stale_witness_is_graceful(tmp_path, capsys):
    witness = tmp_path / "stale.json"
    witness.write_text(json.dumps({"schema": 99, "stage": "census"}))
    assert main(["replay", "--witness", str(witness)]) == 2
    err = capsys.readouterr().err
    assert "stale witness" in err


def test_cli_run_rejects_bad_config(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[run]\nschema = 99\n")
    assert main(["run", "--config", str(config)]) == 2
    assert "schema" in capsys.readouterr().err


def test_cli_run_seed_override(tmp_path, capsys):
    config = tmp_path / "run.ini"
    config.write_text("[run]\nschema = 1\nseed = 3\nstages = build\n\n"
                      "[shape]\nN = 3\nc = 2\nr = 0\n")
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(["run", "--config", str(config), "--json", str(out1)]) == 0
    assert main(["run", "--config", str(config), "--seed", "4",
                 "--json", str(out2)]) == 0
    capsys.readouterr()
    rep1 = json.loads(out1.read_text())
    rep2 = json.loads(out2.read_text())
    seed1 = rep1["stages"]["build"]["report"]["family_seed"]
    seed2 = rep2["stages"]["build"]["report"]["family_seed"]
    assert seed1 != seed2
    assert rep2["config"]["seed"] == 4
