from __future__ import annotations

import json
import subprocess
import sys

import pytest

from fraccount.cli import EXIT_CONFIG, EXIT_MISSING_INPUT, EXIT_OK, main


@pytest.fixture
def fixture_args(data_dir):
    return ["--corpus", str(data_dir / "fixture_corpus.jsonl"), "--master", str(data_dir / "fixture_master.tsv"),
            "--citing-year", "2008"]


def test_indicators_matches_golden(tmp_path, fixture_args, data_dir):
    assert main(["indicators", *fixture_args, "--output-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "indicators.csv").read_text() == (data_dir / "golden_indicators.csv").read_text()
    manifest = (tmp_path / "manifest.tsv").read_text().splitlines()
    assert manifest[0] == "output\tsha256\tinputs\tparameters"
    assert sorted(line.split("\t")[0] for line in manifest[1:]) == ["exclusions.tsv", "indicators.csv"]


def test_tally_and_stats_match_goldens(tmp_path, data_dir, fixture_args):
    assert main(["tally", *fixture_args, "--output-dir", str(tmp_path)]) == EXIT_OK
    assert main(["stats", *fixture_args, "--output-dir", str(tmp_path)]) == EXIT_OK
    for out, golden in [("tally_window.tsv", "golden_tally_window.tsv"), ("tally_all.tsv", "golden_tally_all.tsv"),
                        ("processing_stats.tsv", "golden_stats.tsv")]:
        assert (tmp_path / out).read_text() == (data_dir / golden).read_text()


def test_missing_master_exit_code(tmp_path, data_dir, capsys):
    missing = tmp_path / "nope.tsv"
    code = main(["indicators", "--corpus", str(data_dir / "fixture_corpus.jsonl"), "--master", str(missing),
                 "--citing-year", "2008", "--output-dir", str(tmp_path / "out")])
    assert code == EXIT_MISSING_INPUT
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "missing_input" and str(missing) in err["message"]
    assert not (tmp_path / "out").exists()


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 2.0}))
    assert main(["stats", "--config", str(cfg)]) == EXIT_CONFIG
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["stats", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["bogus"]) == 2


def _simulate_and_run(root, data_dir):
    root.mkdir()
    cfg = root / "run.json"
    cfg.write_text(json.dumps({"sim_spec": str(data_dir / "sim13_spec.json"), "output_dir": str(root / "sim")}))
    assert main(["simulate", "--config", str(cfg)]) == EXIT_OK
    out = root / "all"
    code = main(["all", "--corpus", str(root / "sim" / "corpus.jsonl"), "--master", str(root / "sim" / "master.tsv"),
                 "--citing-year", "2008", "--output-dir", str(out)])
    assert code == EXIT_OK
    return {p.name: p.read_bytes() for p in out.iterdir()}


def test_simulate_then_all_is_reproducible(tmp_path, data_dir):
    a = _simulate_and_run(tmp_path / "a", data_dir)
    b = _simulate_and_run(tmp_path / "b", data_dir)
    expected = {"processing_stats.tsv", "rejections.tsv", "tally_window.tsv", "tally_all.tsv", "indicators.csv",
                "exclusions.tsv", "correlations.csv", "omnibus.csv", "dunnett_c.csv", "tukey_hsd.csv",
                "citation_graph.net", "density_report.csv", "model_report.csv", "variance_reduction.csv",
                "manifest.tsv"}
    assert expected <= set(a)
    assert a == b
    manifest = a["manifest.tsv"].decode().splitlines()
    assert {line.split("\t")[0] for line in manifest[1:]} == set(a) - {"manifest.tsv"}


def test_worker_count_does_not_change_outputs(tmp_path, fixture_args):
    for w in ("1", "3"):
        assert main(["all", *fixture_args, "--workers", w, "--output-dir", str(tmp_path / w)]) == EXIT_OK
    one = {p.name: p.read_bytes() for p in (tmp_path / "1").iterdir()}
    three = {p.name: p.read_bytes() for p in (tmp_path / "3").iterdir()}
    assert one == three


def test_module_entry_point(tmp_path, fixture_args):
    proc = subprocess.run([sys.executable, "-m", "fraccount", "indicators", *fixture_args,
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "indicators.csv").exists()
