import json

import pytest

from jcurrents.cli import git_blob_hash, list_experiments, main, run_experiment


def read_csv(path):
    return path.read_text()


def test_list_all_and_filtered(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "model_constant" in out and "lelong" in out
    assert main(["list", "--kind", "lelong"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all("lelong" in ln for ln in lines)
    assert "model_constant" not in "\n".join(lines)


def test_empty_filter_exits_zero(capsys):
    assert main(["list", "--kind", "nothing"]) == 0
    assert capsys.readouterr().out == ""
    assert list_experiments("nothing") == []


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as info:
        main(["pl-experiment"])
    assert info.value.code == 1


def test_malformed_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["pl-experiment", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err
    missing = tmp_path / "kindless.json"
    missing.write_text(json.dumps({"p": [1]}))
    assert main(["pl-experiment", "--config", str(missing)]) == 1


def test_kind_mismatch_exits_one(tmp_path):
    assert main(["lelong", "--config", "model_constant", "--out", str(tmp_path)]) == 1


def test_low_depth_exits_two_with_partial_csv(tmp_path):
    cfg = {"kind": "pl-experiment", "task": "model-constant", "p": [1],
           "quadrature": {"max_depth": 1, "order": 3, "abs_tol": 1e-14, "rel_tol": 1e-14}}
    path = tmp_path / "shallow.json"
    path.write_text(json.dumps(cfg))
    assert main(["pl-experiment", "--config", str(path), "--out", str(tmp_path)]) == 2
    text = (tmp_path / "shallow.csv").read_text()
    assert "NonConvergence" in text
    row = text.strip().splitlines()[-1].split(",")
    assert row[1] != "nan"


def test_model_constant_run_and_provenance(tmp_path):
    status, csv_path, outcome = run_experiment("pl-experiment", "model_constant", str(tmp_path))
    assert status == 0
    text = csv_path.read_text()
    assert "# kind: pl-experiment" in text and "# config_hash: " in text
    assert all(r["rel_err"] < 1e-6 for r in outcome.rows)
    report = json.loads((tmp_path / "model_constant.json").read_text())
    assert report["provenance"]["threads"] == 1
    assert oct(csv_path.stat().st_mode & 0o777) == "0o644"


def test_config_hash_matches_git_blob_convention():
    assert git_blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


@pytest.mark.parametrize("config,kind", [("model_constant", "pl-experiment"),
                                         ("split_check", "split-check")])
def test_csv_byte_identical_across_threads(tmp_path, config, kind):
    texts = []
    for t in (1, 4, 8):
        out = tmp_path / f"t{t}"
        assert main([kind, "--config", config, "--out", str(out), "--threads", str(t)]) == 0
        texts.append((out / f"{config}.csv").read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_seed_override_changes_provenance(tmp_path):
    run_experiment("pl-experiment", "model_constant", str(tmp_path), seed=42)
    assert "# seed: 42" in (tmp_path / "model_constant.csv").read_text()


def test_negative_threads_rejected(tmp_path):
    assert main(["pl-experiment", "--config", "model_constant", "--threads", "0",
                 "--out", str(tmp_path)]) == 1
