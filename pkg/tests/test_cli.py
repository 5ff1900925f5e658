import json
import subprocess
import sys

import pytest

from fragreuse.cli import main
from fragreuse.conllu import read_conllu

from conftest import make_treebank


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    assert main(["synth", "--out", str(d / "train.conllu"), "--sentences", "400", "--seed", "1"]) == 0
    assert main(["synth", "--out", str(d / "dev.conllu"), "--sentences", "60", "--seed", "2", "--prefix", "dev"]) == 0
    return d


def _analysis(tb):
    return [[(t.form, t.head, t.deprel) for t in s.tokens] for s in tb]


def test_mine_reduce_reattach_round_trip(toy_files, tmp_path, capsys):
    store = tmp_path / "t.json"
    assert main(["mine", "--train", str(toy_files / "train.conllu"), "--setup", "2,3:83-83", "--out", str(store)]) == 0
    assert "M2,3_83-83" in capsys.readouterr().out
    reduced = tmp_path / "dev.reduced.conllu"
    code = main(["reduce", "--store", str(store), "--in", str(toy_files / "dev.conllu"),
                 "--out", str(reduced), "--gold", "--strict-gold"])
    assert code == 0
    sidecar = tmp_path / "dev.reduced.records.json"
    assert sidecar.exists()
    out = tmp_path / "restored.conllu"
    assert main(["reattach", "--in", str(reduced), "--sidecar", str(sidecar), "--out", str(out)]) == 0
    assert _analysis(read_conllu(out)) == _analysis(read_conllu(toy_files / "dev.conllu"))


def test_train_parse_eval(toy_files, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert main(["train", "--train", str(toy_files / "train.conllu"), "--model", str(model), "--epochs", "3"]) == 0
    parsed = tmp_path / "p.conllu"
    assert main(["parse", "--in", str(toy_files / "dev.conllu"), "--out", str(parsed), "--model", str(model)]) == 0
    report = tmp_path / "r.json"
    assert main(["eval", "--system", str(parsed), "--gold", str(toy_files / "dev.conllu"), "--json", str(report)]) == 0
    assert "UAS (%)" in capsys.readouterr().out
    assert json.loads(report.read_text())[0]["uas"] > 80


def test_unknown_flag_is_usage_error(capsys):
    assert main(["mine", "--nope"]) == 2
    assert main([]) == 2


def test_missing_file_is_pipeline_error(tmp_path, capsys):
    assert main(["mine", "--train", str(tmp_path / "missing.conllu")]) == 1
    assert "fragreuse mine" in capsys.readouterr().err


def test_bad_store_names_module(tmp_path, toy_files, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": "x"}')
    code = main(["reduce", "--store", str(bad), "--in", str(toy_files / "dev.conllu"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "[mining]" in capsys.readouterr().err


def test_show_config_and_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"min_count": 4, "mine": {"train": "x.conllu", "head-threshold": 90}}))
    assert main(["mine", "--config", str(cfg), "--show-config"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert (shown["train"], shown["head_threshold"], shown["min_count"]) == ("x.conllu", 90, 4)
    assert main(["mine", "--config", str(cfg), "--head-threshold", "70", "--show-config"]) == 0
    assert json.loads(capsys.readouterr().out)["head_threshold"] == 70


def test_config_from_environment(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mine": {"train": "env.conllu"}}))
    monkeypatch.setenv("FRAGREUSE_CONFIG", str(cfg))
    assert main(["mine", "--show-config"]) == 0
    assert json.loads(capsys.readouterr().out)["train"] == "env.conllu"


def test_patterns_command(capsys):
    assert main(["patterns", "-n", "3"]) == 0
    assert capsys.readouterr().out.startswith("19 head patterns")


def test_pipeline_with_empty_store_matches_baseline(tmp_path, capsys):
    # thresholds nothing can reach on this data give an empty store and identical parses
    spec = [("a", "X", 2, "l"), ("b", "Y", 0, "root")]
    flip = [("a", "X", 0, "root"), ("b", "Y", 1, "r")]
    tb = make_treebank(*([spec, flip] * 20))
    from fragreuse.conllu import write_conllu

    write_conllu(tb, tmp_path / "t.conllu")
    out = tmp_path / "run"
    code = main(["pipeline", "--train", str(tmp_path / "t.conllu"), "--dev", str(tmp_path / "t.conllu"),
                 "--setup", "2:99-99", "--repetitions", "2", "--epochs", "2", "--out-dir", str(out)])
    assert code == 0
    reports = json.loads((out / "report.json").read_text())
    assert reports[1]["word_reduction_pct"] == 0.0
    assert reports[0]["uas"] == reports[1]["uas"]
    assert (out / "M2_99-99" / "dev.parsed.conllu").read_text() == (out / "baseline" / "dev.parsed.conllu").read_text()


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fragreuse.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "fragreuse" in proc.stdout
