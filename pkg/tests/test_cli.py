import json
import subprocess
import sys

import pytest

from hyperinject.cli import EXIT_BOUND, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from hyperinject.io import load

FAST = ["--inverter-epochs", "30", "--epochs", "30", "--hidden", "16"]


@pytest.fixture
def data(tmp_path):
    assert main(["gen-synth", "--out", str(tmp_path / "syn")]) == EXIT_OK
    return tmp_path / "syn"


def test_gen_synth_defaults(data):
    G = load(data)
    assert (G.num_nodes, G.num_classes, G.num_hyperedges, G.num_features) == (400, 4, 200, 32)


def test_gen_synth_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["gen-synth", "--seed", "7", "--out", str(tmp_path / d / "g")]) == EXIT_OK
    for suffix in (".hgr", ".features.csv", ".labels.txt", ".split.txt"):
        assert (tmp_path / "a" / f"g{suffix}").read_bytes() == (tmp_path / "b" / f"g{suffix}").read_bytes()


def test_gen_synth_invalid_spec(tmp_path, capsys):
    assert main(["gen-synth", "--p-in", "1.5", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert "p_in" in capsys.readouterr().err


def test_attack_writes_graph_and_report(data, tmp_path):
    out = tmp_path / "att"
    assert main(["attack", "--data", str(data), "--out", str(out), "--eta", "0.05", "--tau", "2",
                 "--lambda", "0.1", "--t", "0.9", "--inverter-epochs", "20"]) == EXIT_OK
    A = load(out)
    assert A.injected_count == 20
    rep = json.loads((tmp_path / "att.attack.json").read_text())
    assert rep["injected"] == 20 and rep["config"]["lam"] == 0.1
    assert len(rep["attack"]["loss_trace"]) == 21
    assert (tmp_path / "att.attack.timings.json").exists()


def test_attack_rejects_zero_eta(data, tmp_path, capsys):
    assert main(["attack", "--data", str(data), "--out", str(tmp_path / "a"), "--eta", "0"]) == EXIT_USAGE
    assert "eta" in capsys.readouterr().err


def test_attack_random_baseline(data, tmp_path):
    assert main(["attack", "--data", str(data), "--out", str(tmp_path / "r"), "--baseline", "random"]) == EXIT_OK
    rep = json.loads((tmp_path / "r.attack.json").read_text())
    assert rep["attack"]["method"] == "random" and rep["injected"] == 20


def test_attack_report_is_byte_identical(data, tmp_path):
    for d in ("a", "b"):
        main(["attack", "--data", str(data), "--out", str(tmp_path / d / "att"), "--seed", "3",
              "--inverter-epochs", "10"])
    for suffix in (".attack.json", ".hgr", ".features.csv", ".origin.txt"):
        assert (tmp_path / "a" / f"att{suffix}").read_bytes() == (tmp_path / "b" / f"att{suffix}").read_bytes()


def test_pipeline_three_seeds(data, tmp_path):
    out = tmp_path / "p.report.json"
    assert main(["pipeline", "--data", str(data), "--seeds", "1,2,3", "--out", str(out), *FAST]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["seeds"] == [1, 2, 3] and len(rep["runs"]) == 3
    acc = rep["summary"]["spectral"]["th_attack"]["accuracy"]
    assert set(acc) == {"mean", "std"}
    assert (tmp_path / "p.report.timings.json").exists()


def test_pipeline_missing_split(data, tmp_path, capsys):
    (tmp_path / "syn.split.txt").unlink()
    assert main(["pipeline", "--data", str(data), "--out", str(tmp_path / "p.json"), *FAST]) == EXIT_DATA
    assert "split" in capsys.readouterr().err


def test_missing_dataset_is_data_error(tmp_path):
    assert main(["attack", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_check_bounds_random(capsys):
    assert main(["check-bounds", "--random", "30", "20", "--trials", "100"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_check_bounds_zero_trials():
    assert main(["check-bounds", "--trials", "0"]) == EXIT_USAGE


def test_check_bounds_replay(tmp_path, capsys):
    from hyperinject.bounds import PerturbationScenario
    from hyperinject.hypergraph import build_incidence
    import numpy as np

    s = PerturbationScenario(build_incidence([[0, 1], [1, 2]], 3), np.array([[1.0, 0.0], [0.0, 2.0]]), np.ones(2))
    blob = tmp_path / "s.json"
    blob.write_text(json.dumps({"scenario": s.to_dict(), "tau": 2, "targets": [1]}))
    verdicts = []
    for _ in range(2):
        assert main(["check-bounds", "--replay", str(blob)]) == EXIT_OK
        verdicts.append(capsys.readouterr().out)
    assert verdicts[0] == verdicts[1] and json.loads(verdicts[0])["passed"]


def test_check_bounds_on_dataset(data):
    assert main(["check-bounds", "--data", str(data), "--trials", "5"]) == EXIT_OK


def test_train_and_evaluate(data, tmp_path, capsys):
    params = tmp_path / "params.json"
    assert main(["train", "--data", str(data), "--out", str(params), "--epochs", "50"]) == EXIT_OK
    capsys.readouterr()
    assert main(["evaluate", "--data", str(data), "--params", str(params)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["accuracy"] > 0.5


def test_config_file_precedence(data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# attack settings\neta = 0.02\ninverter-epochs = 5\n")
    main(["attack", "--config", str(cfg), "--data", str(data), "--out", str(tmp_path / "c1")])
    assert json.loads((tmp_path / "c1.attack.json").read_text())["injected"] == 8
    main(["attack", "--config", str(cfg), "--data", str(data), "--out", str(tmp_path / "c2"), "--eta", "0.01"])
    assert json.loads((tmp_path / "c2.attack.json").read_text())["injected"] == 4
    cfg.write_text("bogus = 1\n")
    assert main(["attack", "--config", str(cfg), "--data", str(data), "--out", str(tmp_path / "c3")]) == EXIT_USAGE


def test_outdir_env(data, tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERINJECT_OUTDIR", str(tmp_path / "outs"))
    assert main(["attack", "--data", str(data), "--out", "rel", "--inverter-epochs", "2"]) == EXIT_OK
    assert (tmp_path / "outs" / "rel.hgr").exists()


def test_bound_violation_exit_code(monkeypatch, tmp_path):
    import hyperinject.cli as cli

    monkeypatch.chdir(tmp_path)
    real = cli._verdict
    monkeypatch.setattr(cli, "_verdict", lambda *a, **k: {**real(*a, **k), "passed": False})
    assert main(["check-bounds", "--trials", "2"]) == EXIT_BOUND
    assert (tmp_path / "bound-violation-0.json").exists()


def test_console_script_module_entry():
    proc = subprocess.run([sys.executable, "-m", "hyperinject.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hyperinject" in proc.stdout
