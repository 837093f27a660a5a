import json
import subprocess
import sys

import pytest

from sepnmf.cli import EXIT_INPUT, EXIT_LP, EXIT_OK, EXIT_USAGE, main
from sepnmf.io import read_matrix_market


@pytest.fixture(scope="module")
def instance(tmp_path_factory):
    out = tmp_path_factory.mktemp("inst")
    assert main(["generate", "--f", "15", "--n", "30", "--r", "3", "--d", "1",
                 "--seed", "4", "--out", str(out)]) == EXIT_OK
    return out


def metrics(d):
    return json.loads((d / "metrics.json").read_text())


def test_generate_writes_manifest(instance):
    m = json.loads((instance / "manifest.json").read_text())
    assert m["command"] == "generate" and m["seed"] == 4
    assert sorted(m["outputs"]) == ["X.mtx", "Y.mtx", "manifest.json", "meta.json"]


def test_factor_lp_noiseless(instance, tmp_path):
    assert main(["factor", "--algo", "lp", str(instance), "--out", str(tmp_path)]) == EXIT_OK
    m = metrics(tmp_path)
    assert m["hott_recall"] == 1.0 and m["exact_recovery"]
    F = read_matrix_market(tmp_path / "F.mtx").to_dense()
    W = read_matrix_market(tmp_path / "W.mtx").to_dense()
    assert F.shape == (15, 3) and W.shape == (3, 30)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {str(instance / n) for n in ("X.mtx", "Y.mtx", "meta.json")}


def test_agkm_requires_parameters(instance, tmp_path, capsys):
    assert main(["factor", "--algo", "agkm", str(instance), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "--alpha" in capsys.readouterr().err
    assert main(["factor", "--algo", "agkm", "--alpha", "0.1", "--eps", "0",
                 str(instance), "--out", str(tmp_path)]) == EXIT_OK


def test_hottopixx_without_alpha(instance, tmp_path):
    assert main(["factor", "--algo", "hottopixx", "--epochs", "5", str(instance),
                 "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "epochs.jsonl").read_text().splitlines()) == 5


def test_usage_errors(tmp_path):
    assert main(["factor", "--algo", "lp", "--bogus", "x", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["generate", "--f", "10"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_raw_matrix_needs_rank(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,0\n0,1\n0.5,0.5\n")
    assert main(["factor", "--algo", "lp", "--tau", "0", str(p), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert main(["factor", "--algo", "lp", "--tau", "0", "--r", "2", str(p),
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    assert sorted(metrics(tmp_path / "o")["hott"]) == [0, 1]


def test_bad_input_and_lp_failure(tmp_path, instance):
    bad = tmp_path / "neg.csv"
    bad.write_text("1,-1\n")
    assert main(["factor", "--algo", "lp", "--r", "1", "--tau", "0", str(bad),
                 "--out", str(tmp_path / "o")]) == EXIT_INPUT
    big = tmp_path / "big"
    main(["generate", "--f", "80", "--n", "400", "--r", "3", "--eta", "0.25", "--out", str(big)])
    assert main(["factor", "--algo", "lp", str(big), "--out", str(tmp_path / "o2")]) == EXIT_LP


def test_rerun_reproduces(instance, tmp_path):
    a = tmp_path / "a"
    assert main(["factor", "--algo", "hottopixx", "--epochs", "3", "--seed", "2",
                 str(instance), "--out", str(a)]) == EXIT_OK
    b = tmp_path / "b"
    assert main(["rerun", str(a / "manifest.json"), "--out", str(b)]) == EXIT_OK
    ma, mb = metrics(a), metrics(b)
    ma.pop("wall_time"), mb.pop("wall_time")
    assert ma == mb
    assert (a / "F.mtx").read_bytes() == (b / "F.mtx").read_bytes()


def test_bench_profile_speedup(tmp_path, instance):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"f": 12, "n": 20, "r": 3, "d": 0, "eta": [0.25, 4]}))
    assert main(["bench", "--grid", str(grid), "--algos", "hottopixx-fast,agkm", "--reps", "2",
                 "--out", str(tmp_path / "b")]) == EXIT_OK
    rows = (tmp_path / "b" / "records.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2 * 2
    assert main(["profile", "--records", str(tmp_path / "b" / "records.csv"), "--metric", "rmse",
                 "--out", str(tmp_path / "p")]) == EXIT_OK
    assert (tmp_path / "p" / "profile_rmse.svg").exists()
    assert main(["speedup", "--instance", str(instance), "--threads", "1,2",
                 "--out", str(tmp_path / "s")]) == EXIT_OK
    assert (tmp_path / "s" / "speedup.csv").read_text().startswith("threads,wall_time,speedup")


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "sepnmf", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
