import json
import subprocess
import sys

import pytest

from mobius_dyn.cli import main, read_coefficients
from mobius_dyn.errors import DomainError
from mobius_dyn.expsum import sum_bilinear
from mobius_dyn.moebius import OrbitSpec

SPEC = ["--p", "11", "--matrix", "1,1,1,0", "--u0", "0"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_orbit(capsys):
    code, out, _ = run(capsys, "orbit", *SPEC, "--count", "12")
    assert code == 0
    assert out.split() == ["0", "inf", "1", "2", "7", "9", "6", "3", "5", "10", "0", "inf"]
    _, out, _ = run(capsys, "orbit", *SPEC, "--count", "3", "--stride", "3", "--start", "1")
    assert out.split() == ["inf", "7", "3"]


def test_period(capsys):
    code, out, _ = run(capsys, "period", *SPEC)
    assert code == 0 and json.loads(out) == {
        "p": 11, "kind": "split", "direct": 10, "spectral": 10, "agree": True}
    code, out, _ = run(capsys, "period", "--p", "7", "--matrix", "1,1,0,1", "--method", "direct")
    assert json.loads(out)["direct"] == 7
    code, _, err = run(capsys, "period", "--p", "7", "--matrix", "1,1,0,1", "--method", "spectral")
    assert code == 2 and "distinct eigenvalues" in err


def test_sum_variants(capsys):
    code, out, _ = run(capsys, "sum", "single", "--p", "7", "--matrix", "1,1,0,1", "--h-all", "--N", "7")
    rep = json.loads(out)
    assert code == 0 and len(rep["rows"]) == 6 and rep["max_abs"] < 1e-12
    code, out, _ = run(capsys, "sum", "prime", *SPEC, "--h", "3", "--N", "100")
    assert json.loads(out)["rows"][0]["h"] == 3
    code, out, _ = run(capsys, "sum", "multiple", *SPEC, "--h-sample", "4,9", "--ranges", "5,6",
                       "--coprime")
    assert len(json.loads(out)["rows"]) == 4
    code, out, _ = run(capsys, "sum", "multi", *SPEC, "--coeffs", "1,2", "--exps", "1,3", "--h", "1",
                       "--N", "30")
    assert code == 0


def test_sum_errors(capsys):
    code, _, err = run(capsys, "sum", "single", *SPEC, "--N", "5")
    assert code == 2 and "--h" in err
    code, _, _ = run(capsys, "sum", "single", *SPEC, "--h", "0", "--N", "5")
    assert code == 2
    code, _, _ = run(capsys, "sum", "single", "--p", "15", "--matrix", "1,1,1,0", "--h", "1")
    assert code == 2
    code, _, _ = run(capsys, "sum", "single", "--p", "11", "--matrix", "1,2", "--h", "1")
    assert code == 2
    code, _, err = run(capsys, "sum", "multiple", *SPEC, "--h", "1", "--ranges", "10000,10000,10000,10000")
    assert code == 3 and "budget" in err


def test_bilinear_files(capsys, tmp_path):
    a = tmp_path / "alpha.txt"
    b = tmp_path / "beta.txt"
    a.write_text("# alpha\n1 1.0,0.5\n2 -2,0\n")
    b.write_text("2 0,1\n1 1,0\n3 0.25,-0.25\n")
    assert read_coefficients(a) == [1 + 0.5j, -2]
    code, out, _ = run(capsys, "sum", "bilinear", *SPEC, "--h", "4", "--alpha", str(a), "--beta", str(b))
    spec = OrbitSpec.build(11, (1, 1, 1, 0), 0)
    ref = sum_bilinear(spec, 4, [1 + 0.5j, -2], [1, 1j, 0.25 - 0.25j]).value
    row = json.loads(out)["rows"][0]
    assert code == 0 and complex(row["re"], row["im"]) == pytest.approx(ref)
    b.write_text("1 1,0\n3 1,0\n")
    with pytest.raises(DomainError):
        read_coefficients(b)
    b.write_text("1 1;0\n")
    code, _, _ = run(capsys, "sum", "bilinear", *SPEC, "--h", "4", "--alpha", str(a), "--beta", str(b))
    assert code == 2


def test_hb_commands(capsys):
    code, out, _ = run(capsys, "hb", "verify", "--J", "2", "--X", "50")
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = run(capsys, "hb", "cover", "--N", "4", "--J", "1")
    assert {tuple(b["M"]) for b in json.loads(out)} == {(1,), (2,), (4,)}
    code, out, _ = run(capsys, "hb", "reconstruct", "--p", "101", "--matrix", "2,3,5,7", "--u0", "4",
                       "--h", "1", "--N", "32", "--J", "2")
    assert code == 0 and json.loads(out)["ok"]
    code, _, _ = run(capsys, "hb", "verify", "--J", "3", "--X", "50", "--budget", "10")
    assert code == 3


def test_rt_commands(capsys):
    code, out, _ = run(capsys, "rt", "count", "--t", "5", "--ranges", "2,2", "--n", "1", "--coprime")
    d = json.loads(out)
    assert d["count"] == 1 and d["main_term"] == "1" and d["via_characters"][0] == pytest.approx(1)
    code, out, _ = run(capsys, "rt", "chars", "--t", "60", "--verify")
    assert json.loads(out)["ok"] and json.loads(out)["phi"] == 16
    code, out, _ = run(capsys, "rt", "burgess", "--t", "7", "--N", "3", "--all-chars")
    assert len(json.loads(out)) == 6
    code, out, _ = run(capsys, "rt", "burgess", "--t", "7", "--N", "7", "--char-index", "0")
    assert json.loads(out)[0]["ratio"] == pytest.approx(6 / 7)


def test_scope_exit_codes(capsys):
    code, out, _ = run(capsys, "scope", "--p", "101", "--matrix", "1,0,0,1", "--u0", "3", "--require-scope")
    assert code == 4 and json.loads(out)["in_scope"] is False
    code, _, _ = run(capsys, "scope", "--p", "101", "--matrix", "1,0,0,1", "--u0", "3")
    assert code == 0


def _write_cfg(tmp_path, **over):
    cfg = {"p": 101, "matrices": [[1, 1, 1, 0]], "family": "prime", "N_schedule": [10, 100]}
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_experiment(capsys, tmp_path):
    path = _write_cfg(tmp_path)
    code, out, _ = run(capsys, "experiment", "run", "--config", str(path), "--out", str(tmp_path / "a"))
    assert code == 0 and json.loads(out)["rows"] == 200
    run(capsys, "experiment", "run", "--config", str(path), "--out", str(tmp_path / "b"), "--threads", "4")
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()


def test_experiment_errors(capsys, tmp_path):
    code, _, err = run(capsys, "experiment", "run", "--config", str(_write_cfg(tmp_path, N_schedule=[5, 5])),
                       "--out", str(tmp_path))
    assert code == 2 and "N_schedule" in err
    code, _, _ = run(capsys, "experiment", "run", "--config", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path))
    assert code == 2
    path = _write_cfg(tmp_path, family="multiple", params={"ranges": [10**4] * 4}, N_schedule=[1],
                      budgets={"multiple": 10})
    code, _, _ = run(capsys, "experiment", "run", "--config", str(path), "--out", str(tmp_path / "c"))
    assert code == 3
    path = _write_cfg(tmp_path, matrices=[[1, 0, 0, 1]], u0=2)
    code, _, _ = run(capsys, "experiment", "run", "--config", str(path), "--out", str(tmp_path / "d"),
                     "--require-scope")
    assert code == 4


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mobius_dyn", "period", *SPEC],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["direct"] == 10
