import csv
import io
import json
import subprocess
import sys

import pytest

from lpinterp.cli import EXIT_DATA, EXIT_FAIL, EXIT_OK, EXIT_UNDECIDED, EXIT_USAGE, run
from lpinterp.functionals import k_from_e
from lpinterp.seqcore import Seq


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)
    return write


def test_kfun_dyadic_csv(files, capsys):
    x = files("x.json", [3.0, 2.0, 1.0])
    assert run(["kfun", "--seq", x, "--couple", "0,1", "--grid", "dyadic:20"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    header, body = rows[0], rows[1:]
    assert header[0] == "t"
    assert len(body) > 0
    s = Seq([3.0, 2.0, 1.0])
    for row in body:
        t, k = float(row[0]), float(row[1])
        assert abs(k - float(k_from_e(s, t, 1.0).mid)) <= 1e-12 * max(1.0, k)


def test_counterexample_writes_trace_and_csv(tmp_path, capsys):
    out = tmp_path / "trace.json"
    code = run(["counterexample", "--p", "0", "--q", "0.5", "--r", "inf", "--steps", "20", "--out", str(out)])
    assert code == EXIT_OK
    trace = json.loads(out.read_text())
    assert trace["regime"] == "p=0&r=inf"
    assert len(trace["steps"]) == 20
    ratios = (tmp_path / "trace.csv").read_text().strip().split("\n")
    assert ratios[0] == "n,t,K_f,K_g,ratio"
    assert "pass" in capsys.readouterr().out


def test_witness_summary(capsys):
    assert run(["witness", "--p", "0", "--q", "0.5", "--C", "10"]) == EXIT_OK
    cap = capsys.readouterr()
    assert "N = 11" in cap.err
    obj = json.loads(cap.out)
    assert obj["N"] == 11 and obj["bound"] == 11
    assert obj["min_sample_norm"] >= 11 - 1e-9


def test_exit_fail(files, capsys):
    x, y = files("x.json", [1, 1, 1]), files("y.json", [2, 0.1])
    assert run(["majorize", "--x", x, "--y", y, "--couple", "1,2", "--mode", "head"]) == EXIT_FAIL
    assert "witness" in capsys.readouterr().err


def test_exit_refused(files):
    x, y = files("x.json", [1, 0.5]), files("y.json", [1, 1, 1])
    assert run(["majorize", "--x", x, "--y", y, "--couple", "0,2", "--mode", "impl1"]) == EXIT_UNDECIDED


def test_exit_usage(files):
    assert run(["bogus"]) == EXIT_USAGE
    assert run([]) == EXIT_USAGE
    x = files("x.json", [1.0])
    assert run(["kfun", "--seq", x, "--couple", "2,1"]) == EXIT_USAGE
    assert run(["tab", "--seq", x, "--a", "1", "--q", "1"]) == EXIT_USAGE


def test_exit_bad_input(tmp_path, files):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["kfun", "--seq", str(bad), "--couple", "0,1"]) == EXIT_DATA
    assert run(["kfun", "--seq", str(tmp_path / "missing.json"), "--couple", "0,1"]) == EXIT_DATA
    up = files("up.json", [1.0, 2.0])
    assert run(["kfun", "--seq", up, "--couple", "0,1"]) == EXIT_DATA


def test_out_file_and_summary(tmp_path, files, capsys):
    x = files("x.json", [3.0, 2.0, 1.0])
    out = tmp_path / "e.csv"
    assert run(["efun", "--seq", x, "--couple", "0,1", "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.startswith("t,") or text.startswith("m,") or "," in text.split("\n")[0]
    assert capsys.readouterr().out.strip() != ""


def test_norms_and_tab(files, capsys):
    m = files("m.json", [[1.0, 2.0], [0.0, 3.0]])
    assert run(["norms", "--matrix", m, "--exponents", "1,inf"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "inf" in out
    h = files("h.json", [1.0, 1.0])
    assert run(["tab", "--seq", h, "--a", "1", "--b", "2", "--q", "1"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["prefix"] == [1.0, 0.5, 0.5]


def test_split_and_partition(files, tmp_path, capsys):
    x, y = files("x.json", [4, 1, 1, 1]), files("y.json", [2, 2, 1, 1])
    assert run(["split", "--x", x, "--y", y, "--couple", "1,2"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["residual"] <= 1e-10
    cpath = tmp_path / "c.csv"
    assert run(["partition", "--x", x, "--y", y, "--couple", "1,2", "--csv", str(cpath)]) == EXIT_OK
    assert cpath.read_text().startswith("block_start,block_end,kind,margin")


def test_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(["--seed", "7", "counterexample", "--p", "0", "--q", "0.5", "--r", "inf",
                    "--steps", "10", "--out", str(path)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lpinterp", "witness", "--p", "0", "--q", "0.5",
                          "--C", "10", "--samples", "5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["N"] == 11
