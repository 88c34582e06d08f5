import json

import pytest

from dynblpp import kernels
from dynblpp.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lpp_passage_deterministic(capsys, tmp_path):
    code, a, _ = run(capsys, "lpp", "passage", "--n", "8", "--grid", "8", "--seed", "3")
    assert code == 0 and a.startswith("T = ") and "jumps = " in a
    _, b, _ = run(capsys, "lpp", "passage", "--n", "8", "--grid", "8", "--seed", "3")
    assert a == b
    code, _, _ = run(capsys, "lpp", "passage", "--n", "8", "--grid", "8", "--seed", "3",
                     "--out", str(tmp_path))
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert code == 0 and man["kind"] == "lpp passage" and man["config"]["seed"] == 3
    assert "version" in man and man["schema"] == "v1"


def test_lpp_geodesic_and_profile(capsys):
    code, out, _ = run(capsys, "lpp", "geodesic", "--n", "4", "--grid", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "line,z" and len(lines) == 1 + 6
    code, out, _ = run(capsys, "lpp", "profile", "--n", "4", "--grid", "2", "--line", "1")
    assert code == 0 and out.splitlines()[0] == "x,Z" and len(out.splitlines()) == 1 + 9


def test_env_sample_and_dump(capsys, tmp_path):
    code, out, _ = run(capsys, "env", "sample", "--n", "3", "--grid", "2", "--out", str(tmp_path))
    assert code == 0 and (tmp_path / "field.txt").exists() and (tmp_path / "manifest.json").exists()
    code, out, _ = run(capsys, "env", "dump", str(tmp_path / "field.txt"))
    rows = out.splitlines()
    assert code == 0 and rows[0] == "line,x,value" and len(rows) == 1 + 4 * (5 * 2 + 1)
    # a stored field reproduces the sampled passage time
    _, a, _ = run(capsys, "lpp", "passage", "--n", "3", "--grid", "2")
    _, b, _ = run(capsys, "lpp", "passage", "--n", "3", "--field", str(tmp_path / "field.txt"))
    assert a == b
    code, _, err = run(capsys, "lpp", "passage", "--n", "3", "--grid", "4",
                       "--field", str(tmp_path / "field.txt"))
    assert code == 1 and "conflicts" in err


def test_oracle_check(capsys):
    code, out, _ = run(capsys, "oracle", "check", "--seed", "1")
    assert code == 0 and "instances verified: 200" in out and "mismatches: 0" in out


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "lpp", "passage", "--unknown")[0] == 1
    assert run(capsys, "exp", "switch-scaling", "--n", "a,b")[0] == 1
    assert run(capsys, "exp", "switch-scaling", "--beta", "0.7", "--trials", "1", "--n", "4")[0] == 1
    assert run(capsys, "lpp", "passage", "--n", "-2")[0] == 1
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0


def test_dyn_run(capsys, tmp_path):
    code, out, _ = run(capsys, "dyn", "run", "--n", "10", "--grid", "4", "--dt", "0.3",
                       "--seed", "2", "--out", str(tmp_path))
    assert code == 0 and "switch" in out
    summary = json.loads((tmp_path / "dyn.json").read_text())
    assert summary["hitset"] <= summary["hitset_initial"] + summary["switch"]
    log = (tmp_path / "events.csv").read_text().splitlines()
    assert len(log) == 1 + summary["events"]


def test_dyn_run_invariant_failure_exit_2(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(kernels, "update_rows", lambda *a, **k: a[4])
    code, _, err = run(capsys, "dyn", "run", "--n", "10", "--grid", "4", "--dt", "2.0",
                       "--seed", "2", "--out", str(tmp_path))
    assert code == 2 and "invariant violated" in err
    assert json.loads((tmp_path / "violation.json").read_text())["invariant"] == "incremental-dp"


def test_exp_and_manifest_rerun(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    code, _, _ = run(capsys, "exp", "switch-scaling", "--n", "6,8,10", "--trials", "3", "--dt", "0.05",
                     "--grid", "4", "--seed", "7", "--out", str(a))
    assert code == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["manifest.json", "switch_scaling.csv", "switch_scaling.json",
                     "switch_scaling_buckets.csv"]
    code, _, _ = run(capsys, "exp", "switch-scaling", "--from-manifest", str(a / "manifest.json"),
                     "--out", str(b), "--jobs", "2")
    assert code == 0
    for name in names:
        if name != "manifest.json":
            assert (a / name).read_bytes() == (b / name).read_bytes()
    code, _, err = run(capsys, "exp", "switch-scaling", "--from-manifest", str(a / "manifest.json"),
                       "--trials", "5")
    assert code == 1 and "conflicts" in err
    code, _, _ = run(capsys, "exp", "basin", "--from-manifest", str(a / "manifest.json"))
    assert code == 1
    code, out, _ = run(capsys, "report", str(tmp_path))
    assert code == 0 and out.count("switch_scaling.json") == 2


def test_exp_json_format(capsys, tmp_path):
    code, _, _ = run(capsys, "exp", "peak-count", "--n", "4,6,8", "--trials", "2", "--grid", "2",
                     "--format", "json", "--out", str(tmp_path))
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "peak_count.json"]
