import csv
import io
import json

import pytest

from spectopo.cli import main, read_config
from spectopo.complex import to_obj
from spectopo.experiments import run_experiment
from spectopo.families import figure_eight


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_betti_from_obj_file(tmp_path, capsys):
    p = tmp_path / "eight.obj"
    p.write_text(to_obj(figure_eight(3)))
    code, out, _ = run(capsys, "betti", str(p))
    assert code == 0 and out.strip() == "(1,2,0)"


def test_betti_from_descriptor(capsys):
    assert run(capsys, "betti", "figure_eight(3,3)")[1].strip() == "(1,2,0)"


def test_compress_warns_on_collapse(capsys):
    code, out, err = run(capsys, "compress", "crater(8,6)", "--k", "1")
    assert code == 2
    assert json.loads(out)["betti_hat"] == [1, 0]
    assert "warning" in err and "beta1_hat=0" in err
    code, out, err = run(capsys, "compress", "crater(8,6)", "--k", "2")
    assert code == 0 and err == ""


def test_info(capsys):
    code, out, _ = run(capsys, "info")
    assert code == 0
    for needle in ("sigma2       = 1.0", "mu2          = 2.0", "h0           = 1.0", "tau_null     = 1e-08", "C1"):
        assert needle in out


def test_sweep(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--families", "A,B", "--lengths", "3,6")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["family"] for r in rows] == ["A", "A", "B", "B"]
    assert rows[0]["rho_after_aug"] == "0.577"
    dest = tmp_path / "s.csv"
    run(capsys, "sweep", "--csv", str(dest))
    assert dest.read_text().count("\n") == 7


def test_diagnose(capsys, tmp_path):
    code, out, _ = run(capsys, "diagnose", "channeled(512,3)", "drainage")
    rep = json.loads(out)
    assert code == 0 and rep["channel_signature"] is True
    flow = tmp_path / "f.txt"
    flow.write_text("1 1 -1\n")
    code, out, _ = run(capsys, "diagnose", "cycle(3)", str(flow), "--entropy-threshold", "10", "--curl-threshold", "1")
    rep = json.loads(out)
    assert rep["fractions"][2] == pytest.approx(1.0)
    assert rep["flags"]["curl_high"] is False


def test_protocol(capsys, tmp_path):
    cfg = tmp_path / "p.cfg"
    trace = tmp_path / "t.jsonl"
    cfg.write_text(f"# demo\ncomplex = grid(10,10)\nstream = static\nframes = 3\nk_nominal = 4\ntrace = {trace}\n")
    code, out, err = run(capsys, "protocol", "--config", str(cfg))
    assert code == 0 and out == ""
    lines = trace.read_text().splitlines()
    assert len(lines) == 3 and json.loads(lines[1])["delta_norm"] == 0
    assert json.loads(err)["states_match"] is True
    code, out, err = run(capsys, "protocol", "--set", "bandwidth=20", "--set", "frames=2", "--set", "complex=crater(8,6)")
    assert json.loads(err)["representation_limited"] == 2
    for s in ("drift", "concentration"):
        assert run(capsys, "protocol", "--set", f"stream={s}", "--set", "frames=3")[0] == 0


def test_run_experiment_writes_reports(capsys, tmp_path):
    code, _, err = run(capsys, "run", "5", "--out", str(tmp_path))
    assert code == 0 and "pass" in err
    rep = json.loads((tmp_path / "experiment5.json").read_text())
    assert rep["passed"] and rep["schema"].startswith("spectopo.report/")
    assert (tmp_path / "a2_sweep.csv").read_text().splitlines()[1] == "A,3,2.0000,0.056,0.000,0.577,1"


def test_run_failure_exit_code(capsys):
    code, out, err = run(capsys, "run", "4", "--set", "mu2=3")
    assert code == 2 and "FAIL" in err
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["betti", "missing_file.obj"],
        ["betti", "bogus(3)"],
        ["compress", "crater(8,6)", "--k", "0"],
        ["protocol", "--config", "/nonexistent.cfg"],
        ["protocol", "--set", "stream=nope"],
        ["protocol", "--set", "wat=1"],
        ["run", "4", "--set", "nope=1"],
        ["run", "9"],
        ["diagnose", "cycle(3)", "/no/such/flow"],
        [],
    ],
)
def test_errors_exit_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_read_config_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("novalue\n")
    with pytest.raises(Exception, match="key=value"):
        read_config(str(p))


def test_reports_deterministic():
    a = run_experiment(1).to_dict()
    b = run_experiment(1).to_dict()
    a.pop("wall_clock_s"), b.pop("wall_clock_s")
    assert a == b
    assert all(r["source"] in {"published", "derived", "identity", "info"} for r in a["results"])
    assert all(r["band"] is not None for r in a["results"] if r["source"] != "info")


@pytest.mark.parametrize("exp_id", [1, 2, 3, 4, 5])
def test_experiments_pass(exp_id):
    rep = run_experiment(exp_id)
    assert rep.passed, [r.to_dict() for r in rep.results if r.passed is False]
