import json
import subprocess
import sys

import pytest

from iterzeros.cli import EXIT_ERROR, EXIT_OK, main, parse_grid, parse_n_range, parse_rect
from iterzeros.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture
def zsq_minus1(tmp_path):
    path = tmp_path / "zsq_minus1.json"
    path.write_text("[[-1, 0], [0, 0], [1, 0]]")
    return str(path)


def test_value_parsers():
    assert parse_rect("-2,2,-1,1") == (-2.0, 2.0, -1.0, 1.0)
    assert parse_grid("256x128") == (256, 128)
    assert parse_n_range("6..11") == [6, 7, 8, 9, 10, 11]
    assert parse_n_range("2^4..2^6") == [16, 32, 64]
    assert parse_n_range("5,7") == [5, 7]
    for bad in ("1,1,0,1", "a,b,c,d"):
        with pytest.raises(ConfigError):
            parse_rect(bad)
    with pytest.raises(ConfigError):
        parse_n_range("0..3")


def test_bell_table_output(capsys):
    code, out, _ = run(capsys, "bell-table", "--smax", "3")
    assert code == EXIT_OK
    assert "A_{3,2} = 3*X0*X1" in out


def test_bell_table_json(tmp_path, capsys):
    code, _, _ = run(capsys, "bell-table", "--smax", "2", "--out", str(tmp_path))
    entries = json.loads((tmp_path / "bell.json").read_text())
    assert {"s": 2, "u": 2, "terms": [{"exponents": [2], "coeff": 1}]} in entries


def test_roots_of_file_polynomial(zsq_minus1, capsys):
    code, out, _ = run(capsys, "roots", "--poly", zsq_minus1)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "re,im,residual"
    assert [float(l.split(",")[0]) for l in lines[1:]] == [-1.0, 1.0]


def test_roots_of_iterated_derivative(capsys):
    code, out, _ = run(capsys, "roots", "--coeffs=-2,0,1", "--n", "2", "--m", "1")
    assert code == EXIT_OK
    assert len(out.splitlines()) == 4


def test_verify_a_counterexample(capsys):
    code, out, _ = run(capsys, "verify-a", "--coeffs", "0,0,1", "--m", "1", "--n", "3..5",
                       "--grid", "16x16", "--count", "512")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["verdict"] == "counterexample_expected"
    assert rep["seed"] == 0


def test_jet_eval(capsys):
    code, out, _ = run(capsys, "jet-eval", "--coeffs", "0,0,1", "--z", "1", "--n", "2", "--t", "2")
    res = json.loads(out)
    assert res["value"] == [1.0, 0.0]
    assert res["derivatives"] == [[4.0, 0.0], [12.0, 0.0]]


def test_jet_eval_beyond_double_range(capsys):
    code, out, _ = run(capsys, "jet-eval", "--coeffs", "0,0,1", "--z", "2", "--n", "12", "--t", "1")
    res = json.loads(out.replace("Infinity", "1e999"))
    assert code == EXIT_OK and res["value"][0] == float("inf")


def test_linearize_attracting(capsys):
    code, out, _ = run(capsys, "linearize", "--coeffs", "0.2,0,1", "--t", "2")
    res = json.loads(out)
    assert code == EXIT_OK and res["passed"]
    assert res["cycle"]["kind"] == "attracting"


def test_m1_check(capsys):
    code, out, _ = run(capsys, "m1-check", "--coeffs", "1,0,1", "--n", "4")
    assert code == EXIT_OK and json.loads(out)["passed"]


def test_green_and_potential_l1(capsys):
    code, out, _ = run(capsys, "green", "--coeffs", "0,0,1", "--grid", "4x4")
    assert code == EXIT_OK and out.splitlines()[0] == "-2.0,2.0,-2.0,2.0,4,4"
    code, out, _ = run(capsys, "potential-l1", "--coeffs=-2,0,1", "--n", "5", "--grid", "32x32")
    assert code == EXIT_OK and json.loads(out)["l1"] > 0


def test_brolin_rejects_exceptional_start(capsys):
    code, _, err = run(capsys, "brolin", "--coeffs", "0,0,1", "--a", "0")
    assert code == EXIT_ERROR
    assert "a:" in err


def test_brolin_records_seed(capsys):
    code, out, _ = run(capsys, "brolin", "--coeffs=-1,0,1", "--depth", "4", "--count", "8", "--seed", "9")
    assert out.startswith("# seed=9\n")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"coeffs": [[-1, 0], 0, 1], "depth": 3, "count": 5, "seed": 4}))
    code, out, _ = run(capsys, "brolin", "--config", str(cfg))
    assert code == EXIT_OK and out.startswith("# seed=4\n") and len(out.splitlines()) == 7
    code, out, _ = run(capsys, "brolin", "--config", str(cfg), "--count", "2")
    assert len(out.splitlines()) == 4


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"coeffs": "0,0,1", "depht": 3}))
    code, _, err = run(capsys, "brolin", "--config", str(cfg))
    assert code == EXIT_ERROR
    assert "depht" in err


def test_bad_rect_names_field(capsys):
    code, _, err = run(capsys, "green", "--coeffs", "0,0,1", "--rect", "1,0,0,1")
    assert code == EXIT_ERROR and "rect:" in err


def test_missing_polynomial(capsys):
    code, _, err = run(capsys, "green")
    assert code == EXIT_ERROR and "poly" in err


def test_outputs_are_byte_identical(tmp_path, capsys):
    args = ["verify-a", "--coeffs=-1,0,1", "--m", "1", "--n", "3..4", "--grid", "8x8",
            "--depth", "6", "--count", "256", "--seed", "7"]
    for d in ("a", "b"):
        assert run(capsys, *args, "--out", str(tmp_path / d))[0] in (0, 1)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "manifest.json" in names and "cloud_n3.csv" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 7 and "numpy" in manifest["versions"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "iterzeros", "bell-table", "--smax", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "A_{0,0} = 1\nA_{1,0} = 0\nA_{1,1} = X0"
