import csv
import json
import math
import subprocess
import sys

import pytest

from kppwaves.cli import main, parse_grid_spec
from kppwaves.config import power_config
from kppwaves.errors import InputError
from kppwaves.io import format_float, read_csv


@pytest.fixture
def configs(tmp_path):
    files = {
        "exact": power_config(1, 1, 1, 0),
        "kpp": power_config(1, 0, 1, 0),
        "nowave": power_config(0.5, 0, 1, 0),
        "singular": power_config(2, -0.5, 1, 0),
        "bad": "[diffusion]\nkind = power\nexponent0 = oops\n",
        "negative": ("[diffusion]\nkind = expr\nexpr = -1\n[reaction]\nkind = expr\n"
                     "expr = r*(1-r)\n[exponents]\ngamma0 = 1\ndelta0 = 0\n"
                     "gamma1 = 1\ndelta1 = 0\n"),
    }
    out = {}
    for name, text in files.items():
        out[name] = tmp_path / f"{name}.ini"
        out[name].write_text(text)
    return out


def test_analyze_exists(configs, capsys):
    assert main(["analyze", str(configs["exact"])]) == 0
    text = capsys.readouterr().out
    assert "region0: M02" in text and "region1: M12" in text
    assert "existence: Exists" in text and "z0: infinite" in text and "mu: 0.25" in text


def test_analyze_nowave_and_classify(configs, capsys, tmp_path):
    out = tmp_path / "a.json"
    assert main(["analyze", str(configs["nowave"]), "--out", str(out)]) == 2
    assert json.loads(out.read_text())["existence"] == "NoWave"
    assert main(["classify", str(configs["exact"])]) == 0
    assert "mu" not in capsys.readouterr().out.split("existence")[-1]


def test_input_errors(configs, capsys):
    assert main(["analyze", str(configs["bad"])]) == 1
    assert "line 3, column" in capsys.readouterr().err
    assert main(["analyze", str(configs["negative"])]) == 1
    assert "d must be positive" in capsys.readouterr().err
    assert main(["analyze", "does-not-exist.ini"]) == 1
    assert main(["frobnicate"]) == 1


@pytest.mark.parametrize("name, c_star, tol", [("exact", 1 / math.sqrt(2), 1e-4),
                                               ("kpp", 2.0, 1e-3)])
def test_speed(configs, capsys, name, c_star, tol):
    assert main(["speed", str(configs[name]), "--tol-c", "1e-5"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert abs(result["c_star"] - c_star) < tol
    assert result["c_star"] <= result["upper_bound"] + 1e-5


def test_speed_nowave(configs, capsys):
    assert main(["speed", str(configs["nowave"])]) == 2
    assert "no travelling wave" in capsys.readouterr().err


def test_profile_outputs_are_exact_and_deterministic(configs, tmp_path):
    first, second = tmp_path / "p1.csv", tmp_path / "p2.csv"
    for out in (first, second):
        assert main(["profile", str(configs["exact"]), "--tol-c", "1e-5", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "p1.json").read_text())
    assert abs(meta["z1"] - math.sqrt(2) * math.log(2)) < 1e-3
    assert meta["z0"] == "-inf" and meta["z0_agreement"] is True
    assert meta["residuals"]["res_speed"] < 1e-4
    assert meta["manifest"]["parameters"]["tol_c"] == 1e-5
    header, data = read_csv(first)
    assert header == ["z", "U"]
    assert [format_float(v) for v in data[:, 0]] == [
        row[0] for row in list(csv.reader(first.open()))[1:]]
    zero = abs(data[:, 0]).argmin()
    assert data[zero, 0] == 0.0 and data[zero, 1] == 0.5
    assert first.read_bytes() == second.read_bytes()
    meta2 = (tmp_path / "p2.json").read_text().replace("p2.", "p1.")
    assert meta2 == (tmp_path / "p1.json").read_text()


def test_profile_below_critical(configs, capsys):
    assert main(["profile", str(configs["exact"]), "--c", "0.6", "--tol-c", "1e-4"]) == 2
    assert "critical speed c*=0.7071" in capsys.readouterr().err
    assert main(["profile", str(configs["exact"]), "--c", "-1"]) == 1


def test_simulate(configs, tmp_path, capsys):
    out = tmp_path / "front.csv"
    args = ["simulate", str(configs["kpp"]), "--tmax", "20", "--h", "0.2", "--length", "100"]
    assert main(args + ["--out", str(out), "--snapshots", "5,10"]) == 0
    header, data = read_csv(out)
    assert header == ["t", "x_front"] and data[0, 0] == 0.0
    assert read_csv(tmp_path / "front_snapshot1.csv")[0] == ["x", "u"]
    meta = json.loads((tmp_path / "front.json").read_text())
    assert 1.7 < meta["c_measured"] < 2.1
    assert main(args + ["--initial", "one"]) == 3
    assert "FrontLost" in capsys.readouterr().err
    assert main(["simulate", str(configs["singular"]), "--tmax", "1"]) == 3


def test_grid_spec_parsing():
    assert parse_grid_spec("", 1.0, 0.0) == [(1.0, 0.0)]
    assert parse_grid_spec("g1=0:1:3", 1.0, 0.0) == [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]
    assert parse_grid_spec("g1=0:1:0,d1=0:1:4", 1.0, 0.0) == []
    for bad in ("g1=0:1", "x1=0:1:2", "g1", "d1=a:b:c"):
        with pytest.raises(InputError):
            parse_grid_spec(bad, 1.0, 0.0)


def _rows(text):
    return list(csv.DictReader(text.splitlines()))


def test_sweep_region_map(configs, capsys):
    assert main(["sweep", str(configs["exact"]), "--grid-spec", "g1=0.5:2:4,d1=0:1:2"]) == 0
    rows = {(float(r["gamma1"]), float(r["delta1"])): r for r in _rows(capsys.readouterr().out)}
    expected = {(0.5, 0.0): ("M11", "true"), (1.0, 0.0): ("M12", "false"),
                (0.5, 1.0): ("M13", "true"), (2.0, 0.0): ("M14", "false")}
    for key, (region, finite) in expected.items():
        assert (rows[key]["region"], rows[key]["z0_finite"]) == (region, finite)
    assert main(["sweep", str(configs["exact"]), "--grid-spec", "g1=0:1:0"]) == 0
    assert capsys.readouterr().out.strip() == (
        "gamma1,delta1,region,z0_finite,predicted_theta,theta_hat,note")
    assert main(["sweep", str(configs["exact"]), "--grid-spec", "g1=0:1"]) == 1


def test_sweep_with_solver_is_order_stable(configs, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "2"):
        monkeypatch.setenv("KPPWAVES_THREADS", threads)
        out = tmp_path / f"sweep{threads}.csv"
        args = ["sweep", str(configs["exact"]), "--grid-spec", "g1=0.5:1:2,d1=1:1:1",
                "--solve", "--tol-c", "1e-4", "--out", str(out)]
        assert main(args) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    rows = _rows(outs[0])
    for row in rows:
        theta, predicted = float(row["theta_hat"]), float(row["predicted_theta"])
        assert abs(theta - predicted) / predicted < 0.05


def test_module_entry_point(configs):
    proc = subprocess.run([sys.executable, "-m", "kppwaves", "analyze", str(configs["nowave"])],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "NoWave" in proc.stdout
