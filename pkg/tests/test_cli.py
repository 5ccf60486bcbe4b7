import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from polyinf.cli import RunConfig, main, parse_field_data
from polyinf.cli import ParseError

FIELDS = Path(__file__).resolve().parents[1] / "demos" / "fields"


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_analyze_quad_diag(tmp_path):
    assert run(tmp_path, "analyze", "--field", str(FIELDS / "e1.json")) == 0
    rows = read_csv(tmp_path / "singularities.csv")
    assert len(rows) == 4
    data = json.loads((tmp_path / "analysis.json").read_text())
    assert data["config"]["command"] == "analyze"
    assert {r["classification"] for r in data["singularities"]} == {"nondegenerate", "dicritical"}


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "analyze", "--field", str(FIELDS / "empty.json")) == 3
    assert run(tmp_path, "analyze", "--field", str(FIELDS / "radial.json")) == 2
    assert "radial multiple" in capsys.readouterr().err
    assert run(tmp_path, "trace", "--field", str(FIELDS / "e1.json"), "--start", "0,0") == 2
    assert run(tmp_path, "analyze", "--field", str(tmp_path / "missing.json")) == 3


@pytest.mark.parametrize("theta, slope", [(0.0, -1.0), (math.pi / 3, -0.5)])
def test_trace_height_slope(tmp_path, theta, slope):
    assert run(tmp_path, "trace", "--field", str(FIELDS / "e1.json"), "--start=-1,-1", "--theta", str(theta),
               "--tmax", "4", "--format", "csv", "--format", "svg") == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    t = np.array([float(r["t"]) for r in rows])
    logz = np.log(np.hypot([float(r["Re z"]) for r in rows], [float(r["Im z"]) for r in rows]))
    assert np.allclose(np.polyfit(t, logz, 1)[0], slope, atol=1e-9)
    svg = (tmp_path / "trajectory.svg").read_text()
    assert svg.count("<polyline") >= 2


def test_determinism(tmp_path):
    args = ("trace", "--field", str(FIELDS / "e1.json"), "--start=-1,-1", "--tmax", "2", "--format", "csv",
            "--format", "json")
    run(tmp_path, *args)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    run(tmp_path, *args)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert first == second


def test_halphen_and_egyptian(tmp_path):
    assert run(tmp_path, "halphen", "--orbifold", "3,3,3", "--J", "50") == 0
    assert json.loads((tmp_path / "halphen.json").read_text())["leaf_type"] == "parabolic"
    assert run(tmp_path, "egyptian", "--n", "2", "--bound", "3") == 0
    sols = json.loads((tmp_path / "egyptian.json").read_text())["solutions"]
    assert sorted(map(tuple, sols)) == [(-3, -3, -3), (-3, -1, 3), (-2, -1, 2), (-1, -1, 1)]
    assert run(tmp_path, "halphen", "--orbifold", "2,3,x") == 3


def test_confine_and_report(tmp_path):
    assert run(tmp_path, "confine", "--field", str(FIELDS / "section2.json"), "--point", "0.7,1.1",
               "--tmax", "5") == 0
    data = json.loads((tmp_path / "confine.json").read_text())
    assert data["outside_measure"] >= 0
    assert (tmp_path / "confine_profile.csv").read_text().startswith("# config")
    assert run(tmp_path, "report") == 0
    assert "confine.json" in (tmp_path / "report.md").read_text()


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(command="trace", t_max=-1).validate()
    with pytest.raises(ValueError):
        RunConfig(command="trace", tol=0.5).validate()
    with pytest.raises(ValueError):
        RunConfig(command="confine", radius=0).validate()


def test_field_strings():
    X = parse_field_data({"n": 3, "components": ["x**2", "y**2", "x*z + y*z"]})
    assert X.degree == 2
    with pytest.raises(ParseError):
        parse_field_data({"n": 3, "components": ["x**2", "y**2"]})
