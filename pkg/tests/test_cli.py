import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sobolev_poisson import catalog
from sobolev_poisson.cli import main
from sobolev_poisson.su2 import matrix_from_json

COTH1 = 1 / np.tanh(1.0)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


# kernel ---------------------------------------------------------------------------

def test_kernel_eval():
    code, d = run_json("kernel", "eval", "--space", "h1-unit", "--x", "0", "--t", "0")
    assert code == 0
    assert d["rows"][0]["value"] == pytest.approx(1.3130352855, abs=1e-10)
    assert d["passed"] is True and d["tolerance"] == 1e-12 and "identity" in d and "quadrature" in d


def test_kernel_eval_r3():
    code, d = run_json("kernel", "eval", "--space", "h2-r3", "--x", "1,2,3", "--t", "1,2,3")
    assert code == 0 and d["rows"][0]["value"] == pytest.approx(1 / (8 * np.pi), rel=1e-15)


def test_kernel_series_and_sweep():
    code, d = run_json("kernel", "series", "--x", "0.3", "--t", "0.7", "--terms", "100")
    closed = np.cosh(0.3) * np.cosh(0.3) / np.sinh(1)
    assert code == 0 and d["rows"][0]["closed"] == pytest.approx(closed, rel=1e-14)
    assert d["rows"][0]["gap"] <= 1 / (2 * np.pi**2 * 100)
    code, d = run_json("kernel", "series", "--x", "0.3", "--t", "0.7", "--terms", "10,100,1000")
    assert [r["terms"] for r in d["rows"]] == [10, 100, 1000]


def test_kernel_norm():
    code, d = run_json("kernel", "norm", "--x", "1")
    assert code == 0 and d["rows"][0]["norm"] == pytest.approx(np.sqrt(COTH1), abs=1e-12)


def test_kernel_reproduce_and_diverge():
    code, d = run_json("kernel", "reproduce", "--space", "h1-line", "--x", "0.25")
    assert code == 0 and len(d["rows"]) == 20
    code, d = run_json("kernel", "diverge", "--x", "0.5", "--terms", "10000")
    assert code == 0 and d["rows"][-1]["K"] == 10000


# bracket --------------------------------------------------------------------------

def test_bracket_phi_pi():
    code, d = run_json("bracket", "--f", "phi:0.2", "--g", "pi:0.8")
    ref = np.cosh(0.2) * np.cosh(0.2) / np.sinh(1)
    assert code == 0 and d["rows"][0]["value"] == pytest.approx(ref, abs=1e-8)


def test_bracket_phi_K_is_zero():
    code, d = run_json("bracket", "--f", "phi:0.5", "--g", "K", "--phi", "t^2")
    assert code == 0 and d["rows"][0]["value"] == 0.0


def test_bracket_pi_K_with_point():
    code, d = run_json("bracket", "--f", "pi:0.4", "--g", "K", "--phi", "1")
    assert code == 0 and d["rows"][0]["value"] == pytest.approx(-1.0, abs=1e-8)


def test_sweep_emits_grid(tmp_path):
    path = tmp_path / "out.csv"
    code, d = run_json("bracket", "--sweep", "51x51", "--f", "phi", "--g", "pi", "--emit-plot", str(path))
    assert code == 0 and d["rows"] == 51 * 51
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == 51 * 51 + 1
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert len(rows) == 51 * 51 and list(rows[0]) == ["x", "y", "value"]
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["passed"] is True and meta["tolerance"] == 1e-8


def test_csv_format_to_file_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"r{k}.csv"
        code, _ = run("kernel", "series", "--x", "0.1", "--t", "0.9", "--terms", "5,50", "--format", "csv",
                      "--output", str(p))
        assert code == 0
        outs.append((p.read_bytes(), (tmp_path / f"r{k}.csv.meta.json").read_bytes()))
    assert outs[0] == outs[1]


# exit codes -----------------------------------------------------------------------

def test_exit_code_fail():
    code, d = run_json("kernel", "series", "--x", "0.3", "--t", "0.7", "--terms", "10", "--tol", "1e-12")
    assert code == 1 and d["passed"] is False


@pytest.mark.parametrize("argv", [
    ["kernel", "eval", "--x", "2", "--t", "0"],
    ["kernel", "nope"],
    ["bracket", "--f", "phi:0.2"],
    ["bracket", "--f", "rho:0.2", "--g", "K"],
    ["bracket", "--f", "phi:0.2", "--g", "pi:0.3", "--phi", "t*(1-"],
    ["kernel", "series", "--space", "h1-line"],
    ["holoflux", "holonomy"],
    ["holoflux", "holonomy", "--scene", "catalog:missing"],
    ["holoflux", "holonomy", "--scene", "/nonexistent/scene.json"],
    ["bracket", "--sweep", "5by5", "--f", "phi", "--g", "pi"],
])
def test_exit_code_usage(argv, capsys):
    assert main(argv, out=io.StringIO()) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_exit_code_numerical():
    code, _ = run("kernel", "reproduce", "--x", "0.5", "--expr", "sqrt(t - 2)")
    assert code == 3


def test_exit_code_numerical_for_degenerate_surface(tmp_path):
    cfg = dict(catalog.SCENES["helix"], surface=["u", "u", "0"])
    path = tmp_path / "s.json"
    path.write_text(json.dumps(cfg))
    code, _ = run("holoflux", "flux", "--scene", str(path))
    assert code == 3


# holoflux -------------------------------------------------------------------------

def test_holonomy_zero_connection(tmp_path):
    cfg = dict(catalog.SCENES["helix"], connection=["0"] * 9)
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(cfg))
    code, d = run_json("holoflux", "holonomy", "--scene", str(path), "--method", "dyson:8")
    assert code == 0 and d["unitarity_gap"] == 0.0
    assert np.array_equal(matrix_from_json(d["matrix"]), np.eye(2))


def test_holonomy_and_flux_on_catalog():
    code, d = run_json("holoflux", "holonomy", "--scene", "catalog:helix")
    assert code == 0 and d["unitarity_gap"] < 1e-8
    code, d = run_json("holoflux", "flux", "--scene", "catalog:two_surfaces")
    assert code == 0 and d["rows"][0]["flux"] == -d["rows"][0]["flipped"]


def test_hf_bracket_with_oracle():
    code, d = run_json("holoflux", "hf-bracket", "--scene", "catalog:helix", "--oracle", "fd")
    assert code == 0 and d["relative_gap"] < 1e-4
    assert len(d["matrix"]) == 2


def test_jacobi_command():
    code, d = run_json("holoflux", "jacobi", "--scene", "catalog:two_surfaces")
    row = d["rows"][0]
    assert code == 0 and row["residual"] <= row["jac_tol"]


def test_module_entry_point_byte_identical():
    cmd = [sys.executable, "-m", "sobolev_poisson", "bracket", "--f", "pi:0.3", "--g", "V", "--phi", "sin(pi*t)"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["passed"] is True
