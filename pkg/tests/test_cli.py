import json
import os

import numpy as np
import pandas as pd
import pytest

from harness.config import CONFIGS_DIR
from main import main
from utils.data_processing import load_grid_function

COEFFS = {"sigma": 1.0, "rho": -0.5, "kappa": 1.0, "theta": 0.5, "c0": 1.0}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(tmp_path, payload, *extra, out="out"):
    config = write_config(tmp_path, payload)
    out_dir = str(tmp_path / out)
    return main(["--config", config, "--out", out_dir, *extra]), out_dir


def test_validate_writes_derived_constants(tmp_path):
    code, out = run(tmp_path, {"command": "validate", "coefficients": COEFFS})
    assert code == 0
    with open(os.path.join(out, "derived.json")) as f:
        derived = json.load(f)
    assert derived["beta"] == pytest.approx(1.0)
    assert derived["lambda"] == pytest.approx(1.0 + 1.0 + 0.5)
    assert os.path.exists(os.path.join(out, "resolved_config.json"))


def test_invalid_coefficients_exit_with_one(tmp_path, capsys):
    code, _ = run(tmp_path, {"command": "validate", "coefficients": {**COEFFS, "sigma": 0.0}})
    assert code == 1
    assert "SigmaZero" in capsys.readouterr().err


def test_config_errors_exit_with_one(tmp_path, capsys):
    code, _ = run(tmp_path, {"command": "validate", "coefficients": COEFFS, "colour": "blue"})
    assert code == 1
    assert "ConfigError" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "absent.json")]) == 1
    assert main(["validate", "--config", write_config(tmp_path, {"coefficients": COEFFS}), "--threads", "0"]) == 1


def test_solve_round_trips_the_solution(tmp_path):
    payload = {"command": "solve", "coefficients": COEFFS, "grid": {"nx": 16, "ny": 16},
               "solver": {"method": "direct"}}
    code, out = run(tmp_path, payload)
    assert code == 0
    u = load_grid_function(os.path.join(out, "solution.grid"))
    assert u.grid.nx == 16 and u.grid.grading == 2.0
    errors = pd.read_csv(os.path.join(out, "errors.csv"))
    assert list(errors.columns) == ["grid", "l2", "h1", "sup", "max"]
    assert errors.loc[0, "max"] < 0.05
    # manufactured data is reproduced on the non-degenerate boundary
    assert np.allclose(u.values[:, 0], 0.0, atol=1e-12)


def test_command_line_overrides_the_config(tmp_path):
    config = write_config(tmp_path, {"command": "solve", "coefficients": COEFFS})
    out = str(tmp_path / "validated")
    assert main(["validate", "--config", config, "--out", out, "--seed", "4"]) == 0
    with open(os.path.join(out, "resolved_config.json")) as f:
        resolved = json.load(f)
    assert resolved["command"] == "validate"
    assert resolved["seed"] == 4


def test_commutators_pass(tmp_path):
    payload = {"command": "commutators", "coefficients": COEFFS,
               "checks": {"coefficient_sets": 2, "ellipticity_sets": 5, "ellipticity_points": 20,
                          "geometry_samples": 2000}}
    code, out = run(tmp_path, payload)
    assert code == 0
    for name in ("commutators.csv", "ellipticity.csv", "geometry.csv"):
        assert os.path.exists(os.path.join(out, name))


def test_norms_table(tmp_path):
    payload = {"command": "norms", "coefficients": COEFFS, "grid": {"nx": 12, "ny": 12},
               "solver": {"method": "direct"}, "norms": {"tags": ["Lp", "H1"]}}
    code, out = run(tmp_path, payload)
    assert code == 0
    table = pd.read_csv(os.path.join(out, "norms.csv"))
    assert len(table) == 4
    assert (table["value"] > 0).all()


def test_sweep_is_deterministic(tmp_path):
    payload = {"command": "sweep", "coefficients": COEFFS, "grid": {"ladder": [8, 16, 32]},
               "solver": {"method": "direct"},
               "estimate": {"kinds": ["supremum", "h2_interior"], "R": 0.25, "R0": 0.5, "band": 10.0}}
    first, out_a = run(tmp_path, payload, out="a")
    second, out_b = run(tmp_path, payload, out="b")
    assert first == second == 0
    with open(os.path.join(out_a, "sweep.csv"), "rb") as a, open(os.path.join(out_b, "sweep.csv"), "rb") as b:
        assert a.read() == b.read()
    table = pd.read_csv(os.path.join(out_a, "sweep.csv"))
    assert len(table) == 6
    assert (table["runtime_ms"] == 0).all()
    assert os.path.exists(os.path.join(out_a, "sweep.html"))


def test_kind_flag_selects_estimates(tmp_path):
    payload = {"command": "sweep", "coefficients": COEFFS, "grid": {"ladder": [8, 16, 32]},
               "solver": {"method": "direct"}, "estimate": {"band": 10.0}}
    code, out = run(tmp_path, payload, "--kind", "supremum")
    assert code == 0
    table = pd.read_csv(os.path.join(out, "sweep.csv"))
    assert set(table["kind"]) == {"supremum"}



def test_negative_control_fails_the_sweep(tmp_path, capsys):
    payload = {"command": "sweep", "coefficients": COEFFS, "grid": {"ladder": [8, 16, 32]},
               "solver": {"method": "direct"},
               "estimate": {"kinds": ["h2_interior"], "negative_control": True}}
    code, _ = run(tmp_path, payload)
    assert code == 3
    assert "PropertyCheckFailure" in capsys.readouterr().err


@pytest.mark.slow
@pytest.mark.parametrize("name, expected", [
    ("probe.json", 0),
    ("sweep_h2.json", 0),
    ("sweep_negative_control.json", 3),
])
def test_shipped_experiments(tmp_path, name, expected):
    assert main(["--config", os.path.join(CONFIGS_DIR, name), "--out", str(tmp_path / "out")]) == expected
