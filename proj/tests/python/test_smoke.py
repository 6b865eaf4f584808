import json
import math

import pytest

import fingap


def test_version():
    assert fingap.__version__ == "0.1.0"


def test_capacity_closed_forms():
    assert fingap.equilibrium([[-2, 2]])["capacity"] == pytest.approx(1.0, abs=1e-8)
    eq = fingap.equilibrium([[-2, -1], [1, 2]])
    assert eq["capacity"] == pytest.approx(math.sqrt(3) / 2, abs=1e-6)
    assert eq["harmonic_measures"] == pytest.approx([0.5, 0.5], abs=1e-8)


def test_green_at_three():
    assert fingap.green([[-2, 2]], 3.0) == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-6)


def test_period_two_torus():
    r5 = math.sqrt(5)
    a, b = fingap.torus_coefficients([[-r5, -1], [1, r5]], [0.5], 20)
    big, small = (r5 + 1) / 2, (r5 - 1) / 2
    assert {round(a[0], 9), round(a[1], 9)} == {round(big, 9), round(small, 9)}
    for n in range(2, 20):
        assert a[n] == pytest.approx(a[n - 2], abs=1e-10)
        assert abs(b[n]) < 1e-10


def test_self_distance():
    bands = [[-2, -0.5], [0.5, 2]]
    a, b = fingap.torus_coefficients(bands, [0.3], 200)
    assert fingap.dist_to_torus(bands, a, b, 1) < 1e-4


def test_lieb_thirring_single_site():
    r = fingap.lt_free_bound([1.0], [3.0], 400)
    assert r["holds"]
    assert r["eigenvalues"][0] == pytest.approx(10 / 3, abs=1e-6)
    assert r["lhs"] == pytest.approx(8 / 3, abs=1e-6)


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        fingap.equilibrium([[-2, -1], [-1, 2]])


def test_cli_round_trip(tmp_path):
    cfg = tmp_path / "eqm.json"
    cfg.write_text(json.dumps({"bands": [[-2, 2]], "grid": 11}))
    out = tmp_path / "out"
    code, stdout, stderr = fingap.run_cli(["eqm", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert code == 0, stderr
    data = json.loads((out / "eqm.json").read_text())
    assert data["equilibrium"]["capacity"] == pytest.approx(1.0, abs=1e-8)
    assert data["meta"]["tool"] == "fingap"


def test_cli_missing_config(tmp_path):
    code, _, _ = fingap.run_cli(["eqm", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 3
