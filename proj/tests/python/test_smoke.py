import math

import numpy as np
import pytest

import pathmkv


def test_metadata():
    assert pathmkv.version()
    assert "suite" in pathmkv.subcommands()
    assert "mean_field_ou" in pathmkv.builtin_models()
    ids = [c[0] for c in pathmkv.criteria()]
    assert ids == list(range(1, 14))


def test_schema_and_config_errors():
    schema = pathmkv.config_schema()
    assert schema["properties"]["model"]["properties"]["T"]["units"] == "time"
    assert pathmkv.parse_config('{"particles": 10}') == {"particles": 10}
    with pytest.raises(pathmkv.ConfigError):
        pathmkv.parse_config('{"particle": 10}')
    with pytest.raises(pathmkv.ConfigError):
        pathmkv.parse_config('{"particles": ')


def test_simulate_shape_and_determinism():
    a = pathmkv.simulate("ou", particles=64, seed=7, M=20, d=2)
    b = pathmkv.simulate("ou", particles=64, seed=7, M=20, d=2)
    assert a.shape == (64, 21, 2)
    assert np.array_equal(a, b)
    assert np.all(a[:, 0, :] == 0.0)


def test_frozen_model_keeps_initial_value():
    x = pathmkv.simulate("frozen", particles=8, M=10, x0=1.5)
    assert np.all(x == 1.5)


def test_wasserstein_translation():
    pts = [[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]
    shifted = [[p[0] + 3.0, p[1] + 4.0] for p in pts]
    assert pathmkv.wasserstein2_points(pts, shifted) == pytest.approx(5.0, abs=1e-12)
    assert pathmkv.wasserstein2_points(pts, pts) == 0.0


def test_investment_scalar_example():
    u, value = pathmkv.investment_hamiltonian(
        p=[2.0], t=0.0, rate=0.0, a2=[0.0], c=[1.0], m=[1.0], lower=[-5.0], upper=[5.0]
    )
    assert u == pytest.approx([1.0])
    assert value == pytest.approx(1.0)


def test_run_reports_status():
    status, report = pathmkv.run("simulate", {"particles": 50, "model": {"tag": "ou", "M": 20}}, seed=3, threads=1)
    assert status == 0 and report["pass"]
    assert report["checks"][0]["name"] == "simulate"
    status, report = pathmkv.run("simulate", {"model": {"tag": "nonsense"}})
    assert status == 2 and report["error"]["kind"] == "config"
    status, report = pathmkv.run("simulate", {"particles": 20, "model": {"tag": "ou", "lambda": 2000.0, "M": 10}})
    assert status == 3 and report["error"]["kind"] == "blowup"


def test_fast_criterion():
    r = pathmkv.run_criterion(7)
    assert r["pass"] and r["name"] == "wasserstein"
    assert math.isfinite(r["seconds"])
