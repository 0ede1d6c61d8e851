"""Scattering/solution file round trips and the config hash."""

import json

import numpy as np
import pytest

from kdvist import ScatteringData
from kdvist import io as kio
from kdvist.errors import ConfigError
from kdvist.hankel import SolutionGrid


def _sample_data():
    kg = np.linspace(0.01, 5.0, 40)
    R = np.exp(1j * kg) / (1.0 + kg**2)
    T = np.sqrt(1.0 - np.abs(R) ** 2) * np.exp(-0.3j * kg)
    sg = np.linspace(0.05, 0.95, 11)
    return ScatteringData(
        k_grid=kg, R=R, T=T,
        bound_states=((1.25, 3.5),),
        rho_atoms=((0.8, 0.25),),
        rho_s=sg, rho_density=(2 * sg / np.pi) * np.sqrt(1 - sg**2),
        h0=1.0, a=2.0, t=0.125,
        unitarity_residual=np.full(40, 1e-12),
        flagged=(3, 7),
    )


def test_scattering_round_trip_is_lossless(tmp_path):
    S = _sample_data()
    kio.save_scattering(S, tmp_path / "scat")
    S2 = kio.load_scattering(tmp_path / "scat")
    assert np.array_equal(S2.k_grid, S.k_grid)
    assert np.array_equal(S2.R, S.R)
    assert np.array_equal(S2.T, S.T)
    assert S2.bound_states == S.bound_states
    assert S2.rho_atoms == S.rho_atoms
    assert np.array_equal(S2.rho_s, S.rho_s)
    assert np.array_equal(S2.rho_density, S.rho_density)
    assert (S2.h0, S2.a, S2.t, S2.flagged) == (1.0, 2.0, 0.125, (3, 7))


def test_load_rejects_wrong_schema(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        kio._read_csv(p, kio.SOLUTION_COLUMNS)


def test_solution_grid_round_trip(tmp_path):
    xs = np.linspace(-1.0, 1.0, 5)
    ts = np.array([0.1, 0.2])
    q = np.outer(ts, xs)
    G = SolutionGrid(x_values=xs, t_values=ts, q=q,
                     logdet=q + 1.0, lambda_min=q + 2.0, residual=q * 0 + 1e-9,
                     L=40.0, n=160)
    path = tmp_path / "sol.csv"
    kio.save_solution_grid(G, path)
    out = kio.load_solution(path)
    assert np.array_equal(out["q"].reshape(2, 5), q)
    assert np.array_equal(out["x"].reshape(2, 5)[0], xs)
    assert np.array_equal(out["logdet"].reshape(2, 5), q + 1.0)


def test_config_hash_is_canonical():
    h1 = kio.config_hash({"b": 1, "a": [1, 2]})
    h2 = kio.config_hash({"a": [1, 2], "b": 1})
    assert h1 == h2
    assert h1 != kio.config_hash({"a": [1, 2], "b": 2})


def test_manifest_contents(tmp_path):
    path = tmp_path / "manifest.json"
    cfg = {"profile": {"tag": "box"}, "output_dir": "out"}
    kio.write_manifest(path, cfg, [tmp_path / "x.csv"], {"tail": 1e-15})
    man = json.loads(path.read_text())
    assert man["config_hash"] == kio.config_hash(cfg)
    assert man["certificates"] == {"tail": 1e-15}
    assert man["outputs"] == [str(tmp_path / "x.csv")]
