"""Pseudospectral KdV reference integrator."""

import numpy as np
import pytest

from kdvist import OracleConfig, evolve_pde
from kdvist import oracle as O
from kdvist.errors import ConfigError, ResolutionError


def test_config_validation():
    with pytest.raises(ConfigError):
        OracleConfig(domain_half_length=30.0, modes=300, dt=1e-4, t_end=0.1)
    with pytest.raises(ConfigError):
        OracleConfig(domain_half_length=30.0, modes=512, dt=-1e-4, t_end=0.1)
    with pytest.raises(ConfigError):
        # dt * k_max^3 beyond the stability certificate
        OracleConfig(domain_half_length=10.0, modes=4096, dt=1e-2, t_end=0.1)


def test_soliton_advection():
    cfg = OracleConfig(domain_half_length=30.0, modes=1024, dt=2e-4, t_end=0.5)
    x = O.grid(cfg)
    q0 = -2.0 / np.cosh(x) ** 2
    ts, out, rep = evolve_pde(q0, cfg, t_out=[0.0, 0.25, 0.5])
    assert np.allclose(out[0], q0)
    for i, t in enumerate(ts):
        err = np.max(np.abs(out[i] + 2.0 / np.cosh(x - 4.0 * t) ** 2))
        assert err < 1e-7, f"t={t}: {err}"
    assert rep["mass_drift"] < 1e-8
    assert rep["energy_drift"] < 1e-8


def test_two_soliton_interaction():
    from kdvist.potentials import nsoliton_q

    cfg = OracleConfig(domain_half_length=40.0, modes=2048, dt=1e-4, t_end=0.3)
    x = O.grid(cfg)
    q0 = nsoliton_q(x, 0.0, [1.0, 2.0], [2.0, 12.0])
    ts, out, rep = evolve_pde(q0, cfg)
    err = np.max(np.abs(out[0] - nsoliton_q(x, 0.3, [1.0, 2.0], [2.0, 12.0])))
    assert err < 1e-6


def test_boundary_guard_rejects_wide_data():
    cfg = OracleConfig(domain_half_length=10.0, modes=512, dt=1e-4, t_end=0.1)
    x = O.grid(cfg)
    with pytest.raises(ConfigError):
        evolve_pde(-np.ones_like(x) * 0.5, cfg)


def test_wrap_monitor_catches_escaping_radiation():
    cfg = OracleConfig(domain_half_length=16.0, modes=512, dt=2e-4, t_end=2.0)
    x = O.grid(cfg)
    q0 = -2.0 / np.cosh(x) ** 2     # soliton reaches the edge by t = 2
    with pytest.raises(ResolutionError):
        evolve_pde(q0, cfg)
