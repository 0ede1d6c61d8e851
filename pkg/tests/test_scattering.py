"""Short-range direct scattering: Jost values, R/T, bound states."""

import numpy as np
import pytest

from kdvist import (
    bound_states,
    evolve_data,
    faddeev_right,
    make_catalog_potential,
    scatter_short_range,
)

# box(V0=1, length=1) bound state from the secular equation
# k' cot(k' L) = -kappa, k'^2 = V0 - kappa^2 (transfer-matrix oracle)
BOX_KAPPA = 0.4351308590346271
BOX_NORMING = 0.6916984303396383


def test_soliton_faddeev_value():
    # closed-form Jost solution of -2 sech^2: y(i, 0) = 1/2
    p = make_catalog_potential("one_soliton", kappa=1.0, c=2.0)
    jv = faddeev_right(p, 1j, 0.0)
    assert abs(jv.y - 0.5) < 1e-9


def test_soliton_scattering_data(soliton_data):
    S = soliton_data
    assert len(S.bound_states) == 1
    kappa, c = S.bound_states[0]
    assert abs(kappa - 1.0) < 1e-8
    assert abs(c - 2.0) < 1e-6
    assert np.max(np.abs(S.R)) < 1e-8


def test_two_soliton_scattering_data(two_soliton_data):
    S = two_soliton_data
    kappas = sorted(k for k, _ in S.bound_states)
    assert np.allclose(kappas, [1.0, 2.0], atol=1e-8)
    cs = {round(k): c for k, c in S.bound_states}
    assert abs(cs[1] - 2.0) < 1e-5
    assert abs(cs[2] - 12.0) < 1e-4
    assert np.max(np.abs(S.R)) < 1e-8


def test_box_bound_state_against_secular_oracle():
    p = make_catalog_potential("box", V0=1.0, length=1.0)
    bs = bound_states(p)
    assert len(bs) == 1
    kappa, c = bs[0]
    assert abs(kappa - BOX_KAPPA) < 1e-10
    assert abs(c - BOX_NORMING) < 1e-8


def test_box_reflection_unitarity():
    p = make_catalog_potential("box", V0=1.0, length=1.0)
    kg = np.linspace(0.05, 20.0, 300)
    S = scatter_short_range(p, kg)
    resid = np.abs(np.abs(S.R) ** 2 + np.abs(S.T) ** 2 - 1.0)
    assert np.max(resid) < 1e-9
    assert np.max(S.unitarity_residual) < 1e-9


def test_sech2_deep_well_is_reflectionless():
    # -A sech^2(x) with A = nu(nu+1), nu = 2: two bound states, R = 0
    p = make_catalog_potential("sech2", A=6.0, width=1.0)
    kg = np.linspace(0.05, 10.0, 120)
    from kdvist.steplike import scattering_map
    S = scattering_map(p, kg)
    assert np.max(np.abs(S.R)) < 1e-7
    kappas = sorted(k for k, _ in S.bound_states)
    assert np.allclose(kappas, [1.0, 2.0], atol=1e-7)


def test_evolve_data_phases():
    from kdvist.steplike import scattering_map
    p = make_catalog_potential("box", V0=1.0, length=1.0)
    kg = np.linspace(0.05, 5.0, 60)
    S = scattering_map(p, kg)
    t = 0.3
    St = evolve_data(S, t)
    assert St.t == t
    assert np.allclose(St.R, S.R * np.exp(8j * kg**3 * t), atol=1e-14)
    (k0, c0), (k1, c1) = S.bound_states[0], St.bound_states[0]
    assert k1 == k0
    assert np.isclose(c1, c0 * np.exp(8.0 * k0**3 * t), rtol=1e-14)
