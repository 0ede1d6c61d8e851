"""Reflection transform, operator assembly, determinant recovery."""

import numpy as np
import pytest

from kdvist import (
    ScatteringData,
    assemble,
    build_fourier_table,
    default_truncation,
    evolve_data,
    fredholm_logdet,
    kernel_eval,
    make_catalog_potential,
    make_kernel_spec,
    scatter_short_range,
    singular_spectrum,
    solve_q,
)
from kdvist import hankel as H
from kdvist import potentials as pot
from kdvist.errors import DiscretizationError, ResolutionError


def one_pole_data(c=1.0, t=0.0, k_max=40.0, npts=4800):
    """R(k) = i/(k - ic): transform is exactly -e^{-c v} at t = 0."""
    kg = np.linspace(0.005, k_max, npts)
    R0 = 1j / (kg - 1j * c)
    return ScatteringData(k_grid=kg, R=R0 * np.exp(8j * kg**3 * t), t=t)


def contour_oracle(v, t, c=1.0, h=0.5, k_lim=60.0, n=48001):
    """(1/2pi) int R(k) e^{i(8k^3 t + k v)} dk on the contour Im k = h.

    The shift is legal for any 0 < h < c (R is analytic below the pole);
    at t > 0 the integrand gains e^{-24 t h k^2} and trapezoid summation
    converges spectrally.
    """
    k = np.linspace(-k_lim, k_lim, n) + 1j * h
    R = 1j / (k - 1j * c)
    out = []
    for vv in np.atleast_1d(v):
        f = R * np.exp(1j * (8.0 * k**3 * t + k * vv))
        out.append(np.trapezoid(f, dx=2.0 * k_lim / (n - 1)) / (2.0 * np.pi))
    return np.array(out)


def test_fourier_table_one_pole_closed_form():
    S = one_pole_data()
    tr = build_fourier_table(S, 0.5, 12.0)
    v = np.linspace(1.0, 10.0, 37)
    for order in (0, 1, 2):
        exact = (-2.0) ** order * -np.exp(-v)
        err = np.abs(tr.phi(v, order) - exact)
        # residual truncation error of the slowly decaying 1/k symbol
        # falls off like 1/v^4 past the cut corrections
        assert np.max(err) < 3e-6 * 2.0**order
        assert np.max(err[v >= 4.0]) < 3e-8 * 2.0**order
    assert tr.certificate["imag_defect"] < 1e-9


def test_fourier_table_one_pole_at_positive_time():
    t = 0.1
    S = one_pole_data(t=t)
    tr = build_fourier_table(S, -4.0, 8.0)
    v = np.array([-2.0, 0.0, 1.5, 5.0])
    exact = contour_oracle(v, t)
    assert np.max(np.abs(exact.imag)) < 1e-10
    assert np.max(np.abs(tr.phi(v) - exact.real)) < 1e-8


def test_fourier_table_range_guard():
    tr = build_fourier_table(one_pole_data(), 0.0, 5.0)
    with pytest.raises(ResolutionError):
        tr.phi(np.array([7.0]))


def test_fourier_table_rejects_coarse_dk():
    S = one_pole_data(t=0.5)
    with pytest.raises(ResolutionError):
        build_fourier_table(S, 0.0, 5.0, dk=0.1)


def test_kernel_spec_requires_transform_for_reflection():
    with pytest.raises(ResolutionError):
        make_kernel_spec(one_pole_data(), 0.0)


def test_rank_one_kernel_and_determinant():
    # h(u) = c e^{-kappa(2x+u)}: det(I+H) = 1 + (c/2kappa) e^{-2 kappa x}
    S = ScatteringData(k_grid=np.array([1.0]), R=np.array([0.0j]),
                       bound_states=((1.0, 2.0),))
    for x in (-1.0, 0.0, 2.0):
        spec = make_kernel_spec(S, x)
        u = np.linspace(0.0, 3.0, 7)
        assert np.allclose(kernel_eval(spec, u), 2.0 * np.exp(-(2 * x + u)))
        assert np.allclose(kernel_eval(spec, u, order=1),
                           -4.0 * np.exp(-(2 * x + u)))
        D = assemble(spec, L=default_truncation(spec, x))
        logdet, lam_min = fredholm_logdet(D)
        assert abs(logdet - np.log1p(np.exp(-2.0 * x))) < 1e-9
        assert lam_min > 0.0


def test_assemble_decay_certificate():
    S = ScatteringData(k_grid=np.array([1.0]), R=np.array([0.0j]),
                       bound_states=((0.05, 1.0),))
    spec = make_kernel_spec(S, 0.0)
    with pytest.raises(DiscretizationError):
        assemble(spec, L=3.0)


def test_solve_q_one_soliton_round_trip(soliton_data):
    for t in (0.0, 0.25):
        St = evolve_data(soliton_data, t)
        for x in (-2.0, 0.0, 1.5):
            q, diag = H.solve_q(St, x, t)
            assert abs(q + 2.0 / np.cosh(x - 4.0 * t) ** 2) < 1e-8
            assert diag["route_residual"] < 1e-6
            assert diag["lambda_min"] > 0.0


def test_solve_q_two_soliton_against_determinant_formula(two_soliton_data):
    for t in (0.0, 0.2):
        St = evolve_data(two_soliton_data, t)
        for x in (-3.0, 0.0, 2.0):
            q, diag = H.solve_q(St, x, t)
            exact = float(pot.nsoliton_q(np.array([x]), t, [1.0, 2.0],
                                         [2.0, 12.0])[0])
            assert abs(q - exact) < 1e-8


def test_solve_q_box_routes_agree(box_data):
    q, diag = H.solve_q(box_data, -1.0, 0.1)
    assert diag["route_residual"] < 1e-5
    assert np.isfinite(q)


def test_singular_spectrum_is_geometric_for_compact_support(box_data):
    St = evolve_data(box_data, 0.1)
    L = 40.0
    tr = build_fourier_table(St, -2.0, 2.0 * L + 2.0)
    D = assemble(make_kernel_spec(St, 0.0, transform=tr), L=L, n=400)
    out = singular_spectrum(D)
    sv = out["singular_values"]
    assert len(sv) >= 8
    ratios = sv[1:8] / sv[:7]
    assert np.all(ratios < 0.1)


def test_positivity_report_refinement(box_data):
    rep = H.positivity_report(box_data, [-2.0, 0.0, 2.0], [0.05, 0.2], n=96)
    assert rep["min_lambda"] > 0.0
    assert rep["min_lambda_refined"] > 0.0
    assert abs(rep["min_lambda_refined"] - rep["min_lambda"]) < 0.05
