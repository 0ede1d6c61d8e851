"""Catalog profiles: closed forms, tails, sampling, truncation."""

import numpy as np
import pytest

from kdvist import make_catalog_potential, make_sampled_potential, sample, truncate_left
from kdvist import potentials as pot
from kdvist.errors import CatalogError


def test_one_soliton_closed_form():
    p = make_catalog_potential("one_soliton", kappa=1.0, c=2.0)
    xs = np.linspace(-8.0, 8.0, 161)
    # c = 2*kappa places the soliton crest at the origin
    assert np.allclose(sample(p, xs), -2.0 / np.cosh(xs) ** 2, atol=1e-14)


def test_two_soliton_matches_determinant_formula():
    p = make_catalog_potential("n_soliton", kappas=[1.0, 2.0], cs=[2.0, 12.0])
    xs = np.linspace(-6.0, 6.0, 121)
    q_det = pot.nsoliton_q(xs, 0.0, [1.0, 2.0], [2.0, 12.0])
    assert np.allclose(sample(p, xs), q_det, atol=1e-10)


def test_nsoliton_reduces_to_single_soliton():
    xs = np.linspace(-10.0, 10.0, 201)
    for t in (0.0, 0.3):
        q = pot.nsoliton_q(xs, t, [1.0], [2.0])
        assert np.allclose(q, -2.0 / np.cosh(xs - 4.0 * t) ** 2, atol=1e-10)


def test_box_and_step_values():
    b = make_catalog_potential("box", V0=1.0, length=1.0)
    xs = np.array([-1.0, 0.25, 0.75, 1.5])
    assert np.allclose(sample(b, xs), [0.0, -1.0, -1.0, 0.0])
    s = make_catalog_potential("pure_step", h=1.0)
    assert np.allclose(sample(s, np.array([-3.0, -0.1, 0.1])), [-1.0, -1.0, 0.0])
    assert s.left_tail.kind == "step"
    assert s.left_tail.h == 1.0
    assert s.right_tail.kind in ("zero", "formula")


def test_rough_left_is_deterministic_and_bounded():
    p = make_catalog_potential("rough_left", seed=7, amplitude=1.0)
    xs = np.linspace(-30.0, 5.0, 701)
    q1 = sample(p, xs)
    q2 = sample(make_catalog_potential("rough_left", seed=7, amplitude=1.0), xs)
    assert np.array_equal(q1, q2)
    assert np.all(q1 <= 0.0) and np.all(q1 >= -1.0)
    assert np.all(q1[xs >= 0.0] == 0.0)
    # constant on unit cells
    assert pot.rough_value(7, 1.0, -3) == pot.rough_value(7, 1.0, -3)
    q3 = sample(make_catalog_potential("rough_left", seed=8, amplitude=1.0), xs)
    assert not np.array_equal(q1, q3)


def test_catalog_rejects_bad_input():
    with pytest.raises(CatalogError):
        make_catalog_potential("no_such_profile")
    with pytest.raises(CatalogError):
        make_catalog_potential("rough_left", amplitude=-1.0)


def test_sampled_potential_interpolates():
    xs = np.linspace(-10.0, 10.0, 2001)
    qs = -1.5 / np.cosh(xs) ** 2
    lt = pot.TailDescriptor(kind="zero", cutoff=-10.0)
    rt = pot.TailDescriptor(kind="zero", cutoff=10.0)
    p = make_sampled_potential(xs, qs, lt, rt)
    xf = np.linspace(-9.5, 9.5, 391)
    assert np.max(np.abs(sample(p, xf) + 1.5 / np.cosh(xf) ** 2)) < 5e-6
    assert sample(p, np.array([25.0]))[0] == 0.0


def test_truncate_left_zeroes_the_tail():
    p = make_catalog_potential("pure_step", h=1.0)
    tp = truncate_left(p, -5.0)
    xs = np.array([-8.0, -5.5, -4.0, 1.0])
    assert np.allclose(sample(tp, xs), [0.0, 0.0, -1.0, 0.0])
    assert tp.left_tail.kind == "zero"


def test_ode_table_piecewise_constant_profiles():
    p = make_catalog_potential("rough_left", seed=7, amplitude=1.0)
    breaks, coeffs, hard = pot.ode_table(p, -6.0, 0.0)
    # rough cells are exactly constant: no polynomial part
    assert not np.any(coeffs[:3])
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    assert np.allclose(coeffs[3], sample(p, mid))


def test_choose_a_satisfies_moment_certificate():
    p = make_catalog_potential("box", V0=1.0, length=1.0)
    a = pot.choose_a(p)
    assert pot.right_moment(p, a) < 0.5
    assert pot.right_moment(p, a - 0.25) >= 0.5 or a == min(0.0, p.x[0])
