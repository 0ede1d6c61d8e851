"""Compiled and pure-python integrator backends implement one contract."""

import os
import subprocess
import sys

import numpy as np
import pytest

from kdvist import _purepy
from kdvist.backend import BACKEND
from kdvist.errors import IntegrationError

try:
    from kdvist import _core
except ImportError:
    _core = None

# airy-type test problem: u'' = c1 u' + (q - c0) u with cubic table for q


def _table():
    breaks = np.linspace(-5.0, 5.0, 11)
    # q(x) = x on each cell: linear coefficients, continuous across breaks
    ncell = len(breaks) - 1
    coeffs = np.zeros((4, ncell))
    coeffs[2] = 1.0
    coeffs[3] = breaks[:-1]
    return breaks, coeffs, np.array([])


@pytest.mark.skipif(_core is None, reason="compiled extension not built")
def test_backends_agree():
    breaks, coeffs, hard = _table()
    c1 = np.array([0.3 + 0.2j, -0.1j, 1.0])
    for x0, x1 in ((-4.0, 4.0), (3.0, -3.0)):
        up, dup, ap = _purepy.integrate_batch(
            breaks, coeffs, hard, c1, 0.5, x0, x1, 1.0, 0.0,
            g=0.1, with_acc=True)
        uc, duc, ac = _core.integrate_batch(
            breaks, coeffs, hard, c1, 0.5, x0, x1, 1.0, 0.0,
            g=0.1, with_acc=True)
        assert np.max(np.abs(up - uc)) < 1e-7 * np.max(np.abs(uc))
        assert np.max(np.abs(dup - duc)) < 1e-7 * np.max(np.abs(duc))
        assert np.max(np.abs(ap - ac)) < 1e-7 * np.max(np.abs(ac) + 1.0)


def test_pure_python_against_scipy_reference():
    from scipy.integrate import solve_ivp

    breaks, coeffs, hard = _table()
    c1 = 0.25 + 0.5j

    def rhs(x, y):
        q = np.interp(x, [-5.0, 5.0], [-5.0, 5.0])
        return [y[1], c1 * y[1] + (q - 0.5) * y[0]]

    ref = solve_ivp(rhs, (-4.0, 4.0), [1.0 + 0j, 0.0 + 0j],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    u, du, _ = _purepy.integrate_batch(
        breaks, coeffs, hard, [c1], 0.5, -4.0, 4.0, 1.0, 0.0)
    assert abs(u[0] - ref.y[0, -1]) < 1e-7 * abs(ref.y[0, -1])
    assert abs(du[0] - ref.y[1, -1]) < 1e-7 * abs(ref.y[1, -1])


def test_segment_endpoint_not_misread_as_underflow():
    # a segment endpoint much larger than the last step must still be
    # reachable: completion tolerance vs minimum-step threshold
    breaks = np.array([-60.0, 0.0])
    coeffs = np.zeros((4, 1))
    coeffs[3, 0] = -0.5
    for mod in filter(None, (_purepy, _core)):
        u, du, _ = mod.integrate_batch(
            breaks, coeffs, np.array([]), [0.0 + 0j], -2.0, -57.0, -42.0,
            1.0, 0.0)
        assert np.isfinite(u[0]) and np.isfinite(du[0])


def test_env_override_selects_pure_backend():
    code = ("import kdvist.backend as b; print(b.BACKEND)")
    env = dict(os.environ, KDVIST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "purepy"
    assert BACKEND in ("compiled", "purepy")
