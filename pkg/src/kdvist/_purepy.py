"""Pure-numpy adaptive integrator for the de-oscillated Schrodinger system.

Solves  u'' = c1*u' + (q(x) - c0)*u  for a batch of parameter values c1
sharing one piecewise-cubic potential table.  The batch is advanced with a
common adaptive step (embedded Dormand-Prince 5(4), error maximized over the
batch), which keeps the inner loop fully vectorized.

The compiled backend in ``_core`` implements the same contract with
per-entry step control; both must agree to integration tolerance.
"""

import numpy as np

from .errors import IntegrationError

NAME = "purepy"

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def eval_table(breaks, coeffs, x):
    """Evaluate the piecewise cubic at scalar x (clamped to the table)."""
    m = len(breaks) - 1
    i = np.searchsorted(breaks, x, side="right") - 1
    if i < 0:
        i = 0
    elif i > m - 1:
        i = m - 1
    t = x - breaks[i]
    c = coeffs[:, i]
    return ((c[0] * t + c[1]) * t + c[2]) * t + c[3]


def _rhs(breaks, coeffs, x, u, du, acc_on, c1, c0, g):
    q = eval_table(breaks, coeffs, x)
    fu = du
    fdu = c1 * du + (q - c0) * u
    if acc_on:
        facc = np.exp(g * x) * u * u
    else:
        facc = None
    return fu, fdu, facc


def integrate_batch(
    breaks,
    coeffs,
    hard,
    c1,
    c0,
    x0,
    x1,
    u0,
    du0,
    rtol=1e-10,
    atol=1e-12,
    g=0.0,
    with_acc=False,
):
    """Integrate the batch from x0 to x1; returns (u, du, acc) at x1.

    ``hard`` lists interior points where q jumps; steps never cross them.
    ``acc`` accumulates the signed integral of exp(g*x)*u(x)^2.
    """
    c1 = np.atleast_1d(np.asarray(c1, dtype=complex))
    u = np.atleast_1d(np.asarray(u0, dtype=complex))
    du = np.atleast_1d(np.asarray(du0, dtype=complex))
    u, du = np.broadcast_arrays(u + 0 * c1, du + 0 * c1)
    u = u.copy()
    du = du.copy()
    acc = np.zeros_like(u)
    if x1 == x0:
        return u, du, acc
    direction = 1.0 if x1 > x0 else -1.0

    # Split at hard breakpoints so every segment is smooth.
    pts = [p for p in np.asarray(hard, dtype=float) if min(x0, x1) < p < max(x0, x1)]
    pts.sort(reverse=direction < 0)
    segments = [x0] + pts + [x1]

    for seg_lo, seg_hi in zip(segments[:-1], segments[1:]):
        seg_len = abs(seg_hi - seg_lo)
        if seg_len == 0.0:
            continue
        x = seg_lo
        h = direction * min(seg_len, max(seg_len / 8.0, 1e-6))
        # the completion tolerance must exceed the minimum-step threshold
        # below, or a step landing just short of seg_hi is misread as
        # underflow
        while direction * (seg_hi - x) > 1e-12 * max(1.0, abs(seg_hi)):
            if direction * (x + h) > direction * seg_hi:
                h = seg_hi - x
            if abs(h) < 1e-13 * max(1.0, abs(x)):
                raise IntegrationError(
                    f"step-size underflow at x={x:.6g}", position=x
                )
            ku = np.empty((7,) + u.shape, dtype=complex)
            kdu = np.empty_like(ku)
            kacc = np.empty_like(ku) if with_acc else None
            for s in range(7):
                us = u.copy()
                dus = du.copy()
                for j, a in enumerate(_A[s]):
                    if a != 0.0:
                        us = us + (h * a) * ku[j]
                        dus = dus + (h * a) * kdu[j]
                fu, fdu, facc = _rhs(
                    breaks, coeffs, x + _C[s] * h, us, dus, with_acc, c1, c0, g
                )
                ku[s] = fu
                kdu[s] = fdu
                if with_acc:
                    kacc[s] = facc
            u5 = u + h * np.tensordot(_B5, ku, axes=1)
            du5 = du + h * np.tensordot(_B5, kdu, axes=1)
            eu = h * np.tensordot(_B5 - _B4, ku, axes=1)
            edu = h * np.tensordot(_B5 - _B4, kdu, axes=1)
            sc_u = atol + rtol * np.maximum(np.abs(u), np.abs(u5))
            sc_du = atol + rtol * np.maximum(np.abs(du), np.abs(du5))
            err = np.sqrt(
                0.5 * ((np.abs(eu) / sc_u) ** 2 + (np.abs(edu) / sc_du) ** 2)
            ).max()
            if err <= 1.0:
                if with_acc:
                    acc = acc + h * np.tensordot(_B5, kacc, axes=1)
                u, du = u5, du5
                x = x + h
            factor = 0.9 * (err + 1e-300) ** -0.2
            h = h * min(5.0, max(0.2, factor))
    return u, du, acc
