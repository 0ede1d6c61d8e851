"""Weyl m-functions, the spectral measure rho, and step-like reflection.

The left m-function is obtained by integrating from a plane-wave
initialization at the left cutoff (constant or truncated tail); the measure
rho combines boundary values of -1/(m+ + m-) (density) and its real poles
below the essential floor (atoms), both mapped back through psi(a, is)^-2.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import potentials as pot
from .backend import integrate_batch
from .errors import ScatteringError
from .scattering import (
    ATOL,
    RTOL,
    ScatteringData,
    _norming_constant,
    faddeev_right_batch,
    scatter_short_range,
)

EPS_SEQUENCE = (1e-3, 5e-4, 2.5e-4)


@dataclass(frozen=True)
class WeylFunctionTable:
    lambda_grid: np.ndarray = field(repr=False)
    m_minus: np.ndarray = field(repr=False)
    m_plus: np.ndarray = field(repr=False)
    a: float = 0.0


def _sqrt_upper(lam):
    """sqrt with Im >= 0 on the physical sheet (cut along [0, inf))."""
    lam = np.asarray(lam, dtype=complex)
    r = np.sqrt(lam)
    return np.where(r.imag < 0.0, -r, r)


def spectral_floor(p):
    """h0: rate floor of the simple spectrum declared by the left tail."""
    lt = p.left_tail
    if lt.kind == "step":
        return float(np.sqrt(-lt.level))
    if lt.kind == "rough":
        return float(np.sqrt(lt.amplitude))
    return 0.0


def m_plus_batch(p, lams, a, rtol=RTOL):
    """m_+(lambda, a) = ik + y'(k,a)/y(k,a), k = sqrt(lambda)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    ks = _sqrt_upper(lams)
    y, dy = faddeev_right_batch(p, ks, a, rtol=rtol)
    return 1j * ks + dy / y


def _m_minus_cells(lams, kminus, breaks, qvals):
    """Exact Weyl propagation across piecewise-constant cells.

    Transfers (psi, psi') over each constant-q cell with the closed-form
    solution (w = sqrt(lambda - q)); the pair is renormalized per cell so
    evanescent growth never overflows.  Returns -psi'/psi at the right end.
    """
    psi = np.ones_like(lams)
    dpsi = -1j * kminus * psi
    for j in range(len(qvals)):
        d = breaks[j + 1] - breaks[j]
        w2 = lams - qvals[j]
        wd = np.sqrt(w2) * d
        c = np.cos(wd)
        small = np.abs(wd) < 1e-6
        denom = np.where(small, 1.0, np.sqrt(w2))
        s = np.where(small, d * (1.0 - wd**2 / 6.0), np.sin(wd) / denom)
        psi, dpsi = psi * c + dpsi * s, -psi * w2 * s + dpsi * c
        scale = np.maximum(np.abs(psi), np.abs(dpsi))
        psi = psi / np.where(scale > 0.0, scale, 1.0)
        dpsi = dpsi / np.where(scale > 0.0, scale, 1.0)
    if np.any(psi == 0.0):
        raise ScatteringError("Weyl solution vanishes at the split point")
    return -dpsi / psi


def _m_minus_constant_tail(p, lams, a, rtol=RTOL):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    level = p.left_tail.level if p.left_tail.kind == "step" else 0.0
    kminus = _sqrt_upper(lams - level)
    b = p.left_tail.cutoff
    if a <= b:
        return 1j * kminus
    breaks, coeffs, hard = pot.ode_table(p, b, a)
    if not np.any(coeffs[:3]):
        # piecewise-constant profile: closed-form transfer per cell
        return _m_minus_cells(lams, kminus, breaks, coeffs[3])
    z, dz, _ = integrate_batch(
        breaks, coeffs, hard, c1=2j * kminus, c0=level, x0=b, x1=a,
        u0=1.0, du0=0.0, rtol=rtol, atol=ATOL,
    )
    if np.any(np.abs(z) == 0.0):
        raise ScatteringError(f"Weyl solution vanishes at a = {a}")
    return 1j * kminus - dz / z


def m_minus_batch(p, lams, a, rtol=RTOL, trunc_tol=1e-9, trunc_start=-50.0,
                  on_unconverged="raise"):
    """m_-(lambda, a); rough tails go through converged left truncations.

    With on_unconverged="flag" the deepest iterate is returned together
    with the per-energy truncation deltas instead of raising; real
    energies in a localized rough medium converge slowly at high momentum
    and the caller may prefer flagged best-effort values.
    """
    lt = p.left_tail
    if lt.kind in ("zero", "step", "formula"):
        cur = _m_minus_constant_tail(p, lams, a, rtol=rtol)
        return (cur, np.zeros(len(np.atleast_1d(lams)))) \
            if on_unconverged == "flag" else cur
    if lt.kind != "rough":
        raise ScatteringError(f"unsupported left tail {lt.kind!r}")
    prev = None
    delta = None
    b = min(trunc_start, lt.cutoff - 10.0)
    for _ in range(7):
        cur = _m_minus_constant_tail(pot.truncate_left(p, b), lams, a,
                                     rtol=rtol)
        if prev is not None:
            delta = np.abs(cur - prev) / (1.0 + np.abs(prev))
            if np.max(delta) < trunc_tol:
                break
        prev = cur
        b *= 2.0
    if on_unconverged == "flag":
        return cur, delta
    if delta is None or np.max(delta) >= trunc_tol:
        raise ScatteringError(
            f"left-truncation sequence for m_- did not converge "
            f"(last b = {b / 2}); iterates differ by {np.max(delta):.3e}"
        )
    return cur


def weyl_m_minus(p, lam, a, rtol=RTOL):
    """Single-energy left m-function (see m_minus_batch)."""
    return complex(m_minus_batch(p, [lam], a, rtol=rtol)[0])


def weyl_table(p, lambda_grid, a, rtol=RTOL):
    lams = np.asarray(lambda_grid, dtype=complex)
    return WeylFunctionTable(
        lambda_grid=lams,
        m_minus=m_minus_batch(p, lams, a, rtol=rtol),
        m_plus=m_plus_batch(p, lams, a, rtol=rtol),
        a=float(a),
    )


def check_a(p, a, margin=0.5):
    moment = pot.right_moment(p, a)
    if moment >= margin:
        raise ScatteringError(
            f"a = {a} is not large enough: int (x-a)|q| = {moment:.3g}"
        )


def _psi_at_imag(p, s_vals, a, rtol=RTOL):
    """psi_+(a, i s) = exp(-s a) y(i s, a); real and positive for valid a."""
    s_vals = np.atleast_1d(np.asarray(s_vals, dtype=float))
    y, _ = faddeev_right_batch(p, 1j * s_vals, a, rtol=rtol)
    return np.exp(-s_vals * a) * np.real(y)


def _richardson(values):
    """Iterated Richardson over a halving eps sequence (3 entries)."""
    v0, v1, v2 = values
    r1 = 2.0 * v1 - v0
    r2 = 2.0 * v2 - v1
    return (4.0 * r2 - r1) / 3.0, (r1, r2)


def rho_density(p, a, s_grid, rtol=RTOL, eps_sequence=EPS_SEQUENCE):
    """Density of rho on the s grid via extrapolated boundary values."""
    s_grid = np.asarray(s_grid, dtype=float)
    psi = _psi_at_imag(p, s_grid, a, rtol=rtol)
    if np.any(np.abs(psi) < 1e-8):
        raise ScatteringError(
            f"psi(a, is) too close to zero at a = {a}; increase a"
        )
    vals = []
    for eps in eps_sequence:
        lams = -s_grid**2 + 1j * eps
        msum = m_plus_batch(p, lams, a, rtol=rtol) \
            + m_minus_batch(p, lams, a, rtol=rtol)
        vals.append(-np.imag(1.0 / msum) / np.pi)
    dens, _ = _richardson(vals)
    dens = np.maximum(dens, 0.0)
    return dens * 2.0 * s_grid / psi**2


def _scaled_wronskian(p, lams, a, rtol=RTOL):
    """De-exponentiated W(Psi_-, psi_+) and the factors at x = a.

    For real lambda below the essential floor both solutions are real after
    removing their exponential envelopes; the zeros of W locate the atoms.
    The pole-prone quotient m_+ + m_- equals W/(psi * Psi_-), so working
    with W directly avoids the pole/zero cancellation at large a.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    s = np.sqrt(-lams)
    y, dy = faddeev_right_batch(p, 1j * s, a, rtol=rtol)
    y, dy = np.real(y), np.real(dy)

    lt = p.left_tail
    level = lt.level if lt.kind == "step" else 0.0
    kap = np.sqrt(-(lams - level))    # Psi_- ~ exp(kap * x) envelope
    b = lt.cutoff
    if a > b:
        table = pot.ode_table(p, b, a)
        z, dz, _ = integrate_batch(
            *table, c1=(-2.0 * kap).astype(complex), c0=level, x0=b, x1=a,
            u0=1.0, du0=0.0, rtol=rtol, atol=ATOL,
        )
        z, dz = np.real(z), np.real(dz)
    else:
        z = np.ones_like(kap)
        dz = np.zeros_like(kap)
    w = z * (dy - s * y) - (dz + kap * z) * y
    return w, y, z


def _atom_mass(p, s, rtol=RTOL):
    """Atom mass = 1 / ||psi_+(., i s)||_2^2 over the whole line.

    At a zero of W(Psi_-, psi_+) the two solutions are proportional and
    d W / d lambda equals their product integral, which collapses the
    residue of -1/(m_+ + m_-) to the full-line norming constant.
    """
    return _norming_constant(p, s, rtol=rtol)


def rho_atoms(p, a, rtol=RTOL, scan_points=400, bracket=1e-4,
              lambda_min=None):
    """Atoms of rho: zeros of W(Psi_-, psi_+) below the essential floor.

    The pole-prone quotient m_+ + m_- equals W/(psi Psi_-), so locating
    atoms through W avoids the pole/zero cancellation at large a; the mass
    is the full-line norming constant of psi_+ (see _atom_mass).
    """
    h0 = spectral_floor(p)
    qmin = float(np.min(pot.sample(p, p.x)))
    if p.left_tail.kind == "rough":
        # The noise is bounded below by -amplitude = -h0^2, so the operator
        # has no spectrum below the essential floor when the interior does
        # not dip below it either; anything else needs explicit truncation.
        if qmin >= -(h0**2) * (1.0 + 1e-12):
            return []
        raise ScatteringError("atoms of a rough profile require truncation")
    lam_lo = lambda_min if lambda_min is not None else min(qmin, -h0**2) * (
        1.0 + 1e-9) - 1e-9
    lam_hi = -max(h0**2, 1e-8) * (1.0 + 1e-6)
    if lam_hi <= lam_lo:
        return []
    grid = np.linspace(lam_lo, lam_hi, scan_points)
    w, _, _ = _scaled_wronskian(p, grid, a, rtol=rtol)

    def wfun(lam):
        return float(_scaled_wronskian(p, lam, a, rtol=rtol)[0][0])

    atoms = []
    for i in range(len(grid) - 1):
        if not w[i] * w[i + 1] < 0.0:
            continue
        if grid[i + 1] - grid[i] < bracket:
            raise ScatteringError(
                f"unresolved atoms in bracket [{grid[i]}, {grid[i+1]}]"
            )
        lam0 = brentq(wfun, grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16)
        s0 = float(np.sqrt(-lam0))
        atoms.append((s0, float(_atom_mass(p, s0, rtol=rtol))))
    atoms.sort(reverse=True)
    return atoms


def rho_measure(p, a, s_grid, rtol=RTOL):
    """(atoms, density on s_grid); a must satisfy the moment certificate."""
    check_a(p, a)
    atoms = rho_atoms(p, a, rtol=rtol)
    h0 = spectral_floor(p)
    s_grid = np.asarray(s_grid, dtype=float)
    if h0 > 0.0:
        dens = rho_density(p, a, s_grid, rtol=rtol)
    else:
        dens = np.zeros_like(s_grid)
    return atoms, dens


def reflection_steplike(p, a, k_grid, rtol=RTOL, resonance_tol=1e-12,
                        flag_tol=1e-6):
    """R on the grid through the analytic split A_a + r_a xi_a^{-1}.

    Returns (R, A, r, flags); flags lists grid indices where the left
    m-function's truncation sequence did not settle below flag_tol (only
    reachable for rough left tails, whose high-momentum entries converge
    at the slow localization rate).
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(k_grid == 0.0):
        raise ScatteringError("k = 0 must be excluded from the grid")
    y, dy = faddeev_right_batch(p, k_grid + 0j, a, rtol=rtol)
    mplus = 1j * k_grid + dy / y
    mminus, delta = m_minus_batch(p, k_grid.astype(complex) ** 2, a,
                                  rtol=rtol, on_unconverged="flag")
    flags = tuple(int(i) for i in np.nonzero(delta > flag_tol)[0])
    msum = mplus + mminus
    if np.any(np.abs(msum) < resonance_tol):
        idx = np.nonzero(np.abs(msum) < resonance_tol)[0]
        raise ScatteringError(f"embedded resonance near k = {k_grid[idx]}")
    psi = np.exp(1j * k_grid * a) * y
    A = (2j * k_grid / msum) / psi**2
    r = -np.conj(y) / y
    R = A + r * np.exp(-2j * k_grid * a)
    return R, A, r, flags


def reflection_direct(p, a, k_grid, rtol=RTOL):
    """R by the defining Wronskian ratio of the Weyl and Jost solutions.

    Independent of the split route: both Wronskians are formed pointwise at
    x = a from the raw solution values.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    y, dy = faddeev_right_batch(p, k_grid + 0j, a, rtol=rtol)
    psi = np.exp(1j * k_grid * a) * y
    dpsi = np.exp(1j * k_grid * a) * (dy + 1j * k_grid * y)

    lams = k_grid.astype(complex) ** 2
    lt = p.left_tail
    level = lt.level if lt.kind == "step" else 0.0
    kminus = _sqrt_upper(lams - level)
    b = lt.cutoff
    if lt.kind == "rough":
        raise ScatteringError("direct reflection needs a truncated profile")
    if a > b:
        table = pot.ode_table(p, b, a)
        z, dz, _ = integrate_batch(
            *table, c1=2j * kminus, c0=level, x0=b, x1=a, u0=1.0, du0=0.0,
            rtol=rtol, atol=ATOL,
        )
    else:
        z = np.ones_like(kminus)
        dz = np.zeros_like(kminus)
    Psi = z                      # overall phase exp(-i kminus b) cancels
    dPsi = dz - 1j * kminus * z
    num = np.conj(psi) * dPsi - np.conj(dpsi) * Psi
    den = Psi * dpsi - dPsi * psi
    return num / den


def analytic_split_check(p, a, k_grid, rtol=RTOL):
    """sup |R - A_a - r_a xi_a^{-1}| over the grid, plus sup |A_a|."""
    R_split, A, r, _ = reflection_steplike(p, a, k_grid, rtol=rtol)
    if p.is_short_range:
        R_ref = scatter_short_range(p, k_grid, rtol=rtol).R
    else:
        R_ref = reflection_direct(p, a, k_grid, rtol=rtol)
    resid = float(np.max(np.abs(R_ref - R_split)))
    return resid, float(np.max(np.abs(A)))


def scattering_map(p, k_grid, s_points=79, a=None, rtol=RTOL):
    """Full direct-scattering dispatch: q -> ScatteringData.

    Short-range profiles go through the Jost/Wronskian route (R, T, bound
    states); profiles with a step or rough left tail go through the Weyl
    route (reflection via the analytic split, spectral measure rho as
    atoms + density on (0, h0]).
    """
    from .scattering import bound_states as _bound_states

    k_grid = np.asarray(k_grid, dtype=float)
    if p.is_short_range:
        S = scatter_short_range(p, k_grid, rtol=rtol)
        bs = tuple(_bound_states(p, rtol=rtol))
        return ScatteringData(
            k_grid=S.k_grid, R=S.R, T=S.T, bound_states=bs, rho_atoms=bs,
            unitarity_residual=S.unitarity_residual, flagged=S.flagged,
        )
    if a is None:
        a = pot.choose_a(p)
    check_a(p, a)
    h0 = spectral_floor(p)
    R, _, _, flags = reflection_steplike(p, a, k_grid, rtol=rtol)
    s_grid = np.linspace(0.0, h0, s_points + 2)[1:-1]
    atoms, dens = rho_measure(p, a, s_grid, rtol=rtol)
    return ScatteringData(
        k_grid=k_grid, R=R, bound_states=(), rho_atoms=tuple(atoms),
        rho_s=s_grid, rho_density=dens, h0=h0, a=float(a), flagged=flags,
    )
