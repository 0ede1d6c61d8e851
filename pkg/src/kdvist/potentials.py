"""Catalog of initial profiles q(x) with machine-readable tail structure.

Each potential carries sampled values on a monotone grid plus left/right
tail descriptors so downstream code can pick exact vs numerical scattering
paths.  Catalog entries evaluate their closed form directly; externally
loaded sample tables fall back to monotone-cubic interpolation.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import CatalogError

DEFAULT_RANGE = (-40.0, 40.0)
DEFAULT_DX = 0.01
TAIL_EPS = 1e-16


@dataclass(frozen=True)
class TailDescriptor:
    """Behavior of q beyond a finite cutoff.

    kind is one of "zero", "step" (constant level < 0), "formula"
    (closed-form continuation of a catalog entry), "rough" (seeded
    piecewise-constant noise on unit cells).
    """

    kind: str
    cutoff: float
    level: float = 0.0
    tag: str = ""
    seed: int = 0
    amplitude: float = 0.0
    gamma: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.kind == "step" and self.level >= 0:
            raise CatalogError("step tail level must be strictly negative")
        if not np.isfinite(self.cutoff):
            raise CatalogError("tail cutoff must be finite")

    @property
    def h(self):
        """Step height h with level = -h^2 (0 for non-step tails)."""
        return np.sqrt(-self.level) if self.kind == "step" else 0.0


@dataclass(frozen=True)
class Potential:
    x: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    left_tail: TailDescriptor
    right_tail: TailDescriptor
    catalog_tag: str | None = None
    params: dict = field(default_factory=dict)

    def sample(self, xs):
        return sample(self, xs)

    @property
    def is_short_range(self):
        return self.left_tail.kind in ("zero", "formula") and \
            self.right_tail.kind in ("zero", "formula")


def rough_value(seed, amplitude, cell):
    """Noise level on the unit cell [cell, cell+1); pure function of (seed, cell)."""
    rng = np.random.default_rng((int(seed), int(cell) + 2**40))
    return -amplitude * rng.random()


def _rough_q(seed, amplitude, xs):
    xs = np.asarray(xs, dtype=float)
    cells = np.floor(xs).astype(int)
    out = np.array([
        rough_value(seed, amplitude, c) if x < 0 else 0.0
        for c, x in zip(cells.ravel(), xs.ravel())
    ])
    return out.reshape(xs.shape)


def nsoliton_q(xs, t, kappas, cs):
    """Exact reflectionless profile from the finite-rank determinant.

    q = -2 d^2/dx^2 log det(I + A(x,t)) with
    A_mn = sqrt(c_m(t) c_n(t)) exp(-(k_m+k_n)x) / (k_m+k_n).
    """
    kappas = np.asarray(kappas, dtype=float)
    cs = np.asarray(cs, dtype=float)
    ct = cs * np.exp(8.0 * kappas**3 * t)
    ksum = kappas[:, None] + kappas[None, :]
    root = np.sqrt(np.outer(ct, ct))
    D = np.diag(kappas)
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape)
    it = np.nditer(xs, flags=["multi_index"])
    for xv in it:
        # Rescale rows/cols symmetrically to keep the matrix finite for
        # large |x|; det(I+A) is unchanged only by similarity, so build A
        # directly but in log space for the exponential.
        A = root * np.exp(-ksum * float(xv)) / ksum
        G = np.eye(len(kappas)) + A
        Ax = -(D @ A + A @ D)
        Axx = D @ D @ A + 2.0 * D @ A @ D + A @ D @ D
        Gi = np.linalg.inv(G)
        B = Gi @ Ax
        d2 = np.trace(Gi @ Axx) - np.trace(B @ B)
        out[it.multi_index] = -2.0 * d2
    return out if out.shape else float(out)


_def_params = {
    "zero": {},
    "one_soliton": {"kappa": 1.0, "c": 2.0},
    "n_soliton": {"kappas": [1.0, 2.0], "cs": [2.0, 12.0]},
    "box": {"V0": 1.0, "length": 1.0},
    "pure_step": {"h": 1.0},
    "sech2": {"A": 1.0, "width": 1.0},
    "rough_left": {"seed": 0, "amplitude": 1.0},
}


def _exact_q(tag, params, xs):
    xs = np.asarray(xs, dtype=float)
    if tag == "zero":
        return np.zeros_like(xs)
    if tag == "one_soliton":
        k, c = params["kappa"], params["c"]
        delta = 0.5 * np.log(c / (2.0 * k))
        return -2.0 * k**2 / np.cosh(k * xs - delta) ** 2
    if tag == "n_soliton":
        return nsoliton_q(xs, 0.0, params["kappas"], params["cs"])
    if tag == "box":
        return np.where((xs >= 0) & (xs < params["length"]), -params["V0"], 0.0)
    if tag == "pure_step":
        return np.where(xs < 0, -params["h"] ** 2, 0.0)
    if tag == "sech2":
        return -params["A"] / np.cosh(xs / params["width"]) ** 2
    if tag == "rough_left":
        return _rough_q(params["seed"], params["amplitude"], xs)
    if tag == "truncated":
        base = _exact_q(params["base_tag"], params["base_params"], xs)
        return np.where(xs < params["b"], 0.0, base)
    raise CatalogError(f"unknown catalog tag {tag!r}")


def _exp_cutoff(rate, scale):
    """Distance at which scale*exp(-2*rate*x) drops below TAIL_EPS."""
    return np.log(max(scale, 1.0) / TAIL_EPS) / (2.0 * rate)


def make_catalog_potential(tag, **params):
    """Build a catalog Potential; see _def_params for the recognized tags."""
    if tag not in _def_params:
        raise CatalogError(f"unknown catalog tag {tag!r}")
    p = dict(_def_params[tag])
    unknown = set(params) - set(p)
    if unknown:
        raise CatalogError(f"unknown parameters {sorted(unknown)} for {tag!r}")
    p.update(params)

    if tag == "one_soliton":
        if p["kappa"] <= 0 or p["c"] <= 0:
            raise CatalogError("one_soliton requires kappa > 0 and c > 0")
        cut = _exp_cutoff(p["kappa"], 4 * p["kappa"] ** 2) + abs(
            0.5 * np.log(p["c"] / (2 * p["kappa"])) / p["kappa"]
        )
        left = TailDescriptor("formula", cutoff=-cut, tag=tag)
        right = TailDescriptor(
            "formula", cutoff=cut, tag=tag, gamma=p["kappa"], delta=1.0
        )
    elif tag == "n_soliton":
        kappas = np.asarray(p["kappas"], dtype=float)
        cs = np.asarray(p["cs"], dtype=float)
        if len(kappas) != len(cs) or np.any(kappas <= 0) or np.any(cs <= 0):
            raise CatalogError("n_soliton requires matching positive kappas, cs")
        if np.any(np.diff(np.sort(kappas)) <= 0):
            raise CatalogError("n_soliton rates must be distinct")
        kmin = kappas.min()
        cut = _exp_cutoff(kmin, 4 * kappas.max() ** 2) + 10.0 / kmin
        left = TailDescriptor("formula", cutoff=-cut, tag=tag)
        right = TailDescriptor(
            "formula", cutoff=cut, tag=tag, gamma=kmin, delta=1.0
        )
        p = {"kappas": [float(v) for v in kappas], "cs": [float(v) for v in cs]}
    elif tag == "box":
        if p["V0"] <= 0 or p["length"] <= 0:
            raise CatalogError("box requires V0 > 0 and length > 0")
        left = TailDescriptor("zero", cutoff=0.0)
        right = TailDescriptor("zero", cutoff=p["length"], gamma=1.0, delta=1.0)
    elif tag == "pure_step":
        if p["h"] <= 0:
            raise CatalogError("pure_step requires h > 0")
        left = TailDescriptor("step", cutoff=0.0, level=-p["h"] ** 2)
        right = TailDescriptor("zero", cutoff=0.0, gamma=1.0, delta=1.0)
    elif tag == "sech2":
        if p["A"] <= 0 or p["width"] <= 0:
            raise CatalogError("sech2 requires A > 0 and width > 0")
        rate = 1.0 / p["width"]
        cut = _exp_cutoff(rate, 4 * p["A"])
        left = TailDescriptor("formula", cutoff=-cut, tag=tag)
        right = TailDescriptor(
            "formula", cutoff=cut, tag=tag, gamma=rate, delta=1.0
        )
    elif tag == "rough_left":
        if p["amplitude"] <= 0:
            raise CatalogError("rough_left requires amplitude > 0")
        left = TailDescriptor(
            "rough", cutoff=0.0, seed=p["seed"], amplitude=p["amplitude"]
        )
        right = TailDescriptor("zero", cutoff=0.0, gamma=1.0, delta=1.0)
    else:  # zero
        left = TailDescriptor("zero", cutoff=0.0)
        right = TailDescriptor("zero", cutoff=0.0, gamma=1.0, delta=1.0)

    dx = DEFAULT_DX
    if tag == "n_soliton" and max(p["kappas"]) > 1.5:
        dx = DEFAULT_DX / 2.0
    xs = np.arange(DEFAULT_RANGE[0], DEFAULT_RANGE[1] + 0.5 * dx, dx)
    qs = _exact_q(tag, p, xs)
    return Potential(xs, qs, left, right, catalog_tag=tag, params=p)


def make_sampled_potential(xs, qs, left_tail, right_tail, interp="pchip"):
    """Potential from explicit samples (file input, mollified profiles, ...)."""
    xs = np.asarray(xs, dtype=float)
    qs = np.asarray(qs, dtype=float)
    if xs.ndim != 1 or xs.shape != qs.shape or np.any(np.diff(xs) <= 0):
        raise CatalogError("samples must lie on a strictly increasing grid")
    if np.any(~np.isreal(qs)) or np.any(~np.isfinite(qs)):
        raise CatalogError("q samples must be real and finite")
    return Potential(xs, qs, left_tail, right_tail, catalog_tag=None,
                     params={"interp": interp})


def _tail_value(tail, xs):
    xs = np.asarray(xs, dtype=float)
    if tail.kind == "zero":
        return np.zeros_like(xs)
    if tail.kind == "step":
        return np.full_like(xs, tail.level)
    if tail.kind == "rough":
        return _rough_q(tail.seed, tail.amplitude, xs)
    raise CatalogError(f"unknown tail kind {tail.kind!r}")


def sample(p, xs):
    """q(x): exact tail formulas beyond cutoffs, interpolation/closed form inside."""
    xs = np.asarray(xs, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    out = np.empty_like(xs)

    if p.catalog_tag is not None:
        out[:] = _exact_q(p.catalog_tag, p.params, xs)
    else:
        if p.params.get("interp") == "spline":
            interp = CubicSpline(p.x, p.q)
        else:
            interp = PchipInterpolator(p.x, p.q)
        out[:] = interp(np.clip(xs, p.x[0], p.x[-1]))
        left = xs < p.left_tail.cutoff
        right = xs > p.right_tail.cutoff
        if left.any():
            out[left] = _tail_value(p.left_tail, xs[left])
        if right.any():
            out[right] = _tail_value(p.right_tail, xs[right])
    return float(out[0]) if scalar else out


def truncate_left(p, b):
    """chi_b q: zero for x < b, unchanged for x >= b."""
    if b >= p.x[-1]:
        raise CatalogError("truncation point must lie left of the sampled range end")
    if p.catalog_tag == "zero":
        return p
    if p.catalog_tag is not None:
        if p.catalog_tag == "truncated":
            params = dict(p.params)
            params["b"] = max(b, p.params["b"])
        else:
            params = {"base_tag": p.catalog_tag, "base_params": dict(p.params),
                      "b": float(b)}
        xs = p.x
        qs = _exact_q("truncated", params, xs)
        left = TailDescriptor("zero", cutoff=float(b))
        return Potential(xs, qs, left, p.right_tail, catalog_tag="truncated",
                         params=params)
    qs = np.where(p.x < b, 0.0, p.q)
    left = TailDescriptor("zero", cutoff=float(b))
    return replace(p, q=qs, left_tail=left)


def _left_cutoff(p):
    return p.left_tail.cutoff


def _right_cutoff(p):
    return p.right_tail.cutoff


def _shift_cubic(c, d):
    """Re-anchor cubic coefficients (PPoly order) to an origin shifted by d."""
    c0, c1, c2, c3 = c
    return np.array([
        c0,
        3 * c0 * d + c1,
        (3 * c0 * d + 2 * c1) * d + c2,
        ((c0 * d + c1) * d + c2) * d + c3,
    ])


def _window_ppoly(xknots, cmat, a, b):
    """Restrict a PPoly (knots, coeffs) to [a, b] with exact end breaks."""
    i0 = max(np.searchsorted(xknots, a, side="right") - 1, 0)
    i1 = np.searchsorted(xknots, b, side="left")
    i1 = min(max(i1, i0 + 1), len(xknots) - 1)
    bp = np.array(xknots[i0:i1 + 1], dtype=float)
    cf = np.array(cmat[:, i0:i1], dtype=float)
    if bp[0] < a:
        cf[:, 0] = _shift_cubic(cf[:, 0], a - bp[0])
        bp[0] = a
    bp[-1] = b
    return bp, cf


# piecewise-constant catalog profiles: list of (edge, value-on-the-right)
def _pc_profile(tag, params):
    if tag == "zero":
        return [(-np.inf, 0.0)]
    if tag == "pure_step":
        return [(-np.inf, -params["h"] ** 2), (0.0, 0.0)]
    if tag == "box":
        return [(-np.inf, 0.0), (0.0, -params["V0"]), (params["length"], 0.0)]
    return None


def _rough_edges(seed, amplitude, a, b):
    """Unit-cell edges and values of the rough profile on [a, b] (b <= 0)."""
    cells = np.arange(np.floor(a), np.ceil(b))
    out = []
    for c in cells:
        e0, e1 = max(c, a), min(c + 1.0, b)
        if e1 > e0:
            out.append((e0, e1, rough_value(seed, amplitude, c)))
    return out


def ode_table(p, x_lo, x_hi):
    """Piecewise-cubic table (breaks, coeffs, hard) covering [x_lo, x_hi].

    "hard" lists interior points where q jumps; the integrator never steps
    across them.  Formula tails beyond their cutoff are below 1e-16 and are
    represented as zero.
    """
    assert x_lo < x_hi
    lcut, rcut = _left_cutoff(p), _right_cutoff(p)

    segs = []   # contiguous (breaks, coeffs) pieces
    hard = []

    def add_const(a, b, v):
        if b - a > 0:
            segs.append((np.array([a, b]),
                         np.array([[0.0], [0.0], [0.0], [v]])))

    def add_pc(cells):
        for e0, e1, v in cells:
            add_const(e0, e1, v)
        for e0, _e1, _v in cells[1:]:
            hard.append(e0)

    # left tail region
    a, b = x_lo, min(max(lcut, x_lo), x_hi)
    if b > a:
        lt = p.left_tail
        if lt.kind in ("zero", "formula"):
            add_const(a, b, 0.0)
        elif lt.kind == "step":
            add_const(a, b, lt.level)
            hard.append(b)
        elif lt.kind == "rough":
            add_pc(_rough_edges(lt.seed, lt.amplitude, a, b))
            hard.append(b)

    # interior region
    a, b = max(x_lo, lcut), min(x_hi, rcut)
    if b > a:
        tag = p.catalog_tag
        base = tag
        params = p.params
        b_trunc = None
        if tag == "truncated":
            base = params["base_tag"]
            b_trunc = params["b"]
        pc = _pc_profile(base, params if tag != "truncated"
                         else params["base_params"])
        if base == "rough_left":
            bp = params["base_params"] if tag == "truncated" else params
            cells = _rough_edges(bp["seed"], bp["amplitude"], a, min(b, 0.0)) \
                + ([(max(a, 0.0), b, 0.0)] if b > 0 else [])
            cells = [c for c in cells if c[1] > c[0]]
            if b_trunc is not None:
                cells = [(max(e0, b_trunc), e1, v) if e1 > b_trunc else
                         (e0, e1, 0.0) for (e0, e1, v) in cells]
                cells = ([(a, b_trunc, 0.0)] if b_trunc > a else []) + \
                    [(e0, e1, v) for (e0, e1, v) in cells if e0 >= b_trunc - 1e-12]
                cells = [c for c in cells if c[1] > c[0]]
            add_pc(cells)
        elif pc is not None:
            edges = [e for e, _v in pc]
            cells = []
            cuts = sorted({a, b, *[e for e in edges if a < e < b],
                           *([] if b_trunc is None or not a < b_trunc < b
                             else [b_trunc])})
            for e0, e1 in zip(cuts[:-1], cuts[1:]):
                mid = 0.5 * (e0 + e1)
                v = 0.0
                for e, val in pc:
                    if mid >= e:
                        v = val
                if b_trunc is not None and mid < b_trunc:
                    v = 0.0
                cells.append((e0, e1, v))
            add_pc(cells)
        elif tag is None:
            if p.params.get("interp") == "spline":
                cs = CubicSpline(p.x, p.q)
            else:
                cs = PchipInterpolator(p.x, p.q)
            bp, cf = _window_ppoly(cs.x, cs.c, a, b)
            segs.append((bp, cf))
        else:
            # smooth closed form (solitons, sech2, possibly truncated)
            lo = a
            if b_trunc is not None and a < b_trunc < b:
                add_const(a, b_trunc, 0.0)
                hard.append(b_trunc)
                lo = b_trunc
            n = max(int(np.ceil((b - lo) / DEFAULT_DX)), 8)
            kap = params.get("kappas") or (params.get("base_params") or {}).get(
                "kappas")
            if kap is not None and max(kap) > 1.5:
                n *= 2
            xs = np.linspace(lo, b, n + 1)
            qs = _exact_q(tag, params, xs)
            cs = CubicSpline(xs, qs)
            segs.append((cs.x, cs.c))

    # right tail region (always decays to zero)
    a, b = max(rcut, x_lo), x_hi
    if b > a:
        add_const(a, b, 0.0)

    breaks = [segs[0][0]]
    coeffs = [segs[0][1]]
    for bp, c in segs[1:]:
        breaks.append(bp[1:])
        coeffs.append(c)
    breaks = np.concatenate(breaks)
    coeffs = np.concatenate(coeffs, axis=1)
    hard = sorted({h for h in hard if x_lo < h < x_hi})
    return breaks, coeffs, np.asarray(hard, dtype=float)


def right_moment(p, a):
    """int_a^inf (x - a) |q(x)| dx, used for the "large enough" certificate."""
    rcut = _right_cutoff(p)
    if a >= rcut:
        return 0.0
    xs = np.linspace(a, rcut, max(int((rcut - a) / 0.005), 64) + 1)
    qs = np.abs(sample(p, xs))
    return float(np.trapezoid((xs - a) * qs, xs))


def choose_a(p, margin=0.5):
    """Smallest grid point with int_a^inf (x-a)|q| < margin."""
    for a in np.arange(min(0.0, p.x[0]), p.x[-1], 0.25):
        if right_moment(p, a) < margin:
            return float(a)
    return float(_right_cutoff(p))


def weighted_right_tail(p):
    """Numerical check of int^inf w(x)|q(x)| dx with w = exp(gamma x^(1/delta))."""
    rt = p.right_tail
    x0 = max(0.0, p.x[0])
    xs = np.linspace(x0, p.x[-1], 2001)
    w = np.exp(rt.gamma * np.maximum(xs, 0.0) ** (1.0 / rt.delta)) \
        if rt.gamma > 0 else np.ones_like(xs)
    return float(np.trapezoid(w * np.abs(sample(p, xs)), xs))
