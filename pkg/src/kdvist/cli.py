"""Command-line front end: kdvist <command> --config <path> [--set k=v ...].

Commands: scatter, rho, evolve, solve, glm-check, oracle, validate,
svd-report.  Configuration is a single JSON file; --set overrides use
dotted keys with JSON-parsed values (e.g. --set x_grid.count=81).  Exit
codes: 0 success, 1 computational error, 2 configuration error.
"""

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import hankel, io, oracle
from . import potentials as pot
from . import scattering as sc
from . import steplike as st
from .errors import ConfigError, KdvistError

DEFAULT_CONFIG = {
    "potential": {"tag": "one_soliton", "params": {}},
    "a": None,
    "k_grid": {"min": 0.005, "max": 40.0, "count": 2400},
    "s_points": 79,
    "x_grid": {"min": -10.0, "max": 10.0, "count": 41},
    "t_values": [0.0, 0.5, 1.0],
    "tolerances": {"route": 1e-3, "unitarity": 1e-6, "split": 1e-7},
    "discretization": {"L": None, "n": None},
    "svd": {"x": 0.0, "t": 0.1, "n": 160},
    "oracle": {"domain_half_length": 32.0, "modes": 1024, "dt": 1e-3},
    "scattering_dir": None,
    "output_dir": "kdvist-out",
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path, overrides=()):
    """Config file + dotted --set overrides, validated against defaults."""
    try:
        with open(path) as fh:
            user = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    unknown = set(user) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = _merge(DEFAULT_CONFIG, user)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key {key!r}")
            node = node[part]
        if parts[0] not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    _validate_config(cfg)
    return cfg


def _validate_config(cfg):
    for name in ("k_grid", "x_grid"):
        g = cfg[name]
        if g["count"] < 1 or g["min"] >= g["max"]:
            raise ConfigError(f"{name} must have count >= 1 and min < max")
    if not cfg["t_values"]:
        raise ConfigError("t_values must be non-empty")
    if any(t < 0 for t in cfg["t_values"]):
        raise ConfigError("t_values must be >= 0")
    if any(v <= 0 for v in cfg["tolerances"].values()):
        raise ConfigError("all tolerances must be positive")
    if cfg["s_points"] < 1:
        raise ConfigError("s_points must be >= 1")


def _grid(spec):
    return np.linspace(spec["min"], spec["max"], int(spec["count"]))


def build_potential(cfg):
    p = cfg["potential"]
    if "sample_file" in p:
        tab = np.loadtxt(p["sample_file"], delimiter=",", skiprows=1)
        left = pot.TailDescriptor(**p["left_tail"])
        right = pot.TailDescriptor(**p["right_tail"])
        return pot.make_sampled_potential(tab[:, 0], tab[:, 1], left, right)
    return pot.make_catalog_potential(p["tag"], **p.get("params", {}))


def _scattering(cfg):
    if cfg["scattering_dir"]:
        return io.load_scattering(cfg["scattering_dir"])
    p = build_potential(cfg)
    return st.scattering_map(p, _grid(cfg["k_grid"]),
                             s_points=int(cfg["s_points"]), a=cfg["a"])


def _outdir(cfg):
    d = Path(cfg["output_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_scatter(cfg):
    out = _outdir(cfg)
    S = _scattering(cfg)
    io.save_scattering(S, out / "scattering")
    lines = ["bound states (kappa, c):"]
    lines += [f"  {k:.12g}  {c:.12g}" for k, c in S.bound_states] or ["  none"]
    lines.append("rho atoms (s, mass):")
    lines += [f"  {s:.12g}  {m:.12g}" for s, m in S.rho_atoms] or ["  none"]
    if S.unitarity_residual is not None:
        lines.append(
            f"worst unitarity residual: {float(np.max(S.unitarity_residual)):.3e}"
        )
    (out / "scattering" / "summary.txt").write_text("\n".join(lines) + "\n")
    io.write_manifest(out / "scatter.manifest.json", cfg,
                      [out / "scattering"])
    print("\n".join(lines))
    return 0


def cmd_rho(cfg):
    out = _outdir(cfg)
    p = build_potential(cfg)
    a = cfg["a"] if cfg["a"] is not None else pot.choose_a(p)
    h0 = st.spectral_floor(p)
    if h0 <= 0.0:
        raise ConfigError("rho requires a step-like or rough left tail")
    s_grid = np.linspace(0.0, h0, int(cfg["s_points"]) + 2)[1:-1]
    atoms, dens = st.rho_measure(p, a, s_grid)
    io._write_csv(out / "rho.csv", io.RHO_COLUMNS,
                  [(float(s), float(w)) for s, w in zip(s_grid, dens)])
    report = {"a": float(a), "h0": float(h0),
              "atoms": [[float(s), float(m)] for s, m in atoms]}
    (out / "rho.json").write_text(json.dumps(report, indent=2) + "\n")
    io.write_manifest(out / "rho.manifest.json", cfg,
                      [out / "rho.csv", out / "rho.json"])
    print(f"atoms: {report['atoms']}  density nodes: {len(s_grid)}")
    return 0


def cmd_evolve(cfg):
    out = _outdir(cfg)
    S = _scattering(cfg)
    paths = []
    for t in cfg["t_values"]:
        St = sc.evolve_data(S, float(t))
        d = io.save_scattering(St, out / f"evolved_t{t:g}")
        paths.append(d)
    io.write_manifest(out / "evolve.manifest.json", cfg, paths)
    print(f"evolved scattering data written for t = {cfg['t_values']}")
    return 0


def cmd_solve(cfg):
    out = _outdir(cfg)
    S = _scattering(cfg)
    disc = cfg["discretization"]
    G = hankel.solve_grid(
        S, _grid(cfg["x_grid"]), np.asarray(cfg["t_values"], dtype=float),
        n=disc["n"], route_tol=cfg["tolerances"]["route"],
        skip_failures=True,
    )
    io.save_solution_grid(G, out / "solution.csv")
    certs = {
        "L": G.L, "n": G.n,
        "failed_points": int(np.sum(~np.isfinite(G.q))),
        "max_route_residual": float(np.nanmax(G.residual)),
    }
    io.write_manifest(out / "solve.manifest.json", cfg,
                      [out / "solution.csv"], certs)
    print(f"solution grid written; max route residual "
          f"{certs['max_route_residual']:.3e}; "
          f"{certs['failed_points']} failed point(s)")
    return 0


def cmd_glm_check(cfg):
    out = _outdir(cfg)
    S = _scattering(cfg)
    xs = _grid(cfg["x_grid"])
    rows = []
    worst = 0.0
    for t in cfg["t_values"]:
        for x in xs:
            _, d = hankel.solve_q(S, float(x), float(t),
                                  route_tol=np.inf)
            worst = max(worst, d["route_residual"])
            rows.append((float(x), float(t), d["q_trace"],
                         d["q_finite_diff"], d["q_glm"],
                         d["route_residual"]))
    io._write_csv(out / "glm_check.csv",
                  ("x", "t", "q_trace", "q_finite_diff", "q_glm", "residual"),
                  rows)
    io.write_manifest(out / "glm-check.manifest.json", cfg,
                      [out / "glm_check.csv"],
                      {"max_route_residual": worst})
    ok = worst < cfg["tolerances"]["route"]
    print(f"max route residual {worst:.3e} "
          f"({'within' if ok else 'EXCEEDS'} tolerance "
          f"{cfg['tolerances']['route']:g})")
    return 0 if ok else 1


def cmd_oracle(cfg):
    out = _outdir(cfg)
    p = build_potential(cfg)
    ocfg_in = cfg["oracle"]
    t_end = max(float(t) for t in cfg["t_values"])
    if t_end <= 0:
        raise ConfigError("oracle needs a positive time in t_values")
    ocfg = oracle.OracleConfig(
        domain_half_length=float(ocfg_in["domain_half_length"]),
        modes=int(ocfg_in["modes"]), dt=float(ocfg_in["dt"]), t_end=t_end,
    )
    xs = oracle.grid(ocfg)
    q0 = pot.sample(p, xs)
    ts, qs, report = oracle.evolve_pde(q0, ocfg, t_out=cfg["t_values"])
    io.save_samples(out / "oracle.csv", xs, ts, qs)
    io.write_manifest(out / "oracle.manifest.json", cfg,
                      [out / "oracle.csv"], report)
    print(f"oracle run: {report['steps']} steps, mass drift "
          f"{report['mass_drift']:.2e}, energy drift "
          f"{report['energy_drift']:.2e}")
    return 0


def cmd_svd_report(cfg):
    out = _outdir(cfg)
    S = _scattering(cfg)
    x, t = float(cfg["svd"]["x"]), float(cfg["svd"]["t"])
    St = sc.evolve_data(S, t)
    transform = None
    if St.R is not None and np.max(np.abs(St.R)) > hankel.REFLECTION_FLOOR:
        L = hankel.default_truncation(1.0, x)
        transform = hankel.build_fourier_table(
            St, 2.0 * x - 1.0, 2.0 * x + 2.0 * L + 1.0)
    spec = hankel.make_kernel_spec(St, x, transform=transform)
    D = hankel.assemble(spec, n=int(cfg["svd"]["n"]))
    report = hankel.singular_spectrum(D)
    io._write_csv(out / "svd.csv", ("n", "s_n"),
                  [(i + 1, float(s))
                   for i, s in enumerate(report["singular_values"])])
    io.write_manifest(out / "svd.manifest.json", cfg, [out / "svd.csv"],
                      {"fit": report["fit"]})
    print(f"singular spectrum at (x, t) = ({x}, {t}); fit: {report['fit']}")
    return 0


def _check(report, name, ok, detail):
    report.append({"check": name, "status": "pass" if ok else "fail",
                   "detail": detail})
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def _guard(report, name, fn):
    """Run a check block; an escaped solver error becomes a fail row."""
    try:
        fn()
    except KdvistError as exc:
        _check(report, name, False, f"error: {exc}")


def cmd_validate(cfg):
    """Aggregated invariant suite on the catalog; failures are report rows."""
    out = _outdir(cfg)
    report = []
    kg = np.linspace(0.05, 20.0, 500)
    box = pot.make_catalog_potential("box", V0=1.0, length=1.0)

    def check_unitarity():
        Sb = sc.scatter_short_range(box, kg)
        uni = float(np.max(Sb.unitarity_residual))
        _check(report, "unitarity box(1,1)",
               uni < cfg["tolerances"]["unitarity"],
               f"worst residual {uni:.3e}")

    def check_split():
        step = pot.make_catalog_potential("pure_step", h=1.0)
        a = pot.choose_a(step)
        resid, amax = st.analytic_split_check(step, a, kg)
        _check(report, "analytic split pure_step",
               resid < cfg["tolerances"]["split"] and amax <= 2.0 + 1e-6,
               f"residual {resid:.3e}, sup|A| {amax:.6f}")

    def check_a_independence():
        sol = pot.make_catalog_potential("one_soliton")
        sg = np.linspace(0.0, 1.0, 9)[1:-1]
        masses = []
        for aa in (8.0, 11.0):
            atoms, _ = st.rho_measure(sol, aa, sg)
            masses.append(atoms)
        da = abs(masses[0][0][0] - masses[1][0][0])
        dm = abs(masses[0][0][1] - masses[1][0][1])
        _check(report, "a-independence one_soliton", da < 1e-6 and dm < 1e-5,
               f"atom shift {da:.2e}, mass shift {dm:.2e}")

    def check_soliton():
        sol = pot.make_catalog_potential("one_soliton")
        S1 = st.scattering_map(sol, kg)
        xs = np.linspace(-6.0, 6.0, 13)
        worst_err = worst_res = 0.0
        for t in (0.0, 0.5):
            for x in xs:
                q, d = hankel.solve_q(S1, float(x), t, route_tol=np.inf)
                worst_err = max(worst_err,
                                abs(q + 2.0 / np.cosh(x - 4.0 * t) ** 2))
                worst_res = max(worst_res, d["route_residual"])
        _check(report, "soliton round trip", worst_err < 1e-6,
               f"sup error {worst_err:.3e}")
        _check(report, "route agreement", worst_res < 1e-6,
               f"worst residual {worst_res:.3e}")

    def check_positivity():
        Sb_full = st.scattering_map(box, kg)
        lam_rows = []
        advisory = []
        for t in (0.0, 0.05, 0.25):
            St = sc.evolve_data(Sb_full, t) if t > 0 else Sb_full
            L = hankel.default_truncation(1.0, -3.0)
            transform = hankel.build_fourier_table(St, -7.0, 2.0 * L + 7.0)
            for x in (-3.0, 0.0, 3.0):
                D = hankel.assemble(
                    hankel.make_kernel_spec(St, x, transform=transform), L=L)
                _, lam_min = hankel.fredholm_logdet(D)
                (advisory if t == 0.0 else lam_rows).append(lam_min)
        _check(report, "positivity box(1,1) t>0", min(lam_rows) > 0.0,
               f"min lambda {min(lam_rows):.3e} "
               f"(t=0 advisory: {min(advisory):.3e})")

    def check_singular_decay():
        # needs a dense momentum grid: the fit resolves singular values
        # down to ~1e-10 of s_1, so the tabulated symbol must be resolved
        # to the interpolation floor
        kg_dense = np.linspace(0.005, 40.0, 4800)
        Sb_full = st.scattering_map(box, kg_dense)
        St = sc.evolve_data(Sb_full, 0.1)
        L = hankel.default_truncation(1.0, 0.0)
        transform = hankel.build_fourier_table(St, -1.0, 2.0 * L + 1.0)
        D = hankel.assemble(
            hankel.make_kernel_spec(St, 0.0, transform=transform), L=L,
            n=400)
        fit = hankel.singular_spectrum(D)["fit"]
        _check(report, "singular-decay exponent box(1,1)",
               fit is not None and 0.8 <= fit["omega"] <= 1.2
               and fit["r_squared"] > 0.95,
               f"omega {fit['omega']:.3f}, R^2 {fit['r_squared']:.4f}"
               if fit else "fit unavailable")

    _guard(report, "unitarity box(1,1)", check_unitarity)
    _guard(report, "analytic split pure_step", check_split)
    _guard(report, "a-independence one_soliton", check_a_independence)
    _guard(report, "soliton round trip", check_soliton)
    _guard(report, "positivity box(1,1) t>0", check_positivity)
    _guard(report, "singular-decay exponent box(1,1)", check_singular_decay)

    (out / "validate.json").write_text(json.dumps(report, indent=2) + "\n")
    io.write_manifest(out / "validate.manifest.json", cfg,
                      [out / "validate.json"])
    n_fail = sum(r["status"] == "fail" for r in report)
    print(f"{len(report) - n_fail}/{len(report)} checks passed")
    return 0


COMMANDS = {
    "scatter": cmd_scatter,
    "rho": cmd_rho,
    "evolve": cmd_evolve,
    "solve": cmd_solve,
    "glm-check": cmd_glm_check,
    "oracle": cmd_oracle,
    "validate": cmd_validate,
    "svd-report": cmd_svd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kdvist",
        description="KdV Cauchy solver via scattering/Hankel determinants",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        dest="overrides", help="dotted config override")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KdvistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
