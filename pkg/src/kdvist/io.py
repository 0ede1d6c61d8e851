"""File formats: scattering-data files, solution-grid CSV, run manifests.

All CSV files carry a header row with a fixed column order; missing values
are written as nan.  Manifests are JSON with a canonical config hash so
identical configurations map to identical artifacts.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .scattering import ScatteringData

SCATTER_COLUMNS = ("k", "R_re", "R_im", "T_re", "T_im", "unitarity_residual")
RHO_COLUMNS = ("s", "density")
SOLUTION_COLUMNS = ("x", "t", "q", "logdet", "lambda_min", "residual")


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in row])


def save_scattering(S, directory):
    """Persist ScatteringData as scattering.csv [+ rho.csv] + meta.json."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    T = S.T if S.T is not None else np.full(len(S.k_grid), np.nan + 0j)
    resid = S.unitarity_residual if S.unitarity_residual is not None \
        else np.full(len(S.k_grid), np.nan)
    _write_csv(
        d / "scattering.csv", SCATTER_COLUMNS,
        [(float(k), float(r.real), float(r.imag), float(t.real),
          float(t.imag), float(u))
         for k, r, t, u in zip(S.k_grid, S.R, T, resid)],
    )
    if S.rho_density is not None:
        _write_csv(
            d / "rho.csv", RHO_COLUMNS,
            [(float(s), float(w)) for s, w in zip(S.rho_s, S.rho_density)],
        )
    meta = {
        "t": S.t,
        "a": S.a,
        "h0": S.h0,
        "bound_states": [[float(k), float(c)] for k, c in S.bound_states],
        "rho_atoms": [[float(s), float(m)] for s, m in S.rho_atoms],
        "flagged": [int(i) for i in S.flagged],
        "has_T": S.T is not None,
        "has_density": S.rho_density is not None,
    }
    with open(d / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return d


def _read_csv(path, columns):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != tuple(columns):
            raise ConfigError(f"{path}: expected columns {columns}, "
                              f"found {header}")
        data = [[float(v) for v in row] for row in reader]
    return np.asarray(data, dtype=float).reshape(-1, len(columns))


def load_scattering(directory):
    """Inverse of save_scattering."""
    d = Path(directory)
    with open(d / "meta.json") as fh:
        meta = json.load(fh)
    tab = _read_csv(d / "scattering.csv", SCATTER_COLUMNS)
    k = tab[:, 0]
    R = tab[:, 1] + 1j * tab[:, 2]
    T = tab[:, 3] + 1j * tab[:, 4] if meta["has_T"] else None
    resid = tab[:, 5] if meta["has_T"] else None
    rho_s = rho_density = None
    if meta["has_density"]:
        rho = _read_csv(d / "rho.csv", RHO_COLUMNS)
        rho_s, rho_density = rho[:, 0], rho[:, 1]
    return ScatteringData(
        k_grid=k, R=R, T=T,
        bound_states=tuple((k_, c) for k_, c in meta["bound_states"]),
        rho_atoms=tuple((s, m) for s, m in meta["rho_atoms"]),
        rho_s=rho_s, rho_density=rho_density,
        h0=float(meta["h0"]), a=float(meta["a"]), t=float(meta["t"]),
        unitarity_residual=resid,
        flagged=tuple(int(i) for i in meta["flagged"]),
    )


def save_solution_grid(G, path):
    """SolutionGrid -> flat CSV with the fixed solution column order."""
    rows = []
    for i, t in enumerate(G.t_values):
        for j, x in enumerate(G.x_values):
            rows.append((
                float(x), float(t), float(G.q[i, j]),
                float(G.logdet[i, j]), float(G.lambda_min[i, j]),
                float(G.residual[i, j]),
            ))
    _write_csv(path, SOLUTION_COLUMNS, rows)


def save_samples(path, x_values, t_values, q):
    """Oracle samples in the same schema (diagnostic columns nan)."""
    q = np.atleast_2d(q)
    rows = []
    for i, t in enumerate(np.atleast_1d(t_values)):
        for j, x in enumerate(x_values):
            rows.append((float(x), float(t), float(q[i, j]),
                         float("nan"), float("nan"), float("nan")))
    _write_csv(path, SOLUTION_COLUMNS, rows)


def load_solution(path):
    """Flat solution CSV -> dict of column arrays."""
    tab = _read_csv(path, SOLUTION_COLUMNS)
    return {name: tab[:, i] for i, name in enumerate(SOLUTION_COLUMNS)}


def config_hash(cfg):
    """Canonical sha256 of a JSON-serializable configuration."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(path, cfg, outputs, certificates=None):
    import scipy

    manifest = {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "outputs": [str(p) for p in outputs],
        "certificates": certificates or {},
        "versions": {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
