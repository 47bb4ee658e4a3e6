"""Disk cache for assembled Gagliardo matrices.

Assembly is the expensive, gamma-independent step, so matrices are cached
keyed by (n, alpha, N, r_min, R) in content-addressed CSV files.  Layout:
one header line carrying the key, one line of grid nodes, then the N
matrix rows; floats are written with %.17g so the round-trip is exact.
FRACHS_CACHE_DIR overrides the location (default ~/.cache/frachs).
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .forms import AssembledForms, assemble
from .grid import RadialGrid


def cache_dir() -> Path:
    env = os.environ.get("FRACHS_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "frachs"


def form_key(n: float, alpha: float, N: int, r_min: float, R: float) -> str:
    return f"n={float(n):.17g} alpha={float(alpha):.17g} N={int(N)} r_min={float(r_min):.17g} R={float(R):.17g}"


def _path_for(key: str) -> Path:
    digest = hashlib.sha256(key.encode()).hexdigest()[:20]
    return cache_dir() / f"gagliardo-{digest}.csv"


def save_gagliardo(grid: RadialGrid, alpha: float, G: np.ndarray) -> Path:
    key = form_key(grid.n, alpha, grid.N, grid.r_min, grid.R)
    path = _path_for(key)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# frachs-gagliardo-v1 {key}"]
    lines.append(",".join(f"{r:.17g}" for r in grid.nodes))
    for row in G:
        lines.append(",".join(f"{v:.17g}" for v in row))
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load_gagliardo(grid: RadialGrid, alpha: float) -> np.ndarray | None:
    key = form_key(grid.n, alpha, grid.N, grid.r_min, grid.R)
    path = _path_for(key)
    if not path.exists():
        return None
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    if not lines or not lines[0].startswith("# frachs-gagliardo-v1 "):
        raise ConfigError(f"unrecognized cache file {path}")
    if lines[0][len("# frachs-gagliardo-v1 ") :] != key:
        return None
    nodes = np.array([float(x) for x in lines[1].split(",")])
    if len(nodes) != grid.N or not np.allclose(nodes, grid.nodes, rtol=1e-15, atol=0.0):
        return None
    G = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
    if G.shape != (grid.N, grid.N):
        raise ConfigError(f"cache file {path} has shape {G.shape}, expected ({grid.N}, {grid.N})")
    return G


def assemble_cached(grid: RadialGrid, n: float, alpha: float, s: float = 0.0) -> AssembledForms:
    """Like forms.assemble but with the gagliardo matrix persisted on disk."""
    G = load_gagliardo(grid, alpha)
    if G is None:
        forms = assemble(grid, n, alpha, s=s)
        save_gagliardo(grid, alpha, forms.gagliardo)
        return forms
    # rebuild the cheap diagonal parts, reuse the cached matrix
    from .grid import sphere_area
    from .specfun import c_n_alpha

    area = sphere_area(n)
    return AssembledForms(
        grid=grid,
        n=float(n),
        alpha=float(alpha),
        s=float(s),
        gagliardo=G,
        hardy=area * grid.weighted_integrals(n - alpha),
        mass=area * grid.weighted_integrals(n),
        sobolev_weight=area * grid.weighted_integrals(n - s),
        pref=0.5 * c_n_alpha(n, alpha) * area,
    )
