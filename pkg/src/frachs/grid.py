"""Log-uniform radial grids and nodal radial fields.

A grid discretizes the annulus [r_min, R] with N nodes equally spaced in
log r.  Nodal fields are interpreted as piecewise-linear functions of
log r, extended by zero outside the annulus (one extra "ghost" cell of
logarithmic width h is kept on each side so that a field with a nonzero
boundary value decays linearly to zero instead of jumping, which keeps
the nonlocal energy finite for alpha >= 1).

Quadrature weights integrate f(r) r^(n-1) dr over [r_min, R] exactly for
piecewise-log-linear f; the same primitive provides the diagonal weight
vectors for the Hardy, mass and |x|^(-s) integrals.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


def _seg_moments(c: float, h: float):
    """(I0, I1) with Ik = h * int_0^1 t^k-weighted hat factors e^{c t h} dt.

    I0 pairs with the value at the left node, I1 with the right node:
    int_cell [u_L (1-t) + u_R t] e^{c(xi_L + t h)} h dt
        = e^{c xi_L} (u_L I0 + u_R I1).
    """
    z = c * h
    if abs(z) < 1e-6:
        a = 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0
        b = 0.5 + z / 3.0 + z * z / 8.0 + z**3 / 30.0
    else:
        a = math.expm1(z) / z
        b = (math.exp(z) * (z - 1.0) + 1.0) / (z * z)
    return h * (a - b), h * b


@dataclass(frozen=True)
class RadialGrid:
    """Log-uniform nodes on [r_min, R] with r^(n-1) dr quadrature weights."""

    n: float
    r_min: float
    R: float
    N: int
    nodes: np.ndarray = field(repr=False, compare=False, default=None)
    weights: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if not (self.r_min > 0.0 and self.R > self.r_min):
            raise DomainError(f"need 0 < r_min < R, got r_min={self.r_min}, R={self.R}")
        if self.N < 16:
            raise ConfigError(f"grid needs at least 16 nodes, got {self.N}")
        xi = np.linspace(math.log(self.r_min), math.log(self.R), self.N)
        object.__setattr__(self, "nodes", np.exp(xi))
        object.__setattr__(self, "weights", self._build_weights(xi))

    def _build_weights(self, xi: np.ndarray) -> np.ndarray:
        return weighted_node_integrals(xi, float(self.n))

    @property
    def log_nodes(self) -> np.ndarray:
        return np.log(self.nodes)

    @property
    def h(self) -> float:
        return (math.log(self.R) - math.log(self.r_min)) / (self.N - 1)

    @property
    def log_span(self) -> float:
        return math.log(self.R) - math.log(self.r_min)

    def node_volumes(self) -> np.ndarray:
        """Sphere-area-weighted node weights: integrates f against dx on the annulus."""
        return sphere_area(self.n) * self.weights

    def weighted_integrals(self, exponent: float) -> np.ndarray:
        """Node weights for int f(r) r^(exponent-1) dr over [r_min, R]."""
        return weighted_node_integrals(self.log_nodes, float(exponent))

    def decile_window(self, lo: int, hi: int) -> tuple[int, int]:
        """Node index range covering log-range deciles [lo, hi)."""
        if not (0 <= lo < hi <= 10):
            raise DomainError(f"bad decile range ({lo}, {hi})")
        a = int(round(lo / 10.0 * (self.N - 1)))
        b = int(round(hi / 10.0 * (self.N - 1)))
        return a, max(b, a + 2)

    def interpolate(self, values: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Piecewise-log-linear interpolation, zero outside [r_min, R]."""
        r = np.asarray(r, dtype=float)
        xi = self.log_nodes
        out = np.interp(np.log(np.maximum(r, 1e-300)), xi, values, left=0.0, right=0.0)
        out = np.where((r < self.r_min) | (r > self.R), 0.0, out)
        return out

    def reflected(self) -> "RadialGrid":
        """The grid for r -> 1/r, log-uniform on [1/R, 1/r_min]."""
        return RadialGrid(n=self.n, r_min=1.0 / self.R, R=1.0 / self.r_min, N=self.N)


def sphere_area(n: float) -> float:
    """Surface measure of the unit sphere in R^n; 2 when n = 1."""
    from .specfun import log_gamma

    n = float(n)
    if n == 1.0:
        return 2.0
    return 2.0 * math.exp(0.5 * n * math.log(math.pi) - log_gamma(0.5 * n))


def weighted_node_integrals(xi: np.ndarray, c: float) -> np.ndarray:
    """Weights w with sum_i w_i f_i = int f(r) r^(c-1) dr for piecewise-log-linear f.

    Exact per cell: the integrand in xi = log r is (hat-linear) * e^{c xi}.
    """
    N = len(xi)
    h = xi[1] - xi[0]
    I0, I1 = _seg_moments(c, h)
    w = np.zeros(N)
    efac = np.exp(c * xi[:-1])
    w[:-1] += I0 * efac
    w[1:] += I1 * efac
    return w


@dataclass
class RadialField:
    """Real nodal values on a grid; semantics u(|x|), zero outside [r_min, R]."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.N,):
            raise DomainError(
                f"field has {self.values.shape} values for a grid of {self.grid.N} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")

    def __call__(self, r) -> np.ndarray:
        return self.grid.interpolate(self.values, r)

    def copy(self) -> "RadialField":
        return RadialField(self.grid, self.values.copy())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,value\n")
        for r, v in zip(self.grid.nodes, self.values):
            buf.write(f"{r:.17g},{v:.17g}\n")
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str, grid: RadialGrid) -> "RadialField":
        lines = text.strip().splitlines()
        if lines[0] != "r,value":
            raise ConfigError("field CSV must start with the 'r,value' header line")
        vals = np.array([float(line.split(",")[1]) for line in lines[1:]])
        return RadialField(grid, vals)


def gaussian_bump(grid: RadialGrid, center: float = None, width_decades: float = 0.8) -> RadialField:
    """Smooth positive bump in log r, supported well inside the grid."""
    xi = grid.log_nodes
    c = math.log(center) if center is not None else 0.5 * (xi[0] + xi[-1])
    w = width_decades * math.log(10.0)
    v = np.exp(-((xi - c) / w) ** 2)
    # kill the far tails so the field is numerically supported inside
    v[np.abs(xi - c) > 4.0 * w] = 0.0
    return RadialField(grid, v)


def cutoff_field(grid: RadialGrid, delta: float) -> RadialField:
    """Radial cutoff: 1 on [0, delta], 0 beyond 2*delta, quintic smoothstep between."""
    if not (0.0 < 2.0 * delta < grid.R):
        raise DomainError(f"need 0 < 2*delta < R, got delta={delta}, R={grid.R}")
    r = grid.nodes
    t = np.clip((r - delta) / delta, 0.0, 1.0)
    v = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    return RadialField(grid, v)


def power_field(grid: RadialGrid, beta: float) -> RadialField:
    """The power law r^(-beta) sampled at the nodes."""
    return RadialField(grid, grid.nodes ** (-float(beta)))
