"""Operator-level identity checks and transforms on radial grids.

These wrap the assembled forms into the quantities with known exact
counterparts: the power-law eigen-identity, the ground-state
representation, the cutoff commutator, and the Kelvin inversion.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .forms import (
    PairFormEngine,
    assemble,
    field_call,
    get_override_operator,
    weighted_energy_matrix,
)
from .grid import RadialField, RadialGrid
from .specfun import psi


def power_law_residual(
    grid: RadialGrid,
    n: float,
    alpha: float,
    beta: float,
    window: tuple[float, float] = (0.3, 0.7),
) -> float:
    """Max relative deviation of the discrete operator on r^(-beta) from
    psi(beta) r^(-alpha-beta), over an interior window of the log range.

    The field is continued analytically (same power law) beyond both grid
    ends, overriding the Dirichlet zero-extension, so the discrete action
    can be compared against the whole-space identity.
    """
    if not (0.0 < beta < n - alpha):
        raise DomainError(f"power-law residual needs 0 < beta < n - alpha, got {beta}")
    op = get_override_operator(grid, n, alpha)
    u = grid.nodes ** (-beta)
    lap = op.nodal_action(u, inner=("power", beta), outer=("power", beta))
    target = psi(n, alpha, beta) * grid.nodes ** (-alpha - beta)
    lo = int(round(window[0] * (grid.N - 1)))
    hi = int(round(window[1] * (grid.N - 1)))
    return float(np.max(np.abs(lap[lo:hi] - target[lo:hi]) / np.abs(target[lo:hi])))


def ground_state_identity_gap(
    grid: RadialGrid, n: float, alpha: float, beta: float, u: RadialField
) -> float:
    """Relative gap in the ground-state representation for a compactly
    supported field u:

        E(u) = psi(beta) * int u^2/|x|^alpha + E_beta(|x|^beta u),

    where E is the full nonlocal energy and E_beta the
    (|x| |y|)^(-beta)-weighted one.  Both sides use this module's quadrature.
    """
    if not (0.0 < beta < 0.5 * (n - alpha)):
        raise DomainError(f"need 0 < beta < (n-alpha)/2, got {beta}")
    forms = assemble(grid, n, alpha)
    lhs = float(u.values @ forms.gagliardo @ u.values)
    v = grid.nodes**beta * u.values
    W = weighted_energy_matrix(grid, n, alpha, beta)
    rhs = psi(n, alpha, beta) * float(np.sum(forms.hardy * u.values**2)) + float(v @ W @ v)
    return abs(lhs - rhs) / abs(lhs)


def _check_cutoff(eta: RadialField) -> None:
    v = eta.values
    if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-12):
        raise DomainError("cutoff field must take values in [0, 1]")


def b_eta_form(
    grid: RadialGrid,
    n: float,
    alpha: float,
    eta: RadialField,
    phi: RadialField,
    psi_f: RadialField,
    orders: float = 1.0,
) -> float:
    """Commutator form <eta phi, psi> - <phi, eta psi>, evaluated from its
    double-integral representation

        (C/2) IntInt (eta(x)-eta(y)) (phi(y) psi(x) - phi(x) psi(y)) / |x-y|^(n+alpha).

    The Hardy parts of the brackets cancel pointwise and are omitted.
    """
    _check_cutoff(eta)
    eng = PairFormEngine(grid, n, alpha, orders=orders)
    return eng.commutator_form(field_call(eta), field_call(phi), field_call(psi_f))


def b_eta_bracket_difference(
    grid: RadialGrid,
    n: float,
    alpha: float,
    eta: RadialField,
    phi: RadialField,
    psi_f: RadialField,
    orders: float = 1.0,
) -> float:
    """The same commutator evaluated as the difference of the two brackets,
    for the definition-consistency check against b_eta_form.
    """
    eng = PairFormEngine(grid, n, alpha, orders=orders)
    e, p, s = field_call(eta), field_call(phi), field_call(psi_f)
    return eng.difference_form(lambda x: e(x) * p(x), s) - eng.difference_form(
        p, lambda x: e(x) * s(x)
    )


def kelvin_transform(u: RadialField, n: float, alpha: float) -> RadialField:
    """w(x) = |x|^(alpha-n) u(x/|x|^2) on the reflected grid [1/R, 1/r_min].

    Log-uniform grids are closed under inversion, so nodal values map
    exactly: no interpolation is involved.
    """
    refl = u.grid.reflected()
    vals = refl.nodes ** (alpha - n) * u.values[::-1]
    return RadialField(refl, vals)
