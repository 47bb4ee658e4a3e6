"""Closed-form spectral arithmetic for the operator (-Delta)^(alpha/2) - gamma/|x|^alpha.

Everything here is an exact formula in Gamma functions plus one scalar
root-find.  The central object is the symbol

    psi(n, alpha, beta) = 2^alpha * G((n-b)/2) G((a+b)/2) / (G((n-b-a)/2) G(b/2)),

which maps a power-law exponent beta to the eigen-coefficient of the
fractional Laplacian acting on |x|^(-beta).  Its two preimages of a
coupling gamma are the decay exponents beta_minus / beta_plus, and its
value at the symmetry point (n-alpha)/2 is the Hardy constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# Lanczos approximation, g = 607/128, 15 coefficients (Boost/GSL parameter
# set); relative error of exp(log_gamma) below ~1e-15 on the positive axis.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_LOG_SQRT_2PI = 0.91893853320467274178


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    s = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        s += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(s)


def log_abs_gamma_negative(x: float) -> float:
    """log|Gamma(x)| for non-integer x < 0, via the reflection formula."""
    x = float(x)
    if x >= 0.0 or x == math.floor(x):
        raise DomainError(f"need a negative non-integer argument, got {x}")
    return math.log(math.pi) - math.log(abs(math.sin(math.pi * x))) - log_gamma(1.0 - x)


def hardy_constant(n: float, alpha: float) -> float:
    """Best constant in the fractional Hardy inequality, 2^a G^2((n+a)/4)/G^2((n-a)/4)."""
    n, alpha = float(n), float(alpha)
    if not (0.0 < alpha < n):
        raise DomainError(f"hardy_constant requires 0 < alpha < n, got alpha={alpha}, n={n}")
    return math.exp(
        alpha * math.log(2.0)
        + 2.0 * log_gamma((n + alpha) / 4.0)
        - 2.0 * log_gamma((n - alpha) / 4.0)
    )


def c_n_alpha(n: float, alpha: float) -> float:
    """Normalization constant of the Gagliardo form, 2^a G((n+a)/2) / (pi^(n/2) |G(-a/2)|)."""
    n, alpha = float(n), float(alpha)
    if not (0.0 < alpha < 2.0):
        raise DomainError(f"c_n_alpha requires 0 < alpha < 2, got {alpha}")
    return math.exp(
        alpha * math.log(2.0)
        + log_gamma((n + alpha) / 2.0)
        - 0.5 * n * math.log(math.pi)
        - log_abs_gamma_negative(-alpha / 2.0)
    )


def psi(n: float, alpha: float, beta: float) -> float:
    """Eigen-coefficient of (-Delta)^(alpha/2) on the power law |x|^(-beta).

    Defined for 0 <= beta <= n - alpha, with the limit conventions
    psi(0) = psi(n - alpha) = 0.
    """
    n, alpha, beta = float(n), float(alpha), float(beta)
    if not (0.0 < alpha < n):
        raise DomainError(f"psi requires 0 < alpha < n, got alpha={alpha}, n={n}")
    if beta < 0.0 or beta > n - alpha:
        raise DomainError(f"psi requires 0 <= beta <= n - alpha, got beta={beta}")
    if beta == 0.0 or beta == n - alpha:
        return 0.0
    return math.exp(
        alpha * math.log(2.0)
        + log_gamma((n - beta) / 2.0)
        + log_gamma((alpha + beta) / 2.0)
        - log_gamma((n - beta - alpha) / 2.0)
        - log_gamma(beta / 2.0)
    )


def beta_pm(n: float, alpha: float, gamma: float) -> tuple[float, float]:
    """The two solutions of psi(beta) = gamma, as (beta_minus, beta_plus).

    beta_minus lies in [0, (n-alpha)/2], beta_plus = n - alpha - beta_minus.
    Endpoints follow the boundary conventions: gamma = 0 gives (0, n-alpha)
    and gamma = hardy_constant gives the double root at (n-alpha)/2.
    """
    n, alpha, gamma = float(n), float(alpha), float(gamma)
    gh = hardy_constant(n, alpha)
    if gamma < 0.0 or gamma > gh * (1.0 + 1e-12):
        raise DomainError(f"beta_pm requires 0 <= gamma <= gamma_H = {gh}, got {gamma}")
    width = n - alpha
    if gamma == 0.0:
        return 0.0, width
    if gamma >= gh:
        return 0.5 * width, 0.5 * width
    # bisection on the strictly increasing branch (0, (n-alpha)/2)
    lo, hi = 0.0, 0.5 * width
    while hi - lo > 1e-12 * max(1.0, width):
        mid = 0.5 * (lo + hi)
        if psi(n, alpha, mid) < gamma:
            lo = mid
        else:
            hi = mid
    bm = 0.5 * (lo + hi)
    return bm, width - bm


def gamma_crit(n: float, alpha: float) -> float:
    """Coupling threshold above which |x|^(-beta_plus) is locally square integrable.

    Equals psi(n/2) when n > 2*alpha, 0 when n = 2*alpha, and -1 when n < 2*alpha.
    """
    n, alpha = float(n), float(alpha)
    if not (0.0 < alpha < n):
        raise DomainError(f"gamma_crit requires 0 < alpha < n, got alpha={alpha}, n={n}")
    if n > 2.0 * alpha:
        return psi(n, alpha, 0.5 * n)
    if n == 2.0 * alpha:
        return 0.0
    return -1.0


def crit_exponent(n: float, alpha: float, s: float) -> float:
    """Critical weighted Sobolev exponent 2(n-s)/(n-alpha)."""
    n, alpha, s = float(n), float(alpha), float(s)
    if not (0.0 <= s <= alpha < n):
        raise DomainError(f"crit_exponent requires 0 <= s <= alpha < n, got s={s}, alpha={alpha}, n={n}")
    return 2.0 * (n - s) / (n - alpha)


@dataclass(frozen=True)
class ProblemParams:
    """Scalar parameters (n, alpha, s, gamma, lam) with their validity invariants.

    n may be any real >= 1 (the formulas are meromorphic in n); alpha must
    satisfy 0 < alpha < min(2, n); 0 <= s <= alpha; 0 <= gamma < gamma_H;
    lam >= 0.  Construction raises DomainError otherwise.
    """

    n: float
    alpha: float
    s: float = 0.0
    gamma: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.n >= 1.0:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not (0.0 < self.alpha < 2.0 and self.alpha < self.n):
            raise DomainError(
                f"alpha must satisfy 0 < alpha < min(2, n), got alpha={self.alpha}, n={self.n}"
            )
        if not (0.0 <= self.s <= self.alpha):
            raise DomainError(f"s must satisfy 0 <= s <= alpha, got s={self.s}")
        gh = hardy_constant(self.n, self.alpha)
        if not (0.0 <= self.gamma < gh):
            raise DomainError(f"gamma must satisfy 0 <= gamma < gamma_H = {gh}, got {self.gamma}")
        if self.lam < 0.0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")

    @property
    def gamma_hardy(self) -> float:
        return hardy_constant(self.n, self.alpha)

    @property
    def gamma_critical(self) -> float:
        return gamma_crit(self.n, self.alpha)

    @property
    def beta_minus(self) -> float:
        return beta_pm(self.n, self.alpha, self.gamma)[0]

    @property
    def beta_plus(self) -> float:
        return beta_pm(self.n, self.alpha, self.gamma)[1]

    @property
    def q_crit(self) -> float:
        """The critical exponent 2(n-s)/(n-alpha)."""
        return crit_exponent(self.n, self.alpha, self.s)

    def with_(self, **kw) -> "ProblemParams":
        d = dict(n=self.n, alpha=self.alpha, s=self.s, gamma=self.gamma, lam=self.lam)
        d.update(kw)
        return ProblemParams(**d)
