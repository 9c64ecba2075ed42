"""Mode-indexed bookkeeping: spectral exponents, critical parameters,
weighted norms, and conjugate (reality) symmetry.

Conventions
-----------
zeta_n = sqrt(n^2 + i*mu*n) with the principal square root (Re > 0 for n != 0),
xi_n = Re(zeta_n).  The closed-form real/imaginary parts

    xi_n      = |n|/sqrt(2) * [ (1 + (mu/n)^2)^(1/2) + 1 ]^(1/2)
    Im zeta_n =  n /sqrt(2) * [ (1 + (mu/n)^2)^(1/2) - 1 ]^(1/2)

are the ground truth; the principal square root is the implementation and is
cross-checked against them at table construction.

Weighted norms:

    ||c||_{B_kappa}        = sup_n (1+|n|)^kappa |c_n|
    ||f||_{B_{alpha,kappa}} = sup_n sup_r r^alpha (1+|n|)^kappa |f_n(r)|
    ||f||_{U^m_{alpha,kappa}} = sum_{l<=m} ||d^l f||_{B_{alpha+l,kappa-l}}

Suprema over r are taken on the grid nodes; every stored profile is piecewise
power-law with monotone local exponents, so cell-interior maxima sit at nodes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import InputError
from .grid_quadrature import RadialFunction, RadialGrid

MU_CRIT = math.sqrt(48.0)


# ---------------------------------------------------------------------------
# spectral exponents
# ---------------------------------------------------------------------------

def zeta_exact(mu: float, n: int) -> complex:
    """Principal square root of n^2 + i*mu*n."""
    if n == 0:
        return 0.0 + 0.0j
    return cmath.sqrt(complex(n * n, mu * n))


def xi_exact(mu: float, n: int) -> float:
    """Re(zeta_n) from the closed form."""
    if n == 0:
        return 0.0
    t = math.sqrt(1.0 + (mu / n) ** 2)
    return abs(n) / math.sqrt(2.0) * math.sqrt(t + 1.0)


def rho(mu: float) -> float:
    """min over n != 0 of xi_n, attained at n = +-1."""
    return math.sqrt(math.sqrt(1.0 + mu * mu) + 1.0) / math.sqrt(2.0)


def alpha_margin(mu: float) -> float:
    """Largest admissible radial weight scale at angular velocity mu: (1/2)min(rho-2, 1)."""
    return 0.5 * min(rho(mu) - 2.0, 1.0)


@dataclass(frozen=True)
class ZetaTable:
    """zeta_n and xi_n for |n| <= N at a fixed mu (entry n = 0 is unused)."""

    mu: float
    N: int
    zeta: np.ndarray   # shape (2N+1,), index n + N
    xi: np.ndarray     # shape (2N+1,), real

    def __getitem__(self, n: int) -> complex:
        if n == 0 or abs(n) > self.N:
            raise InputError(f"zeta_n undefined for n = {n} (N = {self.N})")
        return complex(self.zeta[n + self.N])

    def xi_of(self, n: int) -> float:
        if n == 0 or abs(n) > self.N:
            raise InputError(f"xi_n undefined for n = {n} (N = {self.N})")
        return float(self.xi[n + self.N])


def compute_zeta(mu: float, N: int) -> ZetaTable:
    """Tabulate zeta_n, xi_n for 1 <= |n| <= N, validated against the closed forms."""
    N = int(N)
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    zeta = np.zeros(2 * N + 1, dtype=complex)
    xi = np.zeros(2 * N + 1, dtype=float)
    for n in range(-N, N + 1):
        if n == 0:
            continue
        z = zeta_exact(mu, n)
        x = xi_exact(mu, n)
        if abs(z.real - x) > 1e-13 * max(1.0, abs(x)):
            raise InputError(f"principal sqrt disagrees with closed form at n = {n}")
        zeta[n + N] = z
        xi[n + N] = x
    return ZetaTable(mu=float(mu), N=N, zeta=zeta, xi=xi)


# ---------------------------------------------------------------------------
# critical parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalParams:
    mu_crit: float
    rho_mu: float       # at mu_0
    alpha_mu: float     # at mu_0
    mu_minus: float
    mu_plus: float
    alpha: float        # radial weight, evaluated at mu_minus


def critical_params(mu_0: float) -> CriticalParams:
    """Interval [mu_-, mu_+] around mu_0 and the radial weight alpha.

    mu_- = (mu_0 + mu_crit)/2, mu_+ = (2 mu_0 + mu_crit)/2, and
    alpha = (1/4) min(rho(mu_-) - 2, 1), which guarantees
    0 < alpha <= 1/4 and alpha < alpha_margin(mu) for every mu in the interval.
    """
    if not (mu_0 > MU_CRIT):
        raise InputError(
            f"mu_0 = {mu_0} must exceed the critical angular velocity "
            f"mu_crit = sqrt(48) = {MU_CRIT:.15f}")
    mu_minus = 0.5 * (mu_0 + MU_CRIT)
    mu_plus = 0.5 * (2.0 * mu_0 + MU_CRIT)
    alpha = 0.25 * min(rho(mu_minus) - 2.0, 1.0)
    return CriticalParams(
        mu_crit=MU_CRIT,
        rho_mu=rho(mu_0),
        alpha_mu=alpha_margin(mu_0),
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# boundary coefficient sequences
# ---------------------------------------------------------------------------

@dataclass
class BoundaryCoeffs:
    """Finite mode sequence c_n, |n| <= N, optionally pinned to c_0 = 0."""

    N: int
    coeffs: np.ndarray                  # shape (2N+1,), complex, index n + N
    zero_mode_constraint: bool = True

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2 * self.N + 1,):
            raise InputError("coefficient array must have length 2N+1")
        if not np.all(np.isfinite(self.coeffs)):
            raise InputError("boundary coefficients contain non-finite values")
        if self.zero_mode_constraint and self.coeffs[self.N] != 0:
            raise InputError("zero-mode coefficient must vanish in this space")

    @classmethod
    def zeros(cls, N: int, zero_mode_constraint: bool = True) -> "BoundaryCoeffs":
        return cls(N, np.zeros(2 * N + 1, dtype=complex), zero_mode_constraint)

    @classmethod
    def from_dict(cls, N: int, entries: Mapping[int, complex],
                  zero_mode_constraint: bool = True) -> "BoundaryCoeffs":
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, v in entries.items():
            if abs(n) > N:
                raise InputError(f"mode {n} outside |n| <= {N}")
            c[n + N] = v
        return cls(N, c, zero_mode_constraint)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.N:
            raise InputError(f"mode {n} outside |n| <= {self.N}")
        return complex(self.coeffs[n + self.N])

    def __add__(self, other: "BoundaryCoeffs") -> "BoundaryCoeffs":
        if self.N != other.N:
            raise InputError("mode cutoffs differ")
        return BoundaryCoeffs(self.N, self.coeffs + other.coeffs,
                              self.zero_mode_constraint and other.zero_mode_constraint)

    def __sub__(self, other: "BoundaryCoeffs") -> "BoundaryCoeffs":
        if self.N != other.N:
            raise InputError("mode cutoffs differ")
        return BoundaryCoeffs(self.N, self.coeffs - other.coeffs,
                              self.zero_mode_constraint and other.zero_mode_constraint)

    def __mul__(self, scalar) -> "BoundaryCoeffs":
        return BoundaryCoeffs(self.N, complex(scalar) * self.coeffs,
                              self.zero_mode_constraint)

    __rmul__ = __mul__

    def conj_symmetric(self) -> bool:
        flipped = np.conj(self.coeffs[::-1])
        scale = np.max(np.abs(self.coeffs)) or 1.0
        return bool(np.max(np.abs(self.coeffs - flipped)) <= 1e-12 * scale)


def sequence_norm(c: BoundaryCoeffs, kappa: float) -> float:
    """sup_n (1+|n|)^kappa |c_n|."""
    n = np.arange(-c.N, c.N + 1)
    return float(np.max((1.0 + np.abs(n)) ** kappa * np.abs(c.coeffs)))


# ---------------------------------------------------------------------------
# spectral fields
# ---------------------------------------------------------------------------

@dataclass
class SpectralField:
    """Stream-function and vorticity coefficients for |n| <= N on one grid."""

    grid: RadialGrid
    N: int
    gamma: Dict[int, RadialFunction]
    w: Dict[int, RadialFunction]

    def __post_init__(self):
        for store, name in ((self.gamma, "gamma"), (self.w, "w")):
            for n in range(-self.N, self.N + 1):
                if n not in store:
                    raise InputError(f"{name}[{n}] missing; all |n| <= N must be present")
                if store[n].grid != self.grid:
                    raise InputError(f"{name}[{n}] lives on a different grid")

    @classmethod
    def zero(cls, grid: RadialGrid, N: int) -> "SpectralField":
        g = {n: RadialFunction.zeros(grid) for n in range(-N, N + 1)}
        w = {n: RadialFunction.zeros(grid) for n in range(-N, N + 1)}
        return cls(grid, N, g, w)

    def combine(self, other: "SpectralField", sa: complex, sb: complex) -> "SpectralField":
        if self.N != other.N or self.grid != other.grid:
            raise InputError("fields are incompatible")
        g = {n: self.gamma[n]._combine(other.gamma[n], sa, sb) for n in self.gamma}
        w = {n: self.w[n]._combine(other.w[n], sa, sb) for n in self.w}
        return SpectralField(self.grid, self.N, g, w)

    def __add__(self, other):
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, scalar):
        s = complex(scalar)
        return SpectralField(self.grid, self.N,
                             {n: s * f for n, f in self.gamma.items()},
                             {n: s * f for n, f in self.w.items()})

    __rmul__ = __mul__


def enforce_reality(x: SpectralField) -> SpectralField:
    """Symmetrize: c_n <- (c_n + conj(c_{-n}))/2 for both component maps.

    Idempotent; a field with conjugate-symmetric coefficients synthesizes to
    real physical fields.
    """
    def sym(store: Dict[int, RadialFunction]) -> Dict[int, RadialFunction]:
        out = {}
        for n in range(-x.N, x.N + 1):
            out[n] = store[n]._combine(store[-n].conj_reflected(), 0.5, 0.5)
        return out

    return SpectralField(x.grid, x.N, sym(x.gamma), sym(x.w))


def max_asymmetry(x: SpectralField) -> float:
    """Largest |c_n - conj(c_{-n})| over both component maps (diagnostic)."""
    worst = 0.0
    for store in (x.gamma, x.w):
        for n in range(0, x.N + 1):
            d = store[n].values - np.conj(store[-n].values)
            worst = max(worst, float(np.max(np.abs(d))))
    return worst


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormParams:
    """Weights of the decay norms: r^alpha radially, (1+|n|)^kappa across modes,
    with m derivatives (m < kappa)."""

    alpha: float
    kappa: float
    m: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise InputError("alpha must be positive")
        if self.m not in (0, 1, 2):
            raise InputError("derivative order m must be 0, 1, or 2")
        if not (self.m < self.kappa):
            raise InputError("need m < kappa")


ModeMap = Mapping[int, RadialFunction]


def _mode_sup(f: RadialFunction, alpha: float) -> float:
    vals = np.abs(f.values)
    if not np.all(np.isfinite(vals)):
        raise InputError("non-finite values in norm evaluation")
    return float(np.max(np.exp(alpha * f.grid.x) * vals))


def _b_norm(modes: ModeMap, alpha: float, kappa: float, deriv: int = 0) -> float:
    worst = 0.0
    for n, f in modes.items():
        arr = (f.values, f.d1, f.d2)[deriv]
        if arr is None:
            raise InputError(f"derivative order {deriv} unavailable for mode {n}")
        g = RadialFunction(f.grid, arr)
        worst = max(worst, (1.0 + abs(n)) ** kappa * _mode_sup(g, alpha))
    return worst


def weighted_norm(x: Union[ModeMap, BoundaryCoeffs], p: NormParams,
                  which: str = "B") -> float:
    """Weighted decay norm of a mode map (or a boundary sequence).

    which = "B": sup-norm with weights r^alpha (1+|n|)^kappa.
    which = "U": sum over l <= m of the B_{alpha+l, kappa-l} norms of the
    l-th analytic derivatives.
    """
    if isinstance(x, BoundaryCoeffs):
        if which != "B":
            raise InputError("U-norms are undefined for boundary sequences")
        return sequence_norm(x, p.kappa)
    if which == "B":
        return _b_norm(x, p.alpha, p.kappa, 0)
    if which == "U":
        total = 0.0
        for l in range(p.m + 1):
            total += _b_norm(x, p.alpha + l, p.kappa - l, l)
        return total
    raise InputError(f"unknown norm kind {which!r}")


def solution_norms(x: SpectralField, alpha: float, kappa: float) -> Dict[str, float]:
    """The norm pair in which the linear solver is bounded:
    gamma in U^2_{alpha, kappa+4}, w in U^2_{alpha+2, kappa+2}."""
    return {
        "gamma_U2": weighted_norm(x.gamma, NormParams(alpha, kappa + 4.0, 2), "U"),
        "w_U2": weighted_norm(x.w, NormParams(alpha + 2.0, kappa + 2.0, 2), "U"),
    }


def combined_norm(x: SpectralField, alpha: float, kappa: float) -> float:
    n = solution_norms(x, alpha, kappa)
    return n["gamma_U2"] + n["w_U2"]
