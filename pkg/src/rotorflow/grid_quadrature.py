"""Graded radial grid on [1, R_max] and product quadrature for power-law kernels.

The grid is geometric (uniform in ln r), so every kernel and every stored
profile is a power law or close to one in log coordinates.  Integrals of the
form

    ∫ s^sigma f(s) ds

are evaluated cell by cell with f replaced by an interpolant and the kernel
integrated exactly; contributions beyond the outermost node come from an
analytic power-law tail model.  Two interpolation bases are available:

``"power"``
    Per-cell power fit: f(s) = f_a (s/a)^p with p from the endpoint ratio.
    Exact (to roundoff) whenever f is a pure power, including complex
    exponents.  Not exactly linear in the data.
``"loglinear"``
    f affine in ln s on each cell.  Exactly linear in the data; O((q-1)^2)
    interpolation error on powers.

Cells where the power fit is degenerate (an endpoint value of zero, or an
extreme endpoint ratio) fall back to the affine rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InputError, TailDivergenceError

# Endpoint-ratio window outside which the per-cell power fit falls back to
# the affine basis.
_RATIO_MIN = 1e-8
_RATIO_MAX = 1e8

# Relative tolerance for the tail-continuity invariant at the outer node.
TAIL_MATCH_TOL = 1e-6

_SMALL = 1e-4  # |z·L| switch to series kernels (covers the |beta+1| < 1e-8 branch)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Geometric grid r_j = q^j on [1, R_max], stored with its log coordinates."""

    nodes: np.ndarray       # shape (J+1,), nodes[0] == 1.0
    x: np.ndarray           # ln(nodes), x[j] = j*h
    h: float                # ln q
    q: float                # common ratio
    J: int                  # cell count
    R_max: float            # realized outer radius, nodes[-1]

    def __post_init__(self):
        if self.nodes[0] != 1.0:
            raise InputError("grid must start at r = 1 exactly")
        if not np.all(np.diff(self.nodes) > 0):
            raise InputError("grid nodes must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return self.J + 1

    def index_of(self, r: float) -> int:
        """Index of the node equal to r (r must be a grid node)."""
        j = int(np.argmin(np.abs(self.nodes - r)))
        if not np.isclose(self.nodes[j], r, rtol=1e-12, atol=0.0):
            raise InputError(f"r = {r} is not a node of this grid")
        return j

    def __eq__(self, other):
        return (
            isinstance(other, RadialGrid)
            and self.J == other.J
            and self.nodes.shape == other.nodes.shape
            and bool(np.all(self.nodes == other.nodes))
        )


def build_grid(R_max: float, J: int) -> RadialGrid:
    """Geometric grid with q = R_max^(1/J); r_0 = 1 exact.

    R_max must exceed 1 and J must be at least 2.
    """
    if not np.isfinite(R_max) or R_max <= 1.0:
        raise InputError(f"R_max must be > 1, got {R_max}")
    J = int(J)
    if J < 2:
        raise InputError(f"J must be >= 2, got {J}")
    h = np.log(R_max) / J
    x = np.arange(J + 1, dtype=float) * h
    nodes = np.exp(x)
    nodes[0] = 1.0
    return RadialGrid(nodes=nodes, x=x, h=h, q=float(np.exp(h)), J=J,
                      R_max=float(nodes[-1]))


# ---------------------------------------------------------------------------
# tail model and radial functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailModel:
    """Analytic continuation f(s) ~ coefficient * s^(-exponent) for s >= R_max."""

    exponent: complex
    coefficient: complex


@dataclass
class RadialFunction:
    """Complex samples of one angular coefficient on a radial grid.

    d1/d2 hold analytic first and second radial derivatives when the
    producing operation supplies them; they are never finite differences.
    """

    grid: RadialGrid
    values: np.ndarray
    d1: Optional[np.ndarray] = None
    d2: Optional[np.ndarray] = None
    tail: Optional[TailModel] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_nodes,):
            raise InputError("values length must match the grid")
        if not np.all(np.isfinite(self.values)):
            raise InputError("radial function contains non-finite values")
        if self.tail is not None:
            self._check_tail_continuity()

    def _check_tail_continuity(self):
        vJ = self.values[-1]
        model = self.tail.coefficient * np.exp(-self.tail.exponent * self.grid.x[-1])
        scale = max(abs(vJ), abs(model))
        if scale > 0 and abs(vJ - model) > TAIL_MATCH_TOL * scale:
            raise InputError(
                "tail model does not match the outermost sample: "
                f"value {vJ}, model {model}"
            )

    # -- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, grid: RadialGrid, with_derivatives: bool = True) -> "RadialFunction":
        n = grid.n_nodes
        z = np.zeros(n, dtype=complex)
        if with_derivatives:
            return cls(grid, z, z.copy(), z.copy(), None)
        return cls(grid, z)

    @classmethod
    def from_power(cls, grid: RadialGrid, coefficient: complex, exponent: complex,
                   with_derivatives: bool = True, with_tail: bool = True) -> "RadialFunction":
        """C * r^(-beta) with analytic derivatives and a matching tail."""
        beta = complex(exponent)
        c = complex(coefficient)
        vals = c * np.exp(-beta * grid.x)
        d1 = d2 = None
        if with_derivatives:
            rinv = np.exp(-grid.x)
            d1 = -beta * vals * rinv
            d2 = beta * (beta + 1.0) * vals * rinv**2
        tail = TailModel(beta, c) if with_tail else None
        return cls(grid, vals, d1, d2, tail)

    def with_matched_tail(self, exponent: complex) -> "RadialFunction":
        """Attach a tail of the given exponent whose coefficient matches values[-1]."""
        c = self.values[-1] * np.exp(complex(exponent) * self.grid.x[-1])
        return replace(self, tail=TailModel(complex(exponent), complex(c)))

    # -- linear arithmetic (tails combine only when exponents agree) --------

    def _combine(self, other: "RadialFunction", sa: complex, sb: complex) -> "RadialFunction":
        if self.grid != other.grid:
            raise InputError("radial functions live on different grids")
        vals = sa * self.values + sb * other.values
        d1 = sa * self.d1 + sb * other.d1 if (self.d1 is not None and other.d1 is not None) else None
        d2 = sa * self.d2 + sb * other.d2 if (self.d2 is not None and other.d2 is not None) else None
        tail = None
        if self.tail is not None and other.tail is not None \
                and self.tail.exponent == other.tail.exponent:
            tail = TailModel(self.tail.exponent,
                             sa * self.tail.coefficient + sb * other.tail.coefficient)
        return RadialFunction(self.grid, vals, d1, d2, tail)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scalar):
        s = complex(scalar)
        return RadialFunction(
            self.grid, s * self.values,
            None if self.d1 is None else s * self.d1,
            None if self.d2 is None else s * self.d2,
            None if self.tail is None else TailModel(self.tail.exponent,
                                                     s * self.tail.coefficient))

    __rmul__ = __mul__

    def conj_reflected(self) -> "RadialFunction":
        """Complex conjugate (values, derivatives, and tail)."""
        return RadialFunction(
            self.grid, np.conj(self.values),
            None if self.d1 is None else np.conj(self.d1),
            None if self.d2 is None else np.conj(self.d2),
            None if self.tail is None else TailModel(np.conj(self.tail.exponent),
                                                     np.conj(self.tail.coefficient)))

    def is_zero(self) -> bool:
        return (not np.any(self.values)) and (self.tail is None or self.tail.coefficient == 0)


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

def _expm1c(z):
    """expm1 for complex arguments, series-accurate near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL
    zs = np.where(small, z, 0.0)
    series = zs * (1.0 + zs * (0.5 + zs * (1.0 / 6.0 + zs / 24.0)))
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.exp(np.where(small, 0.0, z)) - 1.0
    return np.where(small, series, direct)


def _em1_over(w):
    """(e^w - 1)/w with the w -> 0 limit (value 1)."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < _SMALL
    ws = np.where(small, w, 0.0)
    series = 1.0 + ws * (0.5 + ws * (1.0 / 6.0 + ws / 24.0))
    safe = np.where(small, 1.0, w)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = _expm1c(np.where(small, 0.0, w)) / safe
    return np.where(small, series, direct)


def _t_kernel(w):
    """∫_0^1 u e^{wu} du = (e^w (w-1) + 1)/w^2 with the w -> 0 limit (value 1/2)."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < _SMALL
    ws = np.where(small, w, 0.0)
    series = 0.5 + ws * (1.0 / 3.0 + ws * (0.125 + ws * (1.0 / 30.0 + ws / 144.0)))
    safe = np.where(small, 1.0, w)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = (np.exp(np.where(small, 0.0, w)) * (w - 1.0) + 1.0) / safe**2
    return np.where(small, series, direct)


def cell_power_moment(a: float, b: float, beta: complex) -> complex:
    """∫_a^b s^beta ds, exact to machine precision, with the log branch at beta = -1."""
    if not (1.0 <= a < b):
        raise InputError(f"need 1 <= a < b, got a={a}, b={b}")
    beta = complex(beta)
    L = np.log(b / a)
    # a^(beta+1) * (e^{(beta+1)L} - 1)/(beta+1); the series branch of _em1_over
    # is the logarithmic branch, returning L exactly at beta = -1.
    return complex(a ** (beta + 1.0) * L * _em1_over((beta + 1.0) * L))


# ---------------------------------------------------------------------------
# per-cell product integration
# ---------------------------------------------------------------------------

def _cell_moments(f: RadialFunction, sigma: complex, basis: str) -> np.ndarray:
    """∫_{r_j}^{r_{j+1}} s^sigma f(s) ds for every cell, f per interpolation basis."""
    if basis not in ("power", "loglinear"):
        raise InputError(f"unknown quadrature basis {basis!r}")
    g = f.grid
    v = f.values
    fa, fb = v[:-1], v[1:]
    xa = g.x[:-1]
    L = np.diff(g.x)
    z = complex(sigma) + 1.0

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        scale = np.exp(z * xa)            # a^(sigma+1)
        affine = scale * L * (fa * _em1_over(z * L) + (fb - fa) * _t_kernel(z * L))
        if basis == "loglinear":
            out = affine
        else:
            ratio = np.where(fa != 0, fb, 1.0) / np.where(fa != 0, fa, 1.0)
            usable = (fa != 0) & (fb != 0) & \
                     (np.abs(ratio) >= _RATIO_MIN) & (np.abs(ratio) <= _RATIO_MAX)
            p = np.where(usable, np.log(np.where(usable, ratio, 1.0)), 0.0) / L
            power = scale * L * fa * _em1_over((z + p) * L)
            out = np.where(usable, power, affine)
    if not np.all(np.isfinite(out)):
        raise TailDivergenceError(
            "cell moments overflowed; kernel exponent too large for this grid")
    return out


def _inward_cumulative(f: RadialFunction, sigma: complex, basis: str) -> np.ndarray:
    """P_j = ∫_1^{r_j} s^sigma f(s) ds at every node."""
    m = _cell_moments(f, sigma, basis)
    out = np.empty(f.grid.n_nodes, dtype=complex)
    out[0] = 0.0
    np.cumsum(m, out=out[1:])
    return out


def _tail_constant(f: RadialFunction, sigma: complex, decay_floor: Optional[float],
                   what: str) -> complex:
    """∫_{R_max}^∞ s^sigma f(s) ds from the tail model (or 0 under the decay floor)."""
    if f.tail is None:
        floor = 0.0 if decay_floor is None else float(decay_floor)
        if abs(f.values[-1]) <= floor:
            return 0.0
        raise InputError(
            f"{what}: no tail model and |f(R_max)| = {abs(f.values[-1]):.3e} "
            f"exceeds the decay floor {floor:.3e}")
    beta = f.tail.exponent
    c = beta - complex(sigma) - 1.0
    if c.real <= 0.0:
        raise TailDivergenceError(
            f"{what}: tail integral diverges, Re(beta - sigma - 1) = {c.real:.6g} <= 0 "
            f"(beta = {beta}, sigma = {sigma})")
    return f.tail.coefficient * np.exp(-c * f.grid.x[-1]) / c


def _outward_cumulative(f: RadialFunction, sigma: complex, basis: str,
                        decay_floor: Optional[float], what: str) -> np.ndarray:
    """Q_j = ∫_{r_j}^∞ s^sigma f(s) ds at every node, tail included."""
    T = _tail_constant(f, sigma, decay_floor, what)
    m = _cell_moments(f, sigma, basis)
    out = np.empty(f.grid.n_nodes, dtype=complex)
    out[-1] = 0.0
    out[:-1] = np.cumsum(m[::-1])[::-1]
    out += T
    return out


# ---------------------------------------------------------------------------
# public integral operators
# ---------------------------------------------------------------------------

def integral_inward_profile(f: RadialFunction, zeta: complex,
                            basis: str = "power") -> np.ndarray:
    """∫_1^r s f(s) (s/r)^zeta ds at every grid node."""
    zeta = complex(zeta)
    if zeta.real <= 0:
        raise InputError(f"integral_inward requires Re(zeta) > 0, got {zeta}")
    P = _inward_cumulative(f, 1.0 + zeta, basis)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(-zeta * f.grid.x) * P
    if not np.all(np.isfinite(out)):
        raise TailDivergenceError("inward integral overflowed")
    return out


def integral_inward(f: RadialFunction, zeta: complex, r: float,
                    basis: str = "power") -> complex:
    """∫_1^r s f(s) (s/r)^zeta ds at the grid node r."""
    return complex(integral_inward_profile(f, zeta, basis)[f.grid.index_of(r)])


def integral_outward_profile(f: RadialFunction, zeta: complex,
                             decay_floor: Optional[float] = None,
                             basis: str = "power") -> np.ndarray:
    """∫_r^∞ s f(s) (r/s)^zeta ds at every grid node, analytic tail included."""
    zeta = complex(zeta)
    if zeta.real < 0:
        raise InputError(f"integral_outward requires Re(zeta) >= 0, got {zeta}")
    Q = _outward_cumulative(f, 1.0 - zeta, basis, decay_floor, "integral_outward")
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(zeta * f.grid.x) * Q
    if not np.all(np.isfinite(out)):
        raise TailDivergenceError("outward integral overflowed")
    return out


def integral_outward(f: RadialFunction, zeta: complex, r: float,
                     decay_floor: Optional[float] = None,
                     basis: str = "power") -> complex:
    """∫_r^∞ s f(s) (r/s)^zeta ds at the grid node r."""
    return complex(integral_outward_profile(f, zeta, decay_floor, basis)[f.grid.index_of(r)])


def outer_moment_profile(f: RadialFunction, decay_floor: Optional[float] = None,
                         basis: str = "power") -> np.ndarray:
    """H(r) = ∫_r^∞ t f(t) dt at every grid node."""
    return _outward_cumulative(f, 1.0, basis, decay_floor, "outer moment")


def double_tail_integral_profile(f: RadialFunction,
                                 decay_floor: Optional[float] = None,
                                 basis: str = "power") -> np.ndarray:
    """∫_r^∞ (1/s) ∫_s^∞ t f(t) dt ds at every grid node."""
    H = outer_moment_profile(f, decay_floor, basis)
    tail = None
    if f.tail is not None:
        beta = f.tail.exponent
        if (beta.real - 2.0) <= 0.0:
            raise TailDivergenceError(
                f"double tail integral diverges: Re(beta) = {beta.real:.6g} <= 2")
        tail = TailModel(beta - 2.0, f.tail.coefficient / (beta - 2.0))
    Hf = RadialFunction(f.grid, H, tail=tail)
    return _outward_cumulative(Hf, -1.0, basis, decay_floor, "double tail integral")


def double_tail_integral(f: RadialFunction, r: float,
                         decay_floor: Optional[float] = None,
                         basis: str = "power") -> complex:
    """Nested integral ∫_r^∞ (1/s) ∫_s^∞ t f(t) dt ds at the grid node r."""
    return complex(double_tail_integral_profile(f, decay_floor, basis)[f.grid.index_of(r)])
