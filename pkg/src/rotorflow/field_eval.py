"""Physical-space reconstruction, equation residuals, and decay reporting.

Velocity components come from the stream function via

    u_r = (1/r) d_theta psi,   u_theta = -d_r psi,

where psi = -mu ln r + gamma and gamma, w are synthesized from the stored
mode coefficients on a uniform theta grid.  Residuals of the two radial
equations are measured twice: once with the stored analytic derivative
arrays, and once with centered second differences in ln r, which is an
independent O(h^2) discretization of r^2 * (d_rr + d_r/r).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from .errors import InputError
from .grid_quadrature import RadialFunction, RadialGrid
from .mode_algebra import SpectralField, max_asymmetry
from .nonlinearity import compute_NL

# Imaginary parts of the synthesized fields are dropped below this threshold
# (scaled by the field magnitude); anything larger means asymmetric input.
IMAG_RESIDUE_TOL = 1e-12


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

@dataclass
class PhysicalField:
    """Real fields on the (theta, r) product grid, background flow included."""

    grid: RadialGrid
    theta: np.ndarray          # shape (M,)
    u_r: np.ndarray            # shape (M, J+1)
    u_theta: np.ndarray
    omega: np.ndarray
    psi: np.ndarray            # includes the background -mu ln r
    mu: float


def eval_fields(x: SpectralField, mu: float, M: Optional[int] = None) -> PhysicalField:
    """Synthesize velocity, vorticity, and stream function on a theta grid.

    Requires conjugate-symmetric coefficients and M >= 2N+1 sample angles
    (default 4N, oversampled).
    """
    N = x.N
    if M is None:
        M = max(4 * N, 2 * N + 1)
    M = int(M)
    if M < 2 * N + 1:
        raise InputError(f"theta resolution M = {M} must be >= 2N+1 = {2 * N + 1}")

    scale = 1.0
    for store in (x.gamma, x.w):
        for f in store.values():
            m = float(np.max(np.abs(f.values)))
            scale = max(scale, m)
    asym = max_asymmetry(x)
    if asym > IMAG_RESIDUE_TOL * scale:
        raise InputError(
            f"field is not conjugate-symmetric (asymmetry {asym:.3e}); "
            "apply enforce_reality before synthesis")

    grid = x.grid
    theta = -np.pi + 2.0 * np.pi * np.arange(M) / M
    ns = np.arange(-N, N + 1)
    E = np.exp(1j * np.outer(theta, ns))            # (M, 2N+1)

    if any(x.gamma[n].d1 is None for n in ns):
        raise InputError("stream coefficients lack derivative arrays")
    G = np.stack([x.gamma[n].values for n in ns])   # (2N+1, J+1)
    D1 = np.stack([x.gamma[n].d1 for n in ns])
    W = np.stack([x.w[n].values for n in ns])

    rinv = np.exp(-grid.x)
    u_r_c = E @ (1j * ns[:, None] * G * rinv[None, :])
    u_t_c = -(E @ D1)
    om_c = E @ W
    psi_c = E @ G

    worst_imag = max(float(np.max(np.abs(a.imag))) for a in (u_r_c, u_t_c, om_c, psi_c))
    if worst_imag > IMAG_RESIDUE_TOL * scale:
        raise InputError(
            f"synthesis produced imaginary residue {worst_imag:.3e} "
            f"(limit {IMAG_RESIDUE_TOL * scale:.3e})")

    u_theta = mu * rinv[None, :] + u_t_c.real
    psi = -mu * grid.x[None, :] + psi_c.real
    return PhysicalField(grid=grid, theta=theta, u_r=u_r_c.real,
                         u_theta=u_theta, omega=om_c.real, psi=psi, mu=float(mu))


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Weighted equation residuals, per mode and aggregated.

    All entries are sup over interior nodes of r^2 |residual|; "analytic"
    uses the stored derivative arrays, "fd" independent second differences.
    """

    poisson_analytic: Dict[int, float]
    poisson_fd: Dict[int, float]
    vorticity_analytic: Dict[int, float]
    vorticity_fd: Dict[int, float]
    aggregate_analytic: float
    aggregate_fd: float
    source_mismatch: float      # sup r^2 |F_used - NL(x,x)|
    flux: float                 # |loop integral of u_r at r = 1|

    def to_dict(self) -> dict:
        return {
            "aggregate_analytic": self.aggregate_analytic,
            "aggregate_fd": self.aggregate_fd,
            "source_mismatch": self.source_mismatch,
            "flux": self.flux,
            "per_mode": {
                str(n): {
                    "poisson_analytic": self.poisson_analytic[n],
                    "poisson_fd": self.poisson_fd[n],
                    "vorticity_analytic": self.vorticity_analytic[n],
                    "vorticity_fd": self.vorticity_fd[n],
                }
                for n in sorted(self.poisson_analytic)
            },
        }


def _weighted_sup_interior(res: np.ndarray, grid: RadialGrid) -> float:
    r2 = np.exp(2.0 * grid.x)
    vals = (r2 * np.abs(res))[1:-1]
    return float(np.max(vals)) if vals.size else 0.0


def residual_check(f: PhysicalField, x: SpectralField,
                   F_used: Optional[Mapping[int, RadialFunction]] = None,
                   alpha: float = 0.25) -> ResidualReport:
    """Residuals of the two mode equations on the solved field.

    The convection source is recomputed from x itself; F_used, when given,
    is compared against it (a converged fixed point makes the difference
    small).
    """
    grid = x.grid
    mu = f.mu
    h = grid.h
    rinv = np.exp(-grid.x)
    r2 = np.exp(2.0 * grid.x)

    F = compute_NL(x, x, alpha, basis_tail=False)

    pa: Dict[int, float] = {}
    pf: Dict[int, float] = {}
    va: Dict[int, float] = {}
    vf: Dict[int, float] = {}
    mismatch = 0.0
    for n in range(-x.N, x.N + 1):
        g = x.gamma[n]
        w = x.w[n]
        if g.d1 is None or g.d2 is None or w.d1 is None or w.d2 is None:
            raise InputError(f"mode {n} lacks analytic derivative arrays")
        c_g = n * n
        c_w = complex(n * n, mu * n)

        res_g = g.d2 + g.d1 * rinv - c_g * g.values * rinv**2 + w.values
        res_w = w.d2 + w.d1 * rinv - c_w * w.values * rinv**2 - F[n].values
        pa[n] = _weighted_sup_interior(res_g, grid)
        va[n] = _weighted_sup_interior(res_w, grid)

        # r^2 (u'' + u'/r) = d^2 u / d(ln r)^2 on the geometric grid
        def d2x(u):
            return (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)

        fd_g = d2x(g.values) - c_g * g.values[1:-1] + (r2 * w.values)[1:-1]
        fd_w = d2x(w.values) - c_w * w.values[1:-1] - (r2 * F[n].values)[1:-1]
        pf[n] = float(np.max(np.abs(fd_g))) if fd_g.size else 0.0
        vf[n] = float(np.max(np.abs(fd_w))) if fd_w.size else 0.0

        if F_used is not None and n in F_used:
            mismatch = max(mismatch, _weighted_sup_interior(
                F_used[n].values - F[n].values, grid))

    # zero-flux check: mean of u_r over theta at the disk, times 2 pi
    flux = abs(2.0 * np.pi * float(np.mean(f.u_r[:, 0])))

    return ResidualReport(
        poisson_analytic=pa, poisson_fd=pf,
        vorticity_analytic=va, vorticity_fd=vf,
        aggregate_analytic=max(max(pa.values()), max(va.values())),
        aggregate_fd=max(max(pf.values()), max(vf.values())),
        source_mismatch=mismatch,
        flux=flux,
    )


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

@dataclass
class DecayReport:
    """sup_theta |v| per radius, with the asymptotic log-log slope."""

    r: np.ndarray
    sup_v: np.ndarray
    r_sup_v: np.ndarray
    slope: Optional[float]
    slope_bound: float              # -(1 + alpha) + 0.05
    slope_ok: bool
    weighted_decreasing: bool       # r sup_v non-increasing over the outer decade
    identically_zero: bool

    def rows(self):
        return zip(self.r.tolist(), self.sup_v.tolist(), self.r_sup_v.tolist())


def decay_report(f: PhysicalField, alpha: float) -> DecayReport:
    """Fit the far-field decay rate of the velocity perturbation.

    The slope is a least-squares fit of ln sup_theta|v| against ln r over the
    outer two decades [R_max/100, R_max].
    """
    grid = f.grid
    rinv = np.exp(-grid.x)
    v_r = f.u_r
    v_t = f.u_theta - f.mu * rinv[None, :]
    sup_v = np.max(np.hypot(v_r, v_t), axis=0)
    bound = -(1.0 + alpha) + 0.05

    if np.max(sup_v) == 0.0:
        return DecayReport(
            r=np.empty(0), sup_v=np.empty(0), r_sup_v=np.empty(0),
            slope=None, slope_bound=bound, slope_ok=True,
            weighted_decreasing=True, identically_zero=True)

    r = grid.nodes
    r_sup = r * sup_v

    window = (r >= grid.R_max / 100.0) & (sup_v > 0)
    slope = None
    slope_ok = False
    if np.count_nonzero(window) >= 3:
        coef = np.polyfit(np.log(r[window]), np.log(sup_v[window]), 1)
        slope = float(coef[0])
        slope_ok = slope <= bound

    outer = r >= grid.R_max / 10.0
    rw = r_sup[outer]
    tol = 1e-12 * np.max(rw) if rw.size else 0.0
    decreasing = bool(np.all(np.diff(rw) <= tol)) if rw.size > 1 else True

    return DecayReport(r=r, sup_v=sup_v, r_sup_v=r_sup, slope=slope,
                       slope_bound=bound, slope_ok=slope_ok,
                       weighted_decreasing=decreasing, identically_zero=False)
