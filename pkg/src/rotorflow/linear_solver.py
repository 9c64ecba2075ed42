"""Mode-wise linear solution operator, boundary trace, and its inverse.

For n != 0 the two radial problems

    g'' + g'/r - (n^2/r^2) g = -w        (stream function, exponent |n|)
    w'' + w'/r - (zeta_n^2/r^2) w = F    (vorticity, exponent zeta_n)

are solved by the decaying Green's-function representation

    w(r) = wbar r^(-zeta) - I_out[F](r)/(2 zeta) - I_in[F](r)/(2 zeta)
    g(r) = gbar r^(-|n|)  + I_out[w](r)/(2|n|)  + I_in[w](r)/(2|n|)

with I_out[f](r) = ∫_r^∞ s f (r/s)^e ds, I_in[f](r) = ∫_1^r s f (s/r)^e ds and
the constants fixed by the r = 1 boundary values:

    wbar = w*(1) + I_out[F](1)/(2 zeta),   gbar = g*(1) - I_out[w](1)/(2|n|).

For n = 0 the decaying solutions are double tail integrals; with
G[f](r) = ∫_r^∞ (1/s) ∫_s^∞ t f(t) dt ds (which satisfies (d_rr + d_r/r)G = f),

    w_0 = +G[F_0],    gamma_0 = -G[w_0],

so that both n = 0 equations hold with the same signs as the n != 0 ones.
First derivatives are assembled analytically from the integral kernels and
second derivatives from the differential equations themselves; no finite
differences enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from .errors import InputError, ModeSolveError, RotorflowError
from .grid_quadrature import (
    RadialFunction,
    RadialGrid,
    TailModel,
    double_tail_integral_profile,
    integral_inward_profile,
    integral_outward_profile,
    outer_moment_profile,
)
from .mode_algebra import BoundaryCoeffs, SpectralField, ZetaTable


# ---------------------------------------------------------------------------
# input/output containers
# ---------------------------------------------------------------------------

@dataclass
class LinearSolveInput:
    """Source modes and boundary coefficient pair consumed by apply_S_mu."""

    F: Mapping[int, RadialFunction]
    gamma_star: BoundaryCoeffs
    w_star: BoundaryCoeffs
    zeta: ZetaTable

    def __post_init__(self):
        if not self.gamma_star.zero_mode_constraint or not self.w_star.zero_mode_constraint:
            raise InputError("boundary coefficient sequences must have c_0 = 0")
        if self.gamma_star[0] != 0 or self.w_star[0] != 0:
            raise InputError("zero-mode boundary coefficients must vanish")


@dataclass
class TraceData:
    """Boundary velocity coefficients extracted at r = 1.

    v_r,n = i n gamma_n(1); v_theta,n = -d_r gamma_n(1) for n != 0 and 0 for
    n = 0.  The masked zero-mode derivative d_r gamma_0(1) is reported
    separately since it feeds the mean-velocity matching, not the trace.
    """

    v_r: BoundaryCoeffs
    v_theta: BoundaryCoeffs
    dr_gamma0_at_1: complex = 0.0

    def __post_init__(self):
        if self.v_r[0] != 0:
            raise InputError("radial boundary velocity must have zero flux (mode 0)")
        if self.v_theta[0] != 0:
            raise InputError("tangential trace carries no zero mode")

    @property
    def N(self) -> int:
        return self.v_r.N


# ---------------------------------------------------------------------------
# single-mode solves
# ---------------------------------------------------------------------------

def _homogeneous(grid: RadialGrid, coeff: complex, exponent: complex) -> np.ndarray:
    with np.errstate(over="ignore"):
        vals = coeff * np.exp(-complex(exponent) * grid.x)
    if not np.all(np.isfinite(vals)):
        raise ModeSolveError(f"homogeneous profile r^-({exponent}) overflowed")
    return vals


def _pick_tail(values: np.ndarray, grid: RadialGrid, candidates) -> TailModel:
    """Tail with the slowest-decaying candidate exponent, coefficient matched
    to the outermost sample."""
    beta = min(candidates, key=lambda b: complex(b).real)
    beta = complex(beta)
    coeff = values[-1] * np.exp(beta * grid.x[-1])
    return TailModel(beta, coeff)


def solve_vorticity_mode(n: int, F_n: RadialFunction, w_star_n: complex,
                         zeta_n: complex, alpha: Optional[float] = None,
                         basis: str = "power") -> RadialFunction:
    """Decaying solution of the mode-n vorticity problem with w(1) = w*_n."""
    if n == 0:
        raise InputError("use solve_vorticity_zero for n = 0")
    zeta = complex(zeta_n)
    if alpha is not None and not (zeta.real > 2.0 + 2.0 * alpha):
        raise InputError(
            f"mode {n}: Re(zeta) = {zeta.real:.6g} <= 2 + 2 alpha = {2 + 2 * alpha:.6g}")
    grid = F_n.grid
    try:
        if F_n.is_zero():
            i_in = i_out = np.zeros(grid.n_nodes, dtype=complex)
        else:
            i_in = integral_inward_profile(F_n, zeta, basis) / (2.0 * zeta)
            i_out = integral_outward_profile(F_n, zeta, basis=basis) / (2.0 * zeta)
    except RotorflowError as exc:
        raise ModeSolveError(f"vorticity mode {n}: {exc}") from exc

    wbar = complex(w_star_n) + i_out[0]
    hom = _homogeneous(grid, wbar, zeta)
    values = hom - i_out - i_in
    rinv = np.exp(-grid.x)
    d1 = -(zeta * rinv) * (hom + i_out - i_in)
    d2 = F_n.values - d1 * rinv + (zeta * zeta) * values * rinv**2

    if F_n.is_zero():
        tail = TailModel(zeta, wbar)
    else:
        cands = [zeta]
        if F_n.tail is not None:
            cands.append(complex(F_n.tail.exponent) - 2.0)
        tail = _pick_tail(values, grid, cands)
    return RadialFunction(grid, values, d1, d2, tail)


def solve_vorticity_zero(F_0: RadialFunction, basis: str = "power") -> RadialFunction:
    """Unique decaying solution of w'' + w'/r = F_0 (zero mode).

    w_0(r) = ∫_r^∞ (1/s) ∫_s^∞ t F_0 dt ds; the boundary value w_0(1) is not
    free.  d_r w_0(r) = -(1/r) ∫_r^∞ t F_0 dt.
    """
    grid = F_0.grid
    if F_0.is_zero():
        return RadialFunction.zeros(grid)
    try:
        values = double_tail_integral_profile(F_0, basis=basis)
        H = outer_moment_profile(F_0, basis=basis)
    except RotorflowError as exc:
        raise ModeSolveError(f"vorticity mode 0: {exc}") from exc
    rinv = np.exp(-grid.x)
    d1 = -rinv * H
    d2 = F_0.values - d1 * rinv
    w_tail = None
    if F_0.tail is not None:
        w_tail = _pick_tail(values, grid, [complex(F_0.tail.exponent) - 2.0])
    return RadialFunction(grid, values, d1, d2, w_tail)


def solve_stream_mode(n: int, w_n: RadialFunction, gamma_star_n: complex,
                      basis: str = "power") -> RadialFunction:
    """Decaying solution of the mode-n stream problem with gamma(1) = gamma*_n."""
    if n == 0:
        raise InputError("use solve_stream_zero for n = 0")
    na = abs(int(n))
    grid = w_n.grid
    try:
        if w_n.is_zero():
            i_in = i_out = np.zeros(grid.n_nodes, dtype=complex)
        else:
            i_in = integral_inward_profile(w_n, na, basis) / (2.0 * na)
            i_out = integral_outward_profile(w_n, na, basis=basis) / (2.0 * na)
    except RotorflowError as exc:
        raise ModeSolveError(f"stream mode {n}: {exc}") from exc

    gbar = complex(gamma_star_n) - i_out[0]
    hom = _homogeneous(grid, gbar, na)
    values = hom + i_out + i_in
    rinv = np.exp(-grid.x)
    d1 = (na * rinv) * (-hom + i_out - i_in)
    d2 = -w_n.values - d1 * rinv + (na * na) * values * rinv**2

    cands = [complex(na)]
    if not w_n.is_zero() and w_n.tail is not None:
        cands.append(complex(w_n.tail.exponent) - 2.0)
    tail = _pick_tail(values, grid, cands)
    return RadialFunction(grid, values, d1, d2, tail)


def solve_stream_zero(w_0: RadialFunction, basis: str = "power") -> RadialFunction:
    """Decaying zero-mode stream solution of g'' + g'/r = -w_0.

    gamma_0(r) = -∫_r^∞ (1/s) ∫_s^∞ t w_0 dt ds; its slope at the disk,
    d_r gamma_0(1) = ∫_1^∞ t w_0 dt, is the quantity matched by the
    mean-velocity root find.
    """
    grid = w_0.grid
    if w_0.is_zero():
        return RadialFunction.zeros(grid)
    try:
        values = -double_tail_integral_profile(w_0, basis=basis)
        H = outer_moment_profile(w_0, basis=basis)
    except RotorflowError as exc:
        raise ModeSolveError(f"stream mode 0: {exc}") from exc
    rinv = np.exp(-grid.x)
    d1 = rinv * H
    d2 = -w_0.values - d1 * rinv
    g_tail = None
    if w_0.tail is not None:
        g_tail = _pick_tail(values, grid, [complex(w_0.tail.exponent) - 2.0])
    return RadialFunction(grid, values, d1, d2, g_tail)


# ---------------------------------------------------------------------------
# assembled operator
# ---------------------------------------------------------------------------

def apply_S_mu(inp: LinearSolveInput, grid: RadialGrid, N: Optional[int] = None,
               alpha: Optional[float] = None, basis: str = "power",
               workers: int = 1) -> SpectralField:
    """Solve all modes |n| <= N for the triple (F, gamma*, w*).

    Modes missing from the source map are treated as zero.  Per-mode failures
    are aggregated into a single error naming each offending mode.
    """
    if N is None:
        N = inp.zeta.N
    if N > inp.zeta.N or N > inp.gamma_star.N or N > inp.w_star.N:
        raise InputError("mode cutoff exceeds the supplied tables")
    F0_default = RadialFunction.zeros(grid)
    F0 = inp.F.get(0, F0_default)

    def solve_one(n: int):
        if n == 0:
            w = solve_vorticity_zero(F0, basis=basis)
            g = solve_stream_zero(w, basis=basis)
            return n, g, w
        Fn = inp.F.get(n, F0_default)
        w = solve_vorticity_mode(n, Fn, inp.w_star[n], inp.zeta[n],
                                 alpha=alpha, basis=basis)
        g = solve_stream_mode(n, w, inp.gamma_star[n], basis=basis)
        return n, g, w

    mode_list = list(range(-N, N + 1))
    results = {}
    failures = []
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(solve_one, n): n for n in mode_list}
            for fut, n in futures.items():
                try:
                    results[n] = fut.result()
                except RotorflowError as exc:
                    failures.append(f"mode {n}: {exc}")
    else:
        for n in mode_list:
            try:
                results[n] = solve_one(n)
            except RotorflowError as exc:
                failures.append(f"mode {n}: {exc}")
    if failures:
        raise ModeSolveError("; ".join(sorted(failures)))
    gamma = {n: results[n][1] for n in mode_list}
    w = {n: results[n][2] for n in mode_list}
    return SpectralField(grid, N, gamma, w)


# ---------------------------------------------------------------------------
# trace and its inverse
# ---------------------------------------------------------------------------

def trace_boundary(x: SpectralField) -> TraceData:
    """Boundary velocity coefficients of a spectral field at r = 1."""
    N = x.N
    v_r = np.zeros(2 * N + 1, dtype=complex)
    v_t = np.zeros(2 * N + 1, dtype=complex)
    for n in range(-N, N + 1):
        g = x.gamma[n]
        if g.d1 is None:
            raise InputError(f"gamma[{n}] lacks a derivative array")
        if n != 0:
            v_r[n + N] = 1j * n * g.values[0]
            v_t[n + N] = -g.d1[0]
    dr0 = complex(x.gamma[0].d1[0])
    return TraceData(
        v_r=BoundaryCoeffs(N, v_r),
        v_theta=BoundaryCoeffs(N, v_t),
        dr_gamma0_at_1=dr0,
    )


def boundary_inverse(v_r: BoundaryCoeffs, v_theta: BoundaryCoeffs,
                     zeta: ZetaTable) -> "tuple[BoundaryCoeffs, BoundaryCoeffs]":
    """Invert the boundary map: recover (gamma*, w*) from trace data.

    gamma*_n = v_r,n/(i n);  w*_n = (2 - |n| - zeta_n)(v_theta,n - |n| gamma*_n).
    The factor 2 - |n| - zeta_n never vanishes: Re(zeta_n) >= rho_mu > 0 and
    2 - |n| <= 1.
    """
    if v_r[0] != 0 or v_theta[0] != 0:
        raise InputError("trace data must have vanishing zero modes")
    N = v_r.N
    if v_theta.N != N or zeta.N < N:
        raise InputError("mode cutoffs are inconsistent")
    gs = np.zeros(2 * N + 1, dtype=complex)
    ws = np.zeros(2 * N + 1, dtype=complex)
    for n in range(-N, N + 1):
        if n == 0:
            continue
        g = v_r[n] / (1j * n)
        gs[n + N] = g
        ws[n + N] = (2.0 - abs(n) - zeta[n]) * (v_theta[n] - abs(n) * g)
    return BoundaryCoeffs(N, gs), BoundaryCoeffs(N, ws)
