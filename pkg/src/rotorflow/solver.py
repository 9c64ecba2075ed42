"""Fixed-point construction of small steady perturbations and mean-velocity
matching.

One sweep of the coupled iteration, starting from x = 0 and
x* = T_mu^{-1}(v*):

    x  <- (1 - rho) x + rho S_mu(NL(x, x), x*)
    x* <- x* + T_mu^{-1}( v* - Gamma_1[ S_mu(NL(x, x), x*) ] )

The x* correction goes through the exact closed-form inverse of the trace of
the homogeneous solve, so at a fixed point the trace equals v* and the pair
solves the full coupled system.  Residuals are measured in the weighted
norms in which the linear operator is bounded (gamma in U^2_{alpha,kappa+4},
w in U^2_{alpha+2,kappa+2}); trace mismatches in the (1+|n|)^(kappa+3)
sequence norm.

The admissible size of the boundary data is not computable a priori;
divergence is detected empirically by a norm guard and reported as data
outside the contraction ball.

The asymptotic angular velocity seen by the far field is
mu* = mu - d_r gamma_0(1).  match_mu_star inverts mu -> mu* over
[mu_-, mu_+] with a secant iteration (bisection fallback), each evaluation
being a full fixed-point solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import BlowUpError, InputError, ModeSolveError, NonConvergenceError
from .field_eval import ResidualReport, eval_fields, residual_check
from .grid_quadrature import RadialGrid, build_grid
from .linear_solver import (
    LinearSolveInput,
    TraceData,
    apply_S_mu,
    boundary_inverse,
    trace_boundary,
)
from .mode_algebra import (
    BoundaryCoeffs,
    CriticalParams,
    SpectralField,
    ZetaTable,
    combined_norm,
    compute_zeta,
    critical_params,
    enforce_reality,
    sequence_norm,
    solution_norms,
)
from .nonlinearity import compute_NL

BLOWUP_FACTOR = 1e6


# ---------------------------------------------------------------------------
# configuration and report
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    """Parameters of one construction run."""

    mu0: float
    boundary: TraceData
    mu_star: Optional[float] = None     # target mean tangential velocity; defaults to mu0
    kappa: float = 2.0
    N: int = 16
    R_max: float = 1e4
    J: int = 600
    tol_fixed_point: float = 1e-10
    tol_mu: float = 1e-10
    max_iter: int = 50
    relaxation: float = 1.0
    basis: str = "power"
    workers: int = 1

    def __post_init__(self):
        self.crit = critical_params(self.mu0)   # validates mu0 > sqrt(48)
        if self.boundary.N != self.N:
            raise InputError(
                f"boundary data cutoff {self.boundary.N} != configured N = {self.N}")
        if not (0.0 < self.relaxation <= 1.0):
            raise InputError("relaxation must lie in (0, 1]")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")
        if self.mu_star is None:
            self.mu_star = self.mu0
        self.grid = build_grid(self.R_max, self.J)

    @property
    def alpha(self) -> float:
        return self.crit.alpha


@dataclass
class SolveReport:
    """Converged pair, realized parameters, and diagnostics."""

    field: SpectralField
    x_star: Tuple[BoundaryCoeffs, BoundaryCoeffs]
    mu: float
    mu_star_realized: float
    dr_gamma0_at_1: float
    iterations: int
    converged: bool
    phi_residual: float
    trace_mismatch: float
    contraction_history: List[float]        # update norms per sweep
    contraction_factors: List[float]        # successive ratios
    norms: Dict[str, float]
    residual_summary: Optional[ResidualReport] = None
    F_final: Optional[dict] = None          # last convection source, by mode
    inner_solves: int = 1                   # fixed-point solves spent (for mu matching)
    mu_evaluations: List[Tuple[float, float]] = dc_field(default_factory=list)
    bracket_g: Optional[Tuple[float, float]] = None


# ---------------------------------------------------------------------------
# one application of the coupled map
# ---------------------------------------------------------------------------

def assemble_phi(x: SpectralField,
                 x_star: Tuple[BoundaryCoeffs, BoundaryCoeffs],
                 mu: float, cfg: SolverConfig,
                 zeta: Optional[ZetaTable] = None
                 ) -> Tuple[SpectralField, TraceData]:
    """The coupled map: (S(NL(x,x), x*) - x, trace of S(NL(x,x), x*))."""
    if zeta is None:
        zeta = compute_zeta(mu, cfg.N)
    F = compute_NL(x, x, cfg.alpha)
    y = apply_S_mu(LinearSolveInput(F, x_star[0], x_star[1], zeta),
                   cfg.grid, N=cfg.N, alpha=cfg.alpha, basis=cfg.basis,
                   workers=cfg.workers)
    return y - x, trace_boundary(y)


def _solve_linear(x_star, zeta, cfg) -> SpectralField:
    empty: Dict[int, object] = {}
    return apply_S_mu(LinearSolveInput(empty, x_star[0], x_star[1], zeta),
                      cfg.grid, N=cfg.N, alpha=cfg.alpha, basis=cfg.basis,
                      workers=cfg.workers)


# ---------------------------------------------------------------------------
# fixed-point driver
# ---------------------------------------------------------------------------

def solve_kappa_solution(cfg: SolverConfig, mu: float,
                         with_residuals: bool = True) -> SolveReport:
    """Construct the small solution for the configured boundary data at a
    fixed asymptotic angular velocity mu in [mu_-, mu_+]."""
    crit = cfg.crit
    if not (crit.mu_minus <= mu <= crit.mu_plus):
        raise InputError(
            f"mu = {mu} outside the admissible interval "
            f"[{crit.mu_minus:.6f}, {crit.mu_plus:.6f}]")
    zeta = compute_zeta(mu, cfg.N)
    alpha, kappa = cfg.alpha, cfg.kappa
    v_target = (cfg.boundary.v_r, cfg.boundary.v_theta)

    x = SpectralField.zero(cfg.grid, cfg.N)
    xs = boundary_inverse(v_target[0], v_target[1], zeta)

    def trace_norm(tr_r: BoundaryCoeffs, tr_t: BoundaryCoeffs) -> float:
        return max(sequence_norm(tr_r, kappa + 3.0), sequence_norm(tr_t, kappa + 3.0))

    history: List[float] = []
    factors: List[float] = []
    linear_norm: Optional[float] = None
    scale0: Optional[float] = None
    converged = False
    phi_res = math.inf
    trace_res = math.inf
    iterations = 0
    y_fin = x
    F_fin = compute_NL(x, x, alpha)

    # Per sweep: evaluate z = S(NL(x,x), x*), correct x* through the exact
    # trace inverse, then move x toward the re-evaluated image.  Convergence
    # is judged on the entering pair (x, x*), whose resolved image z is also
    # the reported field once both residuals pass.
    for k in range(1, cfg.max_iter + 1):
        iterations = k
        try:
            F1 = compute_NL(x, x, alpha)
            z = apply_S_mu(LinearSolveInput(F1, xs[0], xs[1], zeta),
                           cfg.grid, N=cfg.N, alpha=alpha, basis=cfg.basis,
                           workers=cfg.workers)
        except (ModeSolveError, InputError) as exc:
            if k > 1:
                raise BlowUpError(
                    "boundary data outside contraction ball "
                    f"(iterate overflowed at sweep {k}: {exc})") from exc
            raise

        phi_res = combined_norm(z - x, alpha, kappa)
        tr = trace_boundary(z)
        mism_r = v_target[0] - tr.v_r
        mism_t = v_target[1] - tr.v_theta
        trace_res = trace_norm(mism_r, mism_t)

        if phi_res <= cfg.tol_fixed_point and trace_res <= cfg.tol_fixed_point:
            converged = True
            y_fin = z
            F_fin = F1
            break

        xs_corr = boundary_inverse(mism_r, mism_t, zeta)
        xs = (xs[0] + xs_corr[0], xs[1] + xs_corr[1])
        try:
            y = apply_S_mu(LinearSolveInput(F1, xs[0], xs[1], zeta),
                           cfg.grid, N=cfg.N, alpha=alpha, basis=cfg.basis,
                           workers=cfg.workers)
        except (ModeSolveError, InputError) as exc:
            if k > 1:
                raise BlowUpError(
                    "boundary data outside contraction ball "
                    f"(iterate overflowed at sweep {k}: {exc})") from exc
            raise
        x_next = x.combine(y, 1.0 - cfg.relaxation, cfg.relaxation)

        update = combined_norm(x_next - x, alpha, kappa)
        if history:
            last = history[-1]
            factors.append(update / last if last > 0 else 0.0)
        history.append(update)
        x = x_next

        if k == 1:
            linear_norm = combined_norm(y, alpha, kappa)
            scale0 = max(linear_norm,
                         sequence_norm(xs[0], kappa + 4.0),
                         sequence_norm(xs[1], kappa + 2.0),
                         1e-300)
        else:
            current = combined_norm(x, alpha, kappa)
            if current > BLOWUP_FACTOR * scale0:
                raise BlowUpError(
                    "boundary data outside contraction ball "
                    f"(norm {current:.3e} exceeds {BLOWUP_FACTOR:.0e} x initial "
                    f"{scale0:.3e} at sweep {k})")

    if not converged:
        last_factor = factors[-1] if factors else math.nan
        raise NonConvergenceError(
            f"fixed point not converged after {cfg.max_iter} sweeps "
            f"(residual {phi_res:.3e}, trace mismatch {trace_res:.3e}, "
            f"last contraction factor {last_factor:.3f})")

    phi_final = phi_res
    tr_fin = trace_boundary(y_fin)
    trace_final = trace_norm(v_target[0] - tr_fin.v_r, v_target[1] - tr_fin.v_theta)

    dr0 = tr_fin.dr_gamma0_at_1
    if abs(dr0.imag) > 1e-9 * max(1.0, abs(dr0)):
        raise ModeSolveError(
            f"mean slope d_r gamma_0(1) = {dr0} has a non-negligible imaginary part")

    norms = solution_norms(y_fin, alpha, kappa)
    norms["solution_combined"] = norms["gamma_U2"] + norms["w_U2"]
    norms["linear_combined"] = linear_norm if linear_norm is not None else 0.0
    norms["x_star_gamma_B"] = sequence_norm(xs[0], kappa + 4.0)
    norms["x_star_w_B"] = sequence_norm(xs[1], kappa + 2.0)
    norms["boundary_B"] = trace_norm(v_target[0], v_target[1])

    residuals = None
    if with_residuals:
        phys = eval_fields(enforce_reality(y_fin), mu)
        residuals = residual_check(phys, y_fin, F_used=F_fin, alpha=alpha)

    return SolveReport(
        field=y_fin,
        x_star=xs,
        mu=float(mu),
        mu_star_realized=float(mu - dr0.real),
        dr_gamma0_at_1=float(dr0.real),
        iterations=iterations,
        converged=True,
        phi_residual=phi_final,
        trace_mismatch=trace_final,
        contraction_history=history,
        contraction_factors=factors,
        norms=norms,
        residual_summary=residuals,
        F_final=F_fin,
    )


# ---------------------------------------------------------------------------
# mean-velocity matching
# ---------------------------------------------------------------------------

def match_mu_star(cfg: SolverConfig) -> SolveReport:
    """Find mu with mu - d_r gamma_0(1) = mu_star by a secant iteration.

    Every evaluation is a full fixed-point solve.  The first evaluation is at
    the clamped target itself (the mean slope vanishes with the data, so for
    small data this is already the root); otherwise the bracket endpoints are
    checked for a sign change and the secant runs inside [mu_-, mu_+] with a
    bisection fallback.
    """
    crit = cfg.crit
    mu_star = float(cfg.mu_star)
    lo, hi = crit.mu_minus, crit.mu_plus
    evaluations: List[Tuple[float, float]] = []
    reports: Dict[float, SolveReport] = {}
    solves = 0

    def g(mu: float) -> float:
        nonlocal solves
        rep = solve_kappa_solution(cfg, mu, with_residuals=False)
        solves += 1
        val = rep.mu - rep.dr_gamma0_at_1 - mu_star
        reports[mu] = rep
        evaluations.append((mu, val))
        return val

    def finish(mu: float) -> SolveReport:
        rep = reports[mu]
        if rep.residual_summary is None:
            phys = eval_fields(enforce_reality(rep.field), rep.mu)
            rep.residual_summary = residual_check(phys, rep.field,
                                                  F_used=rep.F_final, alpha=cfg.alpha)
        rep.inner_solves = solves
        rep.mu_evaluations = evaluations
        rep.bracket_g = bracket
        return rep

    bracket = None
    guess = min(max(mu_star, lo), hi)
    g0 = g(guess)
    if abs(g0) <= cfg.tol_mu:
        return finish(guess)

    g_lo = g(lo) if guess != lo else g0
    g_hi = g(hi) if guess != hi else g0
    bracket = (g_lo, g_hi)
    if g_lo == 0.0:
        return finish(lo)
    if g_hi == 0.0:
        return finish(hi)
    if math.copysign(1.0, g_lo) == math.copysign(1.0, g_hi):
        raise NonConvergenceError(
            f"mean-velocity root not bracketed in [{lo:.6f}, {hi:.6f}]: "
            f"g({lo:.6f}) = {g_lo:.3e}, g({hi:.6f}) = {g_hi:.3e}")

    # seed the secant with the best two evaluations so far
    pts = sorted(evaluations, key=lambda t: abs(t[1]))[:2]
    (mu_a, g_a), (mu_b, g_b) = pts[0], pts[1]
    b_lo, b_hi = (lo, hi) if g_lo < 0 else (hi, lo)   # g(b_lo) < 0 < g(b_hi)

    def update_bracket(mu, val):
        nonlocal b_lo, b_hi
        if val < 0:
            b_lo = mu
        else:
            b_hi = mu

    update_bracket(guess, g0)
    for _ in range(60):
        if g_a != g_b:
            cand = mu_a - g_a * (mu_a - mu_b) / (g_a - g_b)
        else:
            cand = 0.5 * (b_lo + b_hi)
        if not (min(lo, hi) <= cand <= max(lo, hi)) or not math.isfinite(cand):
            cand = 0.5 * (b_lo + b_hi)
        val = g(cand)
        if abs(val) <= cfg.tol_mu:
            return finish(cand)
        update_bracket(cand, val)
        mu_b, g_b = mu_a, g_a
        mu_a, g_a = cand, val
    raise NonConvergenceError(
        f"mean-velocity matching did not reach |g| <= {cfg.tol_mu:.1e} "
        f"after {solves} solves (last |g| = {abs(g_a):.3e})")
