"""Batch front end: solve / verify / sweep-mu commands over flat config files.

Config format: one `key = value` pair per line, `#` comments, plus repeated

    mode = n  re_vr  im_vr  re_vtheta  im_vtheta

entries giving the boundary velocity coefficients for n != 0; the conjugate
mode -n is filled in automatically so physical data stays real.
ROTORFLOW_THREADS caps per-mode parallelism (default 1).

Exit codes: 0 success, 1 input error, 2 non-convergence, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InputError, NonConvergenceError, RotorflowError
from .field_eval import decay_report, eval_fields, residual_check
from .mode_algebra import BoundaryCoeffs, critical_params, enforce_reality, max_asymmetry
from .linear_solver import TraceData, trace_boundary
from .serialize import (
    FORMAT_TAG,
    coeffs_from_dict,
    coeffs_to_dict,
    field_from_dict,
    field_to_dict,
    grid_from_dict,
    load_solution,
    write_decay_csv,
    write_json,
)
from .solver import SolveReport, SolverConfig, match_mu_star, solve_kappa_solution

_SCALAR_KEYS = {
    "mu0": float, "mu_star": float, "mu": float, "kappa": float,
    "N": int, "R_max": float, "J": int,
    "tol_fixed_point": float, "tol_mu": float,
    "max_iter": int, "relaxation": float, "seed": int,
    "output_dir": str, "formats": str,
}


@dataclass
class RunConfig:
    """Parsed configuration of one batch run."""

    mu0: float
    modes: List[Tuple[int, complex, complex]]
    mu_star: Optional[float] = None
    mu_pinned: Optional[float] = None
    kappa: float = 2.0
    N: int = 16
    R_max: float = 1e4
    J: int = 600
    tol_fixed_point: float = 1e-10
    tol_mu: float = 1e-10
    max_iter: int = 50
    relaxation: float = 1.0
    seed: int = 0
    output_dir: str = "."
    formats: Tuple[str, ...] = ("json", "csv")


def parse_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc

    values: Dict[str, object] = {}
    modes: List[Tuple[int, complex, complex]] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key == "mode":
            parts = rhs.split()
            if len(parts) != 5:
                raise InputError(
                    f"{path}:{lineno}: mode entries need 5 numbers "
                    "(n re_vr im_vr re_vtheta im_vtheta)")
            try:
                n = int(parts[0])
                nums = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            if n == 0:
                raise InputError(f"{path}:{lineno}: mode 0 cannot be prescribed "
                                 "(zero flux and free mean are built in)")
            modes.append((n, complex(nums[0], nums[1]), complex(nums[2], nums[3])))
        elif key in _SCALAR_KEYS:
            caster = _SCALAR_KEYS[key]
            try:
                values[key] = caster(rhs)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        else:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")

    if "mu0" not in values:
        raise InputError(f"{path}: missing required key mu0")

    fmts = tuple(s.strip() for s in str(values.pop("formats", "json,csv")).split(","))
    for f in fmts:
        if f not in ("json", "csv"):
            raise InputError(f"unknown export format {f!r}")

    rc = RunConfig(
        mu0=float(values["mu0"]),
        modes=modes,
        mu_star=values.get("mu_star"),
        mu_pinned=values.get("mu"),
        kappa=float(values.get("kappa", 2.0)),
        N=int(values.get("N", 16)),
        R_max=float(values.get("R_max", 1e4)),
        J=int(values.get("J", 600)),
        tol_fixed_point=float(values.get("tol_fixed_point", 1e-10)),
        tol_mu=float(values.get("tol_mu", 1e-10)),
        max_iter=int(values.get("max_iter", 50)),
        relaxation=float(values.get("relaxation", 1.0)),
        seed=int(values.get("seed", 0)),
        output_dir=str(values.get("output_dir", ".")),
        formats=fmts,
    )
    return rc


def boundary_from_modes(modes: List[Tuple[int, complex, complex]], N: int) -> TraceData:
    """Assemble the boundary trace with automatic conjugate completion."""
    v_r = np.zeros(2 * N + 1, dtype=complex)
    v_t = np.zeros(2 * N + 1, dtype=complex)
    seen = set()
    for n, vr, vt in modes:
        if abs(n) > N:
            raise InputError(f"mode {n} outside the cutoff |n| <= {N}")
        if n in seen or -n in seen:
            raise InputError(f"mode {n} specified twice (conjugates are implicit)")
        seen.add(n)
        v_r[n + N] = vr
        v_t[n + N] = vt
        v_r[-n + N] = np.conj(vr)
        v_t[-n + N] = np.conj(vt)
    return TraceData(BoundaryCoeffs(N, v_r), BoundaryCoeffs(N, v_t))


def _workers_from_env() -> int:
    raw = os.environ.get("ROTORFLOW_THREADS", "1")
    try:
        w = int(raw)
    except ValueError as exc:
        raise InputError(f"ROTORFLOW_THREADS must be an integer, got {raw!r}") from exc
    if w < 1:
        raise InputError(f"ROTORFLOW_THREADS must be >= 1, got {w}")
    return w


def solver_config(rc: RunConfig) -> SolverConfig:
    return SolverConfig(
        mu0=rc.mu0,
        boundary=boundary_from_modes(rc.modes, rc.N),
        mu_star=rc.mu_star,
        kappa=rc.kappa,
        N=rc.N,
        R_max=rc.R_max,
        J=rc.J,
        tol_fixed_point=rc.tol_fixed_point,
        tol_mu=rc.tol_mu,
        max_iter=rc.max_iter,
        relaxation=rc.relaxation,
        workers=_workers_from_env(),
    )


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _config_echo(rc: RunConfig) -> dict:
    return {
        "mu0": rc.mu0,
        "mu_star": rc.mu_star if rc.mu_star is not None else rc.mu0,
        "mu_pinned": rc.mu_pinned,
        "kappa": rc.kappa,
        "N": rc.N,
        "R_max": rc.R_max,
        "J": rc.J,
        "tol_fixed_point": rc.tol_fixed_point,
        "tol_mu": rc.tol_mu,
        "max_iter": rc.max_iter,
        "relaxation": rc.relaxation,
        "seed": rc.seed,
        "modes": [[n, vr.real, vr.imag, vt.real, vt.imag] for n, vr, vt in rc.modes],
    }


def solution_payload(report: SolveReport, rc: RunConfig, cfg: SolverConfig) -> dict:
    grid = cfg.grid
    return {
        "format": FORMAT_TAG,
        "config": _config_echo(rc),
        "grid": {"R_max": rc.R_max, "J": rc.J, "nodes": list(grid.nodes)},
        "alpha": cfg.alpha,
        "kappa": cfg.kappa,
        "mu": report.mu,
        "mu_star_target": cfg.mu_star,
        "mu_star_realized": report.mu_star_realized,
        "dr_gamma0_at_1": report.dr_gamma0_at_1,
        "iterations": report.iterations,
        "inner_solves": report.inner_solves,
        "converged": report.converged,
        "phi_residual": report.phi_residual,
        "trace_mismatch": report.trace_mismatch,
        "contraction_history": list(report.contraction_history),
        "contraction_factors": list(report.contraction_factors),
        "mu_evaluations": [[m, g] for m, g in report.mu_evaluations],
        "norms": dict(report.norms),
        "x_star": {"gamma": coeffs_to_dict(report.x_star[0]),
                   "w": coeffs_to_dict(report.x_star[1])},
        "field": field_to_dict(report.field),
    }


def cmd_solve(config_path: str) -> int:
    rc = parse_config(config_path)
    cfg = solver_config(rc)
    if rc.mu_pinned is not None:
        report = solve_kappa_solution(cfg, rc.mu_pinned)
    else:
        report = match_mu_star(cfg)

    os.makedirs(rc.output_dir, exist_ok=True)
    phys = eval_fields(enforce_reality(report.field), report.mu)
    decay = decay_report(phys, cfg.alpha)

    if "json" in rc.formats:
        write_json(os.path.join(rc.output_dir, "solution.json"),
                   solution_payload(report, rc, cfg))
        residual_doc = dict(report.residual_summary.to_dict())
        residual_doc["phi_residual"] = report.phi_residual
        residual_doc["trace_mismatch"] = report.trace_mismatch
        write_json(os.path.join(rc.output_dir, "residual.json"), residual_doc)
    if "csv" in rc.formats:
        write_decay_csv(os.path.join(rc.output_dir, "decay.csv"), decay)

    print(f"converged in {report.iterations} sweeps "
          f"({report.inner_solves} solve(s)); mu = {report.mu:.12g}, "
          f"mu* = {report.mu_star_realized:.12g}")
    print(f"phi residual {report.phi_residual:.3e}, "
          f"trace mismatch {report.trace_mismatch:.3e}, "
          f"equation residual {report.residual_summary.aggregate_analytic:.3e}")
    if decay.slope is not None:
        print(f"far-field decay slope {decay.slope:.4f} "
              f"(bound {decay.slope_bound:.4f})")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _check(results: list, name: str, ok: bool, detail: str) -> None:
    results.append(ok)
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def cmd_verify(solution_path: str) -> int:
    data = load_solution(solution_path)
    try:
        grid = grid_from_dict(data["grid"])
        x = field_from_dict(grid, data["field"])
        alpha = float(data["alpha"])
        kappa = float(data["kappa"])
        mu = float(data["mu"])
        tol_fp = float(data["config"]["tol_fixed_point"])
        target = boundary_from_modes(
            [(int(m[0]), complex(m[1], m[2]), complex(m[3], m[4]))
             for m in data["config"]["modes"]], x.N)
        gs = coeffs_from_dict(data["x_star"]["gamma"])
        ws = coeffs_from_dict(data["x_star"]["w"])
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise InputError(f"malformed solution file: {exc}") from exc

    scale = 1.0
    scale_r2 = 0.0
    r2 = np.exp(2.0 * grid.x)
    for store in (x.gamma, x.w):
        for f in store.values():
            scale = max(scale, float(np.max(np.abs(f.values))))
            scale_r2 = max(scale_r2, float(np.max(r2 * np.abs(f.values))))

    results: list = []

    asym = max_asymmetry(x)
    _check(results, "conjugate-symmetry", asym <= 1e-10 * scale,
           f"max asymmetry {asym:.3e}")

    # boundary values of the homogeneous representation
    bv = 0.0
    for n in range(-x.N, x.N + 1):
        if n == 0:
            continue
        bv = max(bv, abs(x.gamma[n].values[0] - gs[n]), abs(x.w[n].values[0] - ws[n]))
    _check(results, "boundary-values", bv <= 1e-10 * max(1.0, scale),
           f"max |value(1) - coefficient| = {bv:.3e}")

    tr = trace_boundary(x)
    tm = max(float(np.max(np.abs(tr.v_r.coeffs - target.v_r.coeffs))),
             float(np.max(np.abs(tr.v_theta.coeffs - target.v_theta.coeffs))))
    tol_trace = max(1e-8, 10.0 * tol_fp)
    _check(results, "boundary-trace", tm <= tol_trace,
           f"max trace mismatch {tm:.3e} (tol {tol_trace:.1e})")

    phys = eval_fields(enforce_reality(x), mu)
    rep = residual_check(phys, x, alpha=alpha)
    _check(results, "ode-analytic", rep.aggregate_analytic <= 1e-6,
           f"aggregate r^2 residual {rep.aggregate_analytic:.3e}")
    tol_fd = max(1e-5, 1e-2 * scale_r2)
    _check(results, "ode-fd", rep.aggregate_fd <= tol_fd,
           f"aggregate FD residual {rep.aggregate_fd:.3e} (tol {tol_fd:.1e})")
    _check(results, "flux", rep.flux <= 1e-12, f"|flux| = {rep.flux:.3e}")

    decay = decay_report(phys, alpha)
    if decay.identically_zero:
        _check(results, "decay", True, "field identically zero")
    else:
        _check(results, "decay", decay.slope_ok and decay.weighted_decreasing,
               f"slope {decay.slope:.4f} vs bound {decay.slope_bound:.4f}, "
               f"r*sup|v| decreasing: {decay.weighted_decreasing}")

    worst_tail = 0.0
    for store in (x.gamma, x.w):
        for f in store.values():
            if f.tail is None:
                continue
            model = f.tail.coefficient * np.exp(-f.tail.exponent * grid.x[-1])
            s = max(abs(f.values[-1]), abs(model))
            if s > 0:
                worst_tail = max(worst_tail, abs(f.values[-1] - model) / s)
    _check(results, "tail-continuity", worst_tail <= 1e-6,
           f"worst relative tail mismatch {worst_tail:.3e}")

    h = grid.h
    worst_d1 = 0.0
    for store in (x.gamma, x.w):
        for f in store.values():
            rd1 = (f.d1 * grid.nodes)[1:-1]
            fd = (f.values[2:] - f.values[:-2]) / (2.0 * h)
            denom = max(float(np.max(np.abs(rd1))), 1e-12 * scale)
            worst_d1 = max(worst_d1, float(np.max(np.abs(fd - rd1))) / denom)
    _check(results, "d1-consistency", worst_d1 <= 5e-2,
           f"worst relative derivative deviation {worst_d1:.3e}")

    mu_err = abs(mu - float(data["dr_gamma0_at_1"]) - float(data["mu_star_realized"]))
    _check(results, "mu-star", mu_err <= 1e-12,
           f"|mu - d_r gamma_0(1) - mu*| = {mu_err:.3e}")

    if all(results):
        print("verification passed")
        return 0
    print("verification FAILED", file=sys.stderr)
    return 3


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def cmd_sweep_mu(config_path: str, mu_from: float, mu_to: float, steps: int) -> int:
    rc = parse_config(config_path)
    cfg = solver_config(rc)
    if steps < 2:
        raise InputError("sweep needs at least 2 steps")
    mu_star = cfg.mu_star
    rows = []
    for mu in np.linspace(mu_from, mu_to, steps):
        rep = solve_kappa_solution(cfg, float(mu), with_residuals=False)
        g = rep.mu - rep.dr_gamma0_at_1 - mu_star
        rows.append((float(mu), rep.dr_gamma0_at_1, g))
        print(f"mu = {mu:.10g}: d_r gamma_0(1) = {rep.dr_gamma0_at_1:.6e}, "
              f"g = {g:.6e}")
    os.makedirs(rc.output_dir, exist_ok=True)
    path = os.path.join(rc.output_dir, "sweep_mu.csv")
    from .serialize import fmt_float
    lines = ["mu,dr_gamma0_at_1,g"]
    for mu, d, g in rows:
        lines.append(f"{fmt_float(mu)},{fmt_float(d)},{fmt_float(g)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rotorflow",
        description="Steady exterior-flow solver around a rotating disk")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the construction for a config file")
    p_solve.add_argument("config")

    p_verify = sub.add_parser("verify", help="re-check a stored solution")
    p_verify.add_argument("solution")

    p_sweep = sub.add_parser("sweep-mu", help="tabulate the mean-velocity defect g(mu)")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--from", dest="mu_from", type=float, required=True)
    p_sweep.add_argument("--to", dest="mu_to", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, default=11)

    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config)
        if args.command == "verify":
            return cmd_verify(args.solution)
        if args.command == "sweep-mu":
            return cmd_sweep_mu(args.config, args.mu_from, args.mu_to, args.steps)
        raise InputError(f"unknown command {args.command!r}")
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2
    except RotorflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
