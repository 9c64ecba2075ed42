"""Deterministic flat-file exporters and loaders.

All floats are written with 17 significant digits ('%.17g'), which
round-trips doubles losslessly; dictionary keys are emitted sorted, and no
timestamps enter the data, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Any, Dict, List, Mapping

import numpy as np

from .errors import InputError
from .grid_quadrature import RadialFunction, RadialGrid, TailModel, build_grid
from .mode_algebra import BoundaryCoeffs, SpectralField

FORMAT_TAG = "rotorflow-solution/1"


def fmt_float(v: float) -> str:
    if not np.isfinite(v):
        raise InputError(f"refusing to serialize non-finite value {v}")
    return "%.17g" % float(v)


def dumps_canonical(obj: Any, indent: int = 0) -> str:
    """Canonical JSON: sorted keys, 17-significant-digit floats."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj.keys()):
            items.append(f'{pad}  {json.dumps(str(k))}: '
                         f'{dumps_canonical(obj[k], indent + 2)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [dumps_canonical(v, indent + 2) for v in obj]
        if all(len(p) < 28 and "\n" not in p for p in parts):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(f"{pad}  {p}" for p in parts) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist(), indent)
    raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def _mode_entry(f: RadialFunction) -> Dict[str, Any]:
    entry = {
        "re": [float(v) for v in f.values.real],
        "im": [float(v) for v in f.values.imag],
        "d1_re": [float(v) for v in f.d1.real],
        "d1_im": [float(v) for v in f.d1.imag],
        "d2_re": [float(v) for v in f.d2.real],
        "d2_im": [float(v) for v in f.d2.imag],
    }
    if f.tail is not None:
        entry["tail"] = {
            "exp_re": float(f.tail.exponent.real),
            "exp_im": float(f.tail.exponent.imag),
            "coeff_re": float(f.tail.coefficient.real),
            "coeff_im": float(f.tail.coefficient.imag),
        }
    return entry


def field_to_dict(x: SpectralField) -> Dict[str, Any]:
    return {
        "N": x.N,
        "gamma": {str(n): _mode_entry(x.gamma[n]) for n in range(-x.N, x.N + 1)},
        "w": {str(n): _mode_entry(x.w[n]) for n in range(-x.N, x.N + 1)},
    }


def _mode_from_entry(grid: RadialGrid, entry: Mapping[str, Any]) -> RadialFunction:
    def arr(re_key, im_key):
        re = np.asarray(entry[re_key], dtype=float)
        im = np.asarray(entry[im_key], dtype=float)
        if re.shape != (grid.n_nodes,) or im.shape != (grid.n_nodes,):
            raise InputError("coefficient array length does not match the grid")
        return re + 1j * im

    f = RadialFunction(grid, arr("re", "im"), arr("d1_re", "d1_im"),
                       arr("d2_re", "d2_im"), None)
    if "tail" in entry:
        t = entry["tail"]
        # attach without the continuity check; verification re-checks it
        f.tail = TailModel(complex(t["exp_re"], t["exp_im"]),
                           complex(t["coeff_re"], t["coeff_im"]))
    return f


def field_from_dict(grid: RadialGrid, data: Mapping[str, Any]) -> SpectralField:
    N = int(data["N"])
    gamma = {}
    w = {}
    for n in range(-N, N + 1):
        gamma[n] = _mode_from_entry(grid, data["gamma"][str(n)])
        w[n] = _mode_from_entry(grid, data["w"][str(n)])
    return SpectralField(grid, N, gamma, w)


def coeffs_to_dict(c: BoundaryCoeffs) -> Dict[str, Any]:
    return {
        "N": c.N,
        "re": [float(v) for v in c.coeffs.real],
        "im": [float(v) for v in c.coeffs.imag],
    }


def coeffs_from_dict(data: Mapping[str, Any],
                     zero_mode_constraint: bool = True) -> BoundaryCoeffs:
    N = int(data["N"])
    c = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    return BoundaryCoeffs(N, c, zero_mode_constraint)


def write_decay_csv(path, report) -> None:
    lines = ["r,sup_v,r_sup_v"]
    for r, sv, rsv in report.rows():
        lines.append(f"{fmt_float(r)},{fmt_float(sv)},{fmt_float(rsv)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, payload: Mapping[str, Any]) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_canonical(dict(payload)) + "\n")


def load_solution(path) -> Dict[str, Any]:
    """Parse a stored solution file; raises InputError on malformed input."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read solution file: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != FORMAT_TAG:
        raise InputError("not a solution file (missing or wrong format tag)")
    required = ("grid", "field", "mu", "mu_star_realized", "alpha", "kappa", "config")
    for key in required:
        if key not in data:
            raise InputError(f"solution file lacks required key {key!r}")
    return data


def grid_from_dict(data: Mapping[str, Any]) -> RadialGrid:
    grid = build_grid(float(data["R_max"]), int(data["J"]))
    nodes = np.asarray(data["nodes"], dtype=float)
    if nodes.shape != grid.nodes.shape or not np.allclose(
            nodes, grid.nodes, rtol=1e-14, atol=0.0):
        raise InputError("stored grid nodes do not match their parameters")
    return grid
