"""Bilinear convection term as a truncated mode convolution.

For output mode n (|n| <= N):

    F_n(r) = -(i/r) sum_{k+l=n, |k|,|l| <= N} ( k w_k^a(r) d_r gamma_l^b(r)
                                              - l gamma_l^a(r) d_r w_k^b(r) )

Pairs with |k| or |l| beyond the cutoff are dropped (spectral truncation, no
aliasing).  The output carries a power tail of exponent 4 + 2*alpha with the
coefficient matched at the outermost node, which is what the downstream
semi-infinite integrals consume.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

from .errors import InputError
from .grid_quadrature import RadialFunction
from .mode_algebra import SpectralField


def compute_NL(xa: SpectralField, xb: SpectralField, alpha: float,
               basis_tail: bool = True) -> Dict[int, RadialFunction]:
    """Convection source modes of the pair (xa, xb).

    Both fields must share grid and cutoff and carry first-derivative arrays.
    """
    if xa.grid != xb.grid:
        raise InputError("fields live on different grids")
    if xa.N != xb.N:
        raise InputError("fields have different mode cutoffs")
    N = xa.N
    grid = xa.grid
    for n in range(-N, N + 1):
        if xa.w[n].d1 is None or xb.gamma[n].d1 is None \
                or xa.gamma[n].d1 is None or xb.w[n].d1 is None:
            raise InputError(f"mode {n} lacks first-derivative arrays")

    rinv = np.exp(-grid.x)
    beta_tail = 4.0 + 2.0 * alpha
    out: Dict[int, RadialFunction] = {}
    for n in range(-N, N + 1):
        acc = np.zeros(grid.n_nodes, dtype=complex)
        for k in range(max(-N, n - N), min(N, n + N) + 1):
            l = n - k
            if k != 0:
                acc += k * xa.w[k].values * xb.gamma[l].d1
            if l != 0:
                acc -= l * xa.gamma[l].values * xb.w[k].d1
        f = RadialFunction(grid, -1j * rinv * acc)
        if basis_tail:
            f = f.with_matched_tail(beta_tail)
        out[n] = f
    return out
