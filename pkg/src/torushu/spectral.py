"""Dual-lattice sums weighted by squared Weyl sums.

Weyl sums over a whole index box are computed as matrix products: with
``E_i[k, j] = exp(-2 pi i k alpha_{j,i})`` the sum
``S(m) = sum_j prod_i E_i[m_i, j]`` is, for the last axis, a product of the
prefix factors with ``E_{d-1}^T``.  Only the half box ``m_0 >= 0`` is visited;
since ``|S(-m)| = |S(m)|`` for real points the entries with ``m_0 > 0`` carry
weight 2 and those with ``m_0 = 0`` (both signs present) weight 1.

Shell tail bound
----------------
Let ``n(r) = #{w in Lambda*: |w| <= r}``.  The translates ``w + P*`` of the dual
cell are disjoint and lie in ``B(0, r + delta)`` with ``delta = diam P*``, so
``n(r) <= V_d (r + delta)^d / covol(Lambda*)``.  For ``s > d``, summation by
parts gives

    sum_{|w| > W} |w|^{-s} <= int_W^inf n(r) s r^{-s-1} dr
                          = V_d s / covol* * sum_j C(d, j) delta^j W^{d-j-s} / (s - d + j).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import comb

from .errors import CapExceededError
from .lattice import Lattice, ball_volume, enumeration_cap

TWO_PI = 2.0 * math.pi
_BLOCK_BUDGET = 1 << 22


def shell_tail(L: Lattice, s: float, W: float) -> float:
    """Upper bound for ``sum_{w in Lambda*, |w| > W} |w|^{-s}``, ``s > dim``."""
    d = L.dim
    if s <= d:
        raise ValueError("shell_tail needs s > d")
    if W <= 0:
        return math.inf
    delta = L.dual_cell_diameter
    total = sum(comb(d, j) * delta**j * W ** (d - j - s) / (s - d + j) for j in range(d + 1))
    return float(ball_volume(d, 1.0) * s * L.covolume * total)


def dual_count_bound(L: Lattice, W: float) -> float:
    return ball_volume(L.dim, W + L.dual_cell_diameter) * L.covolume


def smallest_radius(bound, tol: float, start: int = 1) -> int:
    """Smallest integer ``W >= start`` with ``bound(W) < tol`` (``bound`` decreasing)."""
    lo = max(1, int(start))
    if bound(lo) < tol:
        return lo
    hi = lo
    while bound(hi) >= tol:
        lo, hi = hi, hi * 2
        if hi > 1 << 40:
            raise CapExceededError("tolerance unreachable: tail bound does not decay")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def largest_radius_under_cap(L: Lattice, cap: int | None = None) -> int:
    cap = enumeration_cap() if cap is None else cap
    vol = ball_volume(L.dim, 1.0) * L.covolume
    W = int(math.floor((cap / vol) ** (1.0 / L.dim) - L.dual_cell_diameter))
    while W > 0 and dual_count_bound(L, W) > cap:
        W -= 1
    return max(W, 0)


def _phase_table(alpha: np.ndarray, lo: int, hi: int) -> np.ndarray:
    k = np.arange(lo, hi + 1, dtype=np.float64)
    return np.exp(-1j * TWO_PI * np.outer(k, alpha))


def weyl_box(L: Lattice, frac: np.ndarray, W: float):
    """Iterate over the half box covering ``|w| <= W``.

    Yields ``(norm, factor, weyl2)`` arrays for the entries with ``0 < |w| <= W``;
    ``factor`` is the symmetry multiplicity (1 or 2) and ``weyl2 = |S(w)|^2``.
    """
    d = L.dim
    N = frac.shape[0]
    B = np.asarray(L.dual)
    G = B.T @ B
    hw = np.floor(W * L.column_norms * (1 + 1e-12) + 1e-12).astype(np.int64)
    w2max = W * W * (1 + 1e-12)
    last = _phase_table(frac[:, d - 1], -hw[d - 1], hw[d - 1])  # (2M+1, N)
    klast = np.arange(-hw[d - 1], hw[d - 1] + 1, dtype=np.float64)
    if d == 1:
        k = klast[hw[0]:]
        s = last[hw[0]:].sum(axis=1)
        w2 = G[0, 0] * k * k
        keep = (k != 0) & (w2 <= w2max)
        factor = np.where(k > 0, 2.0, 1.0)
        yield np.sqrt(w2[keep]), factor[keep], (s.real**2 + s.imag**2)[keep]
        return

    prefix_axes = [np.arange(0, hw[0] + 1)] + [np.arange(-h, h + 1) for h in hw[1:d - 1]]
    tables = [_phase_table(frac[:, 0], 0, hw[0])] + [
        _phase_table(frac[:, i], -hw[i], hw[i]) for i in range(1, d - 1)]
    grids = np.stack(np.meshgrid(*prefix_axes, indexing="ij"), axis=-1).reshape(-1, d - 1)
    # quadratic form |B m|^2 split into prefix part p and last coordinate k
    Gpp = G[:d - 1, :d - 1]
    Gpl = G[:d - 1, d - 1]
    Gll = G[d - 1, d - 1]
    rows = max(1, _BLOCK_BUDGET // max(N, klast.size))
    for s0 in range(0, grids.shape[0], rows):
        p = grids[s0:s0 + rows]
        pf = p.astype(np.float64)
        pp = np.einsum("ij,jk,ik->i", pf, Gpp, pf)
        pl = pf @ Gpl
        w2 = pp[:, None] + 2.0 * pl[:, None] * klast[None, :] + Gll * klast[None, :] ** 2
        mask = w2 <= w2max
        if not mask.any():
            continue
        prod = tables[0][p[:, 0]]
        for i in range(1, d - 1):
            prod = prod * tables[i][p[:, i] + hw[i]]
        s = prod @ last.T
        weyl2 = s.real**2 + s.imag**2
        origin = (np.all(p == 0, axis=1)[:, None]) & (klast[None, :] == 0)
        mask &= ~origin
        factor = np.where(p[:, 0] > 0, 2.0, 1.0)[:, None] * np.ones_like(klast)[None, :]
        yield np.sqrt(w2[mask]), factor[mask], weyl2[mask]


def weighted_weyl_sum(L: Lattice, frac: np.ndarray, W: float, weight):
    """Return ``(sum weight(|w|) |S(w)|^2, sum weight(|w|))`` over ``0 < |w| <= W``."""
    total = 0.0
    single = 0.0
    for norm, factor, weyl2 in weyl_box(L, frac, W):
        if norm.size == 0:
            continue
        f = factor * weight(norm)
        total += float(np.dot(f, weyl2))
        single += float(f.sum())
    return total, single
