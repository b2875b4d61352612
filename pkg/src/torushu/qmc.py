"""Worst-case error of equal-weight cubature in Sobolev spaces on the torus.

The reproducing kernel of ``W^{alpha,2}`` is
``K(x, y) = sum_w (1 + 4 pi^2 |w|^2)^{-alpha} e^{2 pi i <w, x - y>}`` and

    wce(X)^2 = N^{-2} sum_{w != 0} (1 + 4 pi^2 |w|^2)^{-alpha} |S(w)|^2.

Since ``|S(w)|^2 <= N^2`` the truncated tail is at most
``sum_{|w| > W} (1 + 4 pi^2 |w|^2)^{-alpha} <= (2 pi)^{-2 alpha} T_{2 alpha}(W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import spectral
from .errors import CapExceededError, PreconditionError
from .lattice import Lattice, enumerate_dual, require_unit_covolume
from .pointgen import PointSet
from .regime import RegimeReport, loglog_fit, verdict
from .variance import variance_spectral

TWO_PI = 2.0 * math.pi
DEFAULT_TRUNCATION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class KernelSpec:
    lattice: Lattice
    alpha: float
    truncation_tol: float = DEFAULT_TRUNCATION_TOL

    def __post_init__(self):
        require_unit_covolume(self.lattice)
        if not self.alpha > 0.5 * self.lattice.dim:
            raise PreconditionError(f"alpha={self.alpha!r} must exceed d/2={0.5 * self.lattice.dim}")
        if not self.truncation_tol > 0:
            raise PreconditionError("truncation_tol must be positive")

    def weight(self, norm):
        norm = np.asarray(norm, dtype=np.float64)
        return (1.0 + (TWO_PI * norm) ** 2) ** (-self.alpha)

    def tail_bound(self, W: float) -> float:
        return TWO_PI ** (-2.0 * self.alpha) * spectral.shell_tail(self.lattice, 2.0 * self.alpha, W)

    def truncation(self, cap: int | None = None) -> int:
        """Smallest integer W with certified tail below ``truncation_tol``."""
        W = spectral.smallest_radius(self.tail_bound, self.truncation_tol)
        W_cap = spectral.largest_radius_under_cap(self.lattice, cap)
        if W > W_cap:
            raise CapExceededError(
                f"tolerance unreachable at cap: W={W} needed, cap allows {W_cap} "
                f"(tail {self.tail_bound(W_cap):.3g} at the cap)")
        return W


@lru_cache(maxsize=4)
def _kernel_terms(K: KernelSpec, W: int):
    dual = enumerate_dual(K.lattice, W)
    return dual.index.astype(np.float64), K.weight(dual.norm)


def kernel_eval(K: KernelSpec, x, y, W: int | None = None) -> float:
    """Truncated reproducing kernel; exactly symmetric in ``x`` and ``y``."""
    W = K.truncation() if W is None else int(W)
    index, weight = _kernel_terms(K, W)
    delta = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    # the phase is odd in delta, so |phase| makes the swap bitwise exact
    phase = np.abs(TWO_PI * (index @ delta))
    return float(np.dot(weight, np.cos(phase)))


def wce(X: PointSet, K: KernelSpec, W: int | None = None, return_bound: bool = False):
    """Worst-case error of the equal-weight rule on ``X``.

    With ``return_bound`` the result is ``(wce, bound)`` where ``bound`` bounds
    the omitted part of ``wce^2``.
    """
    if X.lattice is not K.lattice and not np.array_equal(X.lattice.basis, K.lattice.basis):
        raise PreconditionError("point set and kernel live on different lattices")
    W = K.truncation() if W is None else int(W)
    total, _ = spectral.weighted_weyl_sum(K.lattice, X.frac, W, K.weight)
    value = math.sqrt(max(total, 0.0)) / X.N
    return (value, K.tail_bound(W)) if return_bound else value


def _rms_wce(entry, alpha: float, tol: float, W):
    sets = entry if isinstance(entry, (list, tuple)) else [entry]
    K = KernelSpec(sets[0].lattice, alpha, tol)
    sq = [wce(X, K, W=W) ** 2 for X in sets]
    return sets[0].N, math.sqrt(float(np.mean(sq)))


def qmc_design_check(sets, alpha: float, tol: float = DEFAULT_TRUNCATION_TOL, W: int | None = None,
                     margin: float = 0.1) -> RegimeReport:
    """Fit log wce against log N; consistent if the slope is ``<= -alpha/d + margin``.

    Each entry is a PointSet or a list of replicate PointSets of one size, in
    which case the root-mean-square wce is used.
    """
    if len(sets) < 4:
        raise PreconditionError("qmc_design_check needs at least 4 point sets")
    first = sets[0][0] if isinstance(sets[0], (list, tuple)) else sets[0]
    d = first.dim
    rows = [_rms_wce(entry, alpha, tol, W) for entry in sets]
    N = [r[0] for r in rows]
    values = [r[1] for r in rows]
    if min(values) <= 0:
        return RegimeReport("qmc", math.nan, math.nan, 0.0, "inconclusive",
                            [[n, alpha, v] for n, v in rows], -alpha / d + margin)
    slope, const, r2 = loglog_fit(N, values)
    threshold = -alpha / d + margin
    return RegimeReport("qmc", slope, const, r2, verdict(slope, r2, threshold),
                        [[n, alpha, v] for n, v in rows], threshold, None, {"alpha": alpha})


def lemma1_bound_check(X: PointSet, R: float, W: int | None = None, tol: float = 1e-3) -> dict:
    """Compare ``V(X, R)`` with ``R^{d-1} N^2 wce^2`` for smoothness ``(d+1)/2``.

    Both sums are truncated at the same radius: ``W`` if given, else the one
    the variance tolerance selects (clipped at the cap).
    """
    d, N = X.dim, X.N
    try:
        var = variance_spectral(X, R, tol, W=W)
    except CapExceededError as exc:
        var = exc.partial
    K = KernelSpec(X.lattice, 0.5 * (d + 1))
    Wv = var.detail["W"]
    w, tail = wce(X, K, W=Wv, return_bound=True)
    rhs = R ** (d - 1) * N * N * w * w
    return {"lhs": var.value, "rhs_without_constant": rhs, "ratio": var.value / rhs,
            "lhs_error": var.error_bound, "rhs_error": R ** (d - 1) * N * N * tail, "W": Wv}
