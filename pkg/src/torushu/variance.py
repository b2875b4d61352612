"""Number variance of point sets on the torus.

``V(X, R)`` is the variance, over a uniform center ``x``, of the number of
points of ``X`` in ``B(x, R)``.  Counting is periodized: a point is counted
once for every lattice translate within distance ``R`` of the center, which
coincides with counting by torus distance whenever ``2R < lambda_1``.  In
Fourier terms

    V = R^d sum_{w != 0} |w|^{-d} J_{d/2}(2 pi |w| R)^2 |S(w)|^2,

and in real space ``V = sum_{k,j} sum_lambda lens(|x_k - x_j + lambda|) - N^2 Vol^2``.
Summing the single-point Fourier series gives the identity

    g(R) := sum_{w != 0} R^d |w|^{-d} J^2 = sum_lambda lens(|lambda|) - Vol^2,

which supplies an alternative certified tail for truncated sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import betainc

from . import spectral
from .bessel import bessel_j, envelope_constant
from .errors import CapExceededError, PreconditionError
from .lattice import (DualVector, Lattice, ball_volume, require_unit_covolume, translate_offsets,
                      wrap_frac)
from .pointgen import Partition, PointSet, SpectrumSelection
from .rng import RngSpec

TWO_PI = 2.0 * math.pi
# relative allowance for roundoff in the identity-based tail bound
_IDENTITY_SLACK = 1e-12
_PAIR_BUDGET = 1 << 21


@dataclass
class VarianceEstimate:
    value: float
    method: str
    error_bound: float
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ThresholdProfile:
    N: int
    t_values: list
    variance_at_t: list

    @property
    def radii(self) -> list:
        return [e.detail["R"] for e in self.variance_at_t]


def _check_radius(L: Lattice, R: float) -> float:
    require_unit_covolume(L)
    R = float(R)
    if not 0.0 < R < L.half_diameter:
        raise PreconditionError(f"R={R!r} must lie in (0, half_diameter={L.half_diameter:.6g})")
    return R


def _check_embedded(L: Lattice, R: float) -> None:
    if 2.0 * R >= L.shortest_vector:
        raise PreconditionError(f"ball not embedded: 2R={2 * R:.6g} >= lambda_1={L.shortest_vector:.6g}")


def _norm_of(w) -> float:
    if isinstance(w, DualVector):
        return float(w.norm)
    return float(np.linalg.norm(np.asarray(w, dtype=np.float64)))


def ball_coefficient(L: Lattice, w, R: float) -> float:
    """Fourier coefficient ``R^{d/2} |w|^{-d/2} J_{d/2}(2 pi |w| R)`` of a ball.

    ``w`` is a DualVector or a Cartesian dual vector.
    """
    R = float(R)
    if not 0.0 < R <= L.half_diameter:
        raise PreconditionError("R must lie in (0, half_diameter]")
    r = _norm_of(w)
    if r == 0.0:
        raise PreconditionError("w = 0: the zeroth coefficient is ball_volume(d, R)")
    d = L.dim
    return R ** (0.5 * d) * r ** (-0.5 * d) * bessel_j(0.5 * d, TWO_PI * r * R)


def spectral_weight(d: int, R: float, norm):
    """``R^d |w|^{-d} J_{d/2}(2 pi |w| R)^2`` as a function of ``|w| > 0``."""
    norm = np.asarray(norm, dtype=np.float64)
    j = bessel_j(0.5 * d, TWO_PI * norm * R)
    return (R / norm) ** d * np.square(j)


def weyl_sum_sq(X: PointSet, w):
    """``|sum_j exp(-2 pi i <w, x_j>)|^2`` for a DualVector or integer dual index.

    An index array of shape (k, d) gives k values.
    """
    m = w.index if isinstance(w, DualVector) else w
    m = np.asarray(m, dtype=np.float64)
    phase = TWO_PI * (X.frac @ m.T)
    c = np.cos(phase).sum(axis=0)
    s = np.sin(phase).sum(axis=0)
    out = c * c + s * s
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- real space

def lens_volume(d: int, R, t):
    """Volume of the intersection of two radius-R balls whose centers are ``t`` apart."""
    R = np.asarray(R, dtype=np.float64)
    t = np.abs(np.asarray(t, dtype=np.float64))
    R, t = np.broadcast_arrays(R, t)
    out = np.zeros(t.shape)
    inside = t < 2.0 * R
    r, s = R[inside], t[inside]
    if d == 1:
        v = 2.0 * r - s
    elif d == 2:
        v = 2.0 * r * r * np.arccos(s / (2.0 * r)) - 0.5 * s * np.sqrt(4.0 * r * r - s * s)
    elif d == 3:
        v = math.pi / 12.0 * (4.0 * r + s) * (2.0 * r - s) ** 2
    else:
        x = 1.0 - s * s / (4.0 * r * r)
        v = ball_volume(d, r) * betainc(0.5 * (d + 1), 0.5, x)
    out[inside] = v
    return float(out) if out.ndim == 0 else out


def _periodized_lens(L: Lattice, delta: np.ndarray, R: float, offsets: np.ndarray) -> np.ndarray:
    """``sum_k lens(|A(delta + k)|)`` for wrapped fractional differences (n, d)."""
    A = L.basis
    base = delta @ A.T
    shift = offsets @ A.T
    total = np.zeros(delta.shape[0])
    lim = 4.0 * R * R
    for o in shift:
        y = base + o
        t2 = np.einsum("ij,ij->i", y, y)
        near = t2 < lim
        if near.any():
            total[near] += lens_volume(L.dim, R, np.sqrt(t2[near]))
    return total


def self_overlap(L: Lattice, R: float) -> float:
    """``sum_lambda lens(|lambda|) - Vol^2``: the variance for a single point."""
    offsets = translate_offsets(L, 2.0 * R)
    s = _periodized_lens(L, np.zeros((1, L.dim)), R, offsets)[0]
    return float(s - ball_volume(L.dim, R) ** 2)


def pair_sum_variance(X: PointSet, R: float) -> float:
    """Periodized real-space variance; exact (up to roundoff) for every ``R > 0``."""
    L = X.lattice
    require_unit_covolume(L)
    R = float(R)
    if R <= 0:
        raise PreconditionError("R must be positive")
    N, d = X.N, X.dim
    offsets = translate_offsets(L, 2.0 * R)
    vol = ball_volume(d, R)
    diag = N * (self_overlap(L, R) + vol * vol)
    ii, jj = np.triu_indices(N, k=1)
    step = max(1, _PAIR_BUDGET // len(offsets))
    off = 0.0
    for p0 in range(0, ii.size, step):
        delta = wrap_frac(X.frac[jj[p0:p0 + step]] - X.frac[ii[p0:p0 + step]])
        off += float(_periodized_lens(L, delta, R, offsets).sum())
    return diag + 2.0 * off - (N * vol) ** 2


def variance_realspace(X: PointSet, R: float) -> VarianceEstimate:
    L = X.lattice
    R = _check_radius(L, R)
    _check_embedded(L, R)
    return VarianceEstimate(pair_sum_variance(X, R), "realspace", 0.0, {"R": R, "N": X.N})


# ------------------------------------------------------------------- spectral

def _spectral_bounds(L: Lattice, R: float, W: int, scale: float, single: float, g0: float,
                     slack_scale: float | None = None):
    d = L.dim
    slack_scale = scale if slack_scale is None else slack_scale
    env = scale * R ** (d - 1) * envelope_constant(0.5 * d) / TWO_PI * spectral.shell_tail(L, d + 1, W)
    ident = scale * max(g0 - single, 0.0) + slack_scale * _IDENTITY_SLACK * (abs(g0) + 1.0)
    return env, ident


def _choose_W(L: Lattice, R: float, tol: float, scale: float, W, cap):
    """Return (W, reachable): the envelope-certified truncation, clipped at the cap."""
    if W is not None:
        return int(W), True
    d = L.dim
    pref = scale * R ** (d - 1) * envelope_constant(0.5 * d) / TWO_PI
    W_cap = spectral.largest_radius_under_cap(L, cap)
    if tol is None:
        if W_cap < 1:
            raise CapExceededError("enumeration cap is too small for any truncation")
        return W_cap, True
    try:
        W_env = spectral.smallest_radius(lambda w: pref * spectral.shell_tail(L, d + 1, w), tol)
    except CapExceededError:
        W_env = W_cap + 1
    if W_env <= W_cap:
        return W_env, True
    if W_cap < 1:
        raise CapExceededError("tolerance unreachable at cap: enumeration cap is too small")
    return W_cap, False


def variance_spectral(X: PointSet, R: float, tol: float | None = 1e-6, W: int | None = None,
                      cap: int | None = None, tail_correction: bool = False) -> VarianceEstimate:
    """Truncated Fourier series of the number variance.

    The truncation radius is the smallest integer ``W`` whose certified tail
    bound is below ``tol`` (or the given ``W``).  ``error_bound`` is the smaller
    of the envelope bound ``N^2 R^{d-1} C_env / (2 pi) * T_{d+1}(W)`` and
    ``N^2 (g(R) - sum_{0<|w|<=W} R^d |w|^{-d} J^2)``.  The value is a partial sum
    of non-negative terms and so never exceeds the true variance.

    With ``tail_correction`` the diagonal (``k == j``) part of the omitted tail,
    ``N (g(R) - sum_{0<|w|<=W} R^d |w|^{-d} J^2)``, is added back exactly.  Only
    the off-diagonal tail remains, so both bounds shrink by ``(N - 1) / N``, but
    the value is no longer a lower bound.
    """
    L = X.lattice
    R = _check_radius(L, R)
    d, N = X.dim, X.N
    if W is None and tol is not None and not tol > 0:
        raise PreconditionError("tol must be positive")
    scale = float(N) * N
    tail_scale = scale - N if tail_correction else scale
    W, reachable = _choose_W(L, R, tol, tail_scale, W, cap)
    value, single = spectral.weighted_weyl_sum(L, X.frac, W, lambda r: spectral_weight(d, R, r))
    g0 = self_overlap(L, R)
    env, ident = _spectral_bounds(L, R, W, tail_scale, single, g0, slack_scale=scale)
    if tail_correction:
        value += N * max(g0 - single, 0.0)
    bound = min(env, ident)
    detail = {"R": R, "N": N, "W": W}
    if tail_correction:
        detail["tail_correction"] = True
    est = VarianceEstimate(value, "spectral", bound, detail)
    if not reachable and bound >= tol:
        raise CapExceededError(f"tolerance unreachable at cap (W={W}, bound={bound:.3g})", partial=est)
    return est


# ---------------------------------------------------------------- Monte Carlo

def variance_montecarlo(X: PointSet, R: float, S: int, rng: RngSpec) -> VarianceEstimate:
    """Sample variance of periodized counts over ``S`` uniform centers."""
    L = X.lattice
    R = _check_radius(L, R)
    if int(S) != S or S < 100:
        raise PreconditionError("S must be an integer >= 100")
    S = int(S)
    N, d = X.N, X.dim
    gen = rng.generator()
    centers = gen.random((S, d))
    offsets = translate_offsets(L, R) @ L.basis.T
    rows = max(1, _PAIR_BUDGET // N)
    counts = np.empty(S)
    r2 = R * R
    for c0 in range(0, S, rows):
        c = centers[c0:c0 + rows]
        y = wrap_frac(X.frac[None, :, :] - c[:, None, :]) @ L.basis.T
        n = np.zeros(c.shape[0])
        for o in offsets:
            z = y + o
            n += (np.einsum("ijk,ijk->ij", z, z) <= r2).sum(axis=1)
        counts[c0:c0 + rows] = n
    sq = (counts - N * ball_volume(d, R)) ** 2
    se = float(sq.std(ddof=1) / math.sqrt(S))
    return VarianceEstimate(float(sq.mean()), "montecarlo", se, {"R": R, "N": N, "S": S, "seed": rng.seed})


# ------------------------------------------------------------------------ DPP

def _dpp_pair_sum(S: SpectrumSelection, R: float, W: float | None) -> float:
    """``sum_{w != w' in D} f(w - w')`` restricted to ``|w - w'| <= W``."""
    vec = S.vectors.cartesian
    d = S.lattice.dim
    total = 0.0
    for i in range(len(vec) - 1):
        diff = vec[i + 1:] - vec[i]
        r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if W is not None:
            r = r[r <= W * (1 + 1e-12)]
        if r.size:
            total += float(spectral_weight(d, R, r).sum())
    return 2.0 * total


def expected_variance_dpp(S: SpectrumSelection, R: float, tol: float | None = 1e-4, W: int | None = None,
                          cap: int | None = None) -> VarianceEstimate:
    """Expected number variance of the projection DPP with spectrum ``D = S``.

    ``R^d sum_{w' in D} sum_{w notin D, |w - w'| <= W} f(w - w')``, evaluated as
    ``N F(W) - sum_{w != w' in D, |w-w'| <= W} f(w - w')`` with
    ``F(W) = sum_{0 < |u| <= W} f(u)``.
    """
    L = S.lattice
    R = _check_radius(L, R)
    d, N = L.dim, S.N
    if W is None and tol is not None and not tol > 0:
        raise PreconditionError("tol must be positive")
    W, reachable = _choose_W(L, R, tol, float(N), W, cap)
    _, single = spectral.weighted_weyl_sum(L, np.zeros((1, d)), W, lambda r: spectral_weight(d, R, r))
    value = N * single - _dpp_pair_sum(S, R, W)
    env, ident = _spectral_bounds(L, R, W, float(N), single, self_overlap(L, R))
    bound = min(env, ident)
    est = VarianceEstimate(value, "dpp_expected", bound, {"R": R, "N": N, "W": W})
    if not reachable and bound >= tol:
        raise CapExceededError(f"tolerance unreachable at cap (W={W}, bound={bound:.3g})", partial=est)
    return est


def expected_variance_dpp_exact(S: SpectrumSelection, R: float) -> float:
    """Closed form ``N g(R) - sum_{w != w' in D} f(w - w')`` (no truncation)."""
    L = S.lattice
    R = _check_radius(L, R)
    return S.N * self_overlap(L, R) - _dpp_pair_sum(S, R, None)


# ------------------------------------------------------------------- jittered

def expected_variance_jittered(P: Partition, R: float, S_cells: int, rng: RngSpec) -> VarianceEstimate:
    """``N Vol - sum_k E[lens]`` with the cell double integrals estimated by Monte Carlo."""
    L = P.lattice
    R = _check_radius(L, R)
    _check_embedded(L, R)
    if int(S_cells) != S_cells or S_cells < 100:
        raise PreconditionError("S_cells must be an integer >= 100")
    S_cells = int(S_cells)
    d, N = L.dim, P.N
    gen = rng.generator()
    offsets = translate_offsets(L, 2.0 * R)
    cells = max(1, _PAIR_BUDGET // (S_cells * len(offsets)))
    means = np.empty(N)
    variances = np.empty(N)
    for k0 in range(0, N, cells):
        n = min(cells, N - k0)
        u = gen.random((n, S_cells, d))
        v = gen.random((n, S_cells, d))
        delta = wrap_frac((u - v).reshape(-1, d) / P.m)
        lens = _periodized_lens(L, delta, R, offsets).reshape(n, S_cells)
        means[k0:k0 + n] = lens.mean(axis=1)
        variances[k0:k0 + n] = lens.var(axis=1, ddof=1) / S_cells
    vol = ball_volume(d, R)
    value = N * vol - float(means.sum())
    inner = max(R - 0.5 * P.cell_diameter, 0.0)
    upper = N * (vol - ball_volume(d, inner))
    return VarianceEstimate(value, "montecarlo", float(math.sqrt(variances.sum())),
                            {"R": R, "N": N, "S_cells": S_cells, "upper_bound": upper, "seed": rng.seed})


# ---------------------------------------------------------------- discrepancy

def _distance_table(X: PointSet, radius: float):
    """Distances ``|x_j - x_k + lambda| < radius`` with their multiplicity in the pair sum."""
    L = X.lattice
    N = X.N
    offsets = translate_offsets(L, radius) @ L.basis.T
    ii, jj = np.triu_indices(N, k=1)
    t_all = []
    step = max(1, _PAIR_BUDGET // len(offsets))
    for p0 in range(0, ii.size, step):
        base = wrap_frac(X.frac[jj[p0:p0 + step]] - X.frac[ii[p0:p0 + step]]) @ L.basis.T
        for o in offsets:
            y = base + o
            t = np.sqrt(np.einsum("ij,ij->i", y, y))
            t_all.append(t[t < radius])
    pairs = np.concatenate(t_all) if t_all else np.empty(0)
    lam = np.sqrt(np.einsum("ij,ij->i", offsets, offsets))
    lam = lam[(lam > 0) & (lam < radius)]
    t = np.concatenate([pairs, lam])
    w = np.concatenate([np.full(pairs.size, 2.0), np.full(lam.size, float(N))])
    order = np.argsort(t, kind="stable")
    return t[order], w[order]


def l2_discrepancy(X: PointSet, quad_tol: float = 1e-6) -> float:
    """``(int_0^h V(X, R) dR)^{1/2}`` with ``h`` the half diameter.

    The integrand is the periodized pair sum, valid for every ``R``; the
    pairwise distances are tabulated once.
    """
    L = X.lattice
    require_unit_covolume(L)
    if not quad_tol > 0:
        raise PreconditionError("quad_tol must be positive")
    h = L.half_diameter
    d, N = X.dim, X.N
    t, w = _distance_table(X, 2.0 * h)

    def integrand(R):
        if R <= 0:
            return 0.0
        vol = ball_volume(d, R)
        n = int(np.searchsorted(t, 2.0 * R, side="left"))
        cross = float(np.dot(w[:n], lens_volume(d, R, t[:n]))) if n else 0.0
        return N * vol + cross - (N * vol) ** 2

    with warnings.catch_warnings():
        # quad reports "roundoff" once it reaches machine precision on the kinks
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(integrand, 0.0, h, epsrel=quad_tol, epsabs=0.0, limit=500)
    return math.sqrt(max(val, 0.0))


# ------------------------------------------------------------------ threshold

def threshold_profile(source, t_values, tol: float | None = 1e-4, W: int | None = None) -> ThresholdProfile:
    """Variance at ``R = t N^{-1/d}`` for a PointSet (spectral) or a
    SpectrumSelection (expected DPP variance)."""
    L = source.lattice
    N = source.N
    d = L.dim
    ts = [float(t) for t in t_values]
    if any(t <= 0 for t in ts):
        raise PreconditionError("t values must be positive")
    out = []
    for t in ts:
        R = t * N ** (-1.0 / d)
        if R >= L.half_diameter:
            raise PreconditionError(f"t={t} gives R={R:.6g} >= half_diameter")
        if isinstance(source, SpectrumSelection):
            est = expected_variance_dpp(source, R, tol, W=W)
        else:
            est = variance_spectral(source, R, tol, W=W)
        est.detail["t"] = t
        out.append(est)
    return ThresholdProfile(N, ts, out)
