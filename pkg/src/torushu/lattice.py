"""Lattices, dual lattices and flat-torus geometry.

A lattice is stored through its generator matrix ``A`` whose *columns* are the
basis vectors ``v_1..v_d``.  Points on the torus ``R^d / A Z^d`` are kept in
fractional coordinates ``alpha`` in ``[0, 1)^d``; the Cartesian point is
``A @ alpha``.  The dual lattice is ``B Z^d`` with ``B = (A^T)^{-1}``, so for a
dual index ``m`` and a fractional point ``alpha`` one has
``<B m, A alpha> = m . alpha``.

Enumeration boxes
-----------------
For ``w = B m`` the index is recovered as ``m = A^T w``, hence
``|m_i| = |<v_i, w>| <= |v_i| |w|``.  Enumerating ``|m_i| <= floor(r |v_i|)``
therefore contains every dual vector of norm ``<= r``.  The primal analogue
uses the dual basis vectors ``b_i`` (columns of ``B``): ``|k_i| <= r |b_i|``.
For a fractional difference ``delta`` reduced to ``[-1/2, 1/2]^d``, every
translate with ``|A (delta + k)| <= r`` satisfies
``|k_i| <= |delta_i| + r |b_i| <= 1/2 + r |b_i|``.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import CapExceededError, PreconditionError

DEFAULT_CAP = 5_000_000
TIE_RTOL = 1e-9


def enumeration_cap() -> int:
    """Maximum number of lattice vectors any single enumeration may produce.

    Overridden by the ``TORUSHU_CAP`` environment variable.
    """
    raw = os.environ.get("TORUSHU_CAP")
    if raw is None or raw.strip() == "":
        return DEFAULT_CAP
    return int(float(raw))


@dataclass(frozen=True, eq=False)
class Lattice:
    """Full-rank lattice ``A Z^d``; ``basis`` columns are the generators.

    ``scale`` records the factor the basis was divided by during
    normalization (1.0 for lattices built directly).
    """

    basis: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        a = np.array(self.basis, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise PreconditionError("lattice basis must be a square d x d matrix")
        det = np.linalg.det(a)
        if not np.isfinite(det) or abs(det) <= 1e-300 or np.linalg.cond(a) > 1e14:
            raise PreconditionError("degenerate lattice")
        a.setflags(write=False)
        object.__setattr__(self, "basis", a)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def covolume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    @cached_property
    def dual(self) -> np.ndarray:
        b = np.linalg.inv(self.basis).T
        b.setflags(write=False)
        return b

    @cached_property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.basis, axis=0)

    @cached_property
    def dual_column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.dual, axis=0)

    @cached_property
    def shortest_vector(self) -> float:
        return shortest_vector_length(self)

    @cached_property
    def half_diameter(self) -> float:
        return half_diameter(self)

    @cached_property
    def dual_cell_diameter(self) -> float:
        """Diameter of the fundamental parallelepiped of the dual lattice."""
        return 2.0 * _half_diagonal(self.dual)

    def cartesian(self, frac) -> np.ndarray:
        return np.asarray(frac, dtype=np.float64) @ self.basis.T

    def to_dict(self) -> dict:
        return {"dim": self.dim, "basis": [float(v) for v in self.basis.ravel(order="C")]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Lattice":
        d = int(obj["dim"])
        values = np.asarray(obj["basis"], dtype=np.float64)
        if values.size != d * d:
            raise PreconditionError(f"basis needs {d * d} entries, got {values.size}")
        return cls(values.reshape(d, d, order="C"))

    @classmethod
    def from_json(cls, text: str) -> "Lattice":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"Lattice(dim={self.dim}, basis={self.basis.tolist()!r})"


@dataclass(frozen=True)
class DualVector:
    index: tuple
    cartesian: tuple
    norm: float


@dataclass(frozen=True, eq=False)
class DualSet:
    """An ordered collection of dual vectors stored column-wise.

    Behaves like a sequence of :class:`DualVector`.
    """

    index: np.ndarray
    cartesian: np.ndarray
    norm: np.ndarray

    def __len__(self):
        return self.index.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return DualSet(self.index[i], self.cartesian[i], self.norm[i])
        return DualVector(
            tuple(int(v) for v in self.index[i]),
            tuple(float(v) for v in self.cartesian[i]),
            float(self.norm[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def normalize_lattice(A) -> Lattice:
    """Rescale ``A`` to covolume one; the divisor is kept as ``scale``."""
    a = np.array(A, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("lattice basis must be a square d x d matrix")
    det = abs(np.linalg.det(a)) if a.size else 0.0
    if not np.isfinite(det) or det <= 1e-300:
        raise PreconditionError("degenerate lattice")
    s = det ** (1.0 / a.shape[0])
    return Lattice(a / s, scale=float(s))


def require_unit_covolume(L: Lattice) -> Lattice:
    if abs(L.covolume - 1.0) > 1e-9:
        raise PreconditionError(f"lattice covolume is {L.covolume:.6g}; normalize it to 1 first")
    return L


def dual_basis(L: Lattice) -> np.ndarray:
    return np.array(L.dual)


def preset(name: str) -> Lattice:
    """Named lattices: ``identity<d>`` (e.g. identity2) and ``hexagonal``."""
    if name == "hexagonal":
        return normalize_lattice([[1.0, 0.5], [0.0, math.sqrt(3.0) / 2.0]])
    if name.startswith("identity"):
        d = int(name[len("identity"):] or 2)
        return Lattice(np.eye(d))
    raise PreconditionError(f"unknown lattice preset {name!r}")


def ball_volume(d: int, R):
    """Volume of the Euclidean ``d``-ball of radius ``R`` (vectorized in R)."""
    if d < 1:
        raise PreconditionError("dimension must be >= 1")
    R = np.asarray(R, dtype=np.float64)
    if np.any(R < 0):
        raise PreconditionError("radius must be non-negative")
    c = math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))
    out = c * R**d
    return float(out) if out.ndim == 0 else out


def reduce_frac(alpha) -> np.ndarray:
    """Map fractional coordinates into ``[0, 1)``."""
    a = np.asarray(alpha, dtype=np.float64)
    r = a - np.floor(a)
    return np.where(r >= 1.0, 0.0, r)


def wrap_frac(delta) -> np.ndarray:
    """Map fractional differences into ``[-1/2, 1/2]``."""
    d = np.asarray(delta, dtype=np.float64)
    return d - np.round(d)


def _iter_box(half_widths, chunk=1 << 20):
    """Yield all integer vectors with ``|m_i| <= half_widths[i]`` in lexicographic
    order, in chunks of roughly ``chunk`` rows."""
    hw = [int(h) for h in half_widths]
    axes = [np.arange(-h, h + 1, dtype=np.int64) for h in hw]
    if len(axes) == 1:
        yield axes[0][:, None]
        return
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, len(hw) - 1)
    per = max(1, chunk // max(1, rest.shape[0]))
    first = axes[0]
    for s in range(0, first.size, per):
        block = first[s:s + per]
        m0 = np.repeat(block, rest.shape[0])[:, None]
        yield np.hstack([m0, np.tile(rest, (block.size, 1))])


def count_bound(d: int, r: float, cell_diameter: float) -> float:
    """Upper bound on the number of points of a covolume-``c`` lattice in the
    closed ball of radius ``r``, times ``c``.

    Translates ``w + P`` of the fundamental cell are disjoint and lie inside
    ``B(0, r + diam P)``.
    """
    return ball_volume(d, r + cell_diameter)


def _enumerate(gen: np.ndarray, box_norms: np.ndarray, max_norm: float, cap: int, covolume: float,
               cell_diameter: float):
    d = gen.shape[0]
    if max_norm < 0:
        raise PreconditionError("max_norm must be >= 0")
    est = count_bound(d, max_norm, cell_diameter) / covolume
    if est > cap:
        raise CapExceededError(
            f"enumeration cap exceeded: up to {est:.3g} vectors within radius {max_norm:g} (cap {cap})")
    hw = np.floor(max_norm * box_norms * (1 + 1e-12) + 1e-12).astype(np.int64)
    r2 = max_norm * max_norm * (1 + 1e-12)
    idx, vec = [], []
    for m in _iter_box(hw):
        v = m @ gen.T
        keep = np.einsum("ij,ij->i", v, v) <= r2
        idx.append(m[keep])
        vec.append(v[keep])
    idx = np.concatenate(idx)
    vec = np.concatenate(vec)
    return idx, vec, np.sqrt(np.einsum("ij,ij->i", vec, vec))


def _sorted_order(index: np.ndarray, norm: np.ndarray) -> np.ndarray:
    """Order by norm, then lexicographically by index within near-ties."""
    if norm.size == 0:
        return np.arange(0)
    first = np.argsort(norm, kind="stable")
    n = norm[first]
    gap = np.diff(n) > TIE_RTOL * np.maximum(n[1:], 1e-300)
    group = np.concatenate([[0], np.cumsum(gap)])
    ranks = np.empty_like(group)
    ranks[first] = group
    keys = [index[:, j] for j in range(index.shape[1] - 1, -1, -1)] + [ranks]
    return np.lexsort(keys)


def enumerate_dual(L: Lattice, max_norm: float, cap: int | None = None) -> DualSet:
    """All dual vectors with ``|w| <= max_norm`` (origin included), sorted by
    norm and then lexicographically by integer index."""
    cap = enumeration_cap() if cap is None else cap
    idx, vec, nrm = _enumerate(L.dual, L.column_norms, max_norm, cap, 1.0 / L.covolume,
                               L.dual_cell_diameter)
    order = _sorted_order(idx, nrm)
    return DualSet(idx[order], vec[order], nrm[order])


def enumerate_primal(L: Lattice, max_norm: float, cap: int | None = None):
    """Primal lattice vectors with ``|v| <= max_norm`` as ``(index, vectors, norms)``."""
    cap = enumeration_cap() if cap is None else cap
    idx, vec, nrm = _enumerate(L.basis, L.dual_column_norms, max_norm, cap, L.covolume,
                               2.0 * L.half_diameter)
    order = _sorted_order(idx, nrm)
    return idx[order], vec[order], nrm[order]


def shortest_vector_length(L: Lattice) -> float:
    """Length of a shortest nonzero lattice vector (direct enumeration)."""
    r = float(np.min(L.column_norms))
    while True:
        _, _, nrm = enumerate_primal(L, r, cap=max(enumeration_cap(), 10_000))
        nz = nrm[nrm > 0]
        if nz.size:
            return float(nz.min())
        r *= 2.0  # pragma: no cover - the columns themselves are inside radius r


def _half_diagonal(gen: np.ndarray) -> float:
    d = gen.shape[0]
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    diag = signs @ gen.T
    return 0.5 * float(np.sqrt(np.einsum("ij,ij->i", diag, diag).max()))


def half_diameter(L: Lattice) -> float:
    """Half the longest diagonal of the fundamental parallelepiped."""
    return _half_diagonal(L.basis)


def translate_offsets(L: Lattice, radius: float) -> np.ndarray:
    """Integer offsets ``k`` covering every translate ``|A(delta + k)| <= radius``
    for ``delta`` in ``[-1/2, 1/2]^d``."""
    hw = np.floor(0.5 + radius * L.dual_column_norms + 1e-12).astype(np.int64)
    return np.concatenate(list(_iter_box(hw)))


def torus_distance(L: Lattice, x, y):
    """Flat-torus distance between fractional points (broadcasts over leading axes)."""
    delta = wrap_frac(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64))
    offsets = translate_offsets(L, L.half_diameter)
    cart = (delta[..., None, :] + offsets) @ L.basis.T
    out = np.sqrt(np.einsum("...ij,...ij->...i", cart, cart).min(axis=-1))
    return float(out) if out.ndim == 0 else out
