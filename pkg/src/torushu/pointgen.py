"""Point sets on the flat torus and the processes that generate them."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, SamplerStalledError
from .lattice import DualSet, Lattice, ball_volume, enumerate_dual, enumeration_cap, reduce_frac
from .rng import RngSpec

TWO_PI = 2.0 * math.pi


@dataclass(eq=False)
class PointSet:
    """N points of ``R^d / Lambda`` in fractional coordinates, shape (N, d)."""

    lattice: Lattice
    frac: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.frac, dtype=np.float64)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.shape[1] != self.lattice.dim:
            raise PreconditionError(f"points must have shape (N, {self.lattice.dim})")
        if a.shape[0] < 1:
            raise PreconditionError("a point set needs N >= 1")
        a = reduce_frac(a)
        a.setflags(write=False)
        self.frac = a

    @property
    def N(self) -> int:
        return self.frac.shape[0]

    @property
    def dim(self) -> int:
        return self.frac.shape[1]

    def cartesian(self) -> np.ndarray:
        return self.lattice.cartesian(self.frac)

    def translated(self, shift) -> "PointSet":
        return PointSet(self.lattice, self.frac + np.asarray(shift, dtype=np.float64),
                        dict(self.provenance, translated=True))

    def duplicated(self, times: int = 2) -> "PointSet":
        return PointSet(self.lattice, np.tile(self.frac, (times, 1)),
                        dict(self.provenance, duplicated=times))


_HEADER = re.compile(r"^#\s*lattice=(\{.*\}),\s*generator=([^,]*),\s*seed=(-?\d+)\s*$")


def write_points(ps: PointSet, path, comment: str | None = None) -> None:
    """CSV with a metadata header and 17-significant-digit coordinates.

    ``seed=-1`` marks a deterministic generator.  An optional ``comment`` is
    written as a second ``#`` line.
    """
    seed = ps.provenance.get("seed")
    seed = -1 if seed is None else int(seed)
    lines = [f"# lattice={ps.lattice.to_json()}, generator={ps.provenance.get('generator', 'unknown')}, seed={seed}"]
    if comment:
        lines.append("# " + comment.replace("\n", " "))
    lines += [",".join(f"{v:.17g}" for v in row) for row in ps.frac]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_points(path) -> PointSet:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        m = _HEADER.match(header)
        if not m:
            raise PreconditionError(f"{path}: missing or malformed point-set header")
        lattice = Lattice.from_json(m.group(1))
        rows = [[float(v) for v in line.split(",")] for line in fh
                if line.strip() and not line.startswith("#")]
    seed = int(m.group(3))
    prov = {"generator": m.group(2).strip(), "seed": None if seed == -1 else seed, "source": str(path)}
    return PointSet(lattice, np.array(rows, dtype=np.float64).reshape(-1, lattice.dim), prov)


def _check_count(n):
    if int(n) != n or n < 1:
        raise PreconditionError("N must be a positive integer")
    return int(n)


def gen_uniform(L: Lattice, N: int, rng: RngSpec) -> PointSet:
    N = _check_count(N)
    frac = rng.generator().random((N, L.dim))
    return PointSet(L, frac, {"generator": "uniform", "N": N, "seed": rng.seed, "stream_id": rng.stream_id})


@dataclass(frozen=True, eq=False)
class Partition:
    """Image under ``A`` of the grid of ``m^d`` congruent boxes ``[k/m, (k+1)/m)``."""

    lattice: Lattice
    m: int

    @property
    def N(self) -> int:
        return self.m ** self.lattice.dim

    def cell_corners(self) -> np.ndarray:
        """Lower fractional corners ``k/m`` of all cells, lexicographic in ``k``."""
        d = self.lattice.dim
        k = np.stack(np.meshgrid(*[np.arange(self.m)] * d, indexing="ij"), axis=-1).reshape(-1, d)
        return k / self.m

    @property
    def cell_diameter(self) -> float:
        return 2.0 * self.lattice.half_diameter / self.m

    @property
    def diameter_constant(self) -> float:
        """C with ``cell_diameter = C * N^{-1/d}`` (the domain diameter)."""
        return 2.0 * self.lattice.half_diameter

    def cell_of(self, frac) -> np.ndarray:
        """Row-major cell number of each fractional point."""
        k = np.minimum(np.floor(np.asarray(frac) * self.m).astype(np.int64), self.m - 1)
        return np.ravel_multi_index(tuple(k.T), (self.m,) * self.lattice.dim)


def make_partition(L: Lattice, m: int) -> Partition:
    if int(m) != m or m < 1:
        raise PreconditionError("m must be a positive integer")
    m = int(m)
    if m ** L.dim > enumeration_cap():
        raise PreconditionError(f"partition with {m}^{L.dim} cells exceeds the point cap")
    return Partition(L, m)


def gen_jittered(P: Partition, rng: RngSpec) -> PointSet:
    """One uniform point per cell, listed in cell order."""
    corners = P.cell_corners()
    frac = corners + rng.generator().random(corners.shape) / P.m
    return PointSet(P.lattice, frac, {"generator": "jittered", "m": P.m, "seed": rng.seed,
                                      "stream_id": rng.stream_id})


def gen_sublattice(L: Lattice, m: int) -> PointSet:
    P = make_partition(L, m)
    return PointSet(L, P.cell_corners(), {"generator": "sublattice", "m": P.m, "seed": None})


@dataclass(frozen=True, eq=False)
class SpectrumSelection:
    """The N dual vectors supporting the projection kernel."""

    lattice: Lattice
    vectors: DualSet

    @property
    def N(self) -> int:
        return len(self.vectors)


def choose_spectrum(L: Lattice, N: int) -> SpectrumSelection:
    """First N dual vectors in (norm, lexicographic index) order."""
    N = _check_count(N)
    r = (N / ball_volume(L.dim, 1.0) * L.covolume ** -1) ** (1.0 / L.dim)
    while True:
        found = enumerate_dual(L, r)
        if len(found) >= N:
            return SpectrumSelection(L, found[:N])
        r = 1.25 * r + 0.5


def dpp_kernel_eval(S: SpectrumSelection, x, y) -> complex:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.array_equal(x, y):
        return complex(S.N, 0.0)
    phase = TWO_PI * (S.vectors.index @ (x - y))
    return complex(np.cos(phase).sum(), np.sin(phase).sum())


def gen_dpp(S: SpectrumSelection, rng: RngSpec, max_proposals: int | None = None) -> PointSet:
    """Exact sample of the projection DPP with kernel ``sum_{w in S} e^{2 pi i <x-y, w>}``.

    Sequential conditional sampling: the next point has density
    ``|r(x)|^2 / (N - k)`` where ``r(x)`` is the feature vector
    ``phi(x) = (e^{2 pi i m.x})_m`` with the span of accepted features removed.
    Proposals are uniform and accepted with probability ``|r(x)|^2 / N``.
    """
    N = S.N
    d = S.lattice.dim
    M = S.vectors.index.astype(np.float64)
    gen = rng.generator()
    cap = max_proposals if max_proposals is not None else 1000 * N + 10_000
    basis = np.zeros((N, N), dtype=np.complex128)
    pts = np.empty((N, d))
    for k in range(N):
        batch = min(1024, int(math.ceil(2.0 * N / (N - k))) + 8)
        tried = 0
        while True:
            if tried >= cap:
                raise SamplerStalledError(f"sampler stalled at point {k} after {tried} proposals")
            cand = gen.random((batch, d))
            u = gen.random(batch)
            tried += batch
            phi = np.exp(1j * TWO_PI * (cand @ M.T))
            if k:
                q = basis[:k]
                resid = phi - (phi @ q.conj().T) @ q
            else:
                resid = phi
            weight = np.einsum("ij,ij->i", resid.real, resid.real) + np.einsum("ij,ij->i", resid.imag, resid.imag)
            hit = np.flatnonzero(u * N < weight)
            if hit.size:
                i = hit[0]
                break
        r = resid[i]
        if k:
            r = r - (q.conj() @ r) @ q
        basis[k] = r / np.linalg.norm(r)
        pts[k] = cand[i]
    return PointSet(S.lattice, pts, {"generator": "dpp", "N": N, "seed": rng.seed, "stream_id": rng.stream_id})
