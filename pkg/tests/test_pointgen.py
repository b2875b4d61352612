import math

import numpy as np
import pytest
from scipy.stats import chisquare

from torushu.errors import PreconditionError, SamplerStalledError
from torushu.lattice import enumerate_dual, preset, torus_distance
from torushu.pointgen import (PointSet, choose_spectrum, dpp_kernel_eval, gen_dpp, gen_jittered, gen_sublattice,
                              gen_uniform, make_partition, read_points, write_points)
from torushu.rng import RngSpec, replicate_map
from torushu.variance import weyl_sum_sq

Z2 = preset("identity2")


def test_rng_streams_reproducible_and_distinct():
    a = RngSpec(11, 2).generator().random(5)
    b = RngSpec(11, 2).generator().random(5)
    c = RngSpec(11, 3).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replicate_map_order_independent_of_threads():
    rngs = [RngSpec(4, i) for i in range(12)]
    fn = lambda r: r.generator().random(3).tobytes()
    assert replicate_map(fn, rngs, 1) == replicate_map(fn, rngs, 4)


def test_pointset_validation():
    with pytest.raises(PreconditionError):
        PointSet(Z2, np.empty((0, 2)))
    with pytest.raises(PreconditionError):
        PointSet(Z2, np.zeros((3, 3)))
    X = PointSet(Z2, [[1.25, -0.5]])
    assert X.frac.tolist() == [[0.25, 0.5]]


def test_uniform_examples():
    X = gen_uniform(Z2, 1, RngSpec(1))
    assert X.N == 1 and np.all((X.frac >= 0) & (X.frac < 1))
    assert np.array_equal(gen_uniform(Z2, 10, RngSpec(9)).frac, gen_uniform(Z2, 10, RngSpec(9)).frac)
    with pytest.raises(PreconditionError):
        gen_uniform(Z2, 0, RngSpec())


def test_uniform_mean():
    X = gen_uniform(Z2, 100_000, RngSpec(3))
    assert np.all(np.abs(X.frac.mean(axis=0) - 0.5) <= 3 / math.sqrt(12 * 1e5))


def test_partition_examples():
    P = make_partition(Z2, 2)
    assert P.N == 4
    assert P.cell_diameter == pytest.approx(math.sqrt(2) / 2)
    assert make_partition(preset("identity3"), 1).N == 1
    H = preset("hexagonal")
    P = make_partition(H, 3)
    assert P.N == 9
    # the long diagonal of a 60-degree rhombus cell is sqrt(3) |v| / m
    v = H.column_norms.max()
    assert P.cell_diameter == pytest.approx(math.sqrt(3) * v / 3)
    assert P.cell_diameter <= P.diameter_constant * P.N ** -0.5 + 1e-12


def test_partition_cap(monkeypatch):
    monkeypatch.setenv("TORUSHU_CAP", "1000")
    with pytest.raises(PreconditionError):
        make_partition(Z2, 40)


def test_jittered_one_point_per_cell():
    P = make_partition(preset("hexagonal"), 5)
    for s in range(50):
        X = gen_jittered(P, RngSpec(s))
        assert X.N == 25
        assert np.array_equal(P.cell_of(X.frac), np.arange(25))


def test_jittered_single_cell_is_uniform():
    P = make_partition(Z2, 1)
    x = np.array([gen_jittered(P, RngSpec(0, i)).frac[0] for i in range(2000)])
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 4 / math.sqrt(12 * 2000))


def test_sublattice_examples():
    X = gen_sublattice(Z2, 2)
    assert sorted(map(tuple, X.frac.tolist())) == [(0, 0), (0, 0.5), (0.5, 0), (0.5, 0.5)]
    assert gen_sublattice(Z2, 1).frac.tolist() == [[0.0, 0.0]]
    Y = gen_sublattice(Z2, 3)
    for n in ([1, 0], [1, 2], [2, 5], [4, 4]):
        assert weyl_sum_sq(Y, np.array(n)) < 1e-20
    assert weyl_sum_sq(Y, np.array([3, 6])) == pytest.approx(81)


def test_choose_spectrum_examples():
    assert sorted(choose_spectrum(Z2, 5).vectors.index.tolist()) == [[-1, 0], [0, -1], [0, 0], [0, 1], [1, 0]]
    assert choose_spectrum(Z2, 3).vectors.index.tolist() == [[0, 0], [-1, 0], [0, -1]]
    idx = choose_spectrum(preset("identity3"), 7).vectors.index
    assert sorted(np.abs(idx).sum(axis=1).tolist()) == [0, 1, 1, 1, 1, 1, 1]


def test_choose_spectrum_prefix_property():
    H = preset("hexagonal")
    prev = choose_spectrum(H, 1).vectors.index
    for n in range(2, 40):
        cur = choose_spectrum(H, n).vectors.index
        assert np.array_equal(cur[:-1], prev)
        prev = cur
    assert np.array_equal(prev, enumerate_dual(H, 4.0).index[:39])


def test_dpp_kernel_examples():
    S = choose_spectrum(Z2, 5)
    assert dpp_kernel_eval(S, [0.3, 0.1], [0.3, 0.1]) == 5
    assert dpp_kernel_eval(S, [0.5, 0.5], [0.0, 0.0]) == pytest.approx(-3)
    rng = np.random.default_rng(0)
    for x, y in rng.random((50, 2, 2)):
        assert abs(dpp_kernel_eval(S, x, y)) <= 5 + 1e-12


def test_dpp_sizes_and_reproducibility():
    S = choose_spectrum(Z2, 9)
    a = gen_dpp(S, RngSpec(5))
    assert a.N == 9
    assert np.array_equal(a.frac, gen_dpp(S, RngSpec(5)).frac)
    assert gen_dpp(choose_spectrum(Z2, 1), RngSpec(2)).N == 1


def test_dpp_points_repel():
    # the projection DPP never places two points at the same location
    S = choose_spectrum(Z2, 25)
    X = gen_dpp(S, RngSpec(1))
    dist = torus_distance(Z2, X.frac[:, None, :], X.frac[None, :, :])
    assert dist[~np.eye(25, dtype=bool)].min() > 1e-3


def test_dpp_first_intensity():
    S = choose_spectrum(Z2, 5)
    R, center = 0.2, np.array([0.5, 0.5])
    counts = []
    for s in range(2000):
        X = gen_dpp(S, RngSpec(17, s))
        counts.append(int((torus_distance(Z2, X.frac, center) <= R).sum()))
    counts = np.array(counts)
    expected = 5 * math.pi * R * R
    assert abs(counts.mean() - expected) <= 3 * counts.std(ddof=1) / math.sqrt(counts.size)


def test_dpp_pair_sum():
    # E sum_{k != j} cos(2 pi <w0, x_k - x_j>) = -#{(w, w') in D^2 : w - w' = w0}
    S = choose_spectrum(Z2, 5)
    w0 = np.array([1.0, 0.0])
    idx = S.vectors.index
    exact = -sum(1 for a in idx for b in idx if np.array_equal(a - b, w0))
    values = []
    for s in range(3000):
        X = gen_dpp(S, RngSpec(23, s))
        values.append(weyl_sum_sq(X, w0) - X.N)
    values = np.array(values)
    assert exact == -2
    assert abs(values.mean() - exact) <= 3 * values.std(ddof=1) / math.sqrt(values.size)


def test_dpp_intensity_is_flat():
    S = choose_spectrum(Z2, 10)
    pts = np.concatenate([gen_dpp(S, RngSpec(31, s)).frac for s in range(1000)])
    hist, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=8, range=[[0, 1], [0, 1]])
    assert chisquare(hist.ravel()).pvalue > 0.001


def test_dpp_stall_reported():
    with pytest.raises(SamplerStalledError, match="stalled"):
        gen_dpp(choose_spectrum(Z2, 40), RngSpec(0), max_proposals=1)


def test_points_csv_round_trip(tmp_path):
    X = gen_jittered(make_partition(preset("hexagonal"), 4), RngSpec(8))
    path = tmp_path / "pts.csv"
    write_points(X, path, comment="extra metadata")
    Y = read_points(path)
    assert np.array_equal(X.frac, Y.frac)
    assert np.array_equal(X.lattice.basis, Y.lattice.basis)
    assert Y.provenance["generator"] == "jittered" and Y.provenance["seed"] == 8
    first = path.read_text().splitlines()[0]
    assert first.startswith("# lattice={") and first.endswith("generator=jittered, seed=8")


def test_read_points_rejects_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1,0.2\n")
    with pytest.raises(PreconditionError):
        read_points(path)
