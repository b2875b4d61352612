import math

import numpy as np
import pytest

from torushu.errors import CapExceededError, PreconditionError
from torushu.lattice import (Lattice, ball_volume, dual_basis, enumerate_dual, enumerate_primal, half_diameter,
                             normalize_lattice, preset, reduce_frac, shortest_vector_length, torus_distance,
                             translate_offsets)

HEX = np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])


def test_normalize_identity():
    L = normalize_lattice(np.eye(2))
    assert np.allclose(L.basis, np.eye(2))
    assert L.covolume == pytest.approx(1.0, abs=1e-12)


def test_normalize_records_scale():
    L = normalize_lattice(2 * np.eye(2))
    assert np.allclose(L.basis, np.eye(2))
    assert L.scale == pytest.approx(2.0)


def test_normalize_hexagonal():
    L = normalize_lattice(HEX)
    assert L.covolume == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(L.basis, HEX / math.sqrt(math.sqrt(3) / 2))


def test_degenerate_rejected():
    with pytest.raises(PreconditionError, match="degenerate lattice"):
        normalize_lattice([[1.0, 2.0], [2.0, 4.0]])


def test_dual_basis_examples():
    assert np.allclose(dual_basis(Lattice(np.eye(3))), np.eye(3))
    B = dual_basis(Lattice(HEX))
    assert np.allclose(B.T @ HEX, np.eye(2), atol=1e-12)
    assert np.allclose(dual_basis(Lattice(np.diag([2.0, 0.5]))), np.diag([0.5, 2.0]))


def test_enumerate_dual_unit_ball_order():
    D = enumerate_dual(preset("identity2"), 1.0)
    assert D.index.tolist() == [[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]


def test_enumerate_dual_counts():
    assert len(enumerate_dual(preset("identity2"), 1.5)) == 9
    assert len(enumerate_dual(preset("identity3"), 1.0)) == 7


def test_dual_vector_fields_consistent():
    L = preset("hexagonal")
    D = enumerate_dual(L, 4.0)
    assert np.allclose(D.index @ L.dual.T, D.cartesian, atol=1e-12)
    assert np.allclose(np.linalg.norm(D.cartesian, axis=1), D.norm)
    assert np.all(np.diff(D.norm) >= -1e-12)


def test_enumerate_dual_matches_brute_force_count():
    L = normalize_lattice([[1.0, 0.3, 0.1], [0.0, 0.9, 0.2], [0.0, 0.0, 1.4]])
    r = 3.0
    D = enumerate_dual(L, r)
    k = np.arange(-12, 13)
    m = np.stack(np.meshgrid(k, k, k, indexing="ij"), -1).reshape(-1, 3)
    norms = np.linalg.norm(m @ L.dual.T, axis=1)
    assert len(D) == int((norms <= r).sum())


def test_enumerate_dual_downward_closed_and_prefix_stable():
    L = preset("hexagonal")
    small = enumerate_dual(L, 2.0)
    big = enumerate_dual(L, 3.5)
    assert big.index[:len(small)].tolist() == small.index.tolist()


def test_enumeration_cap(monkeypatch):
    monkeypatch.setenv("TORUSHU_CAP", "100")
    with pytest.raises(CapExceededError, match="enumeration cap exceeded"):
        enumerate_dual(preset("identity2"), 50.0)


def test_duality_integer_inner_products():
    L = preset("hexagonal")
    _, v, _ = enumerate_primal(L, 3.0)
    w = enumerate_dual(L, 3.0).cartesian
    g = v @ w.T
    assert np.abs(g - np.round(g)).max() < 1e-9


def test_shortest_vector_examples():
    assert shortest_vector_length(preset("identity2")) == pytest.approx(1.0)
    assert shortest_vector_length(preset("hexagonal")) == pytest.approx(2**0.5 * 3**-0.25, abs=1e-12)
    assert shortest_vector_length(Lattice(np.diag([0.5, 2.0]))) == pytest.approx(0.5)


def test_torus_distance_examples():
    Z2, Z3 = preset("identity2"), preset("identity3")
    assert torus_distance(Z2, [0.1, 0.1], [0.9, 0.1]) == pytest.approx(0.2, abs=1e-12)
    assert torus_distance(preset("hexagonal"), [0.3, 0.4], [0.3, 0.4]) == 0.0
    assert torus_distance(Z3, [0.5] * 3, [0.0] * 3) == pytest.approx(math.sqrt(3) / 2, abs=1e-12)


def test_torus_distance_metric_properties():
    L = normalize_lattice([[1.0, 0.7], [0.0, 0.6]])
    rng = np.random.default_rng(5)
    x, y, z = rng.random((3, 200, 2))
    dxy = torus_distance(L, x, y)
    assert np.array_equal(dxy, torus_distance(L, y, x))
    assert np.all(torus_distance(L, x, z) <= dxy + torus_distance(L, y, z) + 1e-12)
    assert np.all(dxy <= L.half_diameter + 1e-12)


def test_torus_distance_matches_wide_search():
    L = normalize_lattice([[1.0, 0.9], [0.0, 0.35]])
    rng = np.random.default_rng(1)
    x, y = rng.random((2, 50, 2))
    k = np.arange(-6, 7)
    off = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2)
    cart = ((x - y)[:, None, :] + off) @ L.basis.T
    wide = np.linalg.norm(cart, axis=2).min(axis=1)
    assert np.allclose(torus_distance(L, x, y), wide, atol=1e-14)


def test_half_diameter_examples():
    assert half_diameter(preset("identity2")) == pytest.approx(math.sqrt(2) / 2)
    assert half_diameter(preset("identity3")) == pytest.approx(math.sqrt(3) / 2)
    assert half_diameter(Lattice(np.diag([2.0, 0.5]))) == pytest.approx(math.sqrt(4.25) / 2)


def test_ball_volume_examples():
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(3, 1.0) == pytest.approx(4 * math.pi / 3)
    assert ball_volume(5, 0.0) == 0.0


def test_translate_offsets_cover_all_close_translates():
    L = normalize_lattice([[1.0, 0.8], [0.0, 0.4]])
    r = 0.9
    offsets = {tuple(k) for k in translate_offsets(L, r)}
    rng = np.random.default_rng(2)
    k = np.arange(-8, 9)
    wide = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2)
    for delta in rng.random((100, 2)) - 0.5:
        close = wide[np.linalg.norm((delta + wide) @ L.basis.T, axis=1) <= r]
        assert {tuple(c) for c in close} <= offsets


def test_reduce_frac_stays_in_unit_interval():
    a = reduce_frac([-1e-20, 1.0, 2.5, -0.25])
    assert np.all((a >= 0) & (a < 1))
    assert a.tolist()[1:] == [0.0, 0.5, 0.75]


def test_lattice_json_round_trip():
    L = preset("hexagonal")
    back = Lattice.from_json(L.to_json())
    assert np.array_equal(back.basis, L.basis)
    assert L.to_dict()["basis"] == L.basis.ravel().tolist()
