import math

import numpy as np
import pytest

from torushu.errors import PreconditionError
from torushu.lattice import ball_volume, preset
from torushu.sweep import grid_side, make_points, mean_and_se, replicate_rows, scan, write_sweep_csv

Z2 = preset("identity2")


def test_grid_side():
    assert grid_side(64, 2) == 8
    assert grid_side(27, 3) == 3
    with pytest.raises(PreconditionError):
        grid_side(10, 2)


def test_make_points_sizes():
    from torushu.rng import RngSpec
    for gen in ("uniform", "jittered", "sublattice", "dpp"):
        assert make_points(Z2, gen, 16, RngSpec(1)).N == 16
    with pytest.raises(PreconditionError):
        make_points(Z2, "poisson", 16, RngSpec(1))


def test_replicates_independent_of_threads():
    a = replicate_rows(Z2, "uniform", 20, 0.2, 12, seed=3, threads=1)
    b = replicate_rows(Z2, "uniform", 20, 0.2, 12, seed=3, threads=4)
    assert [r.variance for r in a] == [r.variance for r in b]
    assert len({r.variance for r in a}) == 12


def test_methods_agree_on_one_replicate():
    rows = {m: replicate_rows(Z2, "jittered", 16, 0.2, 1, seed=5, method=m)[0]
            for m in ("realspace", "pairsum")}
    assert rows["realspace"].variance == pytest.approx(rows["pairsum"].variance, abs=1e-10)


def test_uniform_mean_is_binomial():
    rows = replicate_rows(Z2, "uniform", 30, 0.2, 100, seed=11)
    mean, se = mean_and_se(rows)
    p = ball_volume(2, 0.2)
    assert abs(mean - 30 * p * (1 - p)) <= 3 * se


def test_scan_large_sublattice_is_flat_in_N():
    # grids see only the boundary of the ball, so the variance stays bounded
    report, rows = scan(Z2, "jittered", "large", 20, seed=1, Ns=[16, 64, 256, 1024], R=0.2)
    assert len(rows) == 80
    assert report.regime == "large" and report.fitted_exponent < 0.95
    assert report.extra["generator"] == "jittered" and len(report.extra["standard_errors"]) == 4


def test_scan_small_shrinks_radius():
    _, rows = scan(Z2, "uniform", "small", 2, seed=1, Ns=[16, 64, 256, 1024], R=0.2)
    radii = sorted({r.R_or_t for r in rows}, reverse=True)
    assert radii[-1] == pytest.approx(0.2 * 64 ** -0.25)


def test_scan_threshold_labels_by_t():
    report, rows = scan(Z2, "uniform", "threshold", 5, seed=2, N=64, t_values=[1.0, 1.5, 2.0, 3.0])
    assert sorted({r.R_or_t for r in rows}) == [1.0, 1.5, 2.0, 3.0]
    assert report.regime == "threshold"


def test_scan_requires_parameters():
    with pytest.raises(PreconditionError):
        scan(Z2, "uniform", "large", 5, seed=0, R=0.2)
    with pytest.raises(PreconditionError):
        scan(Z2, "uniform", "threshold", 5, seed=0, N=16)


def test_sweep_csv_is_lossless(tmp_path):
    rows = replicate_rows(Z2, "uniform", 10, 0.17, 3, seed=9)
    path = tmp_path / "s.csv"
    write_sweep_csv(rows, path, comment="cfg")
    lines = path.read_text().splitlines()
    assert lines[0] == "# cfg"
    assert lines[1] == "generator,d,N,R_or_t,replicate,variance,error"
    got = np.loadtxt(path, delimiter=",", skiprows=2, usecols=(5,))
    assert got.tolist() == [r.variance for r in rows]
    assert not any(math.isnan(v) for v in got)
