"""Hyperuniformity of point sets on flat tori.

Number variance by spectral lattice sums, exact ball-intersection sums and
Monte Carlo counting; jittered, lattice and determinantal point generators;
worst-case cubature errors in Sobolev spaces.
"""

__version__ = "0.1.0"

from .bessel import bessel_envelope_sq, bessel_j
from .errors import CapExceededError, PreconditionError, SamplerStalledError, TorushuError
from .lattice import (DualSet, DualVector, Lattice, ball_volume, dual_basis, enumerate_dual,
                      enumerate_primal, half_diameter, normalize_lattice, preset, shortest_vector_length,
                      torus_distance)
from .pointgen import (Partition, PointSet, SpectrumSelection, choose_spectrum, dpp_kernel_eval, gen_dpp,
                       gen_jittered, gen_sublattice, gen_uniform, make_partition, read_points, write_points)
from .qmc import KernelSpec, kernel_eval, lemma1_bound_check, qmc_design_check, wce
from .regime import RegimeReport, fit_regime
from .rng import RngSpec, replicate_map
from .variance import (ThresholdProfile, VarianceEstimate, ball_coefficient, expected_variance_dpp,
                       expected_variance_dpp_exact, expected_variance_jittered, l2_discrepancy, lens_volume,
                       pair_sum_variance, threshold_profile, variance_montecarlo, variance_realspace,
                       variance_spectral, weyl_sum_sq)
