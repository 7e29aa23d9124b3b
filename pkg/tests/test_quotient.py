import numpy as np
import pytest

from mpsradial import potential
from mpsradial.field import BasisBundle, mode_index
from mpsradial.geometry import Domain, boundary_nodes, sample_interior
from mpsradial.oracle import bessel_zero
from mpsradial.quotient import (CollocationMatrices, RankDeficiencyError, build_matrices, minimize_quotient,
                                quotient_at, quotient_from_sigma, quotient_value)
from mpsradial.radial_fem import Grid1D

ONE = potential.constant(1.0)
DISK = Domain.disk(1.0)
LAM01 = 1 + bessel_zero(0, 1) ** 2


def _points(nb=300, ni=400, seed=0):
    gen = np.random.default_rng(seed)
    return boundary_nodes(DISK, nb, gen), sample_interior(DISK, ni, gen)


def test_matrix_scaling():
    bnodes, ipts = _points()
    bundle = BasisBundle.build(3, 5.0, ONE, Grid1D(1.0, 200))
    mats = build_matrices(bundle, bnodes, ipts)
    assert mats.boundary.shape == (300, 7) and mats.interior.shape == (400, 7)
    # the constant-in-theta column squared and summed gives the weighted boundary integral
    u0R = bundle.coeffs[0, -1]
    assert np.sum(mats.boundary[:, 0] ** 2) == pytest.approx(u0R ** 2 * bnodes.weights.sum(), rel=1e-12)


def test_too_few_points():
    bnodes, ipts = _points(nb=5, ni=50)
    bundle = BasisBundle.build(3, 5.0, ONE, Grid1D(1.0, 50))
    with pytest.raises(ValueError):
        build_matrices(bundle, bnodes, ipts)


def test_sigma_small_only_at_eigenvalue():
    bnodes, ipts = _points()
    grid = Grid1D(1.0, 400)
    s_at = minimize_quotient(build_matrices(BasisBundle.build(8, LAM01, ONE, grid), bnodes, ipts)).sigmas[0]
    s_off = minimize_quotient(build_matrices(BasisBundle.build(8, LAM01 + 0.5, ONE, grid), bnodes, ipts)).sigmas[0]
    assert s_at < 1e-3
    assert s_off >= 10 * s_at


def test_minimiser_attains_sigma():
    bnodes, ipts = _points(seed=4)
    mats = build_matrices(BasisBundle.build(6, 11.0, potential.star_example(), Grid1D(1.0, 150)), bnodes, ipts)
    sol = minimize_quotient(mats)
    assert np.all(np.diff(sol.sigmas) >= 0)
    for i in range(3):
        a = sol.alphas[:, i]
        b2 = np.sum((mats.boundary @ a) ** 2)
        i2 = np.sum((mats.interior @ a) ** 2)
        assert b2 + i2 == pytest.approx(1.0, abs=1e-12)
        assert np.sqrt(b2) == pytest.approx(sol.sigmas[i], abs=1e-12)
    assert quotient_value(mats, sol.alpha_min) == pytest.approx(sol.F_min, rel=1e-9)
    assert sol.F_min == pytest.approx(float(quotient_from_sigma(sol.sigmas[0])), rel=1e-14)


def test_regularised_agrees_when_well_conditioned():
    bnodes, ipts = _points(seed=5)
    mats = build_matrices(BasisBundle.build(5, 14.0, ONE, Grid1D(1.0, 150)), bnodes, ipts)
    a = minimize_quotient(mats)
    b = minimize_quotient(mats, reg_threshold=1e-12, n_vectors=2)
    assert b.alphas.shape == (11, 2)
    assert np.allclose(a.sigmas, b.sigmas, atol=1e-12)
    assert b.regularized_rank == 11


def test_rank_deficiency_detected():
    gen = np.random.default_rng(0)
    Mb = gen.normal(size=(40, 5))
    Mi = gen.normal(size=(60, 5))
    Mb[:, 4] = Mb[:, 3]
    Mi[:, 4] = Mi[:, 3]
    mats = CollocationMatrices(Mb, Mi)
    with pytest.raises(RankDeficiencyError):
        minimize_quotient(mats)
    sol = minimize_quotient(mats, rank_floor=1e-12)
    assert sol.regularized_rank == 4


def test_quotient_at_pure_bessel_mode():
    # j_{1,1} is an eigenvalue with cos/sin modes of order 1
    lam = 1 + bessel_zero(1, 1) ** 2
    vals = []
    for N in (100, 400):
        bnodes, ipts = _points(nb=N, ni=N, seed=2)
        bundle = BasisBundle.build(2, lam, ONE, Grid1D(1.0, N))
        alpha = np.zeros(bundle.n_modes)
        alpha[mode_index(1, "cos")] = 1.0
        vals.append(quotient_at(bundle, alpha, bnodes, ipts))
    assert vals[1] < 5.0 / 400
    assert vals[1] < vals[0]


def test_quotient_value_rejects_zero():
    mats = CollocationMatrices(np.eye(3), np.eye(3))
    with pytest.raises(ValueError):
        quotient_value(mats, np.zeros(3))
