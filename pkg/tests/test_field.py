import numpy as np
import pytest

from mpsradial import potential
from mpsradial.field import (BasisBundle, eval_field, eval_radial, mode_index, mode_matrix, polar_grid,
                             sample_grid, to_blocked, write_grid_csv)
from mpsradial.radial_fem import Grid1D, basis_function


@pytest.fixture(scope="module")
def bundle():
    return BasisBundle.build(4, 9.5, potential.star_example(), Grid1D(3.6, 120))


def test_eval_radial_nodal_and_midpoint():
    grid = Grid1D(3.6, 120)
    b = basis_function(2, 9.5, potential.star_example(), grid)
    for i in (0, 7, 64, 120):
        assert eval_radial(b, grid.nodes[i]) == b.coeffs[i]
    mid = 0.5 * (grid.nodes[10] + grid.nodes[11])
    assert eval_radial(b, mid) == pytest.approx(0.5 * (b.coeffs[10] + b.coeffs[11]), rel=1e-14)
    assert eval_radial(b, 0.0) == 0.0


def test_eval_radial_out_of_range():
    b = basis_function(0, 2.0, potential.constant(1.0), Grid1D(1.0, 10))
    with pytest.raises(ValueError):
        eval_radial(b, 1.1)


def test_mode_index_ordering():
    assert [mode_index(0)] + [mode_index(j, k) for j in (1, 2) for k in ("cos", "sin")] == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        mode_index(0, "sin")
    assert to_blocked(np.arange(7)).tolist() == [0, 1, 3, 5, 2, 4, 6]


def test_field_single_mode(bundle):
    pts = np.array([[0.3, 1.2], [-2.0, 0.5], [0.0, -3.1]])
    r = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    alpha = np.zeros(bundle.n_modes)
    alpha[0] = 1.0
    assert np.allclose(eval_field(bundle, alpha, pts), eval_radial(bundle.basis(0), r), atol=1e-15)
    alpha[:] = 0.0
    alpha[mode_index(3, "sin")] = 2.0
    assert np.allclose(eval_field(bundle, alpha, pts), 2.0 * eval_radial(bundle.basis(3), r) * np.sin(3 * theta),
                       atol=1e-14)


def test_field_linear_in_alpha(bundle):
    gen = np.random.default_rng(0)
    a, b = gen.normal(size=(2, bundle.n_modes))
    p = (1.1, -0.4)
    assert eval_field(bundle, 2 * a - b, p) == pytest.approx(2 * eval_field(bundle, a, p) - eval_field(bundle, b, p),
                                                             rel=1e-12)


def test_field_alpha_shape_checked(bundle):
    with pytest.raises(ValueError):
        eval_field(bundle, np.ones(3), (0.0, 0.0))


def test_mode_matrix_shape(bundle):
    M = mode_matrix(bundle, np.zeros((5, 2)))
    assert M.shape == (5, 9)
    assert np.all(M[:, 1:] == 0.0)


def test_sample_grid(bundle, tmp_path):
    assert np.all(sample_grid(bundle, np.zeros(bundle.n_modes), 8, 12) == 0.0)
    r, th = polar_grid(3.6, 4, 8)
    assert r.tolist() == [0.0, 0.9, 1.8, 2.7] and th[1] == pytest.approx(np.pi / 4)
    alpha = np.random.default_rng(1).normal(size=bundle.n_modes)
    grid = sample_grid(bundle, alpha, 6, 10)
    assert grid.shape == (6, 10)
    # at r = 0 only the radially symmetric mode survives
    assert np.allclose(grid[0], alpha[0] * bundle.coeffs[0, 0])
    path = tmp_path / "u.csv"
    write_grid_csv(path, bundle, alpha, 6, 10)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert open(path).readline().strip() == "r,theta,value"
    assert data.shape == (60, 3)
    assert np.allclose(data[:, 2], grid.ravel())
