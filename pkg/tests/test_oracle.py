import numpy as np
import pytest
from scipy import special

from mpsradial import potential
from mpsradial.oracle import bessel_j, bessel_zero, bessel_zeros, disk_spectrum, fd_radial_spectrum


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 40])
def test_bessel_j_matches_scipy(n):
    x = np.concatenate([[0.0, 1e-8, 0.5, 1.99, 2.01], np.linspace(2.5, 80, 200)])
    assert np.allclose(bessel_j(n, x), special.jv(n, x), atol=1e-13, rtol=1e-11)


def test_bessel_j_scalar_and_origin():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0
    assert isinstance(bessel_j(1, 2.5), float)


def test_bessel_zero_examples():
    assert bessel_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-10)
    assert bessel_zero(1, 1) == pytest.approx(3.831705970207512, abs=1e-10)
    for n in (0, 3, 10):
        assert np.allclose(bessel_zeros(n, 6), special.jn_zeros(n, 6), atol=1e-10)


def test_disk_spectrum_examples():
    s = disk_spectrum(1.0, 1.0, 7.0)
    assert len(s.entries) == 1
    assert s.entries[0].lam == pytest.approx(6.783186, abs=1e-6)
    assert s.entries[0].multiplicity == 1
    s = disk_spectrum(1.0, 1.0, 16.0)
    assert s.entries[1].lam == pytest.approx(15.681971, abs=1e-6)
    assert (s.entries[1].n, s.entries[1].k, s.entries[1].multiplicity) == (1, 1, 2)
    s = disk_spectrum(1.0, 1.0, 30.0)
    assert np.allclose(s.eigenvalues, [6.783186, 15.681971, 27.374618], atol=1e-6)
    assert s.with_multiplicity().size == 5


def test_disk_spectrum_scaling():
    j01 = bessel_zero(0, 1)
    s = disk_spectrum(2.0, 1.0, 1 + j01 ** 2 / 4 + 1e-3)
    assert len(s.entries) == 1
    assert s.entries[0].lam == pytest.approx(1 + j01 ** 2 / 4, rel=1e-13)


def test_disk_spectrum_guards():
    with pytest.raises(ValueError):
        disk_spectrum(1.0, 0.5, 10.0)
    with pytest.raises(ValueError):
        disk_spectrum(1.0, 2.0, 1.5)


def test_fd_converges_to_bessel():
    ONE = potential.constant(1.0)
    e0 = fd_radial_spectrum(0, ONE, 1.0, 4000, 3).eigenvalues
    assert abs(e0[0] - (1 + bessel_zero(0, 1) ** 2)) < 1e-4
    assert np.all(np.diff(e0) > 0)
    e1 = fd_radial_spectrum(1, ONE, 1.0, 4000, 2).eigenvalues
    assert abs(e1[0] - (1 + bessel_zero(1, 1) ** 2)) < 1e-4
    errs = [abs(fd_radial_spectrum(2, ONE, 1.0, N, 1).eigenvalues[0] - 1 - bessel_zero(2, 1) ** 2)
            for N in (500, 1000)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_fd_star_potential_frozen():
    vals = fd_radial_spectrum(0, potential.star_example(), 1.0, 2000, 5).eigenvalues
    assert vals.size == 5 and np.all(np.diff(vals) > 0)
    assert vals[0] == pytest.approx(FROZEN_VS_J0, rel=1e-12)


def test_fd_guard():
    with pytest.raises(ValueError):
        fd_radial_spectrum(0, potential.constant(1.0), 1.0, 50, 1)


FROZEN_VS_J0 = 7.205711298260141
