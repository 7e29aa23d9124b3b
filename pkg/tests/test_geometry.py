import numpy as np
import pytest

from mpsradial.geometry import (Domain, area, boundary_nodes, contains, domain_from_spec,
                                sample_interior)


def test_contains_examples():
    ell = Domain.ellipse(2.0, 1.0)
    assert contains(ell, (0.0, 0.0))
    assert not contains(ell, (2.0, 0.0))
    assert contains(Domain.star_example(), (3.4, 0.0))
    assert not contains(Domain.star_example(), (3.55, 0.0))


def test_contains_vectorised():
    pts = np.array([[0.0, 0.0], [0.99, 0.0], [1.0, 0.0], [0.0, -1.5]])
    assert contains(Domain.disk(1.0), pts).tolist() == [True, True, False, False]


def test_area_examples():
    assert area(Domain.ellipse(2.0, 1.0)) == pytest.approx(2 * np.pi, rel=1e-14)
    assert area(Domain.disk(1.0)) == pytest.approx(np.pi, rel=1e-10)
    assert area(Domain.disk(2.5)) == pytest.approx(np.pi * 2.5 ** 2, rel=1e-10)
    assert area(Domain.star_example()) == pytest.approx(9 * np.pi + np.pi / 8, rel=1e-10)
    assert area(Domain.star_example()) == pytest.approx(28.667033, abs=1e-6)


def test_radii():
    star = Domain.star_example()
    assert star.R_out == 3.6
    assert star.R_in == pytest.approx(0.99 * 2.5)
    t = np.linspace(0, 2 * np.pi, 1000)
    r = np.linalg.norm(star.gamma(t), axis=1)
    assert r.min() >= star.R_in and r.max() <= star.R_out


def test_invalid_domains():
    with pytest.raises(ValueError):
        Domain.ellipse(0.0, 1.0)
    with pytest.raises(ValueError):
        Domain.ellipse(2.0, 1.0, R_out=1.5)
    with pytest.raises(ValueError):
        Domain.fourier_star(0.5, {2: 0.6})
    with pytest.raises(ValueError):
        Domain.disk(1.0, R_out=0.9)


def test_uniform_boundary_nodes_on_disk():
    nodes = boundary_nodes(Domain.disk(1.0), 4, jitter=False)
    assert np.allclose(nodes.t, [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert np.allclose(nodes.weights, np.pi / 2)
    assert np.allclose(nodes.radius, 1.0)


@pytest.mark.parametrize("dom", [Domain.disk(1.0), Domain.star_example(), Domain.ellipse_example()])
@pytest.mark.parametrize("n", [3, 17, 500])
def test_boundary_spacing_band(dom, n):
    for seed in range(20):
        nodes = boundary_nodes(dom, n, np.random.default_rng(seed))
        dt = np.diff(nodes.t, prepend=nodes.t[-1] - dom.L)
        assert np.all(dt > dom.L / (2 * n)) and np.all(dt < 3 * dom.L / (2 * n))
        assert np.all(nodes.weights > 0)


@pytest.mark.parametrize("dom", [Domain.disk(1.0), Domain.star_example(), Domain.ellipse_example()])
def test_boundary_weights_sum_to_perimeter(dom):
    P = dom.perimeter()
    errs = []
    for n in (100, 200, 400, 800):
        errs.append(abs(boundary_nodes(dom, n, np.random.default_rng(1)).weights.sum() - P))
    assert errs[-1] < 10.0 / 800
    assert errs[-1] < errs[0] or errs[0] < 1e-12


def test_perimeter_known_values():
    assert Domain.disk(1.0).perimeter() == pytest.approx(2 * np.pi, rel=1e-12)
    # Ramanujan's second approximation is accurate to ~1e-9 for this aspect ratio
    a, b = 2.0, 1.0
    hh = ((a - b) / (a + b)) ** 2
    ram = np.pi * (a + b) * (1 + 3 * hh / (10 + np.sqrt(4 - 3 * hh)))
    assert Domain.ellipse(a, b).perimeter() == pytest.approx(ram, rel=1e-8)


def test_boundary_determinism():
    dom = Domain.star_example()
    a = boundary_nodes(dom, 50, np.random.default_rng(3))
    b = boundary_nodes(dom, 50, np.random.default_rng(3))
    assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)


def test_interior_samples_inside_and_deterministic():
    dom = Domain.star_example()
    a = sample_interior(dom, 1000, 42)
    b = sample_interior(dom, 1000, 42)
    assert len(a) == 1000 and a.seed == 42
    assert np.array_equal(a.points, b.points)
    assert np.all(contains(dom, a.points))
    assert a.area == pytest.approx(area(dom))


def test_interior_second_moment_on_disk():
    pts = sample_interior(Domain.disk(1.0), 100_000, np.random.default_rng(0)).points
    r2 = np.sum(pts ** 2, axis=1)
    se = r2.std(ddof=1) / np.sqrt(r2.size)
    assert abs(r2.mean() - 0.5) < 3 * se


def test_rejection_acceptance_rate():
    dom = Domain.ellipse_example()
    gen = np.random.default_rng(9)
    n = 200_000
    cand = gen.uniform(-dom.R_out, dom.R_out, size=(n, 2))
    frac = contains(dom, cand).mean()
    assert abs(frac - area(dom) / (4 * dom.R_out ** 2)) < 4 / np.sqrt(n)


def test_degenerate_domain_rejected():
    thin = Domain.ellipse(1.0, 1e-5, R_out=1.0)
    with pytest.raises(RuntimeError, match="degenerate"):
        sample_interior(thin, 10, 0, max_trials=100_000)


def test_domain_from_spec():
    assert domain_from_spec({"kind": "disk", "radius": 2.0}).R_out == 2.0
    assert domain_from_spec({"kind": "ellipse", "a": 2, "b": 1, "R_out": 2.1}).semi_axes == (2.0, 1.0)
    star = domain_from_spec({"kind": "fourier_star", "base": 3.0, "cos": {4: 0.5}, "R_out": 3.6})
    assert star.rho(0.0) == pytest.approx(3.5)
    assert domain_from_spec({"kind": "star_example"}).R_out == 3.6
    with pytest.raises(ValueError):
        domain_from_spec({"kind": "square"})
