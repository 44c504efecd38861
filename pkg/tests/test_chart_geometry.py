import math

import numpy as np
import pytest

from confsub import chart as C
from confsub import jet as J
from confsub.errors import DegeneratePlaneError, PreconditionError, UnsupportedDimensionError
from confsub.models import flat_torus, product, sphere


def _revolution(x):
    # dr^2 + phi(r)^2 dtheta^2 with phi = 2 + cos r; Gaussian curvature -phi''/phi
    return J.array([[1.0, 0.0], [0.0, (2.0 + J.cos(x[0])) ** 2]])


REV = C.MetricField(C.ChartDomain([(0.0, 2 * math.pi), (0.0, 2 * math.pi)], [True, True]), _revolution)


def test_round_sphere_christoffel_symbols():
    s2 = sphere(2).metric
    th = 0.8
    gam = C.christoffel(s2, [th, 1.0])
    # layout [k, a, b] = Gamma^k_ab
    assert gam[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th))
    assert gam[1, 0, 1] == pytest.approx(math.cos(th) / math.sin(th))
    assert gam[1, 1, 0] == pytest.approx(math.cos(th) / math.sin(th))
    assert gam[0, 0, 0] == 0.0


@pytest.mark.parametrize("r", [0.3, 1.1, 2.5])
def test_surface_of_revolution_gaussian_curvature(r):
    k = math.cos(r) / (2 + math.cos(r))
    assert C.scalar_curvature(REV, [r, 0.4]) == pytest.approx(2 * k, abs=1e-12)
    assert C.sectional(REV, [r, 0.4], [1.0, 0.0], [0.0, 1.0]) == pytest.approx(k, abs=1e-12)


def test_sign_convention_and_symmetries_on_s3():
    s3 = sphere(3, r=2.0).metric
    p = [0.6, 1.0, 2.0]
    R = C.riemann(s3, p).components
    g = s3(p).matrix
    # R(X,Y,X,Y) = +K for a unit pair
    x = np.array([1.0, 0.0, 0.0]) / math.sqrt(g[0, 0])
    y = np.array([0.0, 1.0, 0.0]) / math.sqrt(g[1, 1])
    assert np.einsum("abcd,a,b,c,d->", R, x, y, x, y) == pytest.approx(0.25)
    assert np.allclose(R, -np.swapaxes(R, 0, 1))
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)))
    assert np.allclose(C.ricci(s3, p).matrix, 0.5 * g)


def test_scalar_field_operators_on_unit_sphere():
    s2 = sphere(2).metric
    f = C.ScalarField(s2.domain, lambda x: J.cos(x[0]))
    p = [1.1, 0.3]
    # cos(theta) is a first eigenfunction: lap = -2 f, Hess = -f g
    assert C.laplacian(f, s2, p) == pytest.approx(-2 * math.cos(1.1), abs=1e-12)
    assert np.allclose(C.hessian(f, s2, p).matrix, -math.cos(1.1) * s2(p).matrix, atol=1e-12)
    assert np.allclose(C.grad(f, s2, p), [-math.sin(1.1), 0.0])


def test_divergence_of_killing_field_vanishes():
    s2 = sphere(2).metric
    rot = lambda x: J.array([0.0 * x[0], 1.0 + 0.0 * x[0]])
    assert abs(C.divergence(rot, s2, [0.9, 2.0])) < 1e-14
    radial = lambda x: J.array([J.sin(x[0]), 0.0 * x[0]])
    # div(sin th d_th) = (1/sin th) d_th(sin^2 th) = 2 cos th
    assert C.divergence(radial, s2, [0.9, 2.0]) == pytest.approx(2 * math.cos(0.9))


def test_weyl_vanishes_on_conformally_flat_and_not_on_s2xs2():
    assert C.weyl(sphere(4).metric, [0.7, 1.2, 2.0, 0.5]).max_abs() < 1e-12
    assert C.weyl(flat_torus(4).metric, [1.0] * 4).max_abs() == 0.0
    s2s2 = product([{"name": "sphere", "n": 2}, {"name": "sphere", "n": 2}]).metric
    assert C.weyl(s2s2, [0.7, 1.0, 1.3, 2.0]).max_abs() > 0.1
    with pytest.raises(UnsupportedDimensionError):
        C.weyl(sphere(3).metric, [0.5, 1.0, 1.0])


def test_batched_geometry_matches_pointwise():
    s3 = sphere(3).metric
    pts = C.halton_points(s3.domain, 7, seed=3)
    geo = C.Geometry(s3, [pts[:, i] for i in range(3)])
    for i, p in enumerate(pts):
        assert np.allclose(geo.riemann[i], C.riemann(s3, p).components, atol=1e-13)
    grid = C.Geometry(s3, [np.linspace(0.2, 1.2, 4)[:, None, None], np.zeros((1, 3, 1)), np.zeros((1, 1, 2))])
    assert np.allclose(grid.scalar, 6.0)


def test_preconditions():
    s2 = sphere(2).metric
    with pytest.raises(PreconditionError):
        C.scalar_curvature(s2, [4.0, 0.0])
    with pytest.raises(PreconditionError):
        C.ChartDomain([(1.0, 0.0)], [False])
    with pytest.raises(DegeneratePlaneError):
        C.sectional(s2, [1.0, 1.0], [1.0, 0.0], [2.0, 0.0])


def test_halton_points_are_seeded_and_inside_margins():
    dom = sphere(2).metric.domain
    a = C.halton_points(dom, 20, seed=5)
    assert np.array_equal(a, C.halton_points(dom, 20, seed=5))
    assert a[:, 0].min() >= C.SAMPLE_MARGIN and a[:, 0].max() <= math.pi - C.SAMPLE_MARGIN
