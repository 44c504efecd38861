import math

import numpy as np
import pytest

from confsub import integration as I
from confsub import jet as J
from confsub.chart import Geometry, ScalarField, constant_field, halton_points
from confsub.errors import PreconditionError
from confsub.models import descriptor_of, flat_torus, make_model, sphere


@pytest.mark.parametrize("name,params,volume", [
    ("circle", {"r": 2.0}, 4 * math.pi),
    ("sphere", {"n": 2}, 4 * math.pi),
    ("sphere", {"n": 3}, 2 * math.pi**2),
    ("sphere", {"n": 4}, 8 * math.pi**2 / 3),
    ("hopf", {"r": 2.0}, 16 * math.pi**2),
    ("hopf", {"squash": 0.3}, 2 * math.pi**2 * math.sinh(0.3) / 0.3),
])
def test_volumes(name, params, volume):
    desc = descriptor_of(make_model(name, params, verify=False))
    assert I.QuadratureGrid.build(desc.metric, 16).volume() == pytest.approx(volume, rel=1e-12)


def test_integrate_polynomial_on_sphere():
    s2 = sphere(2).metric
    grid = I.QuadratureGrid.build(s2, 16)
    # int cos^2 over the unit sphere = 4 pi / 3
    assert I.integrate(lambda x: np.cos(x[0]) ** 2, grid) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert abs(I.integrate(ScalarField(s2.domain, lambda x: J.cos(x[0])), grid)) < 1e-13


def test_gradient_and_coordinate_fields_are_divergence_free_in_total():
    s2 = sphere(2)
    assert I.divergence_theorem_residual(I.gradient_field(lambda x: J.cos(x[0])), s2, 32) < 1e-12
    assert I.divergence_theorem_residual(I.coordinate_field([1.0, -0.5]), flat_torus(2), 16) < 1e-14


def _as_callable(field, desc):
    """The same potential field through the generic jet path."""

    def vf(x, gj):
        emb = desc.embedding(x)
        gi = J.inv(gj)
        us = []
        for a, b in field.quadratics:
            u = 0.0
            for i, ei in enumerate(emb):
                u = u + ei * float(b[i])
                for j, ej in enumerate(emb):
                    u = u + ei * ej * float(a[i, j])
            us.append(u)
        grads = [J.einsum("ab,b->a", gi, u.truncate(2).derivative()) for u in (us[0], us[2])]
        psi = us[1].truncate(1)
        return grads[0] * J.Jet(psi.val[..., None], psi.d1[..., None, :], None, psi.nb) + grads[1]

    return vf


@pytest.mark.parametrize("name,params", [("sphere", {"n": 2}), ("hopf", {"squash": 0.2}), ("warped_s1_s3", {})])
def test_potential_field_closed_form_matches_jets(name, params):
    desc = descriptor_of(make_model(name, params, verify=False))
    grid = I.QuadratureGrid.build(desc.metric, 5)
    block = slice(0, 5)
    coords = grid.chunk_coords(block)
    field = I.random_vector_field(desc, 3)
    geo = Geometry(desc.metric.jet(coords, order=1, nb=desc.dim), check=False)
    div, norm = field.evaluate(I._embedding_data(desc, coords, grid.block_shape(block), geo))
    div_ref, norm_ref = I._div_parts(_as_callable(field, desc), desc.metric, coords)
    assert np.allclose(div, div_ref, atol=1e-11)
    assert np.allclose(norm, norm_ref, atol=1e-11)


def test_batched_residuals_equal_single_field_residuals():
    model = make_model("hopf", {}, verify=False)
    fields = [I.random_vector_field(model, s) for s in range(3)]
    batch = I.divergence_residuals(fields, model, 12)
    single = [I.divergence_theorem_residual(f, model, 12) for f in fields]
    assert np.allclose(batch, single, rtol=0, atol=1e-15)


@pytest.mark.parametrize("name,params", [("sphere", {"n": 2}), ("hopf", {"squash": 0.3}), ("warped_s1_s3", {})])
def test_divergence_residual_decreases_under_refinement(name, params):
    model = make_model(name, params, verify=False)
    fields = [I.random_vector_field(model, s) for s in range(4)]
    coarse = max(I.divergence_residuals(fields, model, 4))
    fine = max(I.divergence_residuals(fields, model, 16))
    # quadrature that is already exact only leaves round-off
    assert fine <= max(coarse, 1e-13)
    assert fine < 1e-10


def test_thread_count_is_deterministic(monkeypatch):
    model = make_model("sphere", {"n": 3}, verify=False)
    field = [I.random_vector_field(model, 0)]
    monkeypatch.setattr(I, "CHUNK_POINTS", 64)
    monkeypatch.setenv("CONFSUB_THREADS", "1")
    one = I.divergence_residuals(field, model, 16)
    monkeypatch.setenv("CONFSUB_THREADS", "4")
    assert I.thread_count() == 4
    assert I.divergence_residuals(field, model, 16) == one
    monkeypatch.setenv("CONFSUB_THREADS", "many")
    assert I.thread_count() >= 1


def test_quasi_einstein_residuals():
    s2 = sphere(2).metric
    pts = halton_points(s2.domain, 10)
    const = constant_field(s2.domain, 0.7)
    assert I.quasi_einstein_residual(s2, const, I.INFINITE, 1.0, pts) < 1e-12
    assert I.quasi_einstein_residual(s2, const, 3.0, 1.0, pts) < 1e-12
    assert I.quasi_einstein_residual(s2, const, I.INFINITE, 2.0, pts) == pytest.approx(1.0)
    # h = -log(cos) style potentials are not needed: Hess(cos theta) = -cos theta g on S2
    h = ScalarField(s2.domain, lambda x: J.cos(x[0]) * 0.1)
    tens = I.quasi_einstein_tensor(s2, h, I.INFINITE, 1.0, pts)
    g = np.stack([s2(p).matrix for p in pts])
    assert np.allclose(tens, -0.1 * np.cos(pts[:, 0])[:, None, None] * g, atol=1e-12)
    with pytest.raises(PreconditionError):
        I.quasi_einstein_residual(s2, const, -1.0, 1.0, pts)


def test_grid_validation():
    with pytest.raises(PreconditionError):
        I.QuadratureGrid.build(sphere(2).metric, 1)
