import math

import numpy as np
import pytest

from confsub import jet as J
from confsub.chart import ChartDomain, MetricField, constant_field
from confsub.errors import InvalidSpecError, NotASubmersionError, PreconditionError
from confsub.models import biwarped_torus, hopf, make_model, warped_s1_s3
from confsub.submersion import (STRUCTURAL_IDS, SubmersionGeometry, SubmersionSpec, check_delta, conformal_check,
                                delta_T, fundamental_tensors, random_rotation, require_conformal, split_frame,
                                structural_residuals, totally_umbilical_check)

SUBMERSION_CASES = [
    ("hopf", {}),
    ("hopf", {"squash": 0.3}),
    ("hopf", {"conformal": 0.2}),
    ("warped_s1_s3", {}),
    ("warped_s1_s3", {"project_to": "s1"}),
    ("trivial_submersion", {}),
    ("trivial_submersion", {"f": 0.4}),
    ("conformal_torus", {}),
    ("biwarped_torus", {}),
]


def _flat_strip(base_scale):
    dom = ChartDomain([(0.0, 2 * math.pi)] * 2, [True, True])
    total = MetricField(dom, lambda x: np.eye(2))
    base = MetricField(ChartDomain([(0.0, 2 * math.pi)], [True]), lambda y: J.array([[base_scale]]))
    return total, base, dom


@pytest.mark.parametrize("name,params", SUBMERSION_CASES)
def test_builtin_submersions_are_conformal(name, params):
    spec = make_model(name, params)
    assert conformal_check(spec, spec.sample(20, seed=1)) < 1e-9


def test_split_frame_orthonormal_and_vertical():
    spec = hopf(squash=0.3)
    p = spec.sample(1, seed=2)[0]
    fr = split_frame(spec, p)
    g = spec.total(p)
    both = np.vstack([fr.vertical.vectors, fr.horizontal.vectors])
    assert np.allclose(both @ g.matrix @ both.T, np.eye(3), atol=1e-12)
    assert np.allclose(spec.jacobian @ fr.vertical.vectors.T, 0.0, atol=1e-12)


def test_hopf_fundamental_tensors():
    spec = hopf()
    for p in spec.sample(5, seed=4):
        ft = fundamental_tensors(spec, p)
        g = spec.total(p).matrix
        a01 = ft.A_HH[0, 1]
        assert a01 @ g @ a01 == pytest.approx(1.0, abs=1e-12)
        assert ft.normA2 == pytest.approx(2.0, abs=1e-12)
        assert ft.normT2 < 1e-24 and ft.normN2 < 1e-24


def test_biwarped_torus_tensors_match_closed_form():
    a, b = 0.3, 0.1
    spec = biwarped_torus(a, b)
    pts = spec.sample(8, seed=5)
    sg = SubmersionGeometry(spec, pts)
    x1 = pts[:, 0]
    # fibres x3, x4 with warping a sin x1, b cos x1: T_U U = -d(log warp), |T|^2 sums vertical pairs
    assert np.allclose(sg.normT2, (a**2 * np.cos(x1) ** 2 + b**2 * np.sin(x1) ** 2), atol=1e-12)
    assert np.allclose(sg.normN2, (b * np.sin(x1) - a * np.cos(x1)) ** 2, atol=1e-12)
    assert np.allclose(sg.normA2, 0.0, atol=1e-24)


def test_norms_are_frame_independent():
    spec = hopf(squash=0.3, conformal=0.2)
    pts = spec.sample(4, seed=6)
    ref = SubmersionGeometry(spec, pts)
    rng = np.random.default_rng(0)
    rot = (random_rotation(spec.fibre_dim, rng), random_rotation(spec.base_dim, rng))
    sg = SubmersionGeometry(spec, pts, rotation=rot)
    for attr in ("normT2", "normA2", "normN2"):
        assert np.allclose(getattr(sg, attr), getattr(ref, attr), atol=1e-12)


@pytest.mark.parametrize("name,params", SUBMERSION_CASES)
def test_structural_equations_close(name, params):
    spec = make_model(name, params)
    res = structural_residuals(spec, spec.sample(10, seed=7))
    assert set(res) == set(STRUCTURAL_IDS)
    assert max(res.values()) < 1e-9


def test_umbilicity_of_warped_and_biwarped_fibres():
    warped = warped_s1_s3(project_to="s1")
    res, _ = totally_umbilical_check(warped, warped.sample(6))
    assert res < 1e-12
    bi = biwarped_torus(0.3, 0.1)
    res, _ = totally_umbilical_check(bi, bi.sample(6))
    assert res > 1e-2


def test_codifferentials_vanish_for_hopf():
    spec = hopf()
    p = spec.sample(1, seed=8)[0]
    fr = split_frame(spec, p)
    u, x = fr.vertical[0], fr.horizontal[0]
    assert abs(delta_T(spec, p, u, u)) < 1e-12
    assert np.allclose(check_delta(spec, p, "check_T", x), 0.0, atol=1e-12)
    with pytest.raises(PreconditionError):
        check_delta(spec, p, "sideways_T", x)


def test_rejects_non_conformal_and_rank_deficient_maps():
    total, base, dom = _flat_strip(2.0)
    spec = SubmersionSpec("strip", total, base, [[1.0, 0.0]], [0.0], constant_field(dom, 0.0))
    with pytest.raises(InvalidSpecError):
        require_conformal(spec, [[0.1, 0.2]])
    with pytest.raises(NotASubmersionError):
        SubmersionSpec("strip", total, base, [[0.0, 0.0]], [0.0], constant_field(dom, 0.0))
    # rescaling the factor makes the same map conformal: e^{2c} * 2 = 1
    ok = SubmersionSpec("strip", total, base, [[1.0, 0.0]], [0.0], constant_field(dom, -0.5 * math.log(2.0)))
    assert require_conformal(ok, [[0.1, 0.2]]) < 1e-12
