import math

import numpy as np
import pytest

from confsub import models as M
from confsub.chart import Geometry, halton_points
from confsub.errors import ConfigurationError, ModelConstructionError
from confsub.submersion import SubmersionSpec

ALL_MODELS = [
    ("circle", {}), ("flat_torus", {"n": 3}), ("sphere", {"n": 2}), ("sphere", {"n": 3, "r": 2.0}), ("sphere", {"n": 4}),
    ("product", {"factors": [{"name": "sphere", "n": 2}, {"name": "circle"}]}),
    ("warped_s1_s3", {}), ("warped_s1_s3", {"f": {"const": 0.2, "cos": [0.1, 0.05]}}),
    ("hopf", {}), ("hopf", {"r": 2.0, "squash": 0.3}), ("hopf", {"conformal": 0.2}),
    ("trivial_submersion", {}), ("conformal_torus", {}), ("biwarped_torus", {}),
]


@pytest.mark.parametrize("name,params", ALL_MODELS)
def test_models_build_and_self_verify(name, params):
    model = M.make_model(name, params)
    checks = M.self_verify(model, grid=16, points=4)
    assert all(v < 1e-6 for v in checks.values())
    desc = M.descriptor_of(model)
    assert desc.closed and desc.dim == len(desc.domain.ranges)
    assert (name in M.SUBMERSIONS) == isinstance(model, SubmersionSpec)


def test_warped_scalar_curvature_formula():
    spec = M.warped_s1_s3({"sin": [0.3]})
    pts = halton_points(spec.total.domain, 6)
    geo = Geometry(spec.total, [pts[:, i] for i in range(4)])
    x = pts[:, 0]
    f, f1, f2 = 0.3 * np.sin(x), 0.3 * np.cos(x), -0.3 * np.sin(x)
    # dx^2 + e^{2f} g_S3: s = 6 e^{-2f} - 6 f'' - 12 f'^2
    assert np.allclose(geo.scalar, 6 * np.exp(-2 * f) - 6 * f2 - 12 * f1**2, atol=1e-12)


def test_product_einstein_constant_only_when_equal():
    same = M.product([{"name": "sphere", "n": 2}, {"name": "sphere", "n": 2}])
    assert same.known["einstein"] == 1.0
    mixed = M.product([{"name": "sphere", "n": 2}, {"name": "sphere", "n": 2, "r": 2.0}])
    assert "einstein" not in mixed.known
    assert [c.coords for c in same.components] == [(0, 1), (2, 3)]


def test_trivial_submersion_rescales_base_for_constant_factor():
    spec = M.trivial_submersion([{"name": "sphere", "n": 2}, {"name": "sphere", "n": 2}], f=0.5)
    assert spec.rigid
    assert spec.metadata["base_einstein"] == pytest.approx(math.exp(-1.0))
    assert spec.metadata["base_scalar"] == pytest.approx(2 * math.e)


@pytest.mark.parametrize("name,params", [
    ("nosuch", {}), ("sphere", {"n": 5}), ("sphere", {"r": -1.0}), ("hopf", {"colour": 1}),
    ("warped_s1_s3", {"f": {"sin": [0.9]}}), ("warped_s1_s3", {"project_to": "s2"}),
    ("trivial_submersion", {"base": [0, 1]}), ("product", {"factors": []}),
    ("product", {"factors": [{"name": "hopf"}]}), ("conformal_torus", {"amplitude": 0.9}),
])
def test_invalid_parameters_raise_configuration_error(name, params):
    with pytest.raises(ConfigurationError):
        M.make_model(name, params)


def test_self_verification_catches_wrong_claims():
    desc = M.sphere(2)
    bad = M.ModelDescriptor(desc.name, desc.params, desc.metric, {**desc.known, "scalar": 3.0},
                            desc.components, desc.embedding)
    with pytest.raises(ModelConstructionError):
        M.self_verify(bad)


def test_list_models_mentions_every_builder():
    text = M.list_models()
    for name in M.BUILDERS:
        assert name in text
