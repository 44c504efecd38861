"""Acceptance checks, one pytest test (or group) per numbered criterion.

Each test carries a ``criterion(number, title)`` marker; ``conftest.py``
prints one PASS/FAIL line per criterion at the end of the run.  Run this
file directly (``python tests/test_acceptance.py``) for just these checks.
"""

import json
import math
import sys

import numpy as np
import pytest

from confsub import chart as C
from confsub import cli
from confsub import identities as I
from confsub.chart import ScalarField, constant_field, halton_points
from confsub.criteria import RIGID, NOT_APPLICABLE, evaluate_criterion
from confsub.integration import INFINITE, divergence_residuals, quasi_einstein_residual, random_vector_field
from confsub import jet as J
from confsub.models import descriptor_of, make_model
from confsub.submersion import conformal_check, fundamental_tensors, split_frame, structural_residuals

POINTS = 50
S2xS2 = {"factors": [{"name": "sphere", "n": 2}, {"name": "sphere", "n": 2}]}


def _sample(model, count=POINTS, seed=0):
    return halton_points(descriptor_of(model).domain, count, seed)


def _geometry(model, pts):
    desc = descriptor_of(model)
    return C.Geometry(desc.metric, [pts[:, i] for i in range(desc.dim)])


# -- 1. constant-curvature oracles --------------------------------------------------------------------


@pytest.mark.criterion(1, "constant-curvature oracles (S2: 2, S3: 6 within 1e-8; flat tori 0 within 1e-10)")
@pytest.mark.parametrize("n,expected", [(2, 2.0), (3, 6.0)])
def test_unit_sphere_scalar_curvature(n, expected):
    model = make_model("sphere", {"n": n})
    geo = _geometry(model, _sample(model))
    assert np.max(np.abs(geo.scalar - expected)) < 1e-8


@pytest.mark.criterion(1, "constant-curvature oracles (S2: 2, S3: 6 within 1e-8; flat tori 0 within 1e-10)")
@pytest.mark.parametrize("params", [{"n": 2}, {"n": 3, "periods": [1.0, 2.0, 3.0]}, {"n": 4}])
def test_flat_torus_curvature_vanishes(params):
    model = make_model("flat_torus", params)
    geo = _geometry(model, _sample(model))
    assert np.max(np.abs(geo.riemann)) < 1e-10
    assert np.max(np.abs(geo.scalar)) < 1e-10


# -- 2. curvature decomposition -----------------------------------------------------------------------

DIM4_MODELS = [
    ("sphere", {"n": 4}), ("flat_torus", {"n": 4}), ("product", S2xS2),
    ("product", {"factors": [{"name": "sphere", "n": 3, "r": 2.0}, {"name": "circle"}]}),
    ("warped_s1_s3", {}), ("warped_s1_s3", {"project_to": "s1"}), ("trivial_submersion", {}),
    ("trivial_submersion", S2xS2), ("conformal_torus", {}), ("biwarped_torus", {}),
]


@pytest.mark.criterion(2, "Riemann = scalar part + traceless Ricci part + Weyl, below 1e-8 on every dim >= 4 model")
@pytest.mark.parametrize("name,params", DIM4_MODELS)
def test_curvature_decomposition(name, params):
    model = make_model(name, params)
    res = _geometry(model, _sample(model)).decomposition_residual()
    assert np.max(np.abs(res)) < 1e-8


# -- 3. Riemannian-submersion oracle ---------------------------------------------------------------------


@pytest.mark.criterion(3, "Hopf S3(1) -> S2(1/2): O'Neill formulas < 1e-7, |A_X Y| = 1, base curvature 4")
def test_hopf_riemannian_submersion_oracle():
    spec = make_model("hopf", {})
    pts = spec.sample(POINTS)
    reps = I.verify_riemannian_formulas(spec, pts)
    for rid in I.RIEMANNIAN_IDS:
        assert reps[rid].status == "checked"
        assert reps[rid].max_residual < 1e-7, rid
    for p in pts[:10]:
        ft = fundamental_tensors(spec, p)
        g = spec.total(p).matrix
        axy = ft.A_HH[0, 1]
        assert math.sqrt(axy @ g @ axy) == pytest.approx(1.0, abs=1e-7)
        # base curvature measured on the base chart at the image point
        q = spec.project(p)
        assert C.sectional(spec.base, q, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(4.0, abs=1e-7)
    t = reps["EQ2_3"].terms
    # horizontal line: K(X,Y) = K_B - 3|A_X Y|^2 = 4 - 3 = 1
    assert t["horizontal:base"] == pytest.approx(4.0, abs=1e-7)
    assert t["horizontal:-3|A_X Y|^2"] == pytest.approx(3.0, abs=1e-7)
    assert t["horizontal:lhs"] == pytest.approx(1.0, abs=1e-7)


# -- 4. conformal reduction --------------------------------------------------------------------------------

REDUCTION_MODELS = [("hopf", {}), ("hopf", {"squash": 0.3}), ("trivial_submersion", {}),
                    ("trivial_submersion", S2xS2), ("trivial_submersion", {**S2xS2, "f": 0.0, "base": [0]})]


@pytest.mark.criterion(4, "f = 0: conformal identities agree with Riemannian ones to 1e-10, identity by identity")
@pytest.mark.parametrize("name,params", REDUCTION_MODELS)
def test_conformal_identities_reduce(name, params):
    spec = make_model(name, params)
    assert spec.rigid and spec.f(spec.sample(1)[0]) == 0.0
    pts = spec.sample(POINTS)
    conf = I.verify_conformal_curvature(spec, pts)
    riem = I.verify_riemannian_formulas(spec, pts)
    gaps = I.reduction_gaps(conf, riem)
    assert set(gaps) == set(I.CONFORMAL_IDS)
    assert max(gaps.values()) < 1e-10


# -- 5. warped S1 x S3 end to end ----------------------------------------------------------------------------


@pytest.mark.criterion(5, "warped S1 x S3: conformal, conformally flat, structural and curvature identities, "
                          "dimension hypothesis of T4_8 blocks it")
def test_warped_example_end_to_end():
    spec = make_model("warped_s1_s3", {})
    assert not spec.rigid
    pts = spec.sample(POINTS)
    assert conformal_check(spec, pts) < 1e-9
    assert np.max(np.abs(_geometry(spec, pts).weyl)) < 1e-6
    assert max(structural_residuals(spec, pts).values()) < 1e-7
    reps = I.verify_conformal_curvature(spec, pts)
    for cid in ("EQ2_12", "EQ2_15"):
        assert reps[cid].status == "checked"
        assert reps[cid].max_residual < 1e-6
        assert reps[cid].terms, cid
    # one-dimensional fibres carry no vertical 2-planes
    assert reps["EQ2_9"].status == "vacuous"
    rep = evaluate_criterion("T4_8", spec)
    assert rep.verdict == NOT_APPLICABLE
    assert rep.reason.startswith("dim F = dim B")
    assert all(v["passed"] for k, v in rep.hypothesis_status.items() if k != "dim F = dim B")
    assert rep.f_oscillation > 0.1  # not rigid


@pytest.mark.criterion(5, "warped S1 x S3: conformal, conformally flat, structural and curvature identities, "
                          "dimension hypothesis of T4_8 blocks it")
def test_warped_vertical_sectional_on_sphere_fibres():
    # same total space projected to the circle: three-dimensional fibres exercise the vertical relation
    spec = make_model("warped_s1_s3", {"project_to": "s1"})
    rep = I.verify_conformal_curvature(spec, spec.sample(POINTS))["EQ2_9"]
    assert rep.status == "checked" and rep.max_residual < 1e-6 and rep.terms


# -- 6. divergence theorem ----------------------------------------------------------------------------------

CLOSED_MODELS = [
    ("circle", {}), ("flat_torus", {"n": 2}), ("sphere", {"n": 2}), ("sphere", {"n": 3}), ("sphere", {"n": 4}),
    ("product", S2xS2), ("hopf", {}), ("hopf", {"squash": 0.3}), ("hopf", {"conformal": 0.2}),
    ("warped_s1_s3", {}), ("trivial_submersion", {}), ("conformal_torus", {}), ("biwarped_torus", {}),
]


@pytest.mark.criterion(6, "divergence theorem < 1e-4 at 64 nodes for ten seeded fields per closed model, "
                          "decreasing under refinement")
@pytest.mark.parametrize("name,params", CLOSED_MODELS)
def test_divergence_theorem(name, params):
    model = make_model(name, params)
    fields = [random_vector_field(model, seed) for seed in range(10)]
    fine = divergence_residuals(fields, model, 64)
    coarse = divergence_residuals(fields, model, 32)
    assert max(fine) < 1e-4
    # exact quadrature leaves only round-off; otherwise the error must shrink
    assert max(fine) <= max(max(coarse), 1e-12)


# -- 7. quasi-Einstein checker ------------------------------------------------------------------------------


@pytest.mark.criterion(7, "quasi-Einstein: Einstein models with constant potential < 1e-8, perturbed S2 > 1e-2")
@pytest.mark.parametrize("name,params,lam", [
    ("sphere", {"n": 2}, 1.0), ("sphere", {"n": 3, "r": 2.0}, 0.5), ("sphere", {"n": 4}, 3.0),
    ("flat_torus", {"n": 3}, 0.0), ("product", S2xS2, 1.0), ("hopf", {}, 2.0),
])
def test_quasi_einstein_einstein_models(name, params, lam):
    desc = descriptor_of(make_model(name, params))
    pts = _sample(desc)
    for m in (INFINITE, 1.0, 5.0):
        assert quasi_einstein_residual(desc.metric, constant_field(desc.domain, 0.3), m, lam, pts) < 1e-8


@pytest.mark.criterion(7, "quasi-Einstein: Einstein models with constant potential < 1e-8, perturbed S2 > 1e-2")
def test_quasi_einstein_detects_perturbed_potential():
    desc = descriptor_of(make_model("sphere", {"n": 2}))
    pts = _sample(desc)
    h = ScalarField(desc.domain, lambda x: J.cos(x[0]) * 0.1)
    for m in (INFINITE, 2.0):
        assert quasi_einstein_residual(desc.metric, h, m, 1.0, pts) > 1e-2


# -- 8. criterion evaluator sanity ----------------------------------------------------------------------------


@pytest.mark.criterion(8, "flat product rigid with zero norms; Hopf |A|^2 = 2 and balance 2*1 = 0 + 2 within 1e-6")
def test_flat_trivial_submersion_rigid():
    rep = evaluate_criterion("T3_12", make_model("trivial_submersion", {}))
    assert rep.verdict == RIGID
    assert rep.residual == 0.0
    assert all(v["mean"] == 0.0 and v["variance"] == 0.0 for v in rep.norms.values())


@pytest.mark.criterion(8, "flat product rigid with zero norms; Hopf |A|^2 = 2 and balance 2*1 = 0 + 2 within 1e-6")
def test_hopf_einstein_fibre_balance():
    rep = evaluate_criterion("T3_6", make_model("hopf", {}))
    assert rep.norms["|A|^2"]["mean"] == pytest.approx(2.0, abs=1e-6)
    # sum of lambda_i k_i = 2 * 1 against lambda_F dim F + |A|^2 = 0 + 2
    assert rep.criterion_value["left"] == pytest.approx(2.0, abs=1e-6)
    assert rep.criterion_value["right"] == pytest.approx(2.0, abs=1e-6)
    assert rep.residual < 1e-6
    assert rep.verdict == RIGID


# -- 9. determinism --------------------------------------------------------------------------------------------


@pytest.mark.criterion(9, "two runs with the same config and seed give byte-identical reports")
def test_reports_are_byte_identical(tmp_path):
    out = tmp_path / "report.json"
    cfg = tmp_path / "run.toml"
    outs = []
    for _ in range(2):
        cfg.write_text(
            'suites = ["structural", "riemannian", "conformal", "lcf", "criteria", "quasi_einstein", "divergence"]\n'
            f'points = 20\ngrid = 16\ncriteria_grid = 8\nseed = 7\nfields = 3\noutput = "{out.as_posix()}"\n'
            '[model]\nname = "trivial_submersion"\n'
            'params = { factors = [{ name = "sphere", n = 2 }, { name = "sphere", n = 2 }] }\n',
            encoding="utf-8")
        code = cli.main(["run", str(cfg)])
        outs.append((code, out.read_bytes()))
    assert outs[0][0] == outs[1][0] == 0
    assert outs[0][1] == outs[1][1]
    assert json.loads(outs[0][1])["config"]["seed"] == 7


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
