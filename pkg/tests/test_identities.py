import numpy as np
import pytest

from confsub import identities as I
from confsub.errors import InvalidSpecError, PreconditionError
from confsub.models import biwarped_torus, hopf, make_model, warped_s1_s3
from confsub.submersion import random_rotation

RIGID = [("hopf", {}), ("hopf", {"squash": 0.3}), ("warped_s1_s3", {"project_to": "s1"}),
         ("trivial_submersion", {}), ("trivial_submersion", {"f": 0.4}), ("biwarped_torus", {})]
CONFORMAL = RIGID + [("warped_s1_s3", {}), ("conformal_torus", {})]


@pytest.mark.parametrize("name,params", RIGID)
def test_riemannian_submersion_formulas_close(name, params):
    spec = make_model(name, params)
    reps = I.verify_riemannian_formulas(spec, spec.sample(12, seed=2))
    for rid in I.RIEMANNIAN_IDS:
        assert reps[rid].status == "checked"
        assert reps[rid].max_residual < 1e-10, rid


@pytest.mark.parametrize("name,params", CONFORMAL)
def test_conformal_curvature_relations_close(name, params):
    spec = make_model(name, params)
    reps = I.verify_conformal_curvature(spec, spec.sample(12, seed=2))
    for cid, rep in reps.items():
        assert rep.passed(1e-10), (cid, rep.max_residual)


def test_vertical_plane_relations_vacuous_for_line_fibres():
    reps = I.verify_conformal_curvature(hopf(), hopf().sample(3))
    assert reps["EQ2_7"].status == "vacuous"
    assert reps["EQ2_9"].status == "vacuous"
    assert reps["EQ2_8"].status == "checked"


def test_hopf_horizontal_curvature_terms():
    spec = hopf()
    rep = I.verify_riemannian_formulas(spec, spec.sample(5))["EQ2_3"]
    # K(X,Y) = K_B - 3|A_X Y|^2 with K_B = 4 and |A_X Y| = 1
    assert rep.terms["horizontal:base"] == pytest.approx(4.0, abs=1e-12)
    assert rep.terms["horizontal:-3|A_X Y|^2"] == pytest.approx(3.0, abs=1e-12)
    assert rep.terms["horizontal:lhs"] == pytest.approx(1.0, abs=1e-12)


def test_riemannian_formulas_require_constant_factor():
    spec = warped_s1_s3()
    with pytest.raises(PreconditionError):
        I.verify_riemannian_formulas(spec, spec.sample(3))


def test_reduction_gaps_vanish_for_constant_factor():
    spec = make_model("trivial_submersion", {"f": 0.4})
    pts = spec.sample(6)
    gaps = I.reduction_gaps(I.verify_conformal_curvature(spec, pts), I.verify_riemannian_formulas(spec, pts))
    assert set(gaps) == set(I.REDUCTIONS)
    assert max(gaps.values()) < 1e-12


def test_results_stable_under_frame_rotation():
    spec = hopf(squash=0.3, conformal=0.2)
    pts = spec.sample(5, seed=9)
    ref = I.verify_conformal_curvature(spec, pts)
    rng = np.random.default_rng(3)
    rot = (random_rotation(spec.fibre_dim, rng), random_rotation(spec.base_dim, rng))
    new = I.verify_conformal_curvature(spec, pts, rotation=rot)
    for cid in I.CONFORMAL_IDS:
        assert new[cid].max_residual == pytest.approx(ref[cid].max_residual, abs=1e-10)


def test_asymmetric_horizontal_ricci_defect_is_reported():
    # the printed horizontal Ricci relation carries an antisymmetric term; its symmetric part closes
    spec = hopf(conformal=0.2)
    rep = I.verify_conformal_curvature(spec, spec.sample(8))["EQ2_14"]
    assert rep.max_residual > 1e-2
    assert rep.diagnostics["symmetric_residual"] < 1e-10
    assert rep.diagnostics["antisymmetric_residual"] == pytest.approx(rep.max_residual, rel=1e-6)


def test_totally_geodesic_trace_with_total_dimension_coefficients():
    spec = make_model("conformal_torus")
    rep = I.verify_criterion_identities(spec, spec.sample(8))["EQ3_6"]
    assert rep.status == "checked"
    assert rep.max_residual > 1e-2
    assert rep.diagnostics["residual_with_total_dimension_coefficients"] < 1e-10


def test_lcf_identities_on_conformal_torus():
    spec = make_model("conformal_torus")
    reps = I.verify_lcf_identities(spec, spec.sample(8))
    for lid in I.LCF_IDS:
        assert reps[lid].status == "checked", (lid, reps[lid].reason)
        assert reps[lid].max_residual < 1e-8, lid


def test_lcf_identities_report_reasons():
    reps = I.verify_lcf_identities(warped_s1_s3(), warped_s1_s3().sample(3))
    assert reps["EQ4_10"].status == "not-applicable"
    assert "dim B = 3" in reps["EQ4_10"].reason
    reps = I.verify_lcf_identities(biwarped_torus(), biwarped_torus().sample(3))
    assert "Weyl" in reps["EQ4_1"].reason


def test_criterion_identities_gate_on_hypotheses():
    spec = warped_s1_s3()
    reps = I.verify_criterion_identities(spec, spec.sample(6))
    assert all(r.passed(1e-10) for r in reps.values())
    bi = biwarped_torus()
    reps = I.verify_criterion_identities(bi, bi.sample(6))
    assert reps["EQ3_4"].status == "not-applicable" and "N = 0" in reps["EQ3_4"].reason


def test_mixed_pairing_conventions_agree():
    spec = hopf(squash=0.3)
    assert I.mixed_convention_gap(spec, spec.sample(5)) < 1e-12


def test_report_serializes():
    rep = I.verify_riemannian_formulas(hopf(), hopf().sample(2))["EQ2_5"]
    d = rep.to_dict()
    assert d["name"] == I.IDENTITY_NAMES["EQ2_5"]
    assert len(d["per_point"]) == 2 and "lhs" in d["terms"]


def test_non_conformal_spec_rejected():
    from confsub.chart import constant_field
    from confsub.submersion import SubmersionSpec

    spec = hopf()
    bad = SubmersionSpec("bad", spec.total, spec.base, spec.jacobian, spec.offset, constant_field(spec.total.domain, 0.3))
    with pytest.raises(InvalidSpecError):
        I.verify_conformal_curvature(bad, spec.sample(2))
