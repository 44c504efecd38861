"""Integral rigidity criteria and the quasi-Einstein condition, evaluated on a quadrature grid.

Every pointwise quantity (fundamental tensors, curvatures, the conformal
factor) is computed once on the grid nodes and shared by all theorems.
Hypotheses are checked at every node; the norms ``|T|^2``, ``|A|^2`` and
``|N|^2`` that enter a criterion equation are quadrature means, reported
together with their spatial variance.

Verdicts follow one rule for every theorem: ``not-applicable`` when some
hypothesis fails (the first failure is the reason), ``rigid-consistent`` when
the criterion residual is within tolerance, ``violated`` otherwise.  For the
"if and only if" criteria the residual is the mismatch of the criterion
equation; for the sufficient conditions it measures the stated conclusion
(oscillation of ``f`` plus the listed consequences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .chart import Geometry
from .errors import PreconditionError, UsageError
from .identities import component_data, component_scalar, _block_weyl
from .integration import INFINITE, QuadratureGrid, quasi_einstein_tensor
from .submersion import SubmersionGeometry, SubmersionSpec

DEFAULT_TOL = 1e-6
DEFAULT_CRITERIA_GRID = 12

RIGID = "rigid-consistent"
VIOLATED = "violated"
NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class Theorem:
    theorem_id: str
    name: str
    hypotheses: tuple
    criterion: str
    kind: str  # "iff" or "sufficient"
    conclusion: str


THEOREMS = {
    "T3_1": Theorem(
        "T3_1", "Einstein fibres, integrable horizontal distribution and parallel N",
        ("A = 0 (integrable horizontal distribution)", "parallel N", "dim B >= 2", "Einstein fibres",
         "component metadata"),
        "Σλᵢkᵢ = λ_F dim(F)", "sufficient",
        "f is constant and the Einstein constants of total space and fibres coincide",
    ),
    "T3_3": Theorem(
        "T3_3", "integrable horizontal distribution, parallel N, Ricci-flat base",
        ("A = 0 (integrable horizontal distribution)", "parallel N", "base Ricci-flat", "component metadata"),
        "Σλᵢmᵢ = -|T|² - |N|²(dim(M) + dim(B) - 4)/dim(F)", "iff",
        "f is constant exactly when the criterion holds",
    ),
    "T3_6": Theorem(
        "T3_6", "Einstein fibres and vanishing N",
        ("N = 0", "Einstein fibres", "dim B >= 2", "component metadata"),
        "Σλᵢkᵢ = λ_F dim(F) + |A|²", "iff",
        "f is constant exactly when the criterion holds",
    ),
    "T3_12": Theorem(
        "T3_12", "vanishing N and Ricci-flat base",
        ("N = 0", "base Ricci-flat", "component metadata"),
        "Σλᵢmᵢ + 2|A|² + |T|² = 0", "iff",
        "f is constant exactly when the criterion holds",
    ),
    "T3_20": Theorem(
        "T3_20", "totally geodesic fibres and Ricci-flat base",
        ("totally geodesic fibres", "dim B >= 2", "base Ricci-flat", "component metadata"),
        "Σλᵢmᵢ + 2|A|² = 0", "iff",
        "f is constant exactly when the criterion holds",
    ),
    "T4_2": Theorem(
        "T4_2", "product of conformally flat components with balanced splitting",
        ("conformally flat components of dim >= 4 with mᵢ = kᵢ",
         "one of: (1) T = 0 and s <= Σsᵢ/(1-nᵢ); (2) parallel N, A = 0 and s >= Σsᵢ/(1-nᵢ)"),
        "f constant", "sufficient",
        "f is constant; a conformally flat total space is scalar flat",
    ),
    "T4_5": Theorem(
        "T4_5", "quasi-Einstein product of conformally flat components",
        ("conformally flat components of dim >= 4 with mᵢ = kᵢ", "component scalar curvatures of one sign",
         "quasi-Einstein total space (h, m, λ)",
         "one of: (1) λ >= 0, parallel N, A = 0; (2) λ <= 0, T = 0; (3) A = 0, T = 0"),
        "Ric = 0 and f constant", "sufficient",
        "the total space is Ricci-flat and f is constant",
    ),
    "T4_8": Theorem(
        "T4_8", "conformally flat total space with quasi-Einstein fibres (or base)",
        ("dim F = dim B", "locally conformally flat total space", "fibre (or base) scalar curvature of one sign",
         "quasi-Einstein fibre (or base) (h, m, λ)",
         "one of: (1) T = 0, base (fibre) scalar curvature <= 0, λ <= 0; "
         "(2) A = 0, parallel T, base (fibre) scalar curvature >= 0, λ >= 0"),
        "fibre (base) Ricci-flat, base (fibre) scalar flat, V(grad f) = 0, A = T = 0", "sufficient",
        "the quasi-Einstein side is Ricci-flat, the other side scalar flat, f is constant along fibres; "
        "f is constant when s has a sign",
    ),
    "T4_12": Theorem(
        "T4_12", "vanishing T and non-positive mixed scalar curvature",
        ("T = 0", "R_mix <= 0"),
        "R_mix = 0 and f constant", "sufficient",
        "R_mix vanishes and f is constant",
    ),
    "QE": Theorem(
        "QE", "quasi-Einstein condition of the total space",
        ("quasi-Einstein metadata (h, m, λ) with m > 0",),
        "Ric + Hess h - (1/m) dh⊗dh = λg", "iff",
        "the metric is quasi-Einstein; it is rigid when h is constant",
    ),
}

THEOREM_IDS = tuple(THEOREMS)


def describe(theorem_id: str) -> str:
    """Hypothesis checklist and criterion of one theorem."""
    th = THEOREMS.get(theorem_id)
    if th is None:
        raise UsageError(f"unknown theorem id {theorem_id!r}; known: {', '.join(THEOREM_IDS)}")
    lines = [f"{th.theorem_id}: {th.name}", "hypotheses:"]
    lines += [f"  - {h}" for h in th.hypotheses]
    lines.append(f"criterion: {th.criterion}")
    lines.append(f"conclusion: {th.conclusion}")
    return "\n".join(lines)


@dataclass
class CriterionReport:
    theorem_id: str
    hypothesis_status: dict
    criterion_value: dict
    verdict: str
    residual: float
    reason: str = ""
    norms: dict = field(default_factory=dict)
    f_oscillation: float = 0.0
    warnings: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return THEOREMS[self.theorem_id].name

    def passed(self) -> bool:
        return self.verdict != VIOLATED

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "name": self.name,
            "hypothesis_status": {k: dict(v) for k, v in self.hypothesis_status.items()},
            "criterion_value": dict(self.criterion_value),
            "verdict": self.verdict,
            "residual": self.residual,
            "reason": self.reason,
            "norms": {k: dict(v) for k, v in self.norms.items()},
            "f_oscillation": self.f_oscillation,
            "warnings": list(self.warnings),
            "details": dict(self.details),
        }


def _amax(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


class NodeData:
    """Pointwise submersion data on the nodes of a quadrature grid."""

    def __init__(self, spec: SubmersionSpec, grid, rotation=None):
        if not isinstance(grid, QuadratureGrid):
            grid = QuadratureGrid.build(spec.total, int(grid))
        self.spec = spec
        self.grid = grid
        chunks = list(grid.points())
        self.points = np.concatenate([p for p, _ in chunks])
        self.weights = np.concatenate([w for _, w in chunks])
        self.volume = math.fsum(self.weights)
        self.sg = SubmersionGeometry(spec, self.points, rotation=rotation)
        self.k, self.m, self.n = spec.fibre_dim, spec.base_dim, spec.dim

    def _flat(self, a) -> np.ndarray:
        return np.broadcast_to(np.asarray(a, dtype=float), self.points.shape[:1])

    def stats(self, a) -> dict:
        a = self._flat(a)
        mean = math.fsum(self.weights * a) / self.volume
        var = math.fsum(self.weights * (a - mean) ** 2) / self.volume
        return {"mean": mean, "variance": max(var, 0.0)}

    # -- tensors and their hypotheses ----------------------------------------------------------------
    @cached_property
    def norms(self) -> dict:
        sg = self.sg
        return {"|T|^2": self.stats(sg.normT2), "|A|^2": self.stats(sg.normA2), "|N|^2": self.stats(sg.normN2)}

    @cached_property
    def t_max(self) -> float:
        return math.sqrt(_amax(self.sg.normT2))

    @cached_property
    def a_max(self) -> float:
        return math.sqrt(_amax(self.sg.normA2))

    @cached_property
    def n_max(self) -> float:
        return math.sqrt(_amax(self.sg.normN2))

    @cached_property
    def dN(self) -> float:
        return _amax(self.sg.dN_aux)

    @cached_property
    def dT(self) -> float:
        return _amax(self.sg.dT_aux)

    @cached_property
    def f_osc(self) -> float:
        return float(np.ptp(self._flat(self.sg.f)))

    @cached_property
    def v_grad_f(self) -> float:
        return math.sqrt(_amax(self.sg.ip(self.sg.V_grad_f, self.sg.V_grad_f)))

    # -- curvature ----------------------------------------------------------------------------------------
    @cached_property
    def scalar(self) -> np.ndarray:
        return self._flat(self.sg.geo.scalar)

    @cached_property
    def weyl(self) -> float:
        return _amax(self.sg.geo.weyl) if self.n >= 4 else math.inf

    @cached_property
    def r_mix(self) -> np.ndarray:
        sg = self.sg
        k = np.einsum("...abcd,...ia,...jb,...ic,...jd->...", sg.geo.riemann, sg.X, sg.U, sg.X, sg.U)
        return self._flat(k)

    @cached_property
    def base_geo(self) -> Geometry:
        return self.sg.base_geo

    @cached_property
    def fibre_geo(self) -> Geometry | None:
        return self.sg.fibre_geo

    @cached_property
    def base_scalar(self) -> np.ndarray:
        return self._flat(self.base_geo.scalar)

    @cached_property
    def fibre_scalar(self) -> np.ndarray:
        fg = self.fibre_geo
        return self._flat(fg.scalar) if fg is not None else self._flat(0.0)

    @cached_property
    def components(self) -> list:
        return component_data(self.spec, self.sg)

    def component_scalars(self) -> list:
        return [(len(c.coords), self._flat(component_scalar(self.spec, c.coords, self.points)))
                for c, _, _ in self.components]


class _Checks:
    """Ordered hypothesis records; the first failure is the verdict reason."""

    def __init__(self, tol: float):
        self.tol = tol
        self.status = {}
        self.first_failure = ""

    def add(self, name: str, residual: float, passed: bool | None = None, detail: str = "") -> bool:
        ok = (residual <= self.tol) if passed is None else bool(passed)
        rec = {"passed": ok, "residual": float(residual)}
        if detail:
            rec["detail"] = detail
        self.status[name] = rec
        if not ok and not self.first_failure:
            self.first_failure = f"{name} fails" + (f": {detail}" if detail else f" (residual {residual:.3e})")
        return ok

    @property
    def all_passed(self) -> bool:
        return all(r["passed"] for r in self.status.values())


def _component_metadata(chk: _Checks, nd: NodeData) -> tuple[float, float] | None:
    """Sum of lambda_i m_i (horizontal) and lambda_i k_i (vertical) after checking the Einstein claims."""
    comps = nd.components
    if not comps:
        chk.add("component metadata", math.inf, False, "missing metadata: model has no component structure")
        return None
    missing = [c.name for c, _, _ in comps if c.einstein is None]
    if missing:
        chk.add("component metadata", math.inf, False,
                f"missing metadata: no Einstein constant for component {', '.join(missing)}")
        return None
    sg = nd.sg
    res = 0.0
    for c, _, _ in comps:
        idx = list(c.coords)
        block = sg.geo.ricci[..., idx, :][..., :, idx] - c.einstein * sg.g[..., idx, :][..., :, idx]
        res = max(res, _amax(block))
    chk.add("component metadata", res, detail=f"Einstein residual max|Ric - λg| = {res:.3e}")
    lam_m = sum(c.einstein * mi for c, mi, _ in comps)
    lam_k = sum(c.einstein * ki for c, _, ki in comps)
    return lam_m, lam_k


def _fibre_einstein(chk: _Checks, nd: NodeData) -> float | None:
    fg = nd.fibre_geo
    if fg is None:
        chk.add("Einstein fibres", math.inf, False, "fibres are points")
        return None
    claimed = nd.spec.metadata.get("fibre_einstein")
    if claimed is None:
        est = nd.stats(nd.fibre_scalar)["mean"] / nd.k
        lam, how = est, "estimated"
    else:
        lam, how = float(claimed), "claimed"
    res = _amax(fg.ricci - lam * fg.g)
    chk.add("Einstein fibres", res, detail=f"λ_F = {lam:.6g} ({how}), max|Ric_F - λ_F g_F| = {res:.3e}")
    return lam


def _quasi_einstein_meta(meta: dict | None, einstein) -> dict | None:
    if meta:
        return {"h": meta.get("h"), "m": meta.get("m", INFINITE), "lambda": float(meta["lambda"])}
    if einstein is not None:
        return {"h": None, "m": INFINITE, "lambda": float(einstein)}
    return None


def _m_value(m):
    if m == INFINITE or (isinstance(m, float) and math.isinf(m)):
        return INFINITE
    m = float(m)
    if not m > 0:
        raise PreconditionError("quasi-Einstein parameter m must be positive")
    return m


def _total_quasi_einstein(chk: _Checks, spec, metric, points) -> dict | None:
    from .chart import constant_field

    meta_src = spec.metadata.get("quasi_einstein") if isinstance(spec, SubmersionSpec) else None
    desc = spec.descriptor if isinstance(spec, SubmersionSpec) else spec
    known = desc.known.get("einstein") if desc is not None else None
    qe = _quasi_einstein_meta(meta_src, known)
    name = "quasi-Einstein total space"
    if qe is None:
        chk.add(name, math.inf, False, "missing metadata: no (h, m, λ) and no Einstein constant")
        return None
    try:
        m = _m_value(qe["m"])
    except PreconditionError as exc:
        chk.add(name, math.inf, False, str(exc))
        return None
    h = qe["h"] if qe["h"] is not None else constant_field(metric.domain, 0.0)
    res = _amax(quasi_einstein_tensor(metric, h, m, qe["lambda"], points))
    hv = np.asarray([h(p) for p in points[:: max(1, len(points) // 512)]])
    chk.add(name, res, detail=f"λ = {qe['lambda']:.6g}, m = {m}, max|Ric_h^m - λg| = {res:.3e}")
    return {**qe, "m": m, "residual": res, "h_oscillation": float(np.ptp(hv))}


def _lcf_components(chk: _Checks, nd: NodeData, tol: float) -> list | None:
    """(n_i, s_i) for a product of conformally flat components with balanced splitting."""
    name = "conformally flat components"
    comps = nd.components
    if not comps:
        chk.add(name, math.inf, False, "missing metadata: model has no component structure")
        return None
    for c, mi, ki in comps:
        ni = len(c.coords)
        if not c.lcf or ni < 4:
            chk.add(name, math.inf, False, f"component {c.name} is not conformally flat of dimension >= 4")
            return None
        if abs(mi - ki) > 1e-9:
            chk.add(name, abs(mi - ki), False, f"component {c.name}: m_i = {mi:.6g} differs from k_i = {ki:.6g}")
            return None
    w = max(_block_weyl(nd.spec, c.coords, nd.points) for c, _, _ in comps)
    if not chk.add(name, w, detail=f"max component Weyl residual {w:.3e}"):
        return None
    return nd.component_scalars()


def _alternatives(chk: _Checks, branches: dict, label: str) -> str | None:
    """Record each alternative condition; pass if any holds.  Returns the first that holds."""
    viol = {}
    for key, parts in branches.items():
        viol[key] = max(v for _, v in parts)
    chosen = next((k for k, v in viol.items() if v <= chk.tol), None)
    detail = "; ".join(f"({k}) " + ", ".join(f"{n} {v:.3e}" for n, v in parts) for k, parts in branches.items())
    chk.add(label, min(viol.values()), chosen is not None, detail)
    return chosen


def _verdict(chk: _Checks, residual: float, tol: float) -> tuple[str, str]:
    if not chk.all_passed:
        return NOT_APPLICABLE, chk.first_failure
    return (RIGID, "") if residual <= tol else (VIOLATED, f"criterion residual {residual:.3e} exceeds {tol:.1e}")


def _pos(x) -> float:
    """Largest positive part (violation of ``x <= 0``)."""
    return max(0.0, float(np.max(x)))


def evaluate_criterion(theorem_id: str, spec, grid=DEFAULT_CRITERIA_GRID, tol: float = DEFAULT_TOL,
                       hyp_tol: float = DEFAULT_TOL, rotation=None, node_data: NodeData | None = None
                       ) -> CriterionReport:
    """Check one theorem's hypotheses on ``spec`` and evaluate its criterion.

    ``grid`` is a :class:`QuadratureGrid` or a node count per coordinate.
    ``node_data`` lets several theorems share one evaluation of the grid data.
    """
    if theorem_id not in THEOREMS:
        raise UsageError(f"unknown theorem id {theorem_id!r}; known: {', '.join(THEOREM_IDS)}")
    if theorem_id == "QE":
        return _evaluate_qe(spec, grid, tol, hyp_tol)
    if not isinstance(spec, SubmersionSpec):
        raise PreconditionError(f"{theorem_id} needs a submersion, got a plain manifold")
    nd = node_data if node_data is not None else NodeData(spec, grid, rotation)
    chk = _Checks(hyp_tol)
    fn = _EVALUATORS[theorem_id]
    value, residual, details = fn(chk, nd, tol)
    verdict, reason = _verdict(chk, residual, tol)
    warnings = []
    for name, st in nd.norms.items():
        if math.sqrt(st["variance"]) > tol:
            warnings.append(f"{name} is not constant (standard deviation {math.sqrt(st['variance']):.3e})")
    th = THEOREMS[theorem_id]
    if th.kind == "iff" and verdict != NOT_APPLICABLE:
        rigid = nd.f_osc <= tol
        details["f_constant"] = rigid
        details["consistent_with_equivalence"] = rigid == (verdict == RIGID)
        if not details["consistent_with_equivalence"]:
            warnings.append("criterion and rigidity of f disagree")
    return CriterionReport(theorem_id, chk.status, value, verdict, float(residual), reason,
                           nd.norms, nd.f_osc, warnings, details)


# -- per-theorem evaluators: each returns (criterion_value, residual, details) ------------------------------


def _norm(nd: NodeData, key: str) -> float:
    return nd.norms[key]["mean"]


def _eval_t3_1(chk, nd, tol):
    chk.add("A = 0 (integrable horizontal distribution)", nd.a_max)
    chk.add("parallel N", nd.dN)
    chk.add("dim B >= 2", max(0, 2 - nd.m))
    lam_f = _fibre_einstein(chk, nd)
    sums = _component_metadata(chk, nd)
    if sums is None or lam_f is None:
        return {}, math.inf, {}
    left, right = sums[1], lam_f * nd.k
    res = max(abs(left - right), nd.f_osc)
    return {"left": left, "right": right, "equation": THEOREMS["T3_1"].criterion}, res, {}


def _eval_t3_3(chk, nd, tol):
    chk.add("A = 0 (integrable horizontal distribution)", nd.a_max)
    chk.add("parallel N", nd.dN)
    chk.add("base Ricci-flat", _amax(nd.base_geo.ricci))
    sums = _component_metadata(chk, nd)
    if sums is None or nd.k == 0:
        return {}, math.inf, {}
    left = sums[0]
    right = -_norm(nd, "|T|^2") - _norm(nd, "|N|^2") * (nd.n + nd.m - 4) / nd.k
    return {"left": left, "right": right, "equation": THEOREMS["T3_3"].criterion}, abs(left - right), {}


def _eval_t3_6(chk, nd, tol):
    chk.add("N = 0", nd.n_max)
    lam_f = _fibre_einstein(chk, nd)
    chk.add("dim B >= 2", max(0, 2 - nd.m))
    sums = _component_metadata(chk, nd)
    if sums is None or lam_f is None:
        return {}, math.inf, {}
    left, right = sums[1], lam_f * nd.k + _norm(nd, "|A|^2")
    return {"left": left, "right": right, "equation": THEOREMS["T3_6"].criterion}, abs(left - right), {}


def _eval_t3_12(chk, nd, tol):
    chk.add("N = 0", nd.n_max)
    chk.add("base Ricci-flat", _amax(nd.base_geo.ricci))
    sums = _component_metadata(chk, nd)
    if sums is None:
        return {}, math.inf, {}
    left = sums[0] + 2 * _norm(nd, "|A|^2") + _norm(nd, "|T|^2")
    return {"left": left, "right": 0.0, "equation": THEOREMS["T3_12"].criterion}, abs(left), {}


def _eval_t3_20(chk, nd, tol):
    chk.add("totally geodesic fibres", nd.t_max)
    chk.add("dim B >= 2", max(0, 2 - nd.m))
    chk.add("base Ricci-flat", _amax(nd.base_geo.ricci))
    sums = _component_metadata(chk, nd)
    if sums is None:
        return {}, math.inf, {}
    left = sums[0] + 2 * _norm(nd, "|A|^2")
    return {"left": left, "right": 0.0, "equation": THEOREMS["T3_20"].criterion}, abs(left), {}


def _scalar_bound(scalars: list) -> np.ndarray:
    return sum(si / (1 - ni) for ni, si in scalars)


def _eval_t4_2(chk, nd, tol):
    scalars = _lcf_components(chk, nd, tol)
    if scalars is None:
        return {}, math.inf, {}
    gap = nd.scalar - _scalar_bound(scalars)  # s - sum s_i/(1 - n_i)
    branch = _alternatives(chk, {
        "1": [("|T|", nd.t_max), ("s - bound", _pos(gap))],
        "2": [("|DN|", nd.dN), ("|A|", nd.a_max), ("bound - s", _pos(-gap))],
    }, "alternative conditions")
    res = nd.f_osc
    details = {"condition": branch}
    if nd.weyl <= chk.tol:
        details["max_abs_scalar"] = _amax(nd.scalar)
        res = max(res, details["max_abs_scalar"])
    return {"left": nd.f_osc, "right": 0.0, "equation": "osc f = 0"}, res, details


def _eval_t4_5(chk, nd, tol):
    scalars = _lcf_components(chk, nd, tol)
    if scalars is None:
        return {}, math.inf, {}
    lo = min(float(np.min(s)) for _, s in scalars)
    hi = max(float(np.max(s)) for _, s in scalars)
    chk.add("component scalar curvatures of one sign", min(max(0.0, -lo), max(0.0, hi)))
    qe = _total_quasi_einstein(chk, nd.spec, nd.spec.total, nd.points)
    if qe is None:
        return {}, math.inf, {}
    lam = qe["lambda"]
    branch = _alternatives(chk, {
        "1": [("-λ", max(0.0, -lam)), ("|DN|", nd.dN), ("|A|", nd.a_max)],
        "2": [("λ", max(0.0, lam)), ("|T|", nd.t_max)],
        "3": [("|A|", nd.a_max), ("|T|", nd.t_max)],
    }, "alternative conditions")
    ric = _amax(nd.sg.geo.ricci)
    res = max(ric, nd.f_osc)
    return ({"left": ric, "right": 0.0, "equation": THEOREMS["T4_5"].criterion}, res,
            {"condition": branch, "max_abs_ricci": ric})


def _side_quasi_einstein(chk: _Checks, nd: NodeData, side: str) -> dict | None:
    meta = nd.spec.metadata
    qe = _quasi_einstein_meta(meta.get(f"{side}_quasi_einstein"), meta.get(f"{side}_einstein"))
    name = f"quasi-Einstein {side}"
    if qe is None:
        chk.add(name, math.inf, False, f"missing metadata: no (h, m, λ) or Einstein constant for the {side}")
        return None
    if qe["h"] is not None:
        chk.add(name, math.inf, False, f"a non-constant potential on the {side} is not supported")
        return None
    geo = nd.fibre_geo if side == "fibre" else nd.base_geo
    if geo is None:
        chk.add(name, math.inf, False, "fibres are points")
        return None
    res = _amax(geo.ricci - qe["lambda"] * geo.g)
    chk.add(name, res, detail=f"λ = {qe['lambda']:.6g}, residual {res:.3e}")
    return qe


def _one_sign(x) -> float:
    return min(max(0.0, -float(np.min(x))), max(0.0, float(np.max(x))))


def _eval_t4_8(chk, nd, tol):
    chk.add("dim F = dim B", abs(nd.k - nd.m), nd.k == nd.m, f"dim F = {nd.k}, dim B = {nd.m}")
    chk.add("locally conformally flat total space", nd.weyl)
    meta = nd.spec.metadata
    side = meta.get("quasi_einstein_side")
    if side is None:
        side = "fibre" if ("fibre_quasi_einstein" in meta or "fibre_einstein" in meta) else "base"
    other = "base" if side == "fibre" else "fibre"
    s_side = nd.fibre_scalar if side == "fibre" else nd.base_scalar
    s_other = nd.base_scalar if side == "fibre" else nd.fibre_scalar
    chk.add(f"{side} scalar curvature of one sign", _one_sign(s_side))
    qe = _side_quasi_einstein(chk, nd, side)
    if qe is None:
        return {}, math.inf, {"side": side}
    lam = qe["lambda"]
    branch = _alternatives(chk, {
        "1": [("|T|", nd.t_max), (f"max s_{other}", _pos(s_other)), ("λ", max(0.0, lam))],
        "2": [("|A|", nd.a_max), ("|DT|", nd.dT), (f"-min s_{other}", _pos(-s_other)), ("-λ", max(0.0, -lam))],
    }, "alternative conditions")
    geo = nd.fibre_geo if side == "fibre" else nd.base_geo
    parts = {
        f"{side} Ricci": _amax(geo.ricci), f"{other} scalar": _amax(s_other),
        "|V grad f|": nd.v_grad_f, "|A|": nd.a_max, "|T|": nd.t_max,
    }
    if _one_sign(nd.scalar) <= chk.tol:
        parts["osc f"] = nd.f_osc
    res = max(parts.values())
    return ({"left": res, "right": 0.0, "equation": THEOREMS["T4_8"].criterion}, res,
            {"side": side, "condition": branch, "conclusion_terms": parts})


def _eval_t4_12(chk, nd, tol):
    chk.add("T = 0", nd.t_max)
    chk.add("R_mix <= 0", _pos(nd.r_mix))
    rmix = _amax(nd.r_mix)
    res = max(rmix, nd.f_osc)
    return {"left": rmix, "right": 0.0, "equation": THEOREMS["T4_12"].criterion}, res, {"max_abs_r_mix": rmix}


_EVALUATORS = {
    "T3_1": _eval_t3_1, "T3_3": _eval_t3_3, "T3_6": _eval_t3_6, "T3_12": _eval_t3_12, "T3_20": _eval_t3_20,
    "T4_2": _eval_t4_2, "T4_5": _eval_t4_5, "T4_8": _eval_t4_8, "T4_12": _eval_t4_12,
}


def _evaluate_qe(model, grid, tol, hyp_tol) -> CriterionReport:
    desc = model.descriptor if isinstance(model, SubmersionSpec) else model
    if not isinstance(grid, QuadratureGrid):
        grid = QuadratureGrid.build(desc.metric, int(grid))
    pts = np.concatenate([p for p, _ in grid.points()])
    return quasi_einstein_check(model, pts, tol, hyp_tol)


def quasi_einstein_check(model, points, tol: float = DEFAULT_TOL, hyp_tol: float = DEFAULT_TOL) -> CriterionReport:
    """Quasi-Einstein residual of a model's total space at ``points``.

    Uses ``metadata["quasi_einstein"] = {"h", "m", "lambda"}`` of a submersion
    when present, otherwise the model's Einstein constant with constant
    potential and ``m`` infinite.
    """
    desc = model.descriptor if isinstance(model, SubmersionSpec) else model
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    chk = _Checks(hyp_tol)
    qe = _total_quasi_einstein(_Checks(math.inf), model, desc.metric, pts)
    if qe is None:
        chk.add("quasi-Einstein metadata", math.inf, False, "missing metadata: no (h, m, λ) and no Einstein constant")
        return CriterionReport("QE", chk.status, {}, NOT_APPLICABLE, math.inf, chk.first_failure)
    chk.add("quasi-Einstein metadata", 0.0, True, f"λ = {qe['lambda']:.6g}, m = {qe['m']}")
    res = qe["residual"]
    verdict, reason = _verdict(chk, res, tol)
    value = {"left": res, "right": 0.0, "equation": THEOREMS["QE"].criterion}
    return CriterionReport("QE", chk.status, value, verdict, res, reason,
                           details={"h_oscillation": qe["h_oscillation"], "lambda": qe["lambda"], "m": qe["m"]})


def evaluate_criteria(theorem_ids, spec, grid=DEFAULT_CRITERIA_GRID, tol: float = DEFAULT_TOL,
                      hyp_tol: float = DEFAULT_TOL, rotation=None) -> dict:
    """Several theorems on one shared evaluation of the grid data."""
    nd = None
    out = {}
    for tid in theorem_ids:
        if tid != "QE" and nd is None and isinstance(spec, SubmersionSpec):
            nd = NodeData(spec, grid, rotation)
        out[tid] = evaluate_criterion(tid, spec, grid, tol, hyp_tol, rotation, node_data=nd)
    return out
