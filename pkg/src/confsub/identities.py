"""Two-sided evaluation of the submersion curvature identities.

Every identity is evaluated on the g-orthonormal split frames of
:class:`~confsub.submersion.SubmersionGeometry`.  The left-hand side is always
total-space curvature from the chart metric; the right-hand side is assembled
from fibre curvature (fibre charts through affine level sets), base curvature
(the base chart at the projected point), the fundamental tensors and
derivatives of the conformal factor.

Identity ids follow the reference numbering, e.g. ``EQ2_12`` is the vertical
Ricci relation for conformal submersions.  ``IDENTITY_NAMES`` gives each a
plain-language name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .submersion import SubmersionGeometry, SubmersionSpec, require_conformal

WEYL_TOL = 1e-6
T_ZERO_TOL = 1e-10
CONST_TOL = 1e-12

IDENTITY_NAMES = {
    "EQ2_1": "orthogonal decomposition of the curvature tensor",
    "EQ2_6": "structural equations of a conformal submersion",
    "EQ2_3": "sectional curvatures of a Riemannian submersion",
    "EQ2_4": "Ricci curvature of a Riemannian submersion",
    "EQ2_5": "scalar curvature of a Riemannian submersion",
    "EQ2_7": "vertical curvature tensor, conformal",
    "EQ2_8": "horizontal curvature tensor, conformal",
    "EQ2_9": "vertical sectional curvature, conformal",
    "EQ2_10": "mixed sectional curvature, conformal",
    "EQ2_11": "horizontal sectional curvature, conformal",
    "EQ2_12": "vertical Ricci curvature, conformal",
    "EQ2_13": "mixed Ricci curvature, conformal",
    "EQ2_14": "horizontal Ricci curvature, conformal",
    "EQ2_15": "scalar curvature, conformal",
    "EQ4_1": "scalar curvature, conformally flat total space with dim B = dim F",
    "EQ4_2": "component scalar curvatures, product of conformally flat factors",
    "EQ4_3": "component scalar curvatures, conformally flat times Einstein factors",
    "EQ4_10": "scalar curvature, conformally flat total space, T = 0",
    "EQ4_11": "scalar curvature, conformally flat total space, A = 0 and parallel N",
    "EQ4_12": "weighted scalar curvature, A = 0 and parallel N",
    "EQ4_13": "weighted scalar curvature, A = 0 and T = 0",
    "EQ4_17": "base plus fibre scalar curvature, conformally flat total space",
    "EQ4_18": "base plus fibre scalar curvature, T = 0",
    "EQ4_19": "weighted base plus fibre scalar curvature, A = 0 and parallel T",
    "EQ4_20": "mixed scalar curvature, T = 0",
    "EQ3_1": "vertical Ricci trace, integrable horizontal distribution",
    "EQ3_2": "vertical Ricci trace in divergence form, A = 0 and parallel N",
    "EQ3_3": "horizontal Ricci trace, A = 0, parallel N, Ricci-flat base",
    "EQ3_4": "vertical Ricci trace, N = 0",
    "EQ3_5": "horizontal Ricci trace, N = 0, Ricci-flat base",
    "EQ3_6": "horizontal Ricci trace, totally geodesic fibres, Ricci-flat base",
}

RIEMANNIAN_IDS = ("EQ2_3", "EQ2_4", "EQ2_5")
CONFORMAL_IDS = ("EQ2_7", "EQ2_8", "EQ2_9", "EQ2_10", "EQ2_11", "EQ2_12", "EQ2_13", "EQ2_14", "EQ2_15")
CRITERION_IDS = ("EQ3_1", "EQ3_2", "EQ3_3", "EQ3_4", "EQ3_5", "EQ3_6")
LCF_IDS = ("EQ4_1", "EQ4_2", "EQ4_3", "EQ4_10", "EQ4_11", "EQ4_12", "EQ4_13", "EQ4_17", "EQ4_18", "EQ4_19", "EQ4_20")

# which Riemannian line each conformal identity reduces to when f is constant
REDUCTIONS = {
    "EQ2_7": ("EQ2_3", "vertical"),
    "EQ2_8": ("EQ2_3", "horizontal"),
    "EQ2_9": ("EQ2_3", "vertical"),
    "EQ2_10": ("EQ2_3", "mixed"),
    "EQ2_11": ("EQ2_3", "horizontal"),
    "EQ2_12": ("EQ2_4", "vertical"),
    "EQ2_13": ("EQ2_4", "mixed"),
    "EQ2_14": ("EQ2_4", "horizontal"),
    "EQ2_15": ("EQ2_5", "scalar"),
}


@dataclass
class IdentityReport:
    """Residuals of one identity over a point set.

    ``status`` is ``checked``, ``vacuous`` (no frame tuple to evaluate, e.g.
    vertical planes with one-dimensional fibres) or ``not-applicable`` (a
    precondition failed; ``reason`` names it).  ``parts`` holds the maximum
    residual of each line of a multi-line identity, ``terms`` the maximum
    magnitude of every right-hand-side term.  ``diagnostics`` carries extra
    numbers that do not enter ``max_residual``.
    """

    identity_id: str
    status: str
    points_checked: int
    max_residual: float
    per_point: list
    parts: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return IDENTITY_NAMES.get(self.identity_id, self.identity_id)

    def passed(self, tol: float) -> bool:
        return self.status != "checked" or self.max_residual <= tol

    def to_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "name": self.name,
            "status": self.status,
            "points_checked": self.points_checked,
            "max_residual": self.max_residual,
            "per_point": [{"point": list(map(float, p)), "residual": float(r)} for p, r in self.per_point],
            "parts": dict(self.parts),
            "terms": dict(self.terms),
            "reason": self.reason,
            "diagnostics": dict(self.diagnostics),
        }


# -- frame data -------------------------------------------------------------------------------------------


class FrameData:
    """All frame components the identities need, on a batch of points."""

    def __init__(self, sg: SubmersionGeometry, mixed_convention: str = "horizontal"):
        self.sg = sg
        e = np.einsum
        g, U, X = sg.g, sg.U, sg.X
        self.k, self.m, self.n = U.shape[-2], X.shape[-2], sg.n
        T, A = sg.T, sg.A
        self.TUU = e("...aeb,...je,...kb->...jka", T, U, U)
        self.TUX = e("...aeb,...je,...ib->...jia", T, U, X)
        self.AXX = e("...aeb,...ie,...lb->...ila", A, X, X)
        self.AXU = e("...aeb,...ie,...kb->...ika", A, X, U)
        self.N = sg.N
        self.ip = lambda u, v: e("...a,...ab,...b->...", u, g, v)
        gr = sg.geo.riemann
        self.R = gr
        self.ric = sg.geo.ricci
        self.s = sg.geo.scalar

        # total curvature on frames
        self.R_UUUU = e("...abcd,...ja,...kb,...lc,...md->...jklm", gr, U, U, U, U)
        self.R_XXXX = e("...abcd,...ia,...jb,...kc,...ld->...ijkl", gr, X, X, X, X)
        self.K_XU = e("...abcd,...ia,...jb,...ic,...jd->...ij", gr, X, U, X, U)
        self.r_UU = e("...ab,...ja,...kb->...jk", self.ric, U, U)
        self.r_XU = e("...ab,...ia,...jb->...ij", self.ric, X, U)
        self.r_XX = e("...ab,...ia,...lb->...il", self.ric, X, X)

        # fibre curvature
        if self.k:
            fg = sg.fibre_geo
            u = sg.fibre_frame
            self.Rf = e("...abcd,...ja,...kb,...lc,...md->...jklm", fg.riemann, u, u, u, u)
            self.rf = e("...ab,...ja,...kb->...jk", fg.ricci, u, u)
            self.sf = np.broadcast_to(fg.scalar, sg.bshape)
        else:
            self.Rf = np.zeros(sg.bshape + (0,) * 4)
            self.rf = np.zeros(sg.bshape + (0, 0))
            self.sf = np.zeros(sg.bshape)
        # base curvature at the projected point, on pushed horizontal frames
        bg = sg.base_geo
        xb = sg.push(X)
        self.Rb = e("...abcd,...ia,...jb,...kc,...ld->...ijkl", bg.riemann, xb, xb, xb, xb)
        self.rb = e("...ab,...ia,...lb->...il", bg.ricci, xb, xb)
        self.sb = np.broadcast_to(bg.scalar, sg.bshape)
        self.ef = np.exp(2 * sg.f)

        # derivative-of-tensor terms (connection of g)
        dT, dA, dN = sg.dT, sg.dA, sg.dN
        self.dTX_UU = e("...aebk,...je,...jb,...ik,...ac,...ic->...ij", dT, U, U, X, g, X)  # g((D_X T)_U U, X)
        self.deltaT = e("...aebk,...je,...lb,...ik,...ac,...ic->...jl", dT, U, U, X, g, X)
        self.checkT = -e("...aebk,...je,...lb,...jk->...la", dT, U, U, U)  # check-delta T (U_l)
        self.hatA = -e("...aebk,...ie,...lb,...ik->...la", dA, X, X, X)  # hat-delta A (X_l)
        self.dN_U = e("...ak,...jk->...ja", dN, U)
        self.dN_X = e("...ak,...ik->...ia", dN, X)
        self.dA_UXY = e("...aebk,...ie,...lb,...jk,...ac,...jc->...il", dA, X, X, U, g, U)
        self.hatdeltaN = -np.einsum("...jj->...", self.deltaT)
        self.checkdeltaN = -e("...ak,...jk,...ac,...jc->...", dN, U, g, U)
        self.dN_aux = sg.dN_aux

        # quadratic tensor terms
        ipf = self._ipf
        self.normT2, self.normA2, self.normN2 = sg.normT2, sg.normA2, sg.normN2
        self.AU_AV = ipf("ika,ilb->kl", self.AXU, self.AXU)
        self.AX_AY = ipf("ija,ljb->il", self.AXX, self.AXX)
        self.TX_TY = ipf("jia,jlb->il", self.TUX, self.TUX)
        c_h = ipf("jia,lib->jl", self.TUX, self.AXX)  # sum_i g(T_U X_i, A_X X_i)
        c_v = ipf("jka,lkb->jl", self.TUU, self.AXU)  # sum_k g(T_U U_k, A_X U_k)
        self.TA_conventions = {"horizontal": c_h, "vertical": c_v}
        self.TA = self.TA_conventions[mixed_convention]  # [j (U), i (X)]

        # conformal factor
        self.df = sg.df
        self.Uf = e("...a,...ja->...j", self.df, U)
        self.Xf = e("...a,...ia->...i", self.df, X)
        self.grad2 = self.ip(sg.grad_f, sg.grad_f)
        self.Hgrad2 = self.ip(sg.H_grad_f, sg.H_grad_f)
        self.Vgrad2 = self.ip(sg.V_grad_f, sg.V_grad_f)
        self.hess_UU = e("...ab,...ja,...kb->...jk", sg.hess_f, U, U)
        self.hess_XX = e("...ab,...ia,...lb->...il", sg.hess_f, X, X)
        self.hess_XU = e("...ab,...ia,...jb->...ij", sg.hess_f, X, U)
        self.lap = sg.lap_f
        self.Hlap = sg.H_lap_f
        self.Vlap = sg.V_lap_f
        self.Nf = e("...a,...a->...", self.df, self.N)
        self.f_TUU = e("...a,...jka->...jk", self.df, self.TUU)
        self.f_TUX = e("...a,...jia->...ji", self.df, self.TUX)
        self.f_AXX = e("...a,...ila->...il", self.df, self.AXX)
        self.f_AXU = e("...a,...ika->...ik", self.df, self.AXU)
        self.divN = sg.divN
        self.divH = sg.div_H_grad_f
        self.divV = sg.div_V_grad_f

    def _ipf(self, spec: str, a, b):
        """g-inner product of frame-indexed vectors, e.g. ``"ika,ilb->kl"``.

        The last letter of each operand is its vector axis.
        """
        left, out = spec.split("->")
        sa, sb = left.split(",")
        return np.einsum(f"...{sa},...{sa[-1]}{sb[-1]},...{sb}->...{out}", a, self.sg.g, b)

    def frame_ff(self, frame: str) -> np.ndarray:
        """E_i(E_i(f)) for each frame field, stacked."""
        cnt = self.k if frame == "U" else self.m
        if cnt == 0:
            return np.zeros(self.sg.bshape + (0,))
        return np.stack([self.sg.frame_derivative_of_f(frame, i) for i in range(cnt)], axis=-1)

    def nabla_ff(self, frame: str, project: str) -> np.ndarray:
        """(P nabla_{E_i} E_i)(f) with P the vertical or horizontal projector."""
        cnt = self.k if frame == "U" else self.m
        if cnt == 0:
            return np.zeros(self.sg.bshape + (0,))
        P = self.sg.PV if project == "V" else self.sg.PH
        out = []
        for i in range(cnt):
            v = self.sg.frame_covariant(frame, i, frame, i)
            out.append(np.einsum("...a,...ab,...b->...", self.df, P, v))
        return np.stack(out, axis=-1)

    def vertical_mixed(self) -> tuple:
        """((V nabla_{U_j} U_l)(f), U_j(U_l(f))) as [j, l] arrays."""
        sg, k = self.sg, self.k
        nab = np.zeros(sg.bshape + (k, k))
        uuf = np.zeros(sg.bshape + (k, k))
        for j in range(k):
            for l in range(k):
                v = sg.frame_covariant("U", l, "U", j)
                nab[..., j, l] = np.einsum("...a,...ab,...b->...", self.df, sg.PV, v)
                uuf[..., j, l] = sg.frame_mixed_derivative_of_f(j, l)
        return nab, uuf


# -- assembly ---------------------------------------------------------------------------------------------


class _Line:
    """One line of an identity: LHS and named RHS terms over frame tuples."""

    def __init__(self, lhs, terms: dict, mask=None):
        self.lhs = np.asarray(lhs)
        self.terms = {k: np.broadcast_to(np.asarray(v, dtype=float), self.lhs.shape) for k, v in terms.items()}
        self.mask = mask

    def empty(self, nb: int) -> bool:
        sel = self.lhs.shape[nb:]
        if int(np.prod(sel)) == 0:
            return True
        return self.mask is not None and not np.any(self.mask)

    def residual(self, nb: int) -> np.ndarray:
        rhs = sum(self.terms.values()) if self.terms else 0.0
        d = np.abs(self.lhs - rhs)
        if self.mask is not None:
            d = np.where(self.mask, d, 0.0)
        return d.reshape(d.shape[:nb] + (-1,)).max(axis=-1) if d.ndim > nb else d


def _report(iid: str, points: np.ndarray, lines: dict, nb: int = 1) -> IdentityReport:
    parts, terms, res = {}, {}, None
    live = {k: ln for k, ln in lines.items() if not ln.empty(nb)}
    if not live:
        return IdentityReport(iid, "vacuous", len(points), 0.0, [(p, 0.0) for p in points],
                              {k: 0.0 for k in lines}, {}, "no frame tuple to evaluate")
    for name, ln in lines.items():
        if name not in live:
            parts[name] = 0.0
            continue
        r = ln.residual(nb)
        parts[name] = float(np.max(r))
        res = r if res is None else np.maximum(res, r)
        tag = "" if len(lines) == 1 else f"{name}:"
        terms[f"{tag}lhs"] = float(np.max(np.abs(ln.lhs))) if ln.lhs.size else 0.0
        for t, v in ln.terms.items():
            terms[f"{tag}{t}"] = float(np.max(np.abs(v))) if v.size else 0.0
    return IdentityReport(iid, "checked", len(points), float(np.max(res)),
                          [(p, float(r)) for p, r in zip(points, res)], parts, terms)


def _not_applicable(iid: str, points, reason: str) -> IdentityReport:
    return IdentityReport(iid, "not-applicable", len(points), 0.0, [], {}, {}, reason)


def _offdiag(k: int):
    return ~np.eye(k, dtype=bool)


# -- Riemannian formulas --------------------------------------------------------------------------------------


def _riemannian_lines(d: FrameData) -> dict:
    """Sectional/Ricci/scalar relations of a Riemannian submersion.

    With constant f = c the map is Riemannian onto (B, e^{2c} g_B), whose
    sectional and scalar curvatures carry the factor e^{-2c}.
    """
    e = np.einsum
    k, m = d.k, d.m
    scale = (1.0 / d.ef)
    jj = np.arange(k)
    # sectional
    K_UV = e("...jkjk->...jk", d.R_UUUU)
    Kf_UV = e("...jkjk->...jk", d.Rf)
    TVV_TUU = d._ipf("ka,jb->jk", d.TUU[..., jj, jj, :], d.TUU[..., jj, jj, :])
    TUV2 = d._ipf("jka,jkb->jk", d.TUU, d.TUU)
    vert = _Line(K_UV, {"fibre": Kf_UV, "-g(T_V V,T_U U)": -TVV_TUU, "|T_U V|^2": TUV2}, _offdiag(k))
    AXU2 = d._ipf("ija,ijb->ij", d.AXU, d.AXU)
    TUX2 = d._ipf("jia,jib->ij", d.TUX, d.TUX)
    mixed = _Line(d.K_XU, {"g((D_X T)_U U,X)": d.dTX_UU, "|A_X U|^2": AXU2, "-|T_U X|^2": -TUX2})
    K_XY = e("...ijij->...ij", d.R_XXXX)
    # base sectional curvature of the pushed frame in g_B: R_B / (|x|^2|y|^2 - <x,y>^2)
    Kb = e("...ijij->...ij", d.Rb) * (d.ef[..., None, None] ** 2)
    AXY2 = d._ipf("ila,ilb->il", d.AXX, d.AXX)
    hor = _Line(K_XY, {"base": Kb * scale[..., None, None], "-3|A_X Y|^2": -3 * AXY2}, _offdiag(m))
    sect = {"vertical": vert, "mixed": mixed, "horizontal": hor}

    # Ricci
    N_TUV = e("...a,...ab,...jkb->...jk", d.N, d.sg.g, d.TUU)
    rv = _Line(d.r_UU, {"fibre": d.rf, "-g(N,T_U V)": -N_TUV, "deltaT": d.deltaT, "g(AU,AV)": d.AU_AV})
    chk = d._ipf("ja,ib->ij", d.checkT, d.sg.X)
    dNU = d._ipf("ja,ib->ij", d.dN_U, d.sg.X)
    hatA = d._ipf("ia,jb->ij", d.hatA, d.sg.U)
    rm = _Line(d.r_XU, {"g(check T(U),X)": chk, "g(D_U N,X)": dNU, "-g(hat A(X),U)": -hatA,
                        "-2g(T_U,A_X)": -2 * np.swapaxes(d.TA, -1, -2)})
    dNX = d._ipf("ia,lb->il", d.dN_X, d.sg.X)
    rh = _Line(d.r_XX, {"base": d.rb, "-2g(A_X,A_Y)": -2 * d.AX_AY, "-g(TX,TY)": -d.TX_TY,
                        "sym g(D_X N,Y)": 0.5 * (dNX + np.swapaxes(dNX, -1, -2))})
    ricci = {"vertical": rv, "mixed": rm, "horizontal": rh}

    sc = _Line(d.s, {"base": d.sb * scale, "fibre": d.sf, "-|A|^2": -d.normA2, "-|T|^2": -d.normT2,
                     "-|N|^2": -d.normN2, "-2 hat delta N": -2 * d.hatdeltaN})
    return {"EQ2_3": sect, "EQ2_4": ricci, "EQ2_5": {"scalar": sc}}


# -- conformal formulas ----------------------------------------------------------------------------------------


def _conformal_lines(d: FrameData) -> dict:
    e = np.einsum
    sg = d.sg
    k, m, n = d.k, d.m, d.n
    dimB, dimF, dimM = m, k, n
    ef = d.ef
    eyeU = np.eye(k)
    eyeX = np.eye(m)
    out = {}

    # full vertical curvature tensor (frames orthonormal: g(U_a,U_b) = delta)
    TVWp_TUW = e("...kma,...jlb,...ab->...jklm", d.TUU, d.TUU, sg.g)  # g(T_V W', T_U W)
    TVW_TUWp = e("...kla,...jmb,...ab->...jklm", d.TUU, d.TUU, sg.g)  # g(T_V W, T_U W')
    fT = d.f_TUU
    d_km = eyeU[None, :, None, :] if k else np.zeros((0,) * 4)
    d_jm = eyeU[:, None, None, :] if k else np.zeros((0,) * 4)
    d_jl = eyeU[:, None, :, None] if k else np.zeros((0,) * 4)
    d_kl = eyeU[None, :, :, None] if k else np.zeros((0,) * 4)
    h2 = d.Hgrad2[..., None, None, None, None]
    out["EQ2_7"] = {"vertical": _Line(d.R_UUUU, {
        "fibre": d.Rf,
        "-g(T_V W',T_U W)": -TVWp_TUW,
        "g(T_V W,T_U W')": TVW_TUWp,
        "(T_U W)(f) g(V,W')": fT[..., :, None, :, None] * d_km,
        "-(T_V W)(f) g(U,W')": -fT[..., None, :, :, None] * d_jm,
        "g(U,W)(T_V W')(f)": d_jl * fT[..., None, :, None, :],
        "-g(V,W)(T_U W')(f)": -d_kl * fT[..., :, None, None, :],
        "|H grad f|^2 term": (d_jm * d_kl - d_jl * d_km) * h2,
    }, None if k >= 2 else np.zeros(d.R_UUUU.shape, dtype=bool))}

    # full horizontal curvature tensor
    X = sg.X
    A = d.AXX  # [i, l, a] = A_{X_i} X_l
    AA = e("...pqa,...rsb,...ab->...pqrs", A, A, sg.g)  # g(A_{X_p}X_q, A_{X_r}X_s)
    hxx = d.hess_XX
    xf = d.Xf
    g_ = eyeX
    term = {}
    term["base"] = ef[..., None, None, None, None] * d.Rb
    term["-2g(A_X Y,A_Z Z')"] = -2 * AA
    term["g(A_Y Z,A_X Z')"] = e("...qrps->...pqrs", AA)
    term["-g(A_X Z,A_Y Z')"] = -e("...prqs->...pqrs", AA)
    hz = hxx + xf[..., :, None] * xf[..., None, :]  # Hess f(a,b) + a(f)b(f)
    term["-(Hess+df df)(X,Z)g(Y,Z')"] = -hz[..., :, None, :, None] * g_[None, :, None, :]
    term["(Hess+df df)(Y,Z)g(X,Z')"] = hz[..., None, :, :, None] * g_[:, None, None, :]
    term["-(Hess+df df)(Y,Z')g(X,Z)"] = -hz[..., None, :, None, :] * g_[:, None, :, None]
    term["(Hess+df df)(X,Z')g(Y,Z)"] = hz[..., :, None, None, :] * g_[None, :, :, None]
    term["|grad f|^2 term"] = (g_[:, None, :, None] * g_[None, :, None, :] - g_[:, None, None, :] * g_[None, :, :, None]) * d.grad2[..., None, None, None, None]
    out["EQ2_8"] = {"horizontal": _Line(d.R_XXXX, term)}

    # sectional
    jj = np.arange(k)
    K_UV = e("...jkjk->...jk", d.R_UUUU)
    Kf = e("...jkjk->...jk", d.Rf)
    TVV_TUU = d._ipf("ka,jb->jk", d.TUU[..., jj, jj, :], d.TUU[..., jj, jj, :])
    TUV2 = d._ipf("jka,jkb->jk", d.TUU, d.TUU)
    fTd = d.f_TUU[..., jj, jj]
    out["EQ2_9"] = {"vertical": _Line(K_UV, {
        "fibre": Kf, "-g(T_V V,T_U U)": -TVV_TUU, "|T_U V|^2": TUV2,
        "T_U U(f)": fTd[..., :, None], "T_V V(f)": fTd[..., None, :], "-|H grad f|^2": -d.Hgrad2[..., None, None],
    }, _offdiag(k))}

    ii = np.arange(m)
    TUU_X = e("...ja,...ab,...ib->...ij", d.TUU[..., jj, jj, :], sg.g, X)  # g(T_U U, X)
    AXU2 = d._ipf("ija,ijb->ij", d.AXU, d.AXU)
    TUX2 = d._ipf("jia,jib->ij", d.TUX, d.TUX)
    HXX_f = d.nabla_ff("X", "H")
    XXf = d.frame_ff("X")
    VUU_f = d.nabla_ff("U", "V")
    UUf = d.frame_ff("U")
    out["EQ2_10"] = {"mixed": _Line(d.K_XU, {
        "2X(f)g(T_U U,X)": 2 * xf[..., :, None] * TUU_X,
        "g((D_X T)_U U,X)": d.dTX_UU,
        "|A_X U|^2": AXU2,
        "-|T_U X|^2": -TUX2,
        "(H D_X X)(f)": HXX_f[..., :, None],
        "-X(f)^2": -(xf**2)[..., :, None],
        "-X^2(f)": -XXf[..., :, None],
        "(V D_U U)(f)": VUU_f[..., None, :],
        "-U(f)^2": -(d.Uf**2)[..., None, :],
        "-U^2(f)": -UUf[..., None, :],
    })}

    K_XY = e("...ijij->...ij", d.R_XXXX)
    Kb = e("...ijij->...ij", d.Rb) * ef[..., None, None] ** 2
    AXY2 = d._ipf("ila,ilb->il", d.AXX, d.AXX)
    hd = hxx[..., ii, ii]
    out["EQ2_11"] = {"horizontal": _Line(K_XY, {
        "base": Kb / ef[..., None, None], "-3|A_X Y|^2": -3 * AXY2, "|grad f|^2": d.grad2[..., None, None],
        "-Hess f(X,X)": -hd[..., :, None], "-X(f)^2": -(xf**2)[..., :, None],
        "-Hess f(Y,Y)": -hd[..., None, :], "-Y(f)^2": -(xf**2)[..., None, :],
    }, _offdiag(m))}

    # Ricci
    N_TUV = e("...a,...ab,...jkb->...jk", d.N, sg.g, d.TUU)
    vnab, uvf = d.vertical_mixed()
    gUV = eyeU
    uf = d.Uf
    out["EQ2_12"] = {"vertical": _Line(d.r_UU, {
        "fibre": d.rf, "-g(N,T_U V)": -N_TUV, "deltaT": d.deltaT, "g(AU,AV)": d.AU_AV,
        "dimF T_U V(f)": dimF * d.f_TUU,
        "g(U,V)N(f)": gUV * d.Nf[..., None, None],
        "-dimF g(U,V)|H grad f|^2": -dimF * gUV * d.Hgrad2[..., None, None],
        "-g(U,V)H(lap f)": -gUV * d.Hlap[..., None, None],
        "dimB g(U,V)|V grad f|^2": dimB * gUV * d.Vgrad2[..., None, None],
        "dimB (V D_U V)(f)": dimB * vnab,
        "-dimB UV(f)": -dimB * uvf,
        "-dimB U(f)V(f)": -dimB * uf[..., :, None] * uf[..., None, :],
    })}

    chk = d._ipf("ja,ib->ij", d.checkT, X)
    dNU = d._ipf("ja,ib->ij", d.dN_U, X)
    hatA = d._ipf("ia,jb->ij", d.hatA, sg.U)
    out["EQ2_13"] = {"mixed": _Line(d.r_XU, {
        "g(check T(U),X)": chk, "g(D_U N,X)": dNU, "-g(hat A(X),U)": -hatA,
        "-2g(T_U,A_X)": -2 * np.swapaxes(d.TA, -1, -2),
        "-(dimB-3)A_X U(f)": -(dimB - 3) * d.f_AXU,
        "-(dimF-1)T_U X(f)": -(dimF - 1) * np.swapaxes(d.f_TUX, -1, -2),
        "-(dimM-2)(Hess f(X,U)+X(f)U(f))": -(dimM - 2) * (d.hess_XU + xf[..., :, None] * uf[..., None, :]),
    })}

    dNX = d._ipf("ia,lb->il", d.dN_X, X)
    NX = e("...a,...ab,...ib->...i", d.N, sg.g, X)
    out["EQ2_14"] = {"horizontal": _Line(d.r_XX, {
        "base": d.rb, "-2g(A_X,A_Y)": -2 * d.AX_AY, "-g(TX,TY)": -d.TX_TY, "g(D_X N,Y)": dNX,
        "sum g((D_U A)_X Y,U)": d.dA_UXY,
        "-(dimM-2)(Hess f(X,Y)+X(f)Y(f))": -(dimM - 2) * (hxx + xf[..., :, None] * xf[..., None, :]),
        "-dimF A_X Y(f)": -dimF * d.f_AXX,
        "(dimM-2)g(X,Y)|grad f|^2": (dimM - 2) * eyeX * d.grad2[..., None, None],
        "X(f)g(N,Y)": xf[..., :, None] * NX[..., None, :],
        "Y(f)g(N,X)": xf[..., None, :] * NX[..., :, None],
        "-g(X,Y)(N(f)+lap f)": -eyeX * (d.Nf + d.lap)[..., None, None],
    })}

    out["EQ2_15"] = {"scalar": _Line(d.s, {
        "base": d.sb / ef, "fibre": d.sf, "-|A|^2": -d.normA2, "-|T|^2": -d.normT2,
        "div N": d.divN, "-hat delta N": -d.hatdeltaN,
        "dimB(dimM+dimF-3)|grad f|^2": dimB * (dimM + dimF - 3) * d.grad2,
        "(2-2dimB+dimF)N(f)": (2 - 2 * dimB + dimF) * d.Nf,
        "-(2dimF-2)H(lap f)": -(2 * dimF - 2) * d.Hlap,
        "-2dimB lap f": -2 * dimB * d.lap,
        "-(dimF-2+dimF^2)|H grad f|^2": -(dimF - 2 + dimF**2) * d.Hgrad2,
    })}
    return out


# -- conformally flat total space ---------------------------------------------------------------------------------


def _lcf_lines(d: FrameData, component_scalars: list | None, lcf_dims: int, einstein_dims: int) -> dict:
    n = d.n
    ef = d.ef
    s = d.s
    out = {}
    common = {
        "2|A|^2": 2 * d.normA2, "-2|T|^2": -2 * d.normT2, "-2 hat delta N": -2 * d.hatdeltaN,
        "-(n-4)N(f)": -(n - 4) * d.Nf,
    }
    out["EQ4_1"] = _Line(n * s / (2 * (n - 1)), {**common, "-n lap f": -n * d.lap,
                                                   "n(n-2)/2|grad f|^2": n * (n - 2) / 2 * d.grad2})
    if component_scalars is not None:
        lhs = sum(ni * si / (2 * (ni - 1)) for ni, si in component_scalars)
        lhs = np.broadcast_to(np.asarray(lhs, dtype=float), s.shape)
        out["EQ4_2"] = _Line(lhs, {**common, "-n lap f": -n * d.lap,
                                   "n(n-2)/2|grad f|^2": n * (n - 2) / 2 * d.grad2})
        l, e_ = lcf_dims, einstein_dims
        out["EQ4_3"] = _Line(lhs, {**common,
                                   "-(n+l)/2(lap f-(n-2)/2|grad f|^2)": -(n + l) / 2 * (d.lap - (n - 2) / 2 * d.grad2),
                                   "-e/2(div H grad f-(n-2)/2|H grad f|^2)": -e_ / 2 * (d.divH - (n - 2) / 2 * d.Hgrad2)})
    out["EQ4_10"] = _Line(n * s / (2 * (n - 1)), {"2|A|^2": 2 * d.normA2, "-n lap f": -n * d.lap,
                                                    "n(n-2)/2|grad f|^2": n * (n - 2) / 2 * d.grad2})
    out["EQ4_11"] = _Line(n * s / (2 * (n - 1)), {"-2|T|^2": -2 * d.normT2, "-2(n-4)/n|N|^2": -2 * (n - 4) / n * d.normN2,
                                                    "-n lap f": -n * d.lap,
                                                    "n(n-2)/2|grad f|^2": n * (n - 2) / 2 * d.grad2})
    w = np.exp(-(n - 2) / 2 * d.sg.f)
    # div(w grad f) = w (lap f - (n-2)/2 |grad f|^2)
    div_w = w * (d.lap - (n - 2) / 2 * d.grad2)
    out["EQ4_12"] = _Line(n * s / (2 * (n - 1)) * w, {"-2w|T|^2": -2 * w * d.normT2,
                                                        "-2(n-4)/n w|N|^2": -2 * (n - 4) / n * w * d.normN2,
                                                        "-n div(w grad f)": -n * div_w})
    out["EQ4_13"] = _Line(n * s / (2 * (n - 1)) * w, {"-n div(w grad f)": -n * div_w})
    lhs17 = d.sb / ef + d.sf
    out["EQ4_17"] = _Line(lhs17, {
        "(5n-4)/n|A|^2": (5 * n - 4) / n * d.normA2,
        "-(3n-4)/n(|T|^2+check delta N)": -(3 * n - 4) / n * (d.normT2 + d.checkdeltaN),
        "-div N": -d.divN,
        "-(n^2-12n+16)/2n N(f)": -(n * n - 12 * n + 16) / (2 * n) * d.Nf,
        "-(n-2)div V grad f": -(n - 2) * d.divV,
        "(n-2)(3n-4)/4|V grad f|^2": (n - 2) * (3 * n - 4) / 4 * d.Vgrad2,
    })
    out["EQ4_18"] = _Line(lhs17, {
        "(5n-4)/n|A|^2": (5 * n - 4) / n * d.normA2,
        "-(n-2)div V grad f": -(n - 2) * d.divV,
        "(n-2)(3n-4)/4|V grad f|^2": (n - 2) * (3 * n - 4) / 4 * d.Vgrad2,
    })
    q = np.exp(-(3 * n - 4) / 4 * d.sg.f)
    # div(q V grad f) = q (div V grad f - (3n-4)/4 |V grad f|^2)
    div_q = q * (d.divV - (3 * n - 4) / 4 * d.Vgrad2)
    out["EQ4_19"] = _Line(q * d.sb + q * d.sf, {
        "-(n-2)(n-4)/2n q|T|^2": -(n - 2) * (n - 4) / (2 * n) * q * d.normT2,
        "-(n-2)div(q V grad f)": -(n - 2) * div_q,
    })
    rmix = np.einsum("...ij->...", d.K_XU)
    k, m = d.k, d.m
    out["EQ4_20"] = _Line(rmix, {
        "|A|^2": d.normA2, "-dimF div H grad f": -k * d.divH, "-dimB div V grad f": -m * d.divV,
        "dimF(dimF-1)|H grad f|^2": k * (k - 1) * d.Hgrad2, "dimB(dimB-1)|V grad f|^2": m * (m - 1) * d.Vgrad2,
    })
    return out


# -- traced identities behind the integral rigidity criteria -------------------------------------------------


def _criterion_lines(d: FrameData) -> dict:
    """Traced Ricci identities with the Einstein constants replaced by the actual traces.

    ``lambda dim F`` becomes sum_j r(U_j, U_j), ``lambda dim B`` becomes
    sum_i r(X_i, X_i) and ``lambda_F dim F`` the fibre scalar curvature, so each
    relation can be checked pointwise wherever its remaining hypotheses hold.
    The base Ricci trace is kept as an explicit term (zero for a Ricci-flat base).
    """
    k, m, n = d.k, d.m, d.n
    rho_v = np.einsum("...jj->...", d.r_UU)
    rho_h = np.einsum("...ii->...", d.r_XX)
    rb = np.einsum("...ii->...", d.rb)
    dvf = {"-dimF div H grad f": -k * d.divH, "-dimB div V grad f": -m * d.divV,
           "dimB(dimB-1)|V grad f|^2": m * (m - 1) * d.Vgrad2}
    out = {}
    out["EQ3_1"] = _Line(rho_v, {
        "fibre": d.sf, "-|N|^2": -d.normN2, "(2dimF-dimB)N(f)": (2 * k - m) * d.Nf,
        "dimF(dimB-dimF)|H grad f|^2": k * (m - k) * d.Hgrad2, "-dimF H(lap f)": -k * d.Hlap,
        "dimB(dimF-1)|V grad f|^2": m * (k - 1) * d.Vgrad2, "-dimB V(lap f)": -m * d.Vlap,
    })
    out["EQ3_2"] = _Line(rho_v, {"fibre": d.sf, **dvf})
    hgrad = (n - 2) * (n - 1) * d.Hgrad2
    out["EQ3_3"] = _Line(rho_h, {
        "base": rb, "-|T|^2": -d.normT2,
        "-|N|^2(dimM+dimB-4)/dimF": -d.normN2 * (n + m - 4) / k if k else 0.0 * d.normN2,
        "-(dimM-2)div H grad f": -(n - 2) * d.divH, "(dimM-2)(dimM-1)|H grad f|^2": hgrad,
        "-dimB lap f": -m * d.lap,
    })
    out["EQ3_4"] = _Line(rho_v - d.sf, {"|A|^2": d.normA2, **dvf})
    out["EQ3_5"] = _Line(rho_h, {
        "base": rb, "-2|A|^2": -2 * d.normA2, "-|T|^2": -d.normT2,
        "-(dimM-2)div H grad f": -(n - 2) * d.divH, "(dimM-2)(dimM-1)|H grad f|^2": hgrad,
        "-dimB lap f": -m * d.lap,
    })
    out["EQ3_6"] = _Line(rho_h, {
        "base": rb, "-2|A|^2": -2 * d.normA2,
        "-(dimB-2)div H grad f": -(m - 2) * d.divH, "-dimB lap f": -m * d.lap,
        "(dimB-2)(dimB-1)|H grad f|^2": (m - 2) * (m - 1) * d.Hgrad2,
    })
    return out


def verify_criterion_identities(spec: SubmersionSpec, points, tol: float = 1e-6) -> dict:
    """Pointwise traced identities behind the integral rigidity criteria.

    Each relation is checked only where its tensor hypotheses hold (to ``tol``
    in max norm); otherwise it is reported not-applicable with the reason.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    require_conformal(spec, pts)
    pts, d = _prepare(spec, pts)
    sg = d.sg
    amax = float(np.max(np.sqrt(np.abs(d.normA2))))
    tmax = float(np.max(np.sqrt(np.abs(d.normT2))))
    nmax = float(np.max(np.sqrt(np.abs(d.normN2))))
    dn = float(np.max(np.abs(sg.dN_aux)))
    lines = _criterion_lines(d)
    need = {
        "EQ3_1": [("A = 0", amax), ("parallel N", dn)],
        "EQ3_2": [("A = 0", amax), ("parallel N", dn)],
        "EQ3_3": [("A = 0", amax), ("parallel N", dn)],
        "EQ3_4": [("N = 0", nmax)],
        "EQ3_5": [("N = 0", nmax)],
        "EQ3_6": [("T = 0", tmax)],
    }
    out = {}
    for iid in CRITERION_IDS:
        bad = [f"{h} fails ({v:.3e})" for h, v in need[iid] if v > tol]
        if d.k == 0 or d.m == 0:
            bad.append("needs both vertical and horizontal directions")
        out[iid] = _not_applicable(iid, pts, "; ".join(bad)) if bad else _report(iid, pts, {"trace": lines[iid]})
    rep = out["EQ3_6"]
    if rep.status == "checked":
        # the same relation with the total-dimension coefficients of the N = 0 case
        n = d.n
        alt = _Line(lines["EQ3_6"].lhs, {
            "base": np.einsum("...ii->...", d.rb), "-2|A|^2": -2 * d.normA2,
            "-(dimM-2)div H grad f": -(n - 2) * d.divH, "-dimB lap f": -d.m * d.lap,
            "(dimM-2)(dimM-1)|H grad f|^2": (n - 2) * (n - 1) * d.Hgrad2,
        })
        rep.diagnostics["residual_with_total_dimension_coefficients"] = float(np.max(alt.residual(1)))
    return out


# -- public API ---------------------------------------------------------------------------------------------------


def _prepare(spec: SubmersionSpec, points, mixed_convention: str = "horizontal", rotation=None):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != spec.dim:
        raise PreconditionError(f"points must have {spec.dim} coordinates")
    sg = SubmersionGeometry(spec, pts, rotation=rotation)
    return pts, FrameData(sg, mixed_convention)


def verify_riemannian_formulas(spec: SubmersionSpec, points, mixed_convention: str = "horizontal",
                               rotation=None) -> dict:
    """Curvature relations of a Riemannian submersion; requires constant f."""
    pts, d = _prepare(spec, points, mixed_convention, rotation)
    if np.ptp(d.sg.f) > CONST_TOL or np.max(np.abs(d.sg.df)) > CONST_TOL:
        raise PreconditionError("conformal factor is not constant on the sampled points")
    lines = _riemannian_lines(d)
    return {iid: _report(iid, pts, lines[iid]) for iid in RIEMANNIAN_IDS}


def verify_conformal_curvature(spec: SubmersionSpec, points, mixed_convention: str = "horizontal",
                               rotation=None) -> dict:
    """Curvature relations of a conformal submersion with conformal factor f."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    require_conformal(spec, pts)
    pts, d = _prepare(spec, pts, mixed_convention, rotation)
    lines = _conformal_lines(d)
    out = {iid: _report(iid, pts, lines[iid]) for iid in CONFORMAL_IDS}
    rep = out["EQ2_14"]
    if rep.status == "checked":
        rep.diagnostics.update(_split_symmetric(lines["EQ2_14"]["horizontal"]))
    return out


def _split_symmetric(ln: _Line) -> dict:
    """Symmetric and antisymmetric parts of an (X, Y) defect.

    Ricci is symmetric, so any antisymmetric defect comes from the right-hand side.
    """
    defect = ln.lhs - sum(ln.terms.values())
    t = np.swapaxes(defect, -1, -2)
    return {
        "symmetric_residual": float(np.max(np.abs(defect + t))) / 2,
        "antisymmetric_residual": float(np.max(np.abs(defect - t))) / 2,
    }


def weyl_residual(sg: SubmersionGeometry) -> float:
    if sg.n < 4:
        return float("inf")
    return float(np.max(np.abs(sg.geo.weyl)))


def component_data(spec: SubmersionSpec, sg: SubmersionGeometry) -> list:
    """Per product component: (coords, m_i, k_i), from the descriptor metadata."""
    desc = spec.descriptor
    comps = desc.components if desc is not None else ()
    out = []
    PH, PV = sg.PH, sg.PV
    for c in comps:
        idx = list(c.coords)
        mi = float(np.mean(np.einsum("...ii->...", PH[..., idx, :][..., :, idx])))
        ki = float(np.mean(np.einsum("...ii->...", PV[..., idx, :][..., :, idx])))
        out.append((c, mi, ki))
    return out


def _block_geometry(spec: SubmersionSpec, coords, pts):
    """Geometry of the block metric on the affine slice through each point along ``coords``."""
    from . import jet as J
    from .chart import Geometry, as_jet

    idx = list(coords)
    q = len(idx)
    xs = []
    for i in range(spec.dim):
        d1 = np.zeros((1, q))
        if i in idx:
            d1[0, idx.index(i)] = 1.0
        xs.append(J.Jet(pts[:, i], d1, np.zeros((1, q, q)), 1))
    g = as_jet(spec.total.fn(xs), 1, q, 2, rank=2)
    return Geometry(J.array([[g[a, b] for b in idx] for a in idx]))


def component_scalar(spec: SubmersionSpec, coords, points) -> np.ndarray:
    """Scalar curvature of the product component living on ``coords``."""
    return _block_geometry(spec, coords, np.atleast_2d(points)).scalar


def verify_lcf_identities(spec: SubmersionSpec, points, tol: float = WEYL_TOL) -> dict:
    """Scalar identities for conformally flat total spaces and the mixed scalar curvature.

    Preconditions that fail make the identity not-applicable (never an error).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    require_conformal(spec, pts)
    pts, d = _prepare(spec, pts)
    sg = d.sg
    reasons = {}
    n = sg.n
    comps = component_data(spec, sg)
    weyl = weyl_residual(sg) if n >= 4 else float("inf")
    equal_dims = d.k == d.m
    lcf_reason = None
    if n < 4:
        lcf_reason = f"total dimension {n} < 4"
    elif weyl > tol:
        lcf_reason = f"Weyl residual {weyl:.3e} exceeds {tol:.1e}"
    elif not equal_dims:
        lcf_reason = f"dim B = {d.m} differs from dim F = {d.k}"
    for iid in ("EQ4_1", "EQ4_10", "EQ4_11", "EQ4_12", "EQ4_13", "EQ4_17", "EQ4_18", "EQ4_19"):
        if lcf_reason:
            reasons[iid] = lcf_reason
    tmax = float(np.max(np.sqrt(np.abs(d.normT2))))
    amax = float(np.max(np.sqrt(np.abs(d.normA2))))
    dT = float(np.max(np.abs(sg.dT_aux)))
    nmax = float(np.max(np.abs(sg.dN_aux)))
    hyp = {
        "EQ4_10": (tmax <= np.sqrt(T_ZERO_TOL), f"|T| = {tmax:.3e} is not zero"),
        "EQ4_11": (amax <= 1e-6 and nmax <= 1e-6, f"needs A = 0 and parallel N (|A| {amax:.3e}, |DN| {nmax:.3e})"),
        "EQ4_12": (amax <= 1e-6 and nmax <= 1e-6, f"needs A = 0 and parallel N (|A| {amax:.3e}, |DN| {nmax:.3e})"),
        "EQ4_13": (amax <= 1e-6 and tmax <= 1e-6, f"needs A = 0 and T = 0 (|A| {amax:.3e}, |T| {tmax:.3e})"),
        "EQ4_18": (tmax <= np.sqrt(T_ZERO_TOL), f"|T| = {tmax:.3e} is not zero"),
        "EQ4_19": (amax <= 1e-6 and dT <= 1e-6, f"needs A = 0 and parallel T (|A| {amax:.3e}, |DT| {dT:.3e})"),
        "EQ4_20": (tmax <= np.sqrt(T_ZERO_TOL), f"|T| = {tmax:.3e} is not zero"),
    }
    for iid, (ok, why) in hyp.items():
        if iid not in reasons and not ok:
            reasons[iid] = why

    # product-of-components identities
    comp_scalars = None
    lcf_dims = einstein_dims = 0
    comp_reason = None
    if not comps:
        comp_reason = "model carries no component structure"
    else:
        comp_scalars = []
        for c, mi, ki in comps:
            ni = len(c.coords)
            if c.lcf and ni >= 4:
                if abs(mi - ki) > 1e-9:
                    comp_reason = f"component {c.name}: horizontal {mi:.3g} and vertical {ki:.3g} dimensions differ"
                    break
                sc = component_scalar(spec, c.coords, pts)
                comp_scalars.append((ni, sc))
                lcf_dims += ni
            elif c.einstein is not None:
                if min(mi, ki) > 1e-9:
                    comp_reason = f"Einstein component {c.name} is neither vertical nor horizontal"
                    break
                einstein_dims += ni
            else:
                comp_reason = f"component {c.name} is neither conformally flat of dim >= 4 nor Einstein"
                break
    if comp_reason:
        reasons["EQ4_2"] = comp_reason
        reasons["EQ4_3"] = comp_reason
        comp_scalars = None
    else:
        if einstein_dims:
            reasons["EQ4_2"] = "model has Einstein components; the mixed product identity applies instead"
        elif not comp_scalars:
            reasons["EQ4_2"] = "no conformally flat component of dimension >= 4"
        if not equal_dims:
            reasons["EQ4_3"] = f"dim B = {d.m} differs from dim F = {d.k}"
        for c, mi, ki in comps:
            if c.lcf and len(c.coords) >= 4:
                w = _block_weyl(spec, c.coords, pts)
                if w > tol:
                    reasons.setdefault("EQ4_2", f"component {c.name} Weyl residual {w:.3e}")
                    reasons.setdefault("EQ4_3", f"component {c.name} Weyl residual {w:.3e}")
    lines = _lcf_lines(d, comp_scalars, lcf_dims, einstein_dims)
    out = {}
    for iid in LCF_IDS:
        if iid in reasons:
            out[iid] = _not_applicable(iid, pts, reasons[iid])
        else:
            out[iid] = _report(iid, pts, {"scalar": lines[iid]})
    return out


def _block_weyl(spec, coords, pts) -> float:
    return float(np.max(np.abs(_block_geometry(spec, coords, pts).weyl)))


def mixed_convention_gap(spec: SubmersionSpec, points) -> float:
    """Largest difference between the two contractions of g(T_U, A_X)."""
    _, d = _prepare(spec, points)
    c = d.TA_conventions
    return float(np.max(np.abs(c["horizontal"] - c["vertical"]))) if c["horizontal"].size else 0.0


def reduction_gaps(conformal: dict, riemannian: dict) -> dict:
    """|conformal residual - reduced Riemannian residual| per conformal identity."""
    out = {}
    for cid, (rid, part) in REDUCTIONS.items():
        c, r = conformal.get(cid), riemannian.get(rid)
        if c is None or r is None:
            continue
        if c.status == "vacuous":
            out[cid] = 0.0
            continue
        out[cid] = abs(c.max_residual - r.parts.get(part, 0.0))
    return out
