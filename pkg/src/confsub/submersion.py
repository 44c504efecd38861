"""Conformal submersions between chart-described manifolds.

A submersion is given by an affine coordinate map ``y = J x + c`` from the
total chart to the base chart together with the conformal factor ``f``:
``g|_H = e^{2f} pi^* g_B``.  The fundamental tensors ``T`` and ``A`` are those
of the Riemannian submersion ``(M, e^{-2f} g) -> (B, g_B)``.

Index conventions for the coordinate tensors held by
:class:`SubmersionGeometry` (``batch`` axes first):

* ``T[a, e, b]`` is the ``a``-component of ``T_E F`` with ``E = e_e, F = e_b``;
  ``A`` likewise.
* ``dT[a, e, b, k]`` is ``(nabla_k T)^a_{eb}`` for the connection of ``g``;
  ``dT_aux`` uses the auxiliary metric's connection instead.
* Frames are g-orthonormal: ``U[j, :]`` vertical, ``X[i, :]`` horizontal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import jet as J
from .chart import Geometry, MetricField, ScalarField, as_jet, constant_field, halton_points
from .errors import InvalidSpecError, NotASubmersionError, PreconditionError
from .tensor_core import Frame, null_basis, orthonormalize

CONFORMAL_TOL = 1e-9


@dataclass(frozen=True)
class SubmersionSpec:
    """Total space, base, affine projection and conformal factor."""

    name: str
    total: MetricField
    base: MetricField
    jacobian: np.ndarray
    offset: np.ndarray
    f: ScalarField
    metadata: dict = field(default_factory=dict, compare=False)
    descriptor: Any = field(default=None, compare=False)

    def __post_init__(self):
        jac = np.array(self.jacobian, dtype=float)
        if jac.ndim != 2 or jac.shape != (self.base.dim, self.total.dim):
            raise PreconditionError(f"Jacobian shape {jac.shape} does not match ({self.base.dim}, {self.total.dim})")
        if np.linalg.matrix_rank(jac, tol=1e-10 * max(np.abs(jac).max(), 1e-300)) < self.base.dim:
            raise NotASubmersionError("projection Jacobian is rank deficient")
        jac.setflags(write=False)
        off = np.array(self.offset, dtype=float).reshape(self.base.dim)
        off.setflags(write=False)
        object.__setattr__(self, "jacobian", jac)
        object.__setattr__(self, "offset", off)

    @property
    def dim(self) -> int:
        return self.total.dim

    @property
    def base_dim(self) -> int:
        return self.base.dim

    @property
    def fibre_dim(self) -> int:
        return self.total.dim - self.base.dim

    @cached_property
    def vertical_basis(self) -> np.ndarray:
        """Coordinate basis of ker(J), one row per vector."""
        try:
            return null_basis(self.jacobian)
        except PreconditionError as exc:
            raise NotASubmersionError(str(exc)) from exc

    @property
    def rigid(self) -> bool:
        return self.f.is_constant()

    def project(self, p) -> np.ndarray:
        """Image point, with periodic base coordinates wrapped into the base chart."""
        q = np.asarray(p, dtype=float) @ self.jacobian.T + self.offset
        dom = self.base.domain
        for i, ((a, b), per) in enumerate(zip(dom.ranges, dom.periodic)):
            if per:
                q[..., i] = a + np.mod(q[..., i] - a, b - a)
        return q

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        return halton_points(self.total.domain, count, seed)


@dataclass(frozen=True)
class SplitFrame:
    point: np.ndarray
    vertical: Frame
    horizontal: Frame


@dataclass(frozen=True)
class FundamentalTensors:
    """Frame components of T, A and N at one point.

    ``T_VV[j, k]`` is the coordinate vector ``T_{U_j} U_k``, ``T_VH[j, i]`` is
    ``T_{U_j} X_i``, ``A_HH[i, l]`` is ``A_{X_i} X_l`` and ``A_HV[i, k]`` is
    ``A_{X_i} U_k``.
    """

    point: np.ndarray
    T_VV: np.ndarray
    T_VH: np.ndarray
    A_HH: np.ndarray
    A_HV: np.ndarray
    N: np.ndarray
    normT2: float
    normA2: float
    normN2: float


def _affine_jets(points: list, directions: np.ndarray, order: int = 2) -> list:
    """Jets of ``x_i = p_i + sum_a directions[a, i] u_a`` at ``u = 0``."""
    nb = max(np.ndim(p) for p in points)
    k = directions.shape[0]
    out = []
    for i, p in enumerate(points):
        v = np.asarray(p, dtype=float)
        v = v.reshape((1,) * (nb - v.ndim) + v.shape)
        d1 = directions[:, i].reshape((1,) * nb + (k,)) if order >= 1 else None
        d2 = np.zeros((1,) * nb + (k, k)) if order >= 2 else None
        out.append(J.Jet(v, d1, d2, nb))
    return out


def _scalar_times(s: J.Jet, t: J.Jet) -> J.Jet:
    return s * t


def _covd(jt: J.Jet, gam: J.Jet, upper: int, lower: int) -> J.Jet:
    """Covariant derivative jet of a tensor with ``upper`` leading contravariant
    and ``lower`` trailing covariant indices; derivative index appended last.

    Returns a jet of one order less than ``jt``.
    """
    from string import ascii_lowercase as L

    rank = upper + lower
    idx = L[:rank]
    k, c = "y", "z"
    out = jt.derivative()
    gam_t = gam.truncate(out.order)
    jtt = jt.truncate(out.order)
    for pos in range(rank):
        src = idx[:pos] + c + idx[pos + 1:]
        if pos < upper:
            term = J.einsum(f"{idx[pos]}{k}{c},{src}->{idx}{k}", gam_t, jtt)
            out = out + term
        else:
            term = J.einsum(f"{c}{k}{idx[pos]},{src}->{idx}{k}", gam_t, jtt)
            out = out - term
    return out


class SubmersionGeometry:
    """All pointwise submersion data on a batch (or broadcast grid) of total-space points.

    ``auxiliary=False`` computes T and A from ``g`` itself instead of
    ``e^{-2f} g`` (used to test the ``f = const`` degeneration).
    """

    def __init__(
        self,
        spec: SubmersionSpec,
        coords,
        auxiliary: bool = True,
        rotation: tuple | None = None,
        base_geometry: bool = True,
        fibre_geometry: bool = True,
    ):
        self.spec = spec
        if isinstance(coords, np.ndarray) and coords.ndim == 2:
            coords = [coords[:, i] for i in range(coords.shape[1])]
        self.coords = [np.asarray(c, dtype=float) for c in coords]
        self.auxiliary = auxiliary
        self._rotation = rotation
        self._want_base = base_geometry
        self._want_fibre = fibre_geometry
        n = spec.dim
        self.n = n
        xs = J.variables(self.coords, order=2)
        self.nb = xs[0].nb
        self.gj = as_jet(spec.total.fn(xs), self.nb, n, 2, rank=2)
        self.fj = as_jet(spec.f.fn(xs), self.nb, n, 2, rank=0)
        self.geo = Geometry(self.gj)
        self.bshape = self.geo.g.shape[: self.nb]

    # -- metric pieces --------------------------------------------------------------------
    @cached_property
    def gi_jet(self) -> J.Jet:
        return J.inv(self.gj)

    @cached_property
    def g(self) -> np.ndarray:
        return self.geo.g

    @cached_property
    def gt_geo(self) -> Geometry:
        if not self.auxiliary:
            return self.geo
        return Geometry(J.exp(self.fj * -2.0) * self.gj)

    @cached_property
    def projectors(self):
        jm = self.spec.jacobian
        gjt = J.einsum("ab,cb->ac", self.gi_jet, jm)  # g^{-1} J^T   (n, b)
        s = J.einsum("ca,ad->cd", jm, gjt)  # J g^{-1} J^T (b, b)
        ph = J.einsum("ac,cd,de->ae", gjt, J.inv(s), jm)
        pv = np.eye(self.n) - ph
        return ph, pv, gjt

    @property
    def PH(self) -> np.ndarray:
        return self._bc(self.projectors[0].val, 2)

    @property
    def PV(self) -> np.ndarray:
        return self._bc(self.projectors[1].val, 2)

    def _bc(self, a: np.ndarray, rank: int) -> np.ndarray:
        return np.broadcast_to(a, self.bshape + a.shape[a.ndim - rank:])

    @cached_property
    def hV(self) -> np.ndarray:
        """sum_j U_j (x) U_j = P_V g^{-1}."""
        return np.einsum("...ab,...bc->...ac", self.PV, self.geo.gi)

    @cached_property
    def hH(self) -> np.ndarray:
        return np.einsum("...ab,...bc->...ac", self.PH, self.geo.gi)

    # -- fundamental tensors --------------------------------------------------------------------
    @cached_property
    def _gamt_jet(self) -> J.Jet:
        return self.gt_geo.christoffel_jet

    @cached_property
    def _tensors(self):
        ph, pv, _ = self.projectors
        gam = self._gamt_jet
        dpv = _covd(pv, gam, 1, 1)  # (nabla~_k P_V)^c_b  [c, b, k], order 1
        sign = ph.truncate(1) - pv.truncate(1)
        t = J.einsum("ac,cbk,ke->aeb", sign, dpv, pv.truncate(1))
        a = J.einsum("ac,cbk,ke->aeb", sign, dpv, ph.truncate(1))
        hv = J.einsum("ab,bc->ac", pv.truncate(1), self.gi_jet.truncate(1))
        nvec = J.einsum("aeb,eb->a", t, hv)
        return t, a, nvec

    @cached_property
    def T(self) -> np.ndarray:
        return self._bc(self._tensors[0].val, 3)

    @cached_property
    def A(self) -> np.ndarray:
        return self._bc(self._tensors[1].val, 3)

    @cached_property
    def N(self) -> np.ndarray:
        return self._bc(self._tensors[2].val, 1)

    def _nabla(self, which: int, connection: str) -> np.ndarray:
        gam = self._gamt_jet if connection == "auxiliary" else self.geo.christoffel_jet
        jt = self._tensors[which]
        lower = 0 if which == 2 else 2
        return self._bc(_covd(jt, gam, 1, lower).val, lower + 2)

    @cached_property
    def dT(self) -> np.ndarray:
        """(nabla_k T)^a_{eb} for the Levi-Civita connection of g."""
        return self._nabla(0, "total")

    @cached_property
    def dA(self) -> np.ndarray:
        return self._nabla(1, "total")

    @cached_property
    def dN(self) -> np.ndarray:
        """(nabla_k N)^a as ``[a, k]``."""
        return self._nabla(2, "total")

    @cached_property
    def dT_aux(self) -> np.ndarray:
        """(nabla~_k T)^a_{eb} for the auxiliary metric e^{-2f} g."""
        return self._nabla(0, "auxiliary")

    @cached_property
    def dA_aux(self) -> np.ndarray:
        return self._nabla(1, "auxiliary")

    @cached_property
    def dN_aux(self) -> np.ndarray:
        return self._nabla(2, "auxiliary")

    def nabla(self, name: str, connection: str = "total") -> np.ndarray:
        if connection not in ("total", "auxiliary"):
            raise PreconditionError(f"unknown connection {connection!r}")
        return getattr(self, name if connection == "total" else name + "_aux")

    @cached_property
    def divN(self) -> np.ndarray:
        """Divergence of N with respect to g."""
        return self.geo.divergence(self._tensors[2])

    @cached_property
    def normT2(self) -> np.ndarray:
        return np.einsum("...aeb,...cfd,...ac,...ef,...bd->...", self.T, self.T, self.g, self.hV, self.hV)

    @cached_property
    def normA2(self) -> np.ndarray:
        return np.einsum("...aeb,...cfd,...ac,...ef,...bd->...", self.A, self.A, self.g, self.hH, self.hH)

    @cached_property
    def normN2(self) -> np.ndarray:
        return self.geo.norm2(self.N)

    # -- frames ---------------------------------------------------------------------------------------
    @cached_property
    def _frame_jets(self):
        _, _, gjt = self.projectors
        kb = self.spec.vertical_basis
        vert = orthonormalize([kb[j] for j in range(kb.shape[0])], self.gj)
        hor = orthonormalize([gjt[:, c] for c in range(self.spec.base_dim)], self.gj)
        vert = [as_jet(v, self.nb, self.n, 2, rank=1) for v in vert]
        if self._rotation is not None:
            qv, qh = self._rotation
            vert = _rotate(vert, qv)
            hor = _rotate(hor, qh)
        return vert, hor

    @cached_property
    def U(self) -> np.ndarray:
        vert, _ = self._frame_jets
        if not vert:
            return np.zeros(self.bshape + (0, self.n))
        return np.stack([self._bc(v.val, 1) for v in vert], axis=-2)

    @cached_property
    def X(self) -> np.ndarray:
        _, hor = self._frame_jets
        return np.stack([self._bc(v.val, 1) for v in hor], axis=-2)

    @cached_property
    def dU(self) -> np.ndarray:
        """dU[j, a, k] = d_k U_j^a."""
        vert, _ = self._frame_jets
        if not vert:
            return np.zeros(self.bshape + (0, self.n, self.n))
        return np.stack([self._bc(v.d1, 2) for v in vert], axis=-3)

    @cached_property
    def dX(self) -> np.ndarray:
        _, hor = self._frame_jets
        return np.stack([self._bc(v.d1, 2) for v in hor], axis=-3)

    # -- conformal factor ------------------------------------------------------------------------
    @cached_property
    def f(self) -> np.ndarray:
        return self._bc(self.fj.val, 0)

    @cached_property
    def df(self) -> np.ndarray:
        return self._bc(self.fj.d1, 1)

    @cached_property
    def grad_f(self) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.geo.gi, self.df)

    @cached_property
    def hess_f(self) -> np.ndarray:
        return self.geo.hessian(J.Jet(self._bc(self.fj.val, 0), self._bc(self.fj.d1, 1), self._bc(self.fj.d2, 2), self.nb))

    @cached_property
    def lap_f(self) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.geo.gi, self.hess_f)

    @cached_property
    def H_lap_f(self) -> np.ndarray:
        """H(Delta f) = sum_i Hess f(X_i, X_i)."""
        return np.einsum("...ij,...ij->...", self.hH, self.hess_f)

    @cached_property
    def V_lap_f(self) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.hV, self.hess_f)

    @cached_property
    def H_grad_f(self) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.PH, self.grad_f)

    @cached_property
    def V_grad_f(self) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.PV, self.grad_f)

    @cached_property
    def _split_grad_jets(self):
        ph, pv, _ = self.projectors
        gradj = J.einsum("ab,b->a", self.gi_jet.truncate(1), self.fj.derivative())
        return J.einsum("ab,b->a", ph.truncate(1), gradj), J.einsum("ab,b->a", pv.truncate(1), gradj)

    @cached_property
    def div_H_grad_f(self) -> np.ndarray:
        return self.geo.divergence(self._split_grad_jets[0])

    @cached_property
    def div_V_grad_f(self) -> np.ndarray:
        return self.geo.divergence(self._split_grad_jets[1])

    # -- base and fibre ----------------------------------------------------------------------------
    @cached_property
    def base_coords(self) -> list:
        jm, c = self.spec.jacobian, self.spec.offset
        out = []
        for r in range(self.spec.base_dim):
            acc = c[r]
            for i in range(self.n):
                if jm[r, i] != 0.0:
                    acc = acc + jm[r, i] * self.coords[i]
            out.append(np.asarray(acc, dtype=float) * np.ones((1,) * self.nb))
        return out

    @cached_property
    def base_geo(self) -> Geometry:
        return Geometry(self.spec.base, self.base_coords)

    @cached_property
    def fibre_geo(self) -> Geometry | None:
        kb = self.spec.vertical_basis
        if kb.shape[0] == 0:
            return None
        xs = _affine_jets(self.coords, kb)
        gtot = as_jet(self.spec.total.fn(xs), xs[0].nb, kb.shape[0], 2, rank=2)
        gf = J.einsum("ai,ij,bj->ab", kb, gtot, kb)
        return Geometry(gf)

    @cached_property
    def fibre_frame(self) -> np.ndarray:
        """Vertical frame in fibre-chart coordinates: u_j with U_j = K^T u_j."""
        kb = self.spec.vertical_basis
        return np.einsum("ua,...ja->...ju", np.linalg.pinv(kb.T), self.U)

    def push(self, v: np.ndarray) -> np.ndarray:
        """d(pi) applied to coordinate vectors with trailing axis n."""
        return np.einsum("ra,...a->...r", self.spec.jacobian, v)

    # -- small helpers used by the identity code --------------------------------------------------------------
    def ip(self, u, v) -> np.ndarray:
        return np.einsum("...a,...ab,...b->...", u, self.g, v)

    def tval(self, t, e, b) -> np.ndarray:
        """Vector t_E F for batched vectors E, F (t is T or A)."""
        return np.einsum("...aeb,...e,...b->...a", t, e, b)

    def dtval(self, dt, e, b, k) -> np.ndarray:
        """Vector (nabla~_K t)_E F."""
        return np.einsum("...aebk,...e,...b,...k->...a", dt, e, b, k)

    def dfv(self, v) -> np.ndarray:
        return np.einsum("...a,...a->...", self.df, v)

    def hess(self, u, v) -> np.ndarray:
        return np.einsum("...a,...ab,...b->...", u, self.hess_f, v)

    def frame_derivative_of_f(self, frame: str, i: int) -> np.ndarray:
        """E(E(f)) for the frame field E = U_i or X_i (depends on the extension)."""
        e = (self.U if frame == "U" else self.X)[..., i, :]
        de = (self.dU if frame == "U" else self.dX)[..., i, :, :]
        return np.einsum("...k,...j,...jk->...", e, e, self.fj_d2) + np.einsum("...k,...jk,...j->...", e, de, self.df)

    def frame_mixed_derivative_of_f(self, i: int, j: int) -> np.ndarray:
        """U_i(U_j(f)) for vertical frame fields."""
        ui, uj, duj = self.U[..., i, :], self.U[..., j, :], self.dU[..., j, :, :]
        return np.einsum("...k,...j,...jk->...", ui, uj, self.fj_d2) + np.einsum("...k,...jk,...j->...", ui, duj, self.df)

    @cached_property
    def fj_d2(self) -> np.ndarray:
        return self._bc(self.fj.d2, 2)

    def frame_covariant(self, frame: str, i: int, along: str, l: int, connection: str = "g") -> np.ndarray:
        """nabla_{E_l} E_i for frame fields (coordinate vector)."""
        geo = self.geo if connection == "g" else self.gt_geo
        e = (self.U if frame == "U" else self.X)[..., i, :]
        de = (self.dU if frame == "U" else self.dX)[..., i, :, :]
        w = (self.U if along == "U" else self.X)[..., l, :]
        gam = np.broadcast_to(geo.christoffel, self.bshape + (self.n,) * 3)
        return np.einsum("...ak,...k->...a", de, w) + np.einsum("...akb,...k,...b->...a", gam, w, e)


def _rotate(frame_jets: list, q) -> list:
    if q is None or not frame_jets:
        return frame_jets
    q = np.asarray(q, dtype=float)
    out = []
    for r in range(q.shape[0]):
        acc = None
        for s in range(q.shape[1]):
            term = frame_jets[s] * float(q[r, s])
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def random_rotation(k: int, rng: np.random.Generator) -> np.ndarray:
    if k == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.normal(size=(k, k)))
    return q * np.sign(np.diag(r))


# -- public per-point operations ------------------------------------------------------------------------


def _points(spec: SubmersionSpec, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != spec.dim:
        raise PreconditionError(f"points must have {spec.dim} coordinates")
    return pts


def split_frame(spec: SubmersionSpec, p) -> SplitFrame:
    sg = SubmersionGeometry(spec, _points(spec, p))
    return SplitFrame(
        point=np.asarray(p, dtype=float),
        vertical=Frame(spec.dim, sg.U[0]),
        horizontal=Frame(spec.dim, sg.X[0]),
    )


def conformal_check(spec: SubmersionSpec, points) -> float:
    """max |g(X_i, X_l) - e^{2f} g_B(dpi X_i, dpi X_l)| over points and frame pairs."""
    sg = SubmersionGeometry(spec, _points(spec, points))
    return float(np.max(conformal_residuals(sg)))


def conformal_residuals(sg: SubmersionGeometry) -> np.ndarray:
    x = sg.X
    lhs = np.einsum("...ia,...ab,...lb->...il", x, sg.g, x)
    px = sg.push(x)
    gb = np.broadcast_to(sg.base_geo.g, sg.bshape + (sg.spec.base_dim,) * 2)
    rhs = np.exp(2 * sg.f)[..., None, None] * np.einsum("...ir,...rs,...ls->...il", px, gb, px)
    return np.max(np.abs(lhs - rhs).reshape(sg.bshape + (-1,)), axis=-1)


def require_conformal(spec: SubmersionSpec, points, tol: float = CONFORMAL_TOL) -> float:
    res = conformal_check(spec, points)
    if not res <= tol:
        raise InvalidSpecError(f"conformal condition fails: residual {res:.3e} > {tol:.1e}")
    return res


def fundamental_tensors(spec: SubmersionSpec, p, rotation=None) -> FundamentalTensors:
    sg = SubmersionGeometry(spec, _points(spec, p), rotation=rotation)
    u, x = sg.U[0], sg.X[0]
    t, a = sg.T[0], sg.A[0]
    tvv = np.einsum("aeb,je,kb->jka", t, u, u)
    tvh = np.einsum("aeb,je,ib->jia", t, u, x)
    ahh = np.einsum("aeb,ie,lb->ila", a, x, x)
    ahv = np.einsum("aeb,ie,kb->ika", a, x, u)
    g = sg.g[0]
    nvec = tvv[np.arange(u.shape[0]), np.arange(u.shape[0])].sum(axis=0) if u.shape[0] else np.zeros(spec.dim)

    return FundamentalTensors(
        point=np.asarray(p, dtype=float),
        T_VV=tvv,
        T_VH=tvh,
        A_HH=ahh,
        A_HV=ahv,
        N=nvec,
        normT2=float(sg.normT2[0]),
        normA2=float(sg.normA2[0]),
        normN2=float(nvec @ g @ nvec),
    )


def delta_T(spec: SubmersionSpec, p, u, v, connection: str = "auxiliary") -> float:
    """(delta T)(U, V) = sum_i g((nabla_{X_i} T)_U V, X_i).

    ``connection`` selects the Levi-Civita connection of the auxiliary metric
    (default) or of g itself (``"total"``, the one the curvature identities need).
    """
    sg = SubmersionGeometry(spec, _points(spec, p))
    return float(delta_T_values(sg, np.asarray(u, dtype=float), np.asarray(v, dtype=float), connection)[0])


def delta_T_values(sg: SubmersionGeometry, u, v, connection: str = "auxiliary") -> np.ndarray:
    dt = sg.nabla("dT", connection)
    return np.einsum("...aebk,...e,...b,...ik,...ac,...ic->...", dt, u, v, sg.X, sg.g, sg.X)


def check_delta(spec: SubmersionSpec, p, kind: str, e, connection: str = "auxiliary") -> np.ndarray:
    """Apply a codifferential to the vector ``e``.

    ``kind`` is ``"check_T"``, ``"check_A"`` (``-sum_j (nabla_{U_j} E)_{U_j}``)
    or ``"hat_T"``, ``"hat_A"`` (``-sum_i (nabla_{X_i} E)_{X_i}``).
    """
    sg = SubmersionGeometry(spec, _points(spec, p))
    return codifferential(sg, kind, np.asarray(e, dtype=float), connection)[0]


def codifferential(sg: SubmersionGeometry, kind: str, e, connection: str = "auxiliary") -> np.ndarray:
    try:
        which, tensor = kind.split("_")
        dt = sg.nabla({"T": "dT", "A": "dA"}[tensor], connection)
        frame = {"check": sg.U, "hat": sg.X}[which]
    except (ValueError, KeyError) as exc:
        raise PreconditionError(f"unknown codifferential kind {kind!r}") from exc
    return -np.einsum("...aebk,...je,...b,...jk->...a", dt, frame, e, frame)


STRUCTURAL_IDS = (
    "H_nabla_U_V",
    "V_nabla_U_V",
    "H_nabla_X_U",
    "V_nabla_X_U",
    "H_nabla_U_X",
    "V_nabla_U_X",
    "H_nabla_X_Y",
    "V_nabla_X_Y",
)


def structural_residuals(spec: SubmersionSpec, points, seed: int = 0) -> dict:
    """Residuals of the eight structural equations relating nabla, nabla~, T, A and f.

    Vector fields are projections ``P c`` of fixed (seeded random) coordinate
    fields.  Returns ``{id: max g-norm residual over points}``.
    """
    pts = _points(spec, points)
    sg = SubmersionGeometry(spec, pts, base_geometry=False, fibre_geometry=False)
    per_point = structural_residuals_per_point(sg, seed)
    return {k: float(np.max(v)) for k, v in per_point.items()}


def structural_residuals_per_point(sg: SubmersionGeometry, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n = sg.n
    ph, pv, _ = sg.projectors
    fields = {}
    for name, proj in (("U", pv), ("V", pv), ("X", ph), ("Y", ph)):
        c = rng.normal(size=n)
        fields[name] = J.einsum("ab,b->a", proj.truncate(1), c)

    def val(name):
        return sg._bc(fields[name].val, 1)

    def nab(geo, a, b):
        """nabla_a b for field jets."""
        va, vb = val(a), fields[b]
        gam = np.broadcast_to(geo.christoffel, sg.bshape + (n,) * 3)
        return np.einsum("...ak,...k->...a", sg._bc(vb.d1, 2), va) + np.einsum("...akb,...k,...b->...a", gam, va, val(b))

    geo, geot = sg.geo, sg.gt_geo
    PH, PV = sg.PH, sg.PV

    def H(v):
        return np.einsum("...ab,...b->...a", PH, v)

    def V(v):
        return np.einsum("...ab,...b->...a", PV, v)

    U, Vv, X, Y = val("U"), val("V"), val("X"), val("Y")
    Hgf, Vgf = sg.H_grad_f, sg.V_grad_f
    fU, fV, fX, fY = sg.dfv(U), sg.dfv(Vv), sg.dfv(X), sg.dfv(Y)
    gUV, gXY = sg.ip(U, Vv), sg.ip(X, Y)
    s = lambda c: c[..., None]  # noqa: E731

    pairs = {
        "H_nabla_U_V": (H(nab(geo, "U", "V")), sg.tval(sg.T, U, Vv) - Hgf * s(gUV)),
        "V_nabla_U_V": (V(nab(geo, "U", "V")), V(nab(geot, "U", "V")) + s(fU) * Vv + s(fV) * U - Vgf * s(gUV)),
        "H_nabla_X_U": (H(nab(geo, "X", "U")), sg.tval(sg.A, X, U) + s(fU) * X),
        "V_nabla_X_U": (V(nab(geo, "X", "U")), V(nab(geot, "X", "U")) + s(fX) * U),
        "H_nabla_U_X": (H(nab(geo, "U", "X")), H(nab(geot, "U", "X")) + s(fU) * X),
        "V_nabla_U_X": (V(nab(geo, "U", "X")), sg.tval(sg.T, U, X) + s(fX) * U),
        "H_nabla_X_Y": (H(nab(geo, "X", "Y")), H(nab(geot, "X", "Y")) + s(fX) * Y + s(fY) * X - Hgf * s(gXY)),
        "V_nabla_X_Y": (V(nab(geo, "X", "Y")), sg.tval(sg.A, X, Y) - Vgf * s(gXY)),
    }
    out = {}
    for k in STRUCTURAL_IDS:
        lhs, rhs = pairs[k]
        d = lhs - rhs
        out[k] = np.sqrt(np.abs(sg.ip(d, d)))
    return out


def second_fundamental_form(sg: SubmersionGeometry) -> np.ndarray:
    """B[j, k, :] = H nabla_{U_j} U_k for the metric g (tensorial in both slots)."""
    _, pv, _ = sg.projectors
    dpv = _covd(pv, sg.geo.christoffel_jet, 1, 1).val  # [c, b, k]
    dpv = np.broadcast_to(dpv, sg.bshape + (sg.n,) * 3)
    return np.einsum("...ac,...cbk,...jk,...lb->...jla", sg.PH, dpv, sg.U, sg.U)


def totally_umbilical_check(spec: SubmersionSpec, points) -> tuple[float, np.ndarray]:
    """Best-fit umbilicity residual.

    Fits ``X = (1/k) sum_j H nabla_{U_j} U_j`` at each point (the least-squares
    minimizer) and returns ``(max_p sqrt(sum_{j,l} |B(U_j,U_l) - delta_jl X|^2), X)``.
    """
    sg = SubmersionGeometry(spec, _points(spec, points), base_geometry=False, fibre_geometry=False)
    res, xfit = umbilical_residuals(sg)
    return float(np.max(res)), xfit


def umbilical_residuals(sg: SubmersionGeometry):
    k = sg.spec.fibre_dim
    b = second_fundamental_form(sg)
    if k == 0:
        return np.zeros(sg.bshape), np.zeros(sg.bshape + (sg.n,))
    xfit = np.einsum("...jja->...a", b) / k
    d = b - np.eye(k)[..., None] * xfit[..., None, None, :]
    res = np.sqrt(np.abs(np.einsum("...jla,...ab,...jlb->...", d, sg.g, d)))
    return res, xfit


def constant_factor(spec_total: MetricField, c: float = 0.0) -> ScalarField:
    return constant_field(spec_total.domain, c)
