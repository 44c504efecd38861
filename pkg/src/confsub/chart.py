"""Chart-based Riemannian geometry.

Metrics and scalar fields are plain Python callables of a coordinate list
``x`` that build their result from :mod:`confsub.jet` primitives, e.g.::

    def round_s2(x):
        return J.array([[1.0, 0.0], [0.0, J.sin(x[0]) ** 2]])

The same callable is evaluated on floats/arrays (values only) or on jets
(values with first and second derivatives).

:class:`Geometry` evaluates everything on a batch of points at once.  The
batch may be a list of points (one batch axis) or a separable grid given as
mutually broadcastable coordinate arrays, in which case a metric that only
depends on some coordinates is only evaluated along those axes.

Curvature convention: ``R(X,Y,Z,W) = g(nabla_Y nabla_X Z - nabla_X nabla_Y Z
+ nabla_[X,Y] Z, W)``, so ``R(X,Y,X,Y) = +K`` for an orthonormal pair and the
unit sphere has ``Ric = (n-1) g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jet as J
from .errors import DegeneratePlaneError, PreconditionError, SingularMetricError, UnsupportedDimensionError
from .tensor_core import SymBilinear, TensorValue, kn

SAMPLE_MARGIN = 0.1

# integration rules understood by the quadrature module
RULES = ("periodic", "interval", "polar", "hopf")


@dataclass(frozen=True)
class ChartDomain:
    """Coordinate box with periodicity flags and per-coordinate quadrature rules.

    ``rules[i]`` is one of ``"periodic"``, ``"interval"``, ``"polar:k"`` (a polar
    angle in ``[0, pi]`` whose volume factor carries ``sin^k``) or ``"hopf"``
    (the ``eta`` coordinate of S^3 in ``[0, pi/2]``).
    """

    ranges: tuple
    periodic: tuple
    rules: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        ranges = tuple((float(a), float(b)) for a, b in self.ranges)
        periodic = tuple(bool(p) for p in self.periodic)
        if len(ranges) != len(periodic) or not ranges:
            raise PreconditionError("ranges and periodic flags must be nonempty and of equal length")
        for a, b in ranges:
            if not b > a:
                raise PreconditionError(f"empty coordinate interval [{a}, {b}]")
        rules = tuple(self.rules) or tuple("periodic" if p else "interval" for p in periodic)
        for r, p in zip(rules, periodic):
            if r.split(":")[0] not in RULES:
                raise PreconditionError(f"unknown quadrature rule {r!r}")
            if (r == "periodic") != p:
                raise PreconditionError("periodic coordinates must use the periodic rule")
        names = tuple(self.names) or tuple(f"x{i}" for i in range(len(ranges)))
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return len(self.ranges)

    def sample_ranges(self) -> list[tuple[float, float]]:
        """Ranges used for pointwise sampling; singular chart edges are avoided."""
        out = []
        for (a, b), r in zip(self.ranges, self.rules):
            if r.startswith("polar") or r == "hopf":
                out.append((a + SAMPLE_MARGIN, b - SAMPLE_MARGIN))
            else:
                out.append((a, b))
        return out

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return all(a - 1e-12 <= x <= b + 1e-12 for x, (a, b) in zip(p, self.ranges))

    def product(self, other: "ChartDomain") -> "ChartDomain":
        return ChartDomain(
            self.ranges + other.ranges,
            self.periodic + other.periodic,
            self.rules + other.rules,
            self.names + other.names,
        )


def halton_points(domain: ChartDomain, count: int, seed: int = 0) -> np.ndarray:
    """``count`` scrambled-Halton points inside ``domain.sample_ranges()``."""
    if count < 1:
        raise PreconditionError("need at least one point")
    sampler = qmc.Halton(d=domain.dim, scramble=True, seed=np.random.default_rng(seed))
    u = sampler.random(count)
    lo = np.array([a for a, _ in domain.sample_ranges()])
    hi = np.array([b for _, b in domain.sample_ranges()])
    return lo + u * (hi - lo)


def as_jet(x, nb: int, n: int, order: int = 2, rank: int | None = None) -> J.Jet:
    """Promote a numeric value (no coordinate dependence) to a jet.

    ``rank`` is the tensor rank of ``x``; leading axes beyond it are batch axes.
    Without it, a value with fewer than ``nb`` axes is a pure tensor.
    """
    if isinstance(x, J.Jet):
        return x
    v = np.asarray(x, dtype=float)
    if rank is None:
        rank = v.ndim - nb if v.ndim >= nb else v.ndim
    ts = v.shape[v.ndim - rank:]
    v = v.reshape((1,) * (nb + rank - v.ndim) + v.shape)
    z1 = np.zeros((1,) * nb + ts + (n,)) if order >= 1 else None
    z2 = np.zeros((1,) * nb + ts + (n, n)) if order >= 2 else None
    return J.Jet(v, z1, z2, nb)


@dataclass(frozen=True)
class MetricField:
    """Riemannian metric on a chart, given as a jet-compatible callable."""

    domain: ChartDomain
    fn: Callable = field(compare=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def values(self, coords: Sequence) -> np.ndarray:
        """Metric matrices at (broadcastable) coordinate arrays, no derivatives."""
        out = J.value(self.fn([np.asarray(c, dtype=float) for c in coords]))
        nb = max(np.ndim(c) for c in coords)
        if out.ndim < nb + 2:
            out = out.reshape((1,) * (nb + 2 - out.ndim) + out.shape)
        return out

    def __call__(self, p) -> SymBilinear:
        p = [float(c) for c in np.asarray(p, dtype=float)]
        return SymBilinear(self.dim, np.asarray(J.value(self.fn(p))))

    def jet(self, coords: Sequence, order: int = 2, nb: int | None = None) -> J.Jet:
        xs = J.variables(coords, order=order, nb=nb)
        return as_jet(self.fn(xs), xs[0].nb, self.dim, order, rank=2)


@dataclass(frozen=True)
class ScalarField:
    """Smooth function on a chart, given as a jet-compatible callable."""

    domain: ChartDomain
    fn: Callable = field(compare=False)

    def __call__(self, p) -> float:
        return float(J.value(self.fn([float(c) for c in np.asarray(p, dtype=float)])))

    def jet(self, coords: Sequence, order: int = 2, nb: int | None = None) -> J.Jet:
        xs = J.variables(coords, order=order, nb=nb)
        return as_jet(self.fn(xs), xs[0].nb, self.domain.dim, order, rank=0)

    def is_constant(self) -> bool:
        return bool(getattr(self.fn, "constant", False))


def constant_field(domain: ChartDomain, c: float = 0.0) -> ScalarField:
    def fn(x, _c=float(c)):
        return _c

    fn.constant = True
    return ScalarField(domain, fn)


class Geometry:
    """Levi-Civita geometry of a metric on a batch (or broadcast grid) of points.

    ``metric`` is either a :class:`MetricField` evaluated at ``coords`` or a
    ready-made order-2 :class:`~confsub.jet.Jet` of shape ``(n, n)``.
    All array attributes have the layout ``batch + tensor``.
    """

    def __init__(self, metric, coords: Sequence | None = None, check: bool = True, order: int = 2):
        if isinstance(metric, J.Jet):
            gj = metric
        else:
            if coords is None:
                raise PreconditionError("coordinates required")
            gj = metric.jet(coords, order=order)
        if gj.order < 1:
            raise PreconditionError("metric jet must carry derivatives")
        self.nb = gj.nb
        self.n = gj.tshape[-1]
        parts = [gj.val, gj.d1] + ([gj.d2] if gj.order >= 2 else [])
        bshape = np.broadcast_shapes(*(a.shape[: self.nb] for a in parts))
        self.g = np.broadcast_to(gj.val, bshape + (self.n, self.n))
        self.dg = np.broadcast_to(gj.d1, bshape + (self.n,) * 3)
        self.d2g = np.broadcast_to(gj.d2, bshape + (self.n,) * 4) if gj.order >= 2 else None
        if check:
            ev = np.linalg.eigvalsh(0.5 * (self.g + np.swapaxes(self.g, -1, -2)))
            if not np.all(np.isfinite(ev)) or np.min(ev) <= 0:
                raise SingularMetricError("metric is not positive definite at some point")

    # -- connection -----------------------------------------------------------------
    @cached_property
    def gi(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def _lowered(self) -> np.ndarray:
        # G[l,i,j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        dg = self.dg
        return 0.5 * (np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg))

    @cached_property
    def _dlowered(self) -> np.ndarray:
        if self.d2g is None:
            raise PreconditionError("second metric derivatives were not computed")
        d2g = self.d2g
        return 0.5 * (
            np.einsum("...jlim->...lijm", d2g)
            + np.einsum("...iljm->...lijm", d2g)
            - np.einsum("...ijlm->...lijm", d2g)
        )

    @cached_property
    def christoffel(self) -> np.ndarray:
        """Gamma[k, i, j] = Gamma^k_{ij}."""
        return np.einsum("...kl,...lij->...kij", self.gi, self._lowered)

    @cached_property
    def dchristoffel(self) -> np.ndarray:
        """dGamma[k, i, j, m] = d_m Gamma^k_{ij}."""
        G, dG = self._lowered, self._dlowered
        dgi = -np.einsum("...ka,...abm,...bl->...klm", self.gi, self.dg, self.gi)
        return np.einsum("...klm,...lij->...kijm", dgi, G) + np.einsum("...kl,...lijm->...kijm", self.gi, dG)

    @cached_property
    def christoffel_jet(self) -> J.Jet:
        return J.Jet(self.christoffel, self.dchristoffel, None, self.nb)

    @cached_property
    def log_volume_gradient(self) -> np.ndarray:
        """Gamma^a_{ab} = d_b log sqrt(det g)."""
        return np.einsum("...aab->...b", self.christoffel)

    # -- curvature --------------------------------------------------------------------------
    @cached_property
    def riemann(self) -> np.ndarray:
        """R[x, y, z, w] = R(e_x, e_y, e_z, e_w) in the convention of the module docstring."""
        Gam, dGam = self.christoffel, self.dchristoffel
        # Rup[a,b,c,d] = d_c Gam^a_db - d_d Gam^a_cb + Gam^a_ce Gam^e_db - Gam^a_de Gam^e_cb
        rup = (
            np.einsum("...adbc->...abcd", dGam)
            - np.einsum("...acbd->...abcd", dGam)
            + np.einsum("...ace,...edb->...abcd", Gam, Gam)
            - np.einsum("...ade,...ecb->...abcd", Gam, Gam)
        )
        return -np.einsum("...wa,...abcd->...cdbw", self.g, rup)

    @cached_property
    def ricci(self) -> np.ndarray:
        return np.einsum("...ac,...abcd->...bd", self.gi, self.riemann)

    @cached_property
    def scalar(self) -> np.ndarray:
        return np.einsum("...bd,...bd->...", self.gi, self.ricci)

    @cached_property
    def weyl(self) -> np.ndarray:
        """Totally trace-free part of R (explicit component formula, dim >= 4)."""
        n = self.n
        if n < 4:
            raise UnsupportedDimensionError(f"Weyl tensor requires dim >= 4, got {n}")
        g, ric, s = self.g, self.ricci, self.scalar[..., None, None, None, None]
        rg = (
            np.einsum("...ac,...bd->...abcd", ric, g)
            - np.einsum("...ad,...bc->...abcd", ric, g)
            + np.einsum("...bd,...ac->...abcd", ric, g)
            - np.einsum("...bc,...ad->...abcd", ric, g)
        )
        gg = np.einsum("...ac,...bd->...abcd", g, g) - np.einsum("...ad,...bc->...abcd", g, g)
        return self.riemann - rg / (n - 2) + s * gg / ((n - 1) * (n - 2))

    def decomposition_residual(self) -> np.ndarray:
        """max |R - s/(2n(n-1)) g o g - 1/(n-2)(Ric - s/n g) o g - W| per point."""
        n = self.n
        s = self.scalar[..., None, None]
        traceless = self.ricci - s / n * self.g
        rhs = (
            (self.scalar / (2 * n * (n - 1)))[..., None, None, None, None] * kn(self.g, self.g)
            + kn(traceless, self.g) / (n - 2)
            + self.weyl
        )
        return _maxabs(self.riemann - rhs, 4)

    def curvature_form(self, x, y, z, w) -> np.ndarray:
        return np.einsum("...abcd,...a,...b,...c,...d->...", self.riemann, x, y, z, w)

    def sectional(self, x, y) -> np.ndarray:
        """K(x, y) for batched vectors; raises on degenerate planes."""
        gxx = np.einsum("...a,...ab,...b->...", x, self.g, x)
        gyy = np.einsum("...a,...ab,...b->...", y, self.g, y)
        gxy = np.einsum("...a,...ab,...b->...", x, self.g, y)
        den = gxx * gyy - gxy**2
        if np.any(den < 1e-12):
            raise DegeneratePlaneError("vectors span a degenerate plane")
        return self.curvature_form(x, y, x, y) / den

    # -- scalar and vector calculus -------------------------------------------------------------
    def gradient(self, f: J.Jet) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.gi, f.d1)

    def hessian(self, f: J.Jet) -> np.ndarray:
        """Hess f = d^2 f - Gamma^k_ij d_k f (exactly symmetrized)."""
        h = f.d2 - np.einsum("...kij,...k->...ij", self.christoffel, f.d1)
        return 0.5 * (h + np.swapaxes(h, -1, -2))

    def laplacian(self, f: J.Jet) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.gi, self.hessian(f))

    def divergence(self, v: J.Jet) -> np.ndarray:
        """div V = d_a V^a + Gamma^a_{ab} V^b for a vector-field jet ``v``."""
        return np.einsum("...aa->...", v.d1) + np.einsum("...b,...b->...", self.log_volume_gradient, v.val)

    def covariant_derivative(self, v: J.Jet) -> np.ndarray:
        """(nabla V)[a, k] = d_k V^a + Gamma^a_{kb} V^b."""
        return v.d1 + np.einsum("...akb,...b->...ak", self.christoffel, v.val)

    def norm2(self, v) -> np.ndarray:
        return np.einsum("...a,...ab,...b->...", v, self.g, v)


def _maxabs(a: np.ndarray, k: int) -> np.ndarray:
    return np.max(np.abs(a).reshape(a.shape[: a.ndim - k] + (-1,)), axis=-1)


# -- pointwise public API ------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureBundle:
    point: np.ndarray
    christoffel: np.ndarray
    riemann: TensorValue
    ricci: SymBilinear
    scalar: float
    weyl: TensorValue | None


def _geometry_at(metric: MetricField, p) -> Geometry:
    p = np.asarray(p, dtype=float)
    if p.shape != (metric.dim,):
        raise PreconditionError(f"point must have {metric.dim} coordinates")
    if not metric.domain.contains(p):
        raise PreconditionError(f"point {p} outside the chart domain")
    return Geometry(metric, list(p))


def christoffel(metric: MetricField, p) -> np.ndarray:
    return _geometry_at(metric, p).christoffel.copy()


def riemann(metric: MetricField, p) -> TensorValue:
    return TensorValue(metric.dim, 4, _geometry_at(metric, p).riemann)


def ricci(metric: MetricField, p) -> SymBilinear:
    return SymBilinear(metric.dim, _geometry_at(metric, p).ricci)


def scalar_curvature(metric: MetricField, p) -> float:
    return float(_geometry_at(metric, p).scalar)


def weyl(metric: MetricField, p) -> TensorValue:
    if metric.dim < 4:
        raise UnsupportedDimensionError(f"Weyl tensor requires dim >= 4, got {metric.dim}")
    return TensorValue(metric.dim, 4, _geometry_at(metric, p).weyl)


def curvature(metric: MetricField, p) -> CurvatureBundle:
    geo = _geometry_at(metric, p)
    return CurvatureBundle(
        point=np.asarray(p, dtype=float),
        christoffel=geo.christoffel.copy(),
        riemann=TensorValue(geo.n, 4, geo.riemann),
        ricci=SymBilinear(geo.n, geo.ricci),
        scalar=float(geo.scalar),
        weyl=TensorValue(geo.n, 4, geo.weyl) if geo.n >= 4 else None,
    )


def sectional(metric: MetricField, p, x, y) -> float:
    geo = _geometry_at(metric, p)
    return float(geo.sectional(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


def grad(field_: ScalarField, metric: MetricField, p) -> np.ndarray:
    geo = _geometry_at(metric, p)
    return geo.gradient(field_.jet(list(np.asarray(p, dtype=float))))


def hessian(field_: ScalarField, metric: MetricField, p) -> SymBilinear:
    geo = _geometry_at(metric, p)
    return SymBilinear(metric.dim, geo.hessian(field_.jet(list(np.asarray(p, dtype=float)))))


def laplacian(field_: ScalarField, metric: MetricField, p) -> float:
    geo = _geometry_at(metric, p)
    return float(geo.laplacian(field_.jet(list(np.asarray(p, dtype=float)))))


def divergence(vfield: Callable, metric: MetricField, p) -> float:
    """Divergence of a vector field given as a jet-compatible callable ``x -> (n,)``."""
    geo = _geometry_at(metric, p)
    xs = J.variables(list(np.asarray(p, dtype=float)), order=1)
    v = as_jet(vfield(xs), 0, metric.dim, 1, rank=1)
    return float(geo.divergence(v))
