"""Quadrature over closed chart-described models, divergence-theorem checks and
the quasi-Einstein residual.

Grids are tensor products of one-dimensional rules chosen per coordinate:

* ``periodic``: trapezoid rule (spectrally accurate for smooth periodic data);
* ``interval``: Gauss-Legendre on the interval;
* ``polar:k``: a polar angle whose volume density carries ``sin^k``.  Nodes are
  Gauss-Jacobi in ``c = cos(theta)`` with weight ``(1 - c^2)^((k-1)/2)``, so for
  ``k = 1`` this is Gauss-Legendre in ``cos(theta)``.  The density divided by
  ``sin^k`` is smooth, and no node sits on a pole;
* ``hopf``: the ``eta`` coordinate of S^3, where the density carries
  ``sin(eta) cos(eta)``; Gauss-Legendre in ``u = cos(2 eta)``.

Node weights include ``sqrt(det g)``.  Sums run chunk by chunk (optionally on
``CONFSUB_THREADS`` threads) and chunk totals are combined with ``math.fsum``,
so results do not depend on the thread count.  Within a chunk, numpy's
pairwise summation runs in a fixed order, so sums are reproducible bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy.special import roots_jacobi

from . import jet as J
from .chart import Geometry, MetricField, ScalarField
from .errors import PreconditionError

CHUNK_POINTS = 1 << 16
INFINITE = "infinite"


def thread_count() -> int:
    """Worker threads for grid sums: ``CONFSUB_THREADS`` or the CPU count (at most 8)."""
    default = min(8, os.cpu_count() or 1)
    try:
        return max(1, int(os.environ.get("CONFSUB_THREADS", default)))
    except ValueError:
        return default


def _rule(rule: str, a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and coordinate weights (density factor sin^k etc. divided out)."""
    kind, _, arg = rule.partition(":")
    if kind == "periodic":
        h = (b - a) / n
        return a + h * np.arange(n), np.full(n, h)
    if kind == "interval":
        x, w = np.polynomial.legendre.leggauss(n)
        return a + (b - a) * (x + 1) / 2, w * (b - a) / 2
    if kind == "polar":
        k = int(arg or 1)
        if abs(a) > 1e-12 or abs(b - math.pi) > 1e-12:
            raise PreconditionError("polar coordinates must range over [0, pi]")
        al = (k - 1) / 2
        c, w = roots_jacobi(n, al, al)
        theta = np.arccos(c)[::-1]
        # int F sin^k dtheta = int F (1 - c^2)^((k-1)/2) dc; node weight carries 1/sin^k
        return theta, (w / np.sin(np.arccos(c)) ** k)[::-1]
    if kind == "hopf":
        if abs(a) > 1e-12 or abs(b - math.pi / 2) > 1e-12:
            raise PreconditionError("the hopf coordinate must range over [0, pi/2]")
        u, w = np.polynomial.legendre.leggauss(n)
        eta = np.arccos(u)[::-1] / 2
        # d eta = du / (2 sin 2 eta)
        return eta, (w / (2 * np.sin(np.arccos(u))))[::-1]
    raise PreconditionError(f"unknown quadrature rule {rule!r}")


class QuadratureGrid:
    """Tensor-product quadrature grid for a metric on its chart domain."""

    def __init__(self, metric: MetricField, nodes: list, coord_weights: list):
        self.metric = metric
        self.domain = metric.domain
        self.nodes = [np.asarray(x, dtype=float) for x in nodes]
        self.coord_weights = [np.asarray(w, dtype=float) for w in coord_weights]
        self.shape = tuple(len(x) for x in self.nodes)
        self.dim = len(self.nodes)

    @classmethod
    def build(cls, metric: MetricField, grid: int) -> "QuadratureGrid":
        grid = int(grid)
        if grid < 2:
            raise PreconditionError("need at least two nodes per coordinate")
        nodes, weights = [], []
        for (a, b), rule in zip(metric.domain.ranges, metric.domain.rules):
            x, w = _rule(rule, a, b, grid)
            nodes.append(x)
            weights.append(w)
        return cls(metric, nodes, weights)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    # -- chunked traversal -------------------------------------------------------------------------
    def _blocks(self) -> list[slice]:
        rest = int(np.prod(self.shape[1:])) if self.dim > 1 else 1
        step = max(1, CHUNK_POINTS // max(rest, 1))
        return [slice(i, min(i + step, self.shape[0])) for i in range(0, self.shape[0], step)]

    def chunk_coords(self, block: slice) -> list[np.ndarray]:
        """Broadcastable coordinate arrays (one axis per coordinate) for a block of the first axis."""
        out = []
        for i, x in enumerate(self.nodes):
            x = x[block] if i == 0 else x
            shape = [1] * self.dim
            shape[i] = len(x)
            out.append(x.reshape(shape))
        return out

    def chunk_weights(self, block: slice, coords: list | None = None) -> np.ndarray:
        """Full node weights of a block, sqrt(det g) included."""
        coords = coords if coords is not None else self.chunk_coords(block)
        w = np.ones([1] * self.dim)
        for i, cw in enumerate(self.coord_weights):
            cw = cw[block] if i == 0 else cw
            shape = [1] * self.dim
            shape[i] = len(cw)
            w = w * cw.reshape(shape)
        g = self.metric.values(coords)
        return w * np.sqrt(np.linalg.det(g))

    def map_chunks(self, fn: Callable) -> list:
        """``fn(block)`` for every block, in order (threads from CONFSUB_THREADS)."""
        blocks = self._blocks()
        threads = thread_count()
        if threads == 1 or len(blocks) == 1:
            return [fn(b) for b in blocks]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, blocks))

    def block_shape(self, block: slice) -> tuple:
        return (block.stop - block.start,) + self.shape[1:]

    def sum(self, fn: Callable) -> float:
        """Deterministic sum of ``fn(block)`` over the grid; results broadcast to the block."""
        parts = self.map_chunks(lambda b: math.fsum(np.broadcast_to(fn(b), self.block_shape(b)).ravel()))
        return math.fsum(parts)

    def points(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Flattened ``(points, weights)`` per block, for pointwise evaluators."""
        for b in self._blocks():
            coords = self.chunk_coords(b)
            w = self.chunk_weights(b, coords)
            full = np.broadcast_arrays(*coords)
            shape = full[0].shape
            yield np.stack([c.reshape(-1) for c in full], axis=-1), np.broadcast_to(w, shape).reshape(-1)

    @property
    def weights(self) -> np.ndarray:
        """All node weights as a dense array (memory grows like grid^dim)."""
        parts = [np.broadcast_to(self.chunk_weights(b), self.block_shape(b)) for b in self._blocks()]
        return np.concatenate(parts, axis=0)

    def volume(self) -> float:
        return self.sum(lambda b: self.chunk_weights(b))


def _field_values(field, coords) -> np.ndarray:
    if isinstance(field, ScalarField):
        field = field.fn
    return np.asarray(J.value(field(coords)), dtype=float)


def integrate(field, grid: QuadratureGrid) -> float:
    """Sum of weight * field over the grid nodes.

    ``field`` is a :class:`ScalarField` or any callable taking the list of
    (broadcastable) coordinate arrays.
    """

    def part(b):
        coords = grid.chunk_coords(b)
        return grid.chunk_weights(b, coords) * _field_values(field, coords)

    return grid.sum(part)


# -- vector fields and the divergence theorem -------------------------------------------------------


def gradient_field(potential: Callable) -> Callable:
    """grad(potential) as a vector-field callable ``(x, gj) -> Jet``."""

    def vf(x, gj):
        phi = potential(x)
        return J.einsum("ab,b->a", J.inv(gj), phi.derivative())

    return vf


def coordinate_field(components) -> Callable:
    """Constant contravariant components in the chart (e.g. a rotation field on a flat torus)."""
    comp = np.asarray(components, dtype=float)

    def vf(x, gj):
        nb = x[0].nb
        n = len(x)
        return J.Jet(comp.reshape((1,) * nb + comp.shape), np.zeros((1,) * nb + (n, n)), None, nb)

    return vf


@dataclass(frozen=True)
class PotentialField:
    """X = psi grad(phi) + grad(chi), with phi, psi, chi quadratic polynomials
    ``E.A.E + b.E`` in the embedding coordinates ``E`` of a closed model.

    These fields are smooth on the whole manifold (not just the chart) and
    have closed-form divergence ``<grad psi, grad phi> + psi lap phi + lap chi``,
    so many of them can share one pass over a quadrature grid.
    """

    quadratics: tuple  # three (A, b) pairs for phi, psi, chi

    @classmethod
    def random(cls, embedding_dim: int, seed: int) -> "PotentialField":
        rng = np.random.default_rng(seed)
        d = embedding_dim
        qs = []
        for _ in range(3):
            a = rng.normal(size=(d, d)) / d
            qs.append(((a + a.T) / 2, rng.normal(size=d) / math.sqrt(d)))
        return cls(tuple(qs))

    def evaluate(self, emb: tuple) -> tuple[np.ndarray, np.ndarray]:
        """(div X, |X|) from the shared embedding data ``(E, G, L)``."""
        div, norm = _evaluate_batch([self], emb)
        return div[..., 0], norm[..., 0]


def _evaluate_batch(fields: list, emb: tuple) -> tuple[np.ndarray, np.ndarray]:
    """(div X, |X|) for several potential fields at once, stacked on the last axis.

    ``G[i, j] = <grad E_i, grad E_j>`` and ``L[i] = lap E_i``; for a quadratic
    ``u = E.A.E + b.E`` this gives ``grad u = c.grad E`` with ``c = 2 A E + b``
    and ``lap u = 2 <A, G> + c.L``.
    """
    e, gram, lap_e = emb
    d = e.shape[-1]
    nf = len(fields)
    a = np.array([[q[0] for q in f.quadratics] for f in fields])  # (F, 3, d, d)
    b = np.array([[q[1] for q in f.quadratics] for f in fields])  # (F, 3, d)
    bshape = e.shape[:-1]
    c = (e.reshape(-1, d) @ (2 * a).transpose(2, 0, 1, 3).reshape(d, -1)).reshape(bshape + (nf, 3, d)) + b
    lap = 2 * (gram.reshape(-1, d * d) @ a.reshape(nf * 3, d * d).T).reshape(bshape + (nf, 3))
    lap = lap + np.einsum("...fqi,...i->...fq", c, lap_e)
    psi = 0.5 * np.einsum("...fi,...i->...f", c[..., 1, :] + b[:, 1], e)
    cp, cs, cc = c[..., 0, :], c[..., 1, :], c[..., 2, :]
    pc = np.concatenate([cp, cc], axis=-2)  # (..., 2F, d)
    gpc = pc @ gram  # gram is symmetric
    gp, gc = gpc[..., :nf, :], gpc[..., nf:, :]
    div = np.sum(gp * cs, axis=-1) + psi * lap[..., 0] + lap[..., 2]
    n2 = psi * psi * np.sum(gp * cp, axis=-1) + 2 * psi * np.sum(gp * cc, axis=-1) + np.sum(gc * cc, axis=-1)
    return div, np.sqrt(np.maximum(n2, 0.0))


def random_vector_field(model, seed: int) -> PotentialField:
    """Seeded random :class:`PotentialField` for a model."""
    from .models import descriptor_of

    desc = descriptor_of(model)
    d = len(desc.embedding([0.5] * desc.dim))
    return PotentialField.random(d, seed)


def _embedding_data(desc, coords, shape, geo: Geometry) -> tuple:
    """Embedding values E, Gram matrix of their gradients and their Laplacians."""
    x = J.variables(coords, order=2, nb=len(coords))
    n = len(coords)
    gam = np.einsum("...ab,...kab->...k", geo.gi, geo.christoffel)
    vals, grads, laps = [], [], []
    for e in desc.embedding(x):
        if not isinstance(e, J.Jet):
            e = J.Jet(np.asarray(e, dtype=float), np.zeros((1,) * n + (n,)), np.zeros((1,) * n + (n, n)), n)
        vals.append(np.broadcast_to(e.val, shape))
        grads.append(np.broadcast_to(e.d1, shape + (n,)))
        laps.append(np.broadcast_to(np.sum(geo.gi * e.d2, axis=(-1, -2)) - np.sum(gam * e.d1, axis=-1), shape))
    de = np.stack(grads, axis=-2)
    gram = de @ np.broadcast_to(geo.gi, shape + (n, n)) @ np.swapaxes(de, -1, -2)
    return np.stack(vals, axis=-1), gram, np.stack(laps, axis=-1)


def divergence_residuals(fields: list, model, grid) -> list[float]:
    """Divergence-theorem residuals of several :class:`PotentialField` in one grid pass."""
    from .models import descriptor_of

    desc = descriptor_of(model)
    if not isinstance(grid, QuadratureGrid):
        grid = QuadratureGrid.build(desc.metric, grid)

    def part(b):
        coords = grid.chunk_coords(b)
        shape = grid.block_shape(b)
        w = np.broadcast_to(grid.chunk_weights(b, coords), shape)
        geo = Geometry(desc.metric.jet(coords, order=1, nb=len(coords)), check=False)
        emb = _embedding_data(desc, coords, shape, geo)
        div, norm = _evaluate_batch(fields, emb)
        return [(float(np.sum(w * div[..., i])), float(np.sum(w * norm[..., i]))) for i in range(len(fields))]

    parts = grid.map_chunks(part)
    res = []
    for i in range(len(fields)):
        dv = math.fsum(p[i][0] for p in parts)
        nm = math.fsum(p[i][1] for p in parts)
        res.append(abs(dv) / (1.0 + nm))
    return res


def _div_parts(vfield: Callable, metric: MetricField, coords):
    x = J.variables(coords, order=2, nb=len(coords))
    gj = metric.jet(coords, order=1, nb=len(coords))
    v = vfield(x, gj)
    geo = Geometry(gj, check=False)
    div = geo.divergence(v)
    norm = np.sqrt(np.maximum(np.einsum("...a,...ab,...b->...", v.val, geo.g, v.val), 0.0))
    return div, norm


def divergence_theorem_residual(vfield: Callable, model, grid) -> float:
    """|int div X dV| / (1 + int |X| dV) on a closed model.

    ``vfield`` is a :class:`PotentialField` or a callable ``vfield(x, gj)``
    that receives the order-2 coordinate jets and the order-1 metric jet and
    returns the contravariant components as a jet with first derivatives.
    ``grid`` is a :class:`QuadratureGrid` or a node count.
    """
    from .models import descriptor_of

    if isinstance(vfield, PotentialField):
        return divergence_residuals([vfield], model, grid)[0]

    metric = descriptor_of(model).metric
    if not isinstance(grid, QuadratureGrid):
        grid = QuadratureGrid.build(metric, grid)

    def part(b):
        coords = grid.chunk_coords(b)
        w = grid.chunk_weights(b, coords)
        div, norm = _div_parts(vfield, metric, coords)
        shape = grid.block_shape(b)
        return (math.fsum(np.broadcast_to(w * div, shape).ravel()),
                math.fsum(np.broadcast_to(w * norm, shape).ravel()))

    parts = grid.map_chunks(part)
    total_div = math.fsum(p[0] for p in parts)
    total_norm = math.fsum(p[1] for p in parts)
    return abs(total_div) / (1.0 + total_norm)


# -- quasi-Einstein -------------------------------------------------------------------------------------


def quasi_einstein_tensor(metric: MetricField, h: ScalarField, m, lam: float, points) -> np.ndarray:
    """Ric + Hess h - (1/m) dh (x) dh - lam g at each point (``m = INFINITE`` drops the dh term)."""
    infinite = m == INFINITE or (isinstance(m, float) and math.isinf(m))
    if not infinite:
        m = float(m)
        if not m > 0:
            raise PreconditionError("quasi-Einstein parameter m must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coords = [pts[:, i] for i in range(pts.shape[1])]
    geo = Geometry(metric, coords)
    hj = h.jet(coords, order=2, nb=1)
    d1 = np.broadcast_to(hj.d1, geo.g.shape[:-1])
    hj = J.Jet(np.broadcast_to(hj.val, geo.g.shape[:-2]), d1, np.broadcast_to(hj.d2, geo.g.shape), 1)
    out = geo.ricci + geo.hessian(hj) - float(lam) * geo.g
    if not infinite:
        out = out - np.einsum("...a,...b->...ab", d1, d1) / m
    return out


def quasi_einstein_residual(metric: MetricField, h: ScalarField, m, lam: float, points) -> float:
    """max componentwise |Ric + Hess h - (1/m) dh (x) dh - lam g| over ``points``."""
    return float(np.max(np.abs(quasi_einstein_tensor(metric, h, m, lam, points))))


_CRITERIA_EXPORTS = ("CriterionReport", "evaluate_criterion", "evaluate_criteria", "describe", "THEOREMS")


def __getattr__(name):
    # the criterion evaluator lives in its own module (it needs the submersion code); expose it here too
    if name in _CRITERIA_EXPORTS:
        from . import criteria

        return getattr(criteria, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
