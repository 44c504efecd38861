"""Pointwise multilinear algebra on dense component arrays.

The value types (:class:`TensorValue`, :class:`SymBilinear`, :class:`Frame`)
are immutable wrappers used at the public, single-point API.  The array-level
helpers below them (``kn``, ``orthonormalize``, ``null_basis``) are what the
vectorized geometry code calls; they accept leading batch axes and, where noted,
:class:`~confsub.jet.Jet` operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jet as J
from .errors import DegenerateFrameError, PreconditionError

ORTHO_TOL = 1e-12
PIVOT_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TensorValue:
    """Covariant tensor of rank ``valence`` on an ``dim``-dimensional space."""

    dim: int
    valence: int
    components: np.ndarray

    def __post_init__(self):
        comp = _readonly(self.components)
        if comp.shape != (self.dim,) * self.valence:
            raise PreconditionError(
                f"components shape {comp.shape} does not match dim={self.dim}, valence={self.valence}"
            )
        if not np.all(np.isfinite(comp)):
            raise PreconditionError("tensor components must be finite")
        object.__setattr__(self, "components", comp)

    @classmethod
    def from_array(cls, a) -> "TensorValue":
        a = np.asarray(a, dtype=float)
        dim = a.shape[0] if a.ndim else 1
        return cls(dim, a.ndim, a)

    def __call__(self, *vectors) -> float:
        """Evaluate on ``valence`` vectors."""
        if len(vectors) != self.valence:
            raise PreconditionError("wrong number of arguments")
        out = self.components
        for v in vectors:
            out = np.tensordot(np.asarray(v, dtype=float), out, axes=(0, 0))
        return float(out)

    def __add__(self, other: "TensorValue") -> "TensorValue":
        _same(self, other)
        return TensorValue(self.dim, self.valence, self.components + other.components)

    def __sub__(self, other: "TensorValue") -> "TensorValue":
        _same(self, other)
        return TensorValue(self.dim, self.valence, self.components - other.components)

    def __mul__(self, c: float) -> "TensorValue":
        return TensorValue(self.dim, self.valence, float(c) * self.components)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0


def _same(a: TensorValue, b: TensorValue) -> None:
    if a.dim != b.dim or a.valence != b.valence:
        raise PreconditionError("tensor dimension/valence mismatch")


@dataclass(frozen=True)
class SymBilinear:
    """Symmetric bilinear form; the upper triangle is stored and mirrored."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.dim, self.dim):
            raise PreconditionError(f"matrix shape {m.shape} is not ({self.dim}, {self.dim})")
        if not np.all(np.isfinite(m)):
            raise PreconditionError("matrix entries must be finite")
        up = np.triu(m)
        object.__setattr__(self, "matrix", _readonly(up + np.triu(m, 1).T))

    @classmethod
    def from_array(cls, m) -> "SymBilinear":
        m = np.asarray(m, dtype=float)
        return cls(m.shape[0], m)

    @classmethod
    def identity(cls, n: int) -> "SymBilinear":
        return cls(n, np.eye(n))

    def __call__(self, x, y) -> float:
        return float(np.asarray(x, dtype=float) @ self.matrix @ np.asarray(y, dtype=float))

    def is_positive_definite(self) -> bool:
        return bool(np.linalg.eigvalsh(self.matrix)[0] > 0)

    def inverse(self) -> "SymBilinear":
        return SymBilinear(self.dim, np.linalg.inv(self.matrix))

    def as_tensor(self) -> TensorValue:
        return TensorValue(self.dim, 2, self.matrix)


@dataclass(frozen=True)
class Frame:
    """An ordered list of ``count`` vectors in an ``dim``-dimensional space."""

    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[None, :] if v.size else v.reshape(0, self.dim)
        if v.ndim != 2 or v.shape[1] != self.dim:
            raise PreconditionError(f"frame vectors shape {v.shape} incompatible with dim {self.dim}")
        if v.shape[0] > self.dim:
            raise PreconditionError("a frame cannot have more vectors than the dimension")
        object.__setattr__(self, "vectors", _readonly(v))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def gram(self, metric: SymBilinear) -> np.ndarray:
        return self.vectors @ metric.matrix @ self.vectors.T

    def orthonormality_residual(self, metric: SymBilinear) -> float:
        if self.count == 0:
            return 0.0
        return float(np.max(np.abs(self.gram(metric) - np.eye(self.count))))


# -- Kulkarni-Nomizu product ---------------------------------------------------------


def kn(h, k):
    """Kulkarni-Nomizu product of batched symmetric arrays ``(..., n, n)``."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    hk = np.einsum("...ac,...bd->...abcd", h, k)
    kh = np.einsum("...bd,...ac->...abcd", h, k)
    hk2 = np.einsum("...ad,...bc->...abcd", h, k)
    kh2 = np.einsum("...bc,...ad->...abcd", h, k)
    return hk + kh - hk2 - kh2


def kulkarni_nomizu(h: SymBilinear, k: SymBilinear) -> TensorValue:
    """(h o k)(X,Y,Z,W) = h(X,Z)k(Y,W) + h(Y,W)k(X,Z) - h(X,W)k(Y,Z) - h(Y,Z)k(X,W)."""
    if h.dim != k.dim:
        raise PreconditionError(f"dimension mismatch: {h.dim} vs {k.dim}")
    return TensorValue(h.dim, 4, kn(h.matrix, k.matrix))


# -- Gram-Schmidt ----------------------------------------------------------------------------


def gram_schmidt(vectors: Frame, metric: SymBilinear) -> Frame:
    """Orthonormalize in input order with respect to ``metric``.

    Raises :class:`DegenerateFrameError` if a residual vector's norm drops below
    ``PIVOT_TOL`` times the largest input norm.
    """
    if vectors.dim != metric.dim:
        raise PreconditionError("frame and metric dimensions differ")
    out = orthonormalize(list(vectors.vectors), metric.matrix)
    return Frame(vectors.dim, np.array([np.asarray(v) for v in out]).reshape(len(out), vectors.dim))


def _ip(u, v, g):
    return J.einsum("a,ab,b->", u, g, v)


def orthonormalize(vectors: Sequence, g):
    """Modified Gram-Schmidt on a list of (batched, possibly jet) vectors.

    ``vectors[i]`` has tensor shape ``(n,)`` and ``g`` tensor shape ``(n, n)``,
    both with matching leading batch axes.  Two passes of projection are made so
    the result is orthonormal to round-off even for badly conditioned input.
    """
    if not vectors:
        return []
    norms0 = [np.sqrt(np.abs(J.value(_ip(v, v, g)))) for v in vectors]
    scale = np.max(np.stack([np.max(n) for n in norms0]))
    out = []
    for v in vectors:
        w = v
        for _ in range(2):
            for e in out:
                w = w - _scale(e, _ip(e, w, g))
        nrm2 = _ip(w, w, g)
        nv = np.sqrt(np.maximum(J.value(nrm2), 0.0))
        if np.min(nv) <= PIVOT_TOL * max(scale, 1e-300):
            raise DegenerateFrameError("vectors are numerically linearly dependent")
        inv_norm = J.power(nrm2, -0.5) if isinstance(nrm2, J.Jet) else 1.0 / nv
        out.append(_scale(w, inv_norm))
    return out


def _scale(v, c):
    """Multiply a batched vector (array or jet) by a batched scalar."""
    if isinstance(c, J.Jet):
        c = J.Jet(c.val[..., None], None if c.d1 is None else c.d1[..., None, :],
                  None if c.d2 is None else c.d2[..., None, :, :], c.nb)
        return c * v
    c = np.asarray(c, dtype=float)[..., None]
    if isinstance(v, J.Jet):
        return J.Jet(v.val * c, None if v.d1 is None else v.d1 * c[..., None],
                     None if v.d2 is None else v.d2 * c[..., None, None], v.nb)
    return v * c


# -- contraction ------------------------------------------------------------------------------


def contract(t: TensorValue, slots: tuple, metric_inverse: SymBilinear) -> TensorValue:
    """Metric trace of ``t`` over the two given slots using ``g^{-1}``."""
    if t.valence < 2:
        raise PreconditionError("contraction needs valence >= 2")
    i, j = slots
    if i == j or not (0 <= i < t.valence and 0 <= j < t.valence):
        raise PreconditionError(f"invalid slots {slots} for valence {t.valence}")
    if metric_inverse.dim != t.dim:
        raise PreconditionError("metric dimension mismatch")
    c = np.tensordot(t.components, metric_inverse.matrix, axes=([i, j], [0, 1]))
    return TensorValue(t.dim, t.valence - 2, np.asarray(c))


# -- null space -------------------------------------------------------------------------------


def null_basis(jac) -> np.ndarray:
    """Deterministic basis of ``ker(jac)`` from the reduced row echelon form.

    Each basis vector sets one free variable to 1 (free variables in coordinate
    order), so the first nonzero entry of every vector is positive.  Returns an
    array of shape ``(n - rank, n)``.  Raises :class:`PreconditionError` if the
    matrix is rank deficient (pivot below ``PIVOT_TOL`` of the leading norm).
    """
    a = np.array(jac, dtype=float)
    rows, n = a.shape
    lead = max(np.max(np.abs(a)), 1e-300)
    pivots = []
    r = 0
    for c in range(n):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) <= PIVOT_TOL * lead:
            continue
        a[[r, p]] = a[[p, r]]
        a[r] /= a[r, c]
        for k in range(rows):
            if k != r:
                a[k] -= a[k, c] * a[r]
        pivots.append(c)
        r += 1
    if r < rows:
        raise PreconditionError("matrix is rank deficient")
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n))
    for k, fc in enumerate(free):
        basis[k, fc] = 1.0
        for row, pc in enumerate(pivots):
            basis[k, pc] = -a[row, fc]
    return basis
