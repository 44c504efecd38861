"""Second-order forward-mode automatic differentiation.

A :class:`Jet` carries the value of an array-valued quantity together with its
first and (optionally) second partial derivatives with respect to ``n`` chart
coordinates.  Arrays are laid out as ``batch + tensor`` for the value,
``batch + tensor + (n,)`` for the gradient and ``batch + tensor + (n, n)`` for
the Hessian.  Batch axes broadcast, so a metric that only depends on two of four
grid axes is only ever evaluated on those two axes.

Plain floats and ndarrays mixed into jet arithmetic are treated as constant
*tensors* (no batch axes).

The module-level functions (:func:`sin`, :func:`exp`, :func:`array`, ...) accept
jets as well as plain numbers, so metric and scalar-field definitions are written
once and evaluated either numerically or with derivatives.
"""

from __future__ import annotations

import string
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Jet",
    "variables",
    "array",
    "einsum",
    "inv",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "tanh",
    "power",
    "value",
]


def _pad(arr, nb: int, k: int):
    if arr is None or k == 0:
        return arr
    return arr.reshape(arr.shape[:nb] + (1,) * k + arr.shape[nb:])


def _acc(*terms):
    out = None
    for t in terms:
        if t is None:
            continue
        out = t if out is None else out + t
    return out


class Jet:
    """Truncated Taylor expansion (order 0, 1 or 2) of an array-valued field."""

    __slots__ = ("val", "d1", "d2", "nb")
    __array_priority__ = 100.0

    def __init__(self, val, d1=None, d2=None, nb: int = 0):
        self.val = np.asarray(val, dtype=float)
        self.d1 = None if d1 is None else np.asarray(d1, dtype=float)
        self.d2 = None if d2 is None else np.asarray(d2, dtype=float)
        if self.d1 is None and self.d2 is not None:
            raise ValueError("second derivatives without first derivatives")
        self.nb = nb

    # -- structure -----------------------------------------------------------
    @property
    def order(self) -> int:
        if self.d1 is None:
            return 0
        return 1 if self.d2 is None else 2

    @property
    def rank(self) -> int:
        return self.val.ndim - self.nb

    @property
    def tshape(self) -> tuple:
        return self.val.shape[self.nb:]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, nb={self.nb}, tshape={self.tshape})"

    def truncate(self, order: int) -> "Jet":
        order = min(order, self.order)
        return Jet(self.val, self.d1 if order >= 1 else None, self.d2 if order >= 2 else None, self.nb)

    def derivative(self) -> "Jet":
        """Jet of the gradient; the derivative index becomes the last tensor axis."""
        if self.d1 is None:
            raise ValueError("order-0 jet has no derivative")
        return Jet(self.d1, self.d2, None, self.nb)

    # -- helpers ---------------------------------------------------------------
    def _parts(self, order: int, rank: int):
        k = rank - self.rank
        return (
            _pad(self.val, self.nb, k),
            _pad(self.d1, self.nb, k) if order >= 1 else None,
            _pad(self.d2, self.nb, k) if order >= 2 else None,
        )

    @staticmethod
    def _const_parts(c, nb: int, rank: int):
        c = np.asarray(c, dtype=float)
        if c.ndim > rank:
            raise ValueError("constant has higher tensor rank than jet operand")
        c = c.reshape((1,) * nb + (1,) * (rank - c.ndim) + c.shape)
        return c, None, None

    def _binary(self, other):
        if isinstance(other, Jet):
            if other.nb != self.nb:
                raise ValueError(f"batch rank mismatch: {self.nb} vs {other.nb}")
            order = min(self.order, other.order)
            rank = max(self.rank, other.rank)
            return self._parts(order, rank), other._parts(order, rank), order
        other = np.asarray(other, dtype=float)
        rank = max(self.rank, other.ndim)
        return self._parts(self.order, rank), self._const_parts(other, self.nb, rank), self.order

    # -- arithmetic --------------------------------------------------------------
    def __add__(self, other):
        (av, a1, a2), (bv, b1, b2), order = self._binary(other)
        d1 = _acc(a1, b1) if order >= 1 else None
        d2 = _acc(a2, b2) if order >= 2 else None
        return Jet(av + bv, d1, d2, self.nb)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, None if self.d1 is None else -self.d1, None if self.d2 is None else -self.d2, self.nb)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        (av, a1, a2), (bv, b1, b2), order = self._binary(other)
        d1 = d2 = None
        if order >= 1:
            d1 = _acc(
                None if a1 is None else a1 * bv[..., None],
                None if b1 is None else av[..., None] * b1,
            )
        if order >= 2:
            cross = None
            if a1 is not None and b1 is not None:
                cross = a1[..., :, None] * b1[..., None, :] + a1[..., None, :] * b1[..., :, None]
            d2 = _acc(
                None if a2 is None else a2 * bv[..., None, None],
                None if b2 is None else av[..., None, None] * b2,
                cross,
            )
        return Jet(av * bv, d1, d2, self.nb)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        return power(self, p)

    def reciprocal(self) -> "Jet":
        return self.apply(lambda v: 1.0 / v, lambda v: -1.0 / v**2, lambda v: 2.0 / v**3)

    def apply(self, f0: Callable, f1: Callable, f2: Callable) -> "Jet":
        """Elementwise function with its first and second derivative."""
        v = self.val
        d1 = d2 = None
        if self.order >= 1:
            fp = f1(v)
            d1 = fp[..., None] * self.d1
            if self.order >= 2:
                d2 = fp[..., None, None] * self.d2 + f2(v)[..., None, None] * (
                    self.d1[..., :, None] * self.d1[..., None, :]
                )
        return Jet(f0(v), d1, d2, self.nb)

    # -- tensor manipulation -------------------------------------------------------
    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis or i is None for i in idx):
            raise IndexError("jets only support integer/slice indices on tensor axes")
        lead = (slice(None),) * self.nb
        return Jet(
            self.val[lead + idx],
            None if self.d1 is None else self.d1[lead + idx],
            None if self.d2 is None else self.d2[lead + idx],
            self.nb,
        )

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.rank)))
        nb = self.nb
        perm = tuple(range(nb)) + tuple(nb + a for a in axes)
        tail = lambda m: perm + tuple(range(nb + self.rank, nb + self.rank + m))
        return Jet(
            self.val.transpose(perm),
            None if self.d1 is None else self.d1.transpose(tail(1)),
            None if self.d2 is None else self.d2.transpose(tail(2)),
            nb,
        )

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def sum(self, axis: int) -> "Jet":
        ax = self.nb + axis
        return Jet(
            self.val.sum(axis=ax),
            None if self.d1 is None else self.d1.sum(axis=ax),
            None if self.d2 is None else self.d2.sum(axis=ax),
            self.nb,
        )


def value(x):
    """Numeric value of a jet (or the input itself)."""
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


def variables(coords, order: int = 2, nb: int | None = None) -> list[Jet]:
    """Seed one scalar jet per chart coordinate.

    ``coords`` is a sequence of ``n`` numbers (a single point, ``nb = 0``) or of
    ``n`` mutually broadcastable arrays (a batch or a separable grid).
    """
    vals = [np.asarray(c, dtype=float) for c in coords]
    n = len(vals)
    if nb is None:
        nb = max(v.ndim for v in vals)
    out = []
    for i, v in enumerate(vals):
        if v.ndim < nb:
            v = v.reshape((1,) * (nb - v.ndim) + v.shape)
        e = np.zeros((1,) * nb + (n,))
        e[..., i] = 1.0
        d1 = e if order >= 1 else None
        d2 = np.zeros((1,) * nb + (n, n)) if order >= 2 else None
        out.append(Jet(v, d1, d2, nb))
    return out


# -- elementwise functions -------------------------------------------------------


def _unary(x, f0, f1, f2):
    if isinstance(x, Jet):
        return x.apply(f0, f1, f2)
    return f0(np.asarray(x, dtype=float)) if np.ndim(x) else float(f0(x))


def sin(x):
    return _unary(x, np.sin, np.cos, lambda v: -np.sin(v))


def cos(x):
    return _unary(x, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))


def exp(x):
    return _unary(x, np.exp, np.exp, np.exp)


def log(x):
    return _unary(x, np.log, lambda v: 1.0 / v, lambda v: -1.0 / v**2)


def sqrt(x):
    return _unary(x, np.sqrt, lambda v: 0.5 / np.sqrt(v), lambda v: -0.25 / v**1.5)


def tanh(x):
    return _unary(
        x,
        np.tanh,
        lambda v: 1.0 / np.cosh(v) ** 2,
        lambda v: -2.0 * np.tanh(v) / np.cosh(v) ** 2,
    )


def power(x, p: float):
    if p == 2:
        return x * x
    return _unary(x, lambda v: v**p, lambda v: p * v ** (p - 1), lambda v: p * (p - 1) * v ** (p - 2))


# -- construction ---------------------------------------------------------------------


def _nested_shape(obj) -> tuple:
    if isinstance(obj, (list, tuple)):
        inner = {_nested_shape(o) for o in obj}
        if len(inner) != 1:
            raise ValueError("ragged nested sequence")
        return (len(obj),) + inner.pop()
    return ()


def _leaves(obj):
    if isinstance(obj, (list, tuple)):
        for o in obj:
            yield from _leaves(o)
    else:
        yield obj


def array(nested):
    """Assemble a tensor from a nested sequence of scalar jets and numbers."""
    shape = _nested_shape(nested)
    leaves = list(_leaves(nested))
    jets = [x for x in leaves if isinstance(x, Jet)]
    if not jets:
        vals = [np.asarray(x, dtype=float) for x in leaves]
        bshape = np.broadcast_shapes(*(v.shape for v in vals))
        out = np.empty(bshape + shape) if bshape else np.empty(shape)
        flat = out.reshape(bshape + (-1,))
        for k, v in enumerate(vals):
            flat[..., k] = v
        return out
    nb = jets[0].nb
    if any(j.nb != nb or j.rank != 0 for j in jets):
        raise ValueError("array() expects scalar jets with a common batch rank")
    order = min(j.order for j in jets)
    n = next(j.d1.shape[-1] for j in jets if j.d1 is not None) if order >= 1 else 0
    shapes = []
    for j in jets:
        shapes.append(j.val.shape)
        if order >= 1:
            shapes.append(j.d1.shape[:nb])
    for x in leaves:
        if not isinstance(x, Jet) and np.ndim(x):
            raise ValueError("numeric leaves of a jet array must be scalars")
    bshape = np.broadcast_shapes(*shapes)
    m = len(leaves)
    val = np.zeros(bshape + (m,))
    d1 = np.zeros(bshape + (m, n)) if order >= 1 else None
    d2 = np.zeros(bshape + (m, n, n)) if order >= 2 else None
    for k, x in enumerate(leaves):
        if isinstance(x, Jet):
            val[..., k] = x.val
            if order >= 1:
                d1[..., k, :] = x.d1
            if order >= 2:
                d2[..., k, :, :] = x.d2
        else:
            val[..., k] = float(x)
    val = val.reshape(bshape + shape)
    if d1 is not None:
        d1 = d1.reshape(bshape + shape + (n,))
    if d2 is not None:
        d2 = d2.reshape(bshape + shape + (n, n))
    return Jet(val, d1, d2, nb)


# -- contractions ---------------------------------------------------------------------


def _parse(subscripts: str, nops: int):
    if "->" not in subscripts:
        raise ValueError("einsum subscripts must be explicit ('...->...')")
    lhs, out = subscripts.replace(" ", "").split("->")
    ins = lhs.split(",")
    if len(ins) != nops:
        raise ValueError("operand count does not match subscripts")
    if "." in subscripts:
        raise ValueError("ellipsis is implicit for jet einsum")
    return ins, out


def _einsum2(sa: str, sb: str, so: str, a, b):
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not (ja or jb):
        return np.einsum(f"{sa},{sb}->{so}", a, b)
    used = set(sa + sb + so)
    free = [c for c in string.ascii_letters if c not in used]
    p, q = free[0], free[1]
    nb = (a if ja else b).nb
    if ja and jb and a.nb != b.nb:
        raise ValueError("batch rank mismatch in einsum")
    if ja and jb:
        order = min(a.order, b.order)
    else:
        order = (a if ja else b).order
    pa = "..." if ja else ""
    pb = "..." if jb else ""
    av, a1, a2 = (a.val, a.d1, a.d2) if ja else (np.asarray(a, dtype=float), None, None)
    bv, b1, b2 = (b.val, b.d1, b.d2) if jb else (np.asarray(b, dtype=float), None, None)

    def ein(xa, xs, ya, ys, tail):
        return np.einsum(f"{pa}{xs},{pb}{ys}->...{so}{tail}", xa, ya)

    val = ein(av, sa, bv, sb, "")
    d1 = d2 = None
    if order >= 1:
        d1 = _acc(
            None if a1 is None else ein(a1, sa + p, bv, sb, p),
            None if b1 is None else ein(av, sa, b1, sb + p, p),
        )
    if order >= 2:
        cross = None
        if a1 is not None and b1 is not None:
            cross = ein(a1, sa + p, b1, sb + q, p + q) + ein(a1, sa + q, b1, sb + p, p + q)
        d2 = _acc(
            None if a2 is None else ein(a2, sa + p + q, bv, sb, p + q),
            None if b2 is None else ein(av, sa, b2, sb + p + q, p + q),
            cross,
        )
    return Jet(val, d1, d2, nb)


def einsum(subscripts: str, *operands):
    """Einstein summation over tensor axes of jets (batch axes are implicit)."""
    ins, out = _parse(subscripts, len(operands))
    if not any(isinstance(op, Jet) for op in operands):
        spec = ",".join("..." + s for s in ins) + "->..." + out
        return np.einsum(spec, *[np.asarray(op, dtype=float) for op in operands])
    if len(operands) == 1:
        op = operands[0]
        if not isinstance(op, Jet):
            return np.einsum(f"{ins[0]}->{out}", op)
        used = set(ins[0] + out)
        free = [c for c in string.ascii_letters if c not in used]
        p, q = free[0], free[1]
        return Jet(
            np.einsum(f"...{ins[0]}->...{out}", op.val),
            None if op.d1 is None else np.einsum(f"...{ins[0]}{p}->...{out}{p}", op.d1),
            None if op.d2 is None else np.einsum(f"...{ins[0]}{p}{q}->...{out}{p}{q}", op.d2),
            op.nb,
        )
    cur, cur_s = operands[0], ins[0]
    for k in range(1, len(operands)):
        later = "".join(ins[k + 1:]) + out
        keep = "".join(dict.fromkeys(c for c in cur_s + ins[k] if c in later))
        target = out if k == len(operands) - 1 else keep
        cur = _einsum2(cur_s, ins[k], target, cur, operands[k])
        cur_s = target
    return cur


def inv(a):
    """Matrix inverse over the last two tensor axes."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    if a.rank != 2:
        raise ValueError("inv() expects a rank-2 jet")
    v = np.linalg.inv(a.val)
    d1 = d2 = None
    if a.order >= 1:
        vd = np.einsum("...ij,...jkp->...ikp", v, a.d1)
        d1 = -np.einsum("...ikp,...kl->...ilp", vd, v)
        if a.order >= 2:
            vdd = np.einsum("...ij,...jkpq->...ikpq", v, a.d2)
            t = np.einsum("...ijp,...jkq->...ikpq", vd, vd)
            d2 = np.einsum("...ikpq,...kl->...ilpq", t + t.swapaxes(-1, -2) - vdd, v)
    return Jet(v, d1, d2, a.nb)


def symmetrize(a):
    """Average a rank-2 tensor with its transpose (exact mirror)."""
    return (a + a.T) * 0.5 if isinstance(a, Jet) else 0.5 * (a + np.swapaxes(a, -1, -2))


def stack_vectors(vectors: Sequence) -> "Jet | np.ndarray":
    """Stack rank-1 jets (same batch rank) into a rank-2 jet ``(count, n)``."""
    if not any(isinstance(v, Jet) for v in vectors):
        return np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-2)
    jets = [v for v in vectors if isinstance(v, Jet)]
    nb = jets[0].nb
    order = min(j.order for j in jets)
    parts = [v._parts(order, 1) if isinstance(v, Jet) else Jet._const_parts(v, nb, 1) for v in vectors]
    bshape = np.broadcast_shapes(*(p[0].shape[:nb] for p in parts))
    nvar = next(j.d1.shape[-1] for j in jets) if order >= 1 else 0

    vals = [np.broadcast_to(p[0], bshape + p[0].shape[nb:]) for p in parts]
    val = np.stack(vals, axis=nb)
    d1 = d2 = None
    if order >= 1:
        size = vals[0].shape[nb:]
        d1 = np.stack(
            [
                np.broadcast_to(p[1], bshape + p[1].shape[nb:]) if p[1] is not None else np.zeros(bshape + size + (nvar,))
                for p in parts
            ],
            axis=nb,
        )
    if order >= 2:
        size = vals[0].shape[nb:]
        d2 = np.stack(
            [
                np.broadcast_to(p[2], bshape + p[2].shape[nb:]) if p[2] is not None else np.zeros(bshape + size + (nvar, nvar))
                for p in parts
            ],
            axis=nb,
        )
    return Jet(val, d1, d2, nb)
