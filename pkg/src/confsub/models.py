"""Built-in chart-described manifolds and submersions.

Every model carries closed-form metadata (volume, constant scalar curvature,
Einstein constants, component structure) that is re-verified numerically when
the model is built; a model that fails its own checks raises
:class:`~confsub.errors.ModelConstructionError`.

S^3 uses Hopf coordinates ``(eta, xi1, xi2)`` with
``g = r^2 (d eta^2 + sin^2 eta d xi1^2 + cos^2 eta d xi2^2)``; the Hopf map is
then the affine map ``(eta, xi1, xi2) -> (2 eta, xi1 - xi2)`` onto S^2(r/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import i0

from . import jet as J
from .chart import ChartDomain, Geometry, MetricField, ScalarField, constant_field, halton_points
from .errors import ConfigurationError, ConfsubError, ModelConstructionError
from .submersion import SubmersionSpec, conformal_check

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Component:
    """A Riemannian factor of a product total space."""

    name: str
    coords: tuple
    einstein: float | None = None
    lcf: bool = False


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    params: dict
    metric: MetricField
    known: dict
    components: tuple
    embedding: Callable = field(compare=False)
    scalar_fn: Callable | None = field(default=None, compare=False)

    @property
    def domain(self) -> ChartDomain:
        return self.metric.domain

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def closed(self) -> bool:
        return True


# -- helpers ----------------------------------------------------------------------------------------


def diag(entries: list):
    n = len(entries)
    return J.array([[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)])


def _entry(m, i, j):
    if isinstance(m, J.Jet):
        return m[i, j]
    return float(np.asarray(m)[i, j]) if np.ndim(m) == 2 else np.asarray(m)[..., i, j]


def block_diag(blocks: list):
    dims = [b.tshape[-1] if isinstance(b, J.Jet) else np.shape(b)[-1] for b in blocks]
    n = sum(dims)
    rows = [[0.0] * n for _ in range(n)]
    off = 0
    for b, d in zip(blocks, dims):
        for i in range(d):
            for j in range(d):
                rows[off + i][off + j] = _entry(b, i, j)
        off += d
    return J.array(rows)


def trig_poly(coeffs: dict) -> Callable:
    """t -> c0 + sum_k (cos[k-1] cos(k t) + sin[k-1] sin(k t))."""
    c0 = float(coeffs.get("const", 0.0))
    cos = [float(c) for c in coeffs.get("cos", [])]
    sin = [float(c) for c in coeffs.get("sin", [])]

    def f(t):
        out = c0
        for k, c in enumerate(cos, start=1):
            if c:
                out = out + c * J.cos(t * k)
        for k, c in enumerate(sin, start=1):
            if c:
                out = out + c * J.sin(t * k)
        return out

    f.constant = not any(cos) and not any(sin)
    f.coeffs = {"const": c0, "cos": cos, "sin": sin}
    return f


def _trig_derivs(coeffs: dict, t):
    cos = coeffs["cos"]
    sin = coeffs["sin"]
    f1 = sum(-k * c * np.sin(k * t) for k, c in enumerate(cos, 1)) + sum(k * c * np.cos(k * t) for k, c in enumerate(sin, 1))
    f2 = sum(-k * k * c * np.cos(k * t) for k, c in enumerate(cos, 1)) + sum(-k * k * c * np.sin(k * t) for k, c in enumerate(sin, 1))
    return f1, f2


# -- elementary manifolds ------------------------------------------------------------------------------


def circle(r: float = 1.0) -> ModelDescriptor:
    r = _positive(r, "r")
    dom = ChartDomain([(0.0, TWO_PI)], [True], ["periodic"], ["t"])
    metric = MetricField(dom, lambda x: J.array([[r * r]]))
    return ModelDescriptor(
        "circle", {"r": r}, metric,
        {"volume": TWO_PI * r, "scalar": 0.0, "einstein": 0.0},
        (Component("circle", (0,), 0.0, True),),
        lambda x: [J.cos(x[0]), J.sin(x[0])],
    )


def flat_torus(n: int = 2, periods=None) -> ModelDescriptor:
    n = int(n)
    if n < 1:
        raise ConfigurationError("flat_torus needs n >= 1")
    periods = [TWO_PI] * n if periods is None else [float(p) for p in periods]
    if len(periods) != n or min(periods) <= 0:
        raise ConfigurationError("flat_torus periods must be n positive numbers")
    dom = ChartDomain([(0.0, p) for p in periods], [True] * n, ["periodic"] * n, [f"t{i}" for i in range(n)])
    eye = np.eye(n)
    metric = MetricField(dom, lambda x: eye)

    def emb(x):
        out = []
        for i, p in enumerate(periods):
            out += [J.cos(x[i] * (TWO_PI / p)), J.sin(x[i] * (TWO_PI / p))]
        return out

    return ModelDescriptor(
        "flat_torus", {"n": n, "periods": periods}, metric,
        {"volume": float(np.prod(periods)), "scalar": 0.0, "einstein": 0.0},
        (Component("flat_torus", tuple(range(n)), 0.0, True),),
        emb,
    )


def _s3_metric(r: float):
    def fn(x):
        return diag([r * r, r * r * J.sin(x[0]) ** 2, r * r * J.cos(x[0]) ** 2])

    return fn


def _s3_embedding(x, off: int = 0):
    e, a, b = x[off], x[off + 1], x[off + 2]
    return [J.sin(e) * J.cos(a), J.sin(e) * J.sin(a), J.cos(e) * J.cos(b), J.cos(e) * J.sin(b)]


S3_DOMAIN = ChartDomain([(0.0, math.pi / 2), (0.0, TWO_PI), (0.0, TWO_PI)], [False, True, True],
                        ["hopf", "periodic", "periodic"], ["eta", "xi1", "xi2"])


def sphere(n: int = 2, r: float = 1.0) -> ModelDescriptor:
    n = int(n)
    r = _positive(r, "r")
    if n == 2:
        dom = ChartDomain([(0.0, math.pi), (0.0, TWO_PI)], [False, True], ["polar:1", "periodic"], ["theta", "phi"])
        metric = MetricField(dom, lambda x: diag([r * r, r * r * J.sin(x[0]) ** 2]))

        def emb(x):
            return [J.sin(x[0]) * J.cos(x[1]), J.sin(x[0]) * J.sin(x[1]), J.cos(x[0])]

        vol = 4 * math.pi * r**2
    elif n == 3:
        dom = S3_DOMAIN
        metric = MetricField(dom, _s3_metric(r))
        emb = _s3_embedding
        vol = 2 * math.pi**2 * r**3
    elif n == 4:
        dom = ChartDomain([(0.0, math.pi)] * 3 + [(0.0, TWO_PI)], [False, False, False, True],
                          ["polar:3", "polar:2", "polar:1", "periodic"], ["t1", "t2", "t3", "phi"])

        def fn(x):
            s1, s2, s3 = J.sin(x[0]) ** 2, J.sin(x[1]) ** 2, J.sin(x[2]) ** 2
            return diag([r * r, r * r * s1, r * r * s1 * s2, r * r * s1 * s2 * s3])

        metric = MetricField(dom, fn)

        def emb(x):
            s1, s2, s3 = J.sin(x[0]), J.sin(x[1]), J.sin(x[2])
            return [J.cos(x[0]), s1 * J.cos(x[1]), s1 * s2 * J.cos(x[2]),
                    s1 * s2 * s3 * J.cos(x[3]), s1 * s2 * s3 * J.sin(x[3])]

        vol = 8 * math.pi**2 * r**4 / 3
    else:
        raise ConfigurationError(f"sphere supports n in {{2, 3, 4}}, got {n}")
    lam = (n - 1) / r**2
    return ModelDescriptor(
        "sphere", {"n": n, "r": r}, metric,
        {"volume": vol, "scalar": n * (n - 1) / r**2, "einstein": lam},
        (Component(f"S{n}", tuple(range(n)), lam, True),),
        emb,
    )


def product(factors: list) -> ModelDescriptor:
    if not factors:
        raise ConfigurationError("product needs at least one factor")
    models = [f if isinstance(f, ModelDescriptor) else _descriptor(f) for f in factors]
    dom = models[0].domain
    for m in models[1:]:
        dom = dom.product(m.domain)
    offs = np.cumsum([0] + [m.dim for m in models])

    def fn(x):
        return block_diag([m.metric.fn(x[o:o + m.dim]) for m, o in zip(models, offs)])

    def emb(x):
        out = []
        for m, o in zip(models, offs):
            out += m.embedding(x[o:o + m.dim])
        return out

    comps = []
    for m, o in zip(models, offs):
        for c in m.components:
            comps.append(Component(c.name, tuple(int(o) + i for i in c.coords), c.einstein, c.lcf))
    known = {"volume": float(np.prod([m.known["volume"] for m in models]))}
    if all(m.known.get("scalar") is not None for m in models):
        known["scalar"] = float(sum(m.known["scalar"] for m in models))
    lams = [m.known.get("einstein") for m in models]
    if all(lam is not None for lam in lams) and max(lams) - min(lams) < 1e-14:
        known["einstein"] = lams[0]
    if len(models) == 1:
        comps = list(models[0].components)
    return ModelDescriptor(
        "product", {"factors": [_params_of(m) for m in models]},
        MetricField(dom, fn), known, tuple(comps), emb,
    )


# -- submersions ---------------------------------------------------------------------------------------


def warped_s1_s3(f=None, project_to: str = "s3") -> SubmersionSpec:
    """S^1 x S^3 with g = dx^2 + e^{2 f(x)} g_{S^3}.

    ``project_to="s3"`` gives the conformal submersion ``(x, y) -> y`` with
    conformal factor ``f``; ``project_to="s1"`` gives the Riemannian submersion
    onto the circle whose fibres are the warped spheres.
    """
    coeffs = {"sin": [0.3]} if f is None else dict(f)
    fx = trig_poly(coeffs)
    amp = abs(fx.coeffs["const"]) * 0 + sum(abs(c) for c in fx.coeffs["cos"] + fx.coeffs["sin"])
    if amp > 0.5 + 1e-12:
        raise ConfigurationError("warped_s1_s3: keep the oscillating amplitude of f at most 0.5")
    dom = ChartDomain([(0.0, TWO_PI)], [True], ["periodic"], ["x"]).product(S3_DOMAIN)

    def fn(x):
        w = J.exp(fx(x[0]) * 2.0)
        return diag([1.0, w, w * J.sin(x[1]) ** 2, w * J.cos(x[1]) ** 2])

    metric = MetricField(dom, fn)
    c = fx.coeffs

    def scalar_fn(p):
        p = np.atleast_2d(p)
        t = p[:, 0]
        f0 = np.asarray(J.value(fx(t)), dtype=float)
        f1, f2 = _trig_derivs(c, t)
        return 6 * np.exp(-2 * f0) - 6 * f2 - 12 * f1**2

    nodes = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    if c["cos"] == [] and len(c["sin"]) == 1:
        vol_x = TWO_PI * math.exp(3 * c["const"]) * float(i0(3 * c["sin"][0]))
    else:
        vol_x = float(np.mean(np.exp(3 * np.asarray(J.value(fx(nodes)))))) * TWO_PI
    desc = ModelDescriptor(
        "warped_s1_s3", {"f": c, "project_to": project_to}, metric,
        {"volume": 2 * math.pi**2 * vol_x},
        (Component("S1xS3", (0, 1, 2, 3), None, True),),
        lambda x: [J.cos(x[0]), J.sin(x[0])] + _s3_embedding(x, 1),
        scalar_fn,
    )
    if project_to == "s3":
        jac = np.array([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
        f_field = ScalarField(dom, lambda x: fx(x[0]))
        if fx.constant:
            f_field = constant_field(dom, fx.coeffs["const"])
        meta = {"fibre_einstein": 0.0, "base_einstein": 2.0, "base_scalar": 6.0}
        return SubmersionSpec("warped_s1_s3", metric, MetricField(S3_DOMAIN, _s3_metric(1.0)), jac, np.zeros(3),
                              f_field, meta, desc)
    if project_to == "s1":
        base = MetricField(ChartDomain([(0.0, TWO_PI)], [True], ["periodic"], ["x"]), lambda x: J.array([[1.0]]))
        jac = np.array([[1, 0, 0, 0]], dtype=float)
        meta = {"base_einstein": 0.0, "base_scalar": 0.0}
        return SubmersionSpec("warped_s1_s3", metric, base, jac, np.zeros(1), constant_field(dom, 0.0), meta, desc)
    raise ConfigurationError("project_to must be 's3' or 's1'")


def hopf(r: float = 1.0, squash: float = 0.0, conformal: float = 0.0) -> SubmersionSpec:
    """Hopf fibration S^3(r) -> S^2(r/2).

    ``squash = a`` rescales the fibres: ``g = g_H + e^{2 a cos 2eta} r^2 theta^2``
    with ``theta = sin^2 eta d xi1 + cos^2 eta d xi2``.  ``conformal = b``
    multiplies the whole metric by ``e^{2 f}``, ``f = b sin(eta) cos(xi1)``,
    turning the map into a conformal submersion with factor ``f``.
    """
    r = _positive(r, "r")
    a, b = float(squash), float(conformal)
    ff = (lambda x: J.sin(x[0]) * J.cos(x[1]) * b) if b else None

    def fn(x):
        s2, c2 = J.sin(x[0]) ** 2, J.cos(x[0]) ** 2
        w = J.exp(J.cos(x[0] * 2.0) * (2 * a)) - 1.0 if a else 0.0
        th = [0.0, s2, c2]
        base = [[r * r, 0.0, 0.0], [0.0, r * r * s2, 0.0], [0.0, 0.0, r * r * c2]]
        rows = [[base[i][j] + (w * th[i] * th[j] * (r * r) if a and i and j else 0.0) for j in range(3)] for i in range(3)]
        if ff is not None:
            e = J.exp(ff(x) * 2.0)
            rows = [[e * v if not (isinstance(v, float) and v == 0.0) else 0.0 for v in row] for row in rows]
        return J.array(rows)

    metric = MetricField(S3_DOMAIN, fn)
    known = {}
    if not b:
        known["volume"] = 2 * math.pi**2 * r**3 * (math.sinh(a) / a if a else 1.0)
    if not a and not b:
        known.update({"scalar": 6.0 / r**2, "einstein": 2.0 / r**2})
    desc = ModelDescriptor(
        "hopf", {"r": r, "squash": a, "conformal": b}, metric, known,
        (Component("S3", (0, 1, 2), known.get("einstein"), not a),),
        _s3_embedding,
    )
    rb = r / 2
    base_dom = ChartDomain([(0.0, math.pi), (0.0, TWO_PI)], [False, True], ["polar:1", "periodic"], ["theta", "phi"])
    base = MetricField(base_dom, lambda y: diag([rb * rb, rb * rb * J.sin(y[0]) ** 2]))
    jac = np.array([[2, 0, 0], [0, 1, -1]], dtype=float)
    f_field = ScalarField(S3_DOMAIN, ff) if ff is not None else constant_field(S3_DOMAIN, 0.0)
    meta = {"fibre_einstein": 0.0, "base_einstein": 1.0 / rb**2, "base_scalar": 2.0 / rb**2}
    return SubmersionSpec("hopf", metric, base, jac, np.zeros(2), f_field, meta, desc)


def trivial_submersion(factors=None, base=None, f: float = 0.0) -> SubmersionSpec:
    """Product of ``factors`` projected onto the factors listed in ``base``.

    With constant ``f = c`` the base metric is ``e^{-2c}`` times the product of
    the base factors, so that ``g|_H = e^{2c} pi^* g_B``.
    """
    factors = factors or [{"name": "flat_torus", "n": 2}, {"name": "flat_torus", "n": 2}]
    base = [1] if base is None else [int(b) for b in base]
    models = [m if isinstance(m, ModelDescriptor) else _descriptor(m) for m in factors]
    if not base or any(b < 0 or b >= len(models) for b in base) or len(set(base)) != len(base):
        raise ConfigurationError("trivial_submersion: base must list distinct factor indices")
    if len(base) == len(models):
        raise ConfigurationError("trivial_submersion: at least one factor must remain as fibre")
    total = product(models)
    offs = np.cumsum([0] + [m.dim for m in models])
    base_models = [models[i] for i in base]
    bdom = base_models[0].domain
    for m in base_models[1:]:
        bdom = bdom.product(m.domain)
    boffs = np.cumsum([0] + [m.dim for m in base_models])
    scale = math.exp(-2.0 * float(f))

    def bfn(y):
        g = block_diag([m.metric.fn(y[o:o + m.dim]) for m, o in zip(base_models, boffs)])
        return g * scale

    rows = []
    for i in base:
        for k in range(models[i].dim):
            row = np.zeros(total.dim)
            row[offs[i] + k] = 1.0
            rows.append(row)
    jac = np.array(rows)
    fibre = [m for i, m in enumerate(models) if i not in base]
    lam_f = [m.known.get("einstein") for m in fibre]
    meta = {}
    if all(v is not None for v in lam_f) and max(lam_f) - min(lam_f) < 1e-14:
        meta["fibre_einstein"] = lam_f[0]
    lam_b = [m.known.get("einstein") for m in base_models]
    if all(v is not None for v in lam_b) and max(lam_b) - min(lam_b) < 1e-14:
        meta["base_einstein"] = lam_b[0] * scale
    if all(m.known.get("scalar") is not None for m in base_models):
        meta["base_scalar"] = sum(m.known["scalar"] for m in base_models) / scale
    desc = ModelDescriptor(
        "trivial_submersion", {"factors": [_params_of(m) for m in models], "base": base, "f": float(f)},
        total.metric, total.known, total.components, total.embedding,
    )
    return SubmersionSpec(
        "trivial_submersion", total.metric, MetricField(bdom, bfn), jac, np.zeros(len(rows)),
        constant_field(total.domain, float(f)), meta, desc,
    )


def conformal_torus(amplitude: float = 0.2) -> SubmersionSpec:
    """T^4 with g = e^{2f} delta, f = a (sin x1 + cos x3), projected onto (x1, x2).

    Locally conformally flat, dim B = dim F = 2, and the auxiliary metric is
    flat, so T = A = N = 0 while f varies both horizontally and vertically.
    """
    amp = float(amplitude)
    if abs(amp) > 0.5:
        raise ConfigurationError("conformal_torus amplitude must be at most 0.5")
    dom = ChartDomain([(0.0, TWO_PI)] * 4, [True] * 4, ["periodic"] * 4, ["x1", "x2", "x3", "x4"])

    def ffn(x):
        return (J.sin(x[0]) + J.cos(x[2])) * amp

    def fn(x):
        w = J.exp(ffn(x) * 2.0)
        return diag([w, w, w, w])

    metric = MetricField(dom, fn)
    nodes = np.linspace(0.0, TWO_PI, 512, endpoint=False)
    vol = TWO_PI**2 * float(np.mean(np.exp(4 * amp * np.sin(nodes)))) * float(np.mean(np.exp(4 * amp * np.cos(nodes)))) * TWO_PI**2
    desc = ModelDescriptor(
        "conformal_torus", {"amplitude": amp}, metric, {"volume": vol},
        (Component("T4", (0, 1, 2, 3), None, True),),
        lambda x: sum(([J.cos(x[i]), J.sin(x[i])] for i in range(4)), []),
    )
    base = MetricField(ChartDomain([(0.0, TWO_PI)] * 2, [True] * 2, ["periodic"] * 2, ["x1", "x2"]), lambda y: np.eye(2))
    jac = np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
    f_field = ScalarField(dom, ffn) if amp else constant_field(dom, 0.0)
    meta = {"base_einstein": 0.0, "base_scalar": 0.0}
    return SubmersionSpec("conformal_torus", metric, base, jac, np.zeros(2), f_field, meta, desc)


def biwarped_torus(a: float = 0.3, b: float = 0.1) -> SubmersionSpec:
    """T^4 with g = dx1^2 + dx2^2 + e^{2a sin x1} dx3^2 + e^{2b cos x1} dx4^2 onto (x1, x2).

    A Riemannian submersion with flat base whose torus fibres are neither
    totally geodesic nor (for a != b) totally umbilical.
    """
    a, b = float(a), float(b)
    dom = ChartDomain([(0.0, TWO_PI)] * 4, [True] * 4, ["periodic"] * 4, ["x1", "x2", "x3", "x4"])

    def fn(x):
        return diag([1.0, 1.0, J.exp(J.sin(x[0]) * (2 * a)), J.exp(J.cos(x[0]) * (2 * b))])

    metric = MetricField(dom, fn)
    nodes = np.linspace(0.0, TWO_PI, 512, endpoint=False)
    vol = TWO_PI**3 * float(np.mean(np.exp(a * np.sin(nodes) + b * np.cos(nodes)))) * TWO_PI
    desc = ModelDescriptor(
        "biwarped_torus", {"a": a, "b": b}, metric, {"volume": vol},
        (Component("T4", (0, 1, 2, 3), None, False),),
        lambda x: sum(([J.cos(x[i]), J.sin(x[i])] for i in range(4)), []),
    )
    base = MetricField(ChartDomain([(0.0, TWO_PI)] * 2, [True] * 2, ["periodic"] * 2, ["x1", "x2"]), lambda y: np.eye(2))
    jac = np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
    meta = {"base_einstein": 0.0, "base_scalar": 0.0}
    return SubmersionSpec("biwarped_torus", metric, base, jac, np.zeros(2), constant_field(dom, 0.0), meta, desc)


# -- registry --------------------------------------------------------------------------------------------

BUILDERS: dict[str, tuple[Callable, str]] = {
    "circle": (circle, "circle of radius r"),
    "flat_torus": (flat_torus, "flat n-torus with given periods"),
    "sphere": (sphere, "round n-sphere of radius r, n in {2,3,4}"),
    "product": (product, "Riemannian product of the listed factor models"),
    "warped_s1_s3": (warped_s1_s3, "S1 x S3 with g = dx^2 + e^{2f(x)} g_S3, projected to S3 (conformal) or S1"),
    "hopf": (hopf, "Hopf fibration S3(r) -> S2(r/2), optionally squashed and conformally deformed"),
    "trivial_submersion": (trivial_submersion, "product projected onto some of its factors, constant f"),
    "conformal_torus": (conformal_torus, "T4 with metric e^{2f} delta onto T2; locally conformally flat, dim B = dim F"),
    "biwarped_torus": (biwarped_torus, "T4 with two warped fibre directions onto flat T2; non-umbilical fibres"),
}

SUBMERSIONS = ("warped_s1_s3", "hopf", "trivial_submersion", "conformal_torus", "biwarped_torus")


def _params_of(m: ModelDescriptor) -> dict:
    return {"name": m.name, **m.params}


def _descriptor(spec: dict) -> ModelDescriptor:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigurationError(f"factor must be a mapping with a name, got {spec!r}")
    params = {k: v for k, v in spec.items() if k != "name"}
    out = _build(spec["name"], params)
    if not isinstance(out, ModelDescriptor):
        raise ConfigurationError(f"{spec['name']} is a submersion, not a manifold factor")
    return out


def _positive(v, name: str) -> float:
    v = float(v)
    if not v > 0:
        raise ConfigurationError(f"{name} must be positive")
    return v


def _build(name: str, params: dict):
    if name not in BUILDERS:
        raise ConfigurationError(f"unknown model {name!r}; known: {', '.join(sorted(BUILDERS))}")
    try:
        return BUILDERS[name][0](**params)
    except TypeError as exc:
        raise ConfigurationError(f"invalid parameters for {name}: {exc}") from exc
    except (ValueError, ConfsubError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid parameters for {name}: {exc}") from exc


def make_model(name: str, params: dict | None = None, verify: bool = True):
    """Build a named model and run its self-verification.

    Returns a :class:`ModelDescriptor` for plain manifolds and a
    :class:`~confsub.submersion.SubmersionSpec` for submersions.
    """
    out = _build(name, dict(params or {}))
    if verify:
        self_verify(out)
    return out


def descriptor_of(model) -> ModelDescriptor:
    return model.descriptor if isinstance(model, SubmersionSpec) else model


def list_models() -> str:
    lines = []
    for name in sorted(BUILDERS):
        kind = "submersion" if name in SUBMERSIONS else "manifold"
        lines.append(f"{name:20s} {kind:11s} {BUILDERS[name][1]}")
    return "\n".join(lines)


# -- self verification -------------------------------------------------------------------------------------


def self_verify(model, grid: int = 32, points: int = 5) -> dict:
    """Check every closed-form value the model claims; raise on mismatch."""
    from .integration import QuadratureGrid  # local import: integration depends on this module

    desc = descriptor_of(model)
    checks = {}
    try:
        qg = QuadratureGrid.build(desc.metric, grid)
        if "volume" in desc.known:
            vol = qg.volume()
            rel = abs(vol - desc.known["volume"]) / desc.known["volume"]
            checks["volume"] = rel
            if rel > 1e-6:
                raise ModelConstructionError(f"{desc.name}: volume {vol} vs known {desc.known['volume']}")
        pts = halton_points(desc.domain, points, seed=12345)
        geo = Geometry(desc.metric, [pts[:, i] for i in range(desc.dim)])
        if desc.known.get("scalar") is not None:
            err = float(np.max(np.abs(geo.scalar - desc.known["scalar"])))
            checks["scalar"] = err
            if err > 1e-6 * max(1.0, abs(desc.known["scalar"])):
                raise ModelConstructionError(f"{desc.name}: scalar curvature off by {err:.3e}")
        if desc.scalar_fn is not None:
            err = float(np.max(np.abs(geo.scalar - desc.scalar_fn(pts))))
            checks["scalar_fn"] = err
            if err > 1e-6:
                raise ModelConstructionError(f"{desc.name}: scalar curvature formula off by {err:.3e}")
        if desc.known.get("einstein") is not None:
            err = float(np.max(np.abs(geo.ricci - desc.known["einstein"] * geo.g)))
            checks["einstein"] = err
            if err > 1e-6:
                raise ModelConstructionError(f"{desc.name}: not Einstein with the claimed constant ({err:.3e})")
        if isinstance(model, SubmersionSpec):
            _ = model.vertical_basis
            res = conformal_check(model, pts)
            checks["conformal"] = res
            if res > 1e-9:
                raise ModelConstructionError(f"{desc.name}: conformal condition residual {res:.3e}")
    except ModelConstructionError:
        raise
    except ConfsubError as exc:
        raise ModelConstructionError(f"{desc.name}: self-verification failed: {exc}") from exc
    return checks
