"""JSON run reports: deterministic serialization and schema validation.

Keys are sorted and every float is written with 17 significant digits, so
two runs with the same configuration produce byte-identical files.
Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import json
import math
import re
from importlib import resources

import numpy as np

from . import __version__

SCHEMA_VERSION = "report-v1"
TOOL_NAME = "confsub"

CONVENTIONS = {
    "riemann": "R(X,Y,Z,W) = g(nabla_Y nabla_X Z - nabla_X nabla_Y Z + nabla_[X,Y] Z, W); R(X,Y,X,Y) = +K",
    "ricci": "Ric(Y,W) = sum over an orthonormal frame of R(E,Y,E,W); unit n-sphere has Ric = (n-1) g",
    "hessian": "Hess f = d^2 f - Gamma df",
    "laplacian": "lap f = div grad f (non-positive spectrum)",
    "divergence": "div X = trace of nabla X, no sign",
    "kulkarni_nomizu": "(h o k)(X,Y,Z,W) = h(X,Z)k(Y,W) + h(Y,W)k(X,Z) - h(X,W)k(Y,Z) - h(Y,Z)k(X,W)",
    "fundamental_tensors": "T, A and N are built from the auxiliary metric e^{-2f} g",
    "derivative_terms": "derivatives of T, A and N inside the curvature relations use the connection of g",
    "norms": "|T|^2 and |A|^2 sum |T_E F|^2 and |A_E F|^2 over orthonormal frames; Hopf S3(1) -> S2(1/2) has |A|^2 = 2",
    "mixed_pairing": "g(T_U, A_X) = sum_i g(T_U X_i, A_X X_i)",
    "hat_delta_N": "hat delta N = -sum_i g(nabla_{X_i} N, X_i)",
    "check_delta_N": "check delta N = -sum_j g(nabla_{U_j} N, U_j)",
    "quasi_einstein": "Ric + Hess h - (1/m) dh (x) dh = lambda g; m = infinite drops the dh term",
}

_MARK = "@@f17@@"
_MARK_RE = re.compile(r'"' + re.escape(_MARK) + r'([^"]*)"')


def _prepare(obj):
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_prepare(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _MARK + format(x, ".17g")
    return obj


def dumps(report: dict) -> str:
    """Serialize with sorted keys and 17-significant-digit floats."""
    text = json.dumps(_prepare(report), sort_keys=True, indent=2, ensure_ascii=False)
    # ".17g" output such as "1e-05" or "3" is already a valid JSON number
    return _MARK_RE.sub(lambda m: m.group(1), text) + "\n"


def load_schema() -> dict:
    return json.loads(resources.files("confsub").joinpath("schema", f"{SCHEMA_VERSION}.json").read_text())


def validate(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if the report does not match the shipped schema."""
    import jsonschema

    jsonschema.validate(json.loads(dumps(report)), load_schema())


def build_report(config: dict, suites: dict, status: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": __version__},
        "config": config,
        "conventions": dict(CONVENTIONS),
        "suites": suites,
        "status": status,
    }
