"""Command-line driver.

    confsub run CONFIG.toml      run the configured suites and write a JSON report
    confsub list-models          list the built-in models
    confsub describe THEOREM_ID  print a theorem's hypothesis checklist

Exit status of ``run``: 0 when every executed check passes (or is not
applicable), 1 on a failing check (the first failure is named on stderr),
2 on a configuration error, 3 when the model cannot be constructed.
``describe`` with an unknown id is a usage error (status 2).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .criteria import THEOREM_IDS, describe, evaluate_criteria, quasi_einstein_check
from .errors import ConfigurationError, ConfsubError, UsageError
from .identities import (
    REDUCTIONS, IdentityReport, reduction_gaps, verify_conformal_curvature, verify_criterion_identities,
    verify_lcf_identities, verify_riemannian_formulas,
)
from .integration import divergence_residuals, random_vector_field
from .models import descriptor_of, list_models, make_model
from .report import build_report, dumps, validate
from .submersion import STRUCTURAL_IDS, SubmersionGeometry, SubmersionSpec, structural_residuals_per_point

SUITES = ("structural", "riemannian", "conformal", "lcf", "criteria", "quasi_einstein", "divergence")

DEFAULTS = {
    "suites": list(SUITES),
    "points": 50,
    "grid": 64,
    "criteria_grid": 12,
    "seed": 0,
    "fields": 10,
    "theorems": list(THEOREM_IDS),
    "output": None,
    "tolerance": {"identity": 1e-6, "hypothesis": 1e-6, "criterion": 1e-6, "divergence": 1e-4},
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2, 3

NOISE_FLOOR = 1e-12


# -- configuration ---------------------------------------------------------------------------------------


def _int(cfg: dict, key: str, lo: int) -> int:
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigurationError(f"{key} must be an integer")
    if v < lo:
        raise ConfigurationError(f"{key} must be at least {lo}, got {v}")
    return v


def resolve_config(raw: dict) -> dict:
    """Fill defaults and validate; raises :class:`ConfigurationError`."""
    known = set(DEFAULTS) | {"model"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(extra)}")
    model = raw.get("model")
    if not isinstance(model, dict) or not isinstance(model.get("name"), str):
        raise ConfigurationError("model.name is required")
    bad = sorted(set(model) - {"name", "params"})
    if bad:
        raise ConfigurationError(f"unknown model keys: {', '.join(bad)}")
    params = model.get("params", {})
    if not isinstance(params, dict):
        raise ConfigurationError("model.params must be a table")
    cfg = {k: v for k, v in DEFAULTS.items() if k != "tolerance"}
    cfg.update({k: v for k, v in raw.items() if k not in ("model", "tolerance")})
    cfg["model"] = {"name": model["name"], "params": params}

    suites = cfg["suites"]
    if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
        raise ConfigurationError("suites must be a list of names")
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigurationError(f"unknown suites: {', '.join(unknown)}; known: {', '.join(SUITES)}")
    cfg["suites"] = [s for s in SUITES if s in suites]
    theorems = cfg["theorems"]
    if not isinstance(theorems, list) or any(t not in THEOREM_IDS for t in theorems):
        raise ConfigurationError(f"theorems must be a list drawn from {', '.join(THEOREM_IDS)}")
    cfg["points"] = _int(cfg, "points", 1)
    cfg["grid"] = _int(cfg, "grid", 8)
    cfg["criteria_grid"] = _int(cfg, "criteria_grid", 2)
    cfg["fields"] = _int(cfg, "fields", 1)
    cfg["seed"] = _int(cfg, "seed", 0)
    if cfg["output"] is not None and not isinstance(cfg["output"], str):
        raise ConfigurationError("output must be a path string")

    tol = dict(DEFAULTS["tolerance"])
    given = raw.get("tolerance", {})
    if not isinstance(given, dict):
        raise ConfigurationError("tolerance must be a table")
    for k, v in given.items():
        if k not in tol:
            raise ConfigurationError(f"unknown tolerance {k!r}; known: {', '.join(tol)}")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigurationError(f"tolerance.{k} must be a positive number")
        tol[k] = float(v)
    cfg["tolerance"] = tol
    return cfg


def load_config(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return resolve_config(raw)


# -- suites -------------------------------------------------------------------------------------------------


def _identity_suite(reports: dict, tol: float) -> dict:
    failed = [k for k, r in reports.items() if not r.passed(tol)]
    return {
        "status": "failed" if failed else "passed",
        "failures": failed,
        "identities": {k: r.to_dict() for k, r in reports.items()},
    }


def _not_applicable(reason: str) -> dict:
    return {"status": "not-applicable", "reason": reason, "failures": []}


def _structural(spec, pts, cfg) -> dict:
    sg = SubmersionGeometry(spec, pts, base_geometry=False, fibre_geometry=False)
    per = structural_residuals_per_point(sg, cfg["seed"])
    total = np.max(np.stack([per[k] for k in STRUCTURAL_IDS]), axis=0)
    rep = IdentityReport(
        "EQ2_6", "checked", len(pts), float(np.max(total)),
        [(p, float(r)) for p, r in zip(pts, total)],
        parts={k: float(np.max(v)) for k, v in per.items()},
    )
    return _identity_suite({"EQ2_6": rep}, cfg["tolerance"]["identity"])


def _decomposition(spec, pts) -> IdentityReport:
    from .chart import Geometry

    desc = descriptor_of(spec)
    if desc.dim < 4:
        return IdentityReport("EQ2_1", "vacuous", 0, 0.0, [], reason="Weyl tensor needs dimension >= 4")
    geo = Geometry(desc.metric, [pts[:, i] for i in range(desc.dim)])
    res = np.abs(geo.decomposition_residual()).reshape(len(pts), -1).max(axis=1)
    return IdentityReport("EQ2_1", "checked", len(pts), float(res.max()), [(p, float(r)) for p, r in zip(pts, res)])


def _riemannian(spec, pts, cfg) -> dict:
    tol = cfg["tolerance"]["identity"]
    reps = {"EQ2_1": _decomposition(spec, pts)}
    if not spec.rigid:
        out = _identity_suite(reps, tol)
        out["reason"] = "conformal factor is not constant; Riemannian-submersion formulas not applicable"
        return out
    reps.update(verify_riemannian_formulas(spec, pts))
    return _identity_suite(reps, tol)


def _conformal(spec, pts, cfg) -> dict:
    reps = verify_conformal_curvature(spec, pts)
    out = _identity_suite(reps, cfg["tolerance"]["identity"])
    if spec.rigid:
        out["reduction_gaps"] = reduction_gaps(reps, verify_riemannian_formulas(spec, pts))
        out["reduction_pairs"] = {k: f"{v[0]} {v[1]}" for k, v in REDUCTIONS.items()}
    return out


def _lcf(spec, pts, cfg) -> dict:
    return _identity_suite(verify_lcf_identities(spec, pts), cfg["tolerance"]["identity"])


def _criteria(spec, pts, cfg) -> dict:
    tol = cfg["tolerance"]
    reports = evaluate_criteria(cfg["theorems"], spec, cfg["criteria_grid"], tol["criterion"], tol["hypothesis"])
    ids = verify_criterion_identities(spec, pts, tol["hypothesis"])
    failed = [f"theorem {k}" for k, r in reports.items() if not r.passed()]
    failed += [k for k, r in ids.items() if not r.passed(tol["identity"])]
    return {
        "status": "failed" if failed else "passed",
        "failures": failed,
        "criteria": {k: r.to_dict() for k, r in reports.items()},
        "identities": {k: r.to_dict() for k, r in ids.items()},
    }


def _quasi_einstein(model, pts, cfg) -> dict:
    tol = cfg["tolerance"]
    rep = quasi_einstein_check(model, pts, tol["identity"], tol["hypothesis"])
    return {
        "status": {"rigid-consistent": "passed", "violated": "failed"}.get(rep.verdict, "not-applicable"),
        "failures": ["QE"] if rep.verdict == "violated" else [],
        "criteria": {"QE": rep.to_dict()},
    }


def _divergence(model, cfg) -> dict:
    fields = [random_vector_field(model, cfg["seed"] * 1000 + i) for i in range(cfg["fields"])]
    fine = divergence_residuals(fields, model, cfg["grid"])
    coarse_n = max(8, cfg["grid"] // 2)
    coarse = divergence_residuals(fields, model, coarse_n) if coarse_n < cfg["grid"] else list(fine)
    tol = cfg["tolerance"]["divergence"]
    worst, worst_coarse = max(fine), max(coarse)
    decreasing = worst <= max(worst_coarse, NOISE_FLOOR)
    failed = []
    if worst > tol:
        failed.append("divergence residual")
    if not decreasing:
        failed.append("divergence refinement")
    return {
        "status": "failed" if failed else "passed",
        "failures": failed,
        "divergence": {
            "grid": cfg["grid"], "coarse_grid": coarse_n, "residuals": fine, "coarse_residuals": coarse,
            "max_residual": worst, "max_coarse_residual": worst_coarse, "tolerance": tol, "decreasing": decreasing,
        },
    }


def run_suites(model, cfg: dict) -> tuple[dict, list]:
    desc = descriptor_of(model)
    is_sub = isinstance(model, SubmersionSpec)
    pts = model.sample(cfg["points"], cfg["seed"]) if is_sub else None
    if not is_sub:
        from .chart import halton_points

        pts = halton_points(desc.domain, cfg["points"], cfg["seed"])
    suites, failures = {}, []
    for name in cfg["suites"]:
        if name == "divergence":
            out = _divergence(model, cfg)
        elif name == "quasi_einstein":
            out = _quasi_einstein(model, pts, cfg)
        elif not is_sub:
            out = _not_applicable("model is a manifold, not a submersion")
        else:
            out = {"structural": _structural, "riemannian": _riemannian, "conformal": _conformal,
                   "lcf": _lcf, "criteria": _criteria}[name](model, pts, cfg)
        suites[name] = out
        failures += [f"{name}/{f}" for f in out.get("failures", [])]
    return suites, failures


def run(cfg: dict) -> tuple[int, dict]:
    """Execute a resolved configuration; returns (exit status, report)."""
    try:
        model = make_model(cfg["model"]["name"], cfg["model"]["params"])
    except ConfigurationError:
        raise
    except ConfsubError as exc:
        return EXIT_MODEL, {"error": str(exc)}
    suites, failures = run_suites(model, cfg)
    code = EXIT_FAIL if failures else EXIT_OK
    status = {"passed": not failures, "exit_code": code, "first_failure": failures[0] if failures else None,
              "failures": failures}
    report = build_report(cfg, suites, status)
    validate(report)
    return code, report


# -- entry point ------------------------------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="confsub", description="Curvature identities and rigidity criteria "
                                 "for conformal submersions.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suites of a TOML configuration")
    r.add_argument("config")
    sub.add_parser("list-models", help="list built-in models")
    d = sub.add_parser("describe", help="hypothesis checklist of a theorem")
    d.add_argument("theorem_id")
    return ap


def main(argv=None) -> int:
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8")
    args = _parser().parse_args(argv)
    if args.command == "list-models":
        print(list_models())
        return EXIT_OK
    if args.command == "describe":
        try:
            print(describe(args.theorem_id))
        except UsageError as exc:
            print(f"confsub describe: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_MODEL:
        print(f"model construction error: {report['error']}", file=sys.stderr)
        return code
    text = dumps(report)
    if cfg["output"]:
        Path(cfg["output"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for name, suite in report["suites"].items():
        print(f"{name}: {suite['status']}", file=sys.stderr)
    if code != EXIT_OK:
        print(f"first failure: {report['status']['first_failure']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
