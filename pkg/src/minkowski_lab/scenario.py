"""JSON scenarios: schema validation, the check registry and the batch runner."""

from __future__ import annotations

import copy
import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import jsonschema

from .ambient import field_from_config, parse_space
from .errors import HypothesisViolation, LabError, PreconditionError
from .identities import (chain, closure, divergence_residual, hm_identity, hm_multi_normal,
                         pseudo_sphere_vector_identity)
from .immersion import BUILTINS, builtin
from .quadrature import QuadratureConfig
from .rigidity import alexandrov_probe, koh_probe
from .spectral import garay_check, lambda1, steklov_p1, triangulate

SCHEMA_ID = "minkowski-lab/1"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_HYPOTHESIS = 2
EXIT_SCHEMA = 64


class ScenarioError(LabError):
    """Scenario fails validation; ``path`` points into the JSON document."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# schema

_weight = {"oneOf": [{"type": "string"}, {"type": "number"}]}
_field_label = {"enum": ["Position", "Constant", "PseudoSphereConformal", "PolarRadial"]}
_field = {"oneOf": [
    _field_label,
    {"type": "object", "required": ["label"], "properties": {
        "label": _field_label,
        "Z0": {"type": "array", "items": {"type": "number"}},
        "origin": {"type": "array", "items": {"type": "number"}},
        "pole": {"type": "array", "items": {"type": "number"}},
    }, "additionalProperties": False},
]}
_tol = {"type": "number", "exclusiveMinimum": 0}
_k = {"type": "integer", "minimum": 0}

CHECK_PARAMS = {
    "hm_identity": {"k": _k, "f": _weight, "field": _field, "tol": _tol, "refine": {"type": "boolean"}},
    "hm_multi_normal": {
        "normals": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "f": _weight, "field": _field, "tol": _tol, "refine": {"type": "boolean"},
    },
    "closure": {"k": _k, "tol": _tol},
    "chain": {
        "k": {"type": "integer", "minimum": 1},
        "variant": {"enum": ["euc_area", "euc_volume", "sphere_tan", "sphere_sin", "sphere_volume",
                             "hyper_sinh", "hyper_volume"]},
        "p": {"type": "number"}, "tol": _tol,
    },
    "vector_identity": {"k": _k, "f": _weight, "tol": _tol, "refine": {"type": "boolean"}},
    "divergence_residual": {
        "tensor": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "f": _weight, "field": _field, "tol": _tol, "refine": {"type": "boolean"},
    },
    "rigidity_probe": {
        "variant": {"enum": ["alex_r", "alex_u", "alex2", "alex3", "koh"]},
        "f": _weight, "k": {"type": "integer", "minimum": 1}, "l": {"type": "integer", "minimum": 1},
        "field": _field, "eps_h": _tol, "eps_u": _tol,
    },
    "lambda1": {"k": _k, "vertices": {"type": "integer", "minimum": 12}, "richardson": {"type": "boolean"}},
    "garay": {"k": _k, "vertices": {"type": "integer", "minimum": 12}, "richardson": {"type": "boolean"}},
    "steklov": {
        "domain": {
            "type": "object", "required": ["shape"],
            "properties": {"shape": {"enum": ["disk", "ellipse", "expr"]}, "R": {"type": "number", "exclusiveMinimum": 0},
                           "a": {"type": "number", "exclusiveMinimum": 0}, "b": {"type": "number", "exclusiveMinimum": 0},
                           "rho": {"type": "string"}},
            "additionalProperties": False,
        },
        "density": {"type": "integer", "minimum": 8}, "richardson": {"type": "boolean"},
    },
}
CHECK_REQUIRED = {"hm_multi_normal": ["normals"], "chain": ["k"], "rigidity_probe": ["variant"],
                  "steklov": ["domain"]}
NEEDS_SURFACE = set(CHECK_PARAMS) - {"steklov"}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["ambient", "checks"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "ambient": {"type": "string"},
        "surface": {
            "type": "object", "required": ["label"],
            "properties": {"label": {"enum": sorted(BUILTINS)}, "params": {"type": "object"}},
            "additionalProperties": False,
        },
        "checks": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "required": ["check_id"],
                      "properties": {"check_id": {"enum": sorted(CHECK_PARAMS)}}},
        },
        "quadrature": {
            "type": "object",
            "properties": {"interval_nodes": {"type": "integer", "minimum": 2},
                           "periodic_nodes": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "output": {"type": "object", "properties": {"dir": {"type": "string"}}, "additionalProperties": False},
    },
    "additionalProperties": False,
}


def check_schema(check_id: str) -> dict:
    props = dict(CHECK_PARAMS[check_id])
    props["check_id"] = {"const": check_id}
    return {"type": "object", "properties": props, "required": ["check_id"] + CHECK_REQUIRED.get(check_id, []),
            "additionalProperties": False}


def _pointer(base: str, path) -> str:
    out = base
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _first_error(validator, doc, base: str):
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        raise ScenarioError(e.message, _pointer(base, e.absolute_path))


def validate(doc) -> dict:
    """Validate a scenario document; raise ScenarioError with a JSON path on the first problem."""
    _first_error(jsonschema.Draft7Validator(SCENARIO_SCHEMA), doc, "$")
    for i, chk in enumerate(doc["checks"]):
        _first_error(jsonschema.Draft7Validator(check_schema(chk["check_id"])), chk, f"$.checks[{i}]")
        if chk["check_id"] in NEEDS_SURFACE and "surface" not in doc:
            raise ScenarioError(f"check {chk['check_id']!r} needs a surface", "$.surface")
    try:
        parse_space(doc["ambient"])
    except LabError as exc:
        raise ScenarioError(str(exc), "$.ambient") from None
    try:
        QuadratureConfig.from_dict(doc.get("quadrature"))
    except LabError as exc:
        raise ScenarioError(str(exc), "$.quadrature") from None
    return doc


def load(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}") from None
    return validate(doc)


# ---------------------------------------------------------------------------
# checks

@dataclass
class CheckResult:
    index: int
    check: dict
    verdict: str  # pass, fail, hypothesis_violation, error
    report: dict

    @property
    def exit_class(self) -> int:
        if self.verdict == "pass":
            return EXIT_PASS
        if self.verdict == "hypothesis_violation":
            return EXIT_HYPOTHESIS
        return EXIT_FAIL


def _scaled(chk: dict, key: str, default: float, scale: float) -> float:
    return float(chk.get(key, default)) * scale


def _fld(imm, chk):
    return field_from_config(imm.ambient, chk.get("field"))


def _run_hm(imm, chk, cfg, s):
    return hm_identity(imm, _fld(imm, chk), chk.get("f", "1"), chk.get("k", 0), cfg,
                       _scaled(chk, "tol", 1e-7, s), chk.get("refine", True))


def _run_multi(imm, chk, cfg, s):
    return hm_multi_normal(imm, chk["normals"], _fld(imm, chk), chk.get("f", "1"), cfg,
                           _scaled(chk, "tol", 1e-8, s), chk.get("refine", True))


def _run_closure(imm, chk, cfg, s):
    return closure(imm, chk.get("k", 0), cfg, _scaled(chk, "tol", 1e-8, s))


def _run_chain(imm, chk, cfg, s):
    return chain(imm, chk["k"], chk.get("variant", _default_chain(imm)), cfg, _scaled(chk, "tol", 1e-9, s),
                 chk.get("p", 0.0))


def _default_chain(imm) -> str:
    return {"flat": "euc_area", "sphere": "sphere_tan", "hyperbolic": "hyper_sinh"}.get(imm.ambient.family, "euc_area")


def _run_vector(imm, chk, cfg, s):
    return pseudo_sphere_vector_identity(imm, chk.get("f", "1"), chk.get("k", 0), cfg,
                                         _scaled(chk, "tol", 1e-7, s), chk.get("refine", True))


def _run_div(imm, chk, cfg, s):
    return divergence_residual(imm, chk.get("tensor", "T1"), chk.get("f", "1"), _fld(imm, chk), cfg,
                               _scaled(chk, "tol", 1e-8, s), chk.get("refine", True))


def _run_probe(imm, chk, cfg, s):
    eps_h = _scaled(chk, "eps_h", 1e-7, s)
    eps_u = _scaled(chk, "eps_u", 1e-6, s)
    if chk["variant"] == "koh":
        return koh_probe(imm, field_from_config(imm.ambient, chk["field"]) if "field" in chk else None, cfg, eps_h, eps_u)
    return alexandrov_probe(imm, chk.get("f", "1"), chk.get("k", 1), chk["variant"], chk.get("l", 1), cfg, eps_h, eps_u)


def _run_lambda1(imm, chk, cfg, s):
    return lambda1(triangulate(imm, chk.get("vertices", 10000)), chk.get("k", 0), chk.get("richardson", True))


def _run_garay(imm, chk, cfg, s):
    return garay_check(triangulate(imm, chk.get("vertices", 10000)), chk.get("k", 0), cfg, chk.get("richardson", True))


def _run_steklov(imm, chk, cfg, s):
    return steklov_p1(chk["domain"], chk.get("density", 256), chk.get("richardson", True))


CHECKS: dict = {
    "hm_identity": _run_hm,
    "hm_multi_normal": _run_multi,
    "closure": _run_closure,
    "chain": _run_chain,
    "vector_identity": _run_vector,
    "divergence_residual": _run_div,
    "rigidity_probe": _run_probe,
    "lambda1": _run_lambda1,
    "garay": _run_garay,
    "steklov": _run_steklov,
}


def _verdict_of(rep) -> str:
    v = getattr(rep, "verdict", None)
    if v is not None:
        return v
    # rigidity probes carry no verdict of their own: consistency is the contract
    if rep.violations:
        return "hypothesis_violation"
    return "pass" if rep.consistent else "fail"


def run_check(imm, index: int, chk: dict, cfg: QuadratureConfig, tol_scale: float = 1.0) -> CheckResult:
    try:
        rep = CHECKS[chk["check_id"]](imm, chk, cfg, tol_scale)
    except (HypothesisViolation, PreconditionError) as exc:
        return CheckResult(index, chk, "hypothesis_violation", {"error": str(exc), "error_type": type(exc).__name__})
    except LabError as exc:
        return CheckResult(index, chk, "error", {"error": str(exc), "error_type": type(exc).__name__})
    return CheckResult(index, chk, _verdict_of(rep), rep.to_dict())


def build_surface(doc: dict):
    if "surface" not in doc:
        return None
    surf = doc["surface"]
    params = dict(surf.get("params", {}))
    try:
        imm = builtin(surf["label"], params)
    except LabError as exc:
        raise ScenarioError(str(exc), "$.surface.params") from None
    want = parse_space(doc["ambient"])
    if str(want) != str(imm.ambient):
        raise ScenarioError(f"surface lives in {imm.ambient}, scenario declares {want}", "$.ambient")
    return imm


def run_scenario(doc: dict, threads: int = 1, tol_scale: float = 1.0) -> list:
    """Run every check (in a pool of ``threads`` workers); results come back in check order."""
    doc = validate(doc)
    imm = build_surface(doc)
    cfg = QuadratureConfig.from_dict(doc.get("quadrature"))
    checks = list(enumerate(doc["checks"]))

    def work(item):
        i, chk = item
        return run_check(imm, i, chk, cfg, tol_scale)

    if threads <= 1:
        return [work(c) for c in checks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, checks))


def exit_code(results) -> int:
    classes = {r.exit_class for r in results}
    if EXIT_FAIL in classes:
        return EXIT_FAIL
    if EXIT_HYPOTHESIS in classes:
        return EXIT_HYPOTHESIS
    return EXIT_PASS


# ---------------------------------------------------------------------------
# output

def report_document(doc: dict, res: CheckResult, tol_scale: float) -> dict:
    return {
        "schema": SCHEMA_ID,
        "scenario": doc.get("name", ""),
        "ambient": doc["ambient"],
        "surface": doc.get("surface"),
        "quadrature": QuadratureConfig.from_dict(doc.get("quadrature")).to_dict(),
        "tol_scale": tol_scale,
        "index": res.index,
        "check": res.check,
        "verdict": res.verdict,
        "report": res.report,
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def scalars(report: dict, prefix: str = "") -> dict:
    """Top-level numeric and boolean fields of a report, flattened one level into nested dicts."""
    out = {}
    for key in sorted(report):
        v = report[key]
        if isinstance(v, bool) or isinstance(v, (int, float)):
            out[prefix + key] = v
        elif isinstance(v, dict) and not prefix:
            out.update(scalars(v, prefix=f"{key}."))
    return out


def table_csv(rows: list) -> str:
    cols = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    head = [c for c in cols if c in ("value", "index", "check_id", "verdict")]
    rest = sorted(c for c in cols if c not in head)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=head + rest, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _fmt(r.get(c, "")) for c in head + rest})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def result_rows(results, extra: Optional[dict] = None) -> list:
    rows = []
    for r in results:
        row = dict(extra or {})
        row.update({"index": r.index, "check_id": r.check["check_id"], "verdict": r.verdict})
        row.update(scalars(r.report))
        rows.append(row)
    return rows


def write_outputs(doc: dict, results, out_dir: str, tol_scale: float, metadata: dict) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for r in results:
        p = os.path.join(out_dir, f"{r.index:02d}_{r.check['check_id']}.json")
        with open(p, "w") as fh:
            fh.write(dumps(report_document(doc, r, tol_scale)))
        paths.append(p)
    with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
        fh.write(table_csv(result_rows(results)))
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        fh.write(dumps(metadata))
    return paths


# ---------------------------------------------------------------------------
# sweeps

def set_path(doc: dict, path: str, value) -> dict:
    """Copy of ``doc`` with the dotted path (list indices as integers) set to value."""
    out = copy.deepcopy(doc)
    parts = path.split(".")
    cur = out
    for i, p in enumerate(parts[:-1]):
        key = int(p) if isinstance(cur, list) else p
        try:
            cur = cur[key]
        except (KeyError, IndexError, TypeError):
            raise ScenarioError(f"sweep axis {path!r} does not exist", "$." + ".".join(parts[:i + 1])) from None
    last = parts[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    elif isinstance(cur, dict):
        old = cur.get(last)
        if old is not None and (isinstance(old, bool) or not isinstance(old, (int, float))):
            raise ScenarioError(f"sweep axis {path!r} is not numeric", "$." + path)
        cur[last] = value
    else:
        raise ScenarioError(f"sweep axis {path!r} does not exist", "$." + path)
    return out


def sweep(doc: dict, axis: str, values, threads: int = 1, tol_scale: float = 1.0):
    """One row per (value, check) with every report scalar; returns (rows, exit code)."""
    rows, codes = [], []
    for v in values:
        d = set_path(doc, axis, v)
        res = run_scenario(d, threads, tol_scale)
        codes.append(exit_code(res))
        rows.extend(result_rows(res, {"value": v}))
    code = EXIT_FAIL if EXIT_FAIL in codes else (EXIT_HYPOTHESIS if EXIT_HYPOTHESIS in codes else EXIT_PASS)
    return rows, code


def describe_checks() -> str:
    lines = []
    for cid in sorted(CHECK_PARAMS):
        lines.append(f"{cid}")
        lines.append("  " + json.dumps(check_schema(cid)["properties"], sort_keys=True))
    return "\n".join(lines) + "\n"


def describe_surfaces() -> str:
    lines = []
    for label in sorted(BUILTINS):
        lines.append(label)
        for k, doc in BUILTINS[label][1].items():
            lines.append(f"  {k}: {doc}")
    return "\n".join(lines) + "\n"
