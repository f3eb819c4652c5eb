"""Command line front end: JSON run configs in, JSON/CSV reports out.

Exit codes: 0 all checks pass, 2 a verification failed, 3 a charge did not
converge, 4 the configuration (or output location) is invalid, 5 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import platform
import re
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import verify
from .backgrounds import (
    FlatIsometry,
    LorentzIsometry,
    StaticPotential,
    adm_constant,
    boost,
    flat,
    hyperbolic,
    kernel_basis,
    rotation,
)
from .charge import ChargeReport, Perturbation, total_charge
from .errors import AsympChargeError, ConfigError, ExpressionError, IoError, NonConvergent, NotAnIsometry, NumericalError, UnsupportedKernel, WrongBackground
from .expr import parse
from .fields import covector_field, scalar_field, tensor_field, vector_field
from .surface import QuadratureRule, coord_sphere, ellipsoid, parametrized_surface

EXIT_OK, EXIT_FAIL, EXIT_NONCONVERGENT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3, 4, 5
COMMANDS = ("compute", "invariance", "cancel", "kid", "equivariance", "bounds", "validate")

_expr = {"type": "string", "minLength": 1}
_num = {"type": "number"}
_matrix = {"type": "array", "items": {"type": "array", "items": _expr}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["background"],
    "properties": {
        "description": {"type": "string"},
        "background": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["flat", "hyperbolic"]},
                "n": {"type": "integer", "minimum": 2, "maximum": 6},
                "lam0": {"type": ["number", "null"]},
                "r_min": {"type": "number", "minimum": 0},
            },
        },
        "operator": {"enum": ["scal", "constraints"]},
        "params": {"type": "object", "additionalProperties": _num},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gdot": _matrix,
                "metric": _matrix,
                "conformal": _expr,
                "kdot": _matrix,
                "label": {"type": "string"},
            },
        },
        "potentials": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "string"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["label"],
                        "properties": {"label": {"type": "string"}, "f": _expr, "alpha": {"type": "array", "items": _expr}},
                    },
                ]
            },
        },
        "zeta": {
            "type": "object",
            "additionalProperties": False,
            "required": ["components"],
            "properties": {
                "components": {"type": "array", "items": _expr},
                "form": {"enum": ["vector", "ambient_covector"]},
                "tau": {"type": ["number", "null"]},
                "label": {"type": "string"},
            },
        },
        "surfaces": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "theta_order": {"type": "integer", "minimum": 2},
                "phi_count": {"type": "integer", "minimum": 3},
                "ellipsoids": {"type": "array", "items": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 3, "maxItems": 3}},
                "parametrized": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["components"],
                        "properties": {"label": {"type": "string"}, "components": {"type": "array", "items": _expr, "minItems": 3, "maxItems": 3}},
                    },
                },
            },
        },
        "isometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["rotation", "boost", "matrix"]},
                "angle": _num,
                "axes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
                "rapidity": _num,
                "axis": {"type": "integer", "minimum": 1},
                "matrix": {"type": "array", "items": {"type": "array", "items": _num}},
                "translation": {"type": "array", "items": _num},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "charge_rtol": {"type": "number", "exclusiveMinimum": 0},
                "charge_atol": {"type": ["number", "null"], "minimum": 0},
                "quadrature": {"type": ["number", "null"], "minimum": 0},
                "kid": {"type": "number", "exclusiveMinimum": 0},
                "cancel": {"type": "number", "exclusiveMinimum": 0},
                "invariance_rtol": {"type": "number", "exclusiveMinimum": 0},
                "invariance_atol": {"type": ["number", "null"], "minimum": 0},
                "equivariance_rtol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "r_lo": {"type": "number", "exclusiveMinimum": 0},
                "r_hi": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"draws": {"type": "integer", "minimum": 4}, "geodesic_samples": {"type": "integer", "minimum": 2}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "stem": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                "normalization": {"enum": ["raw", "adm"]},
                "csv": {"type": "boolean"},
            },
        },
    },
}

DEFAULTS = {
    "background": {"n": 3, "lam0": None, "r_min": 1e-3},
    "operator": "scal",
    "params": {},
    "surfaces": {"theta_order": 24, "phi_count": 48, "ellipsoids": [], "parametrized": []},
    "tolerances": {
        "charge_rtol": 1e-3,
        "charge_atol": None,
        "quadrature": None,
        "kid": verify.KID_TOL,
        "cancel": verify.CANCEL_TOL,
        "invariance_rtol": 1e-2,
        "invariance_atol": None,
        "equivariance_rtol": 1e-3,
    },
    "sampling": {"points": 1000, "seed": 0, "r_lo": 1.0, "r_hi": 3.0},
    "bounds": {"draws": 100, "geodesic_samples": 16},
    "output": {"dir": ".", "stem": "report", "normalization": "raw", "csv": True},
}


# --- configuration --------------------------------------------------------------------------


def _pointer(path):
    return "/" + "/".join(str(p) for p in path) if path else "/"


def _with_defaults(raw):
    cfg = copy.deepcopy(raw)
    for key, default in DEFAULTS.items():
        if isinstance(default, dict):
            block = cfg.setdefault(key, {})
            for k, v in default.items():
                block.setdefault(k, copy.deepcopy(v))
        else:
            cfg.setdefault(key, default)
    if "zeta" in cfg:
        cfg["zeta"].setdefault("form", "vector")
        cfg["zeta"].setdefault("tau", None)
    return cfg


def config_hash(cfg):
    """sha256 of the canonical JSON form (sorted keys, no whitespace).

    The output directory is where results go, not what they are, so it is left out.
    """
    cfg = copy.deepcopy(cfg)
    cfg.get("output", {}).pop("dir", None)
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class RunConfig:
    """A validated configuration with defaults filled in."""

    data: dict
    hash: str

    @property
    def n(self):
        return self.data["background"]["n"]

    @property
    def kind(self):
        return self.data["operator"]

    @property
    def params(self):
        return self.data["params"]

    def background(self):
        b = self.data["background"]
        make = flat if b["kind"] == "flat" else hyperbolic
        return make(b["n"], lam0=b["lam0"], r_min=b["r_min"])

    def rule(self):
        s = self.data["surfaces"]
        return QuadratureRule(s["theta_order"], s["phi_count"])

    def require(self, *blocks):
        for b in blocks:
            if b not in self.data:
                raise ConfigError("block required by this command is missing", _pointer([b]))

    def radii(self):
        self.require("surfaces")
        if "radii" not in self.data["surfaces"]:
            raise ConfigError("radii required by this command are missing", "/surfaces/radii")
        return [float(r) for r in self.data["surfaces"]["radii"]]

    def rng(self):
        return np.random.default_rng(self.data["sampling"]["seed"])


def _parse_checked(text, pointer, n, params, chart):
    try:
        return parse(text, n, params, chart)
    except ExpressionError as exc:
        raise ConfigError(f"expression {text!r}: {exc}", pointer) from None


def _check_matrix(mat, pointer, n, params, chart):
    if len(mat) != n or any(len(row) != n for row in mat):
        raise ConfigError(f"expected an {n}x{n} array of expressions", pointer)
    for i, row in enumerate(mat):
        for j, t in enumerate(row):
            _parse_checked(t, f"{pointer}/{i}/{j}", n, params, chart)


def _semantic_checks(cfg):
    b = cfg["background"]
    n, params = b["n"], cfg["params"]
    chart = "cartesian" if b["kind"] == "flat" else "polar"
    if cfg["operator"] == "constraints" and b["lam0"] is None:
        raise ConfigError("the constraints operator needs background.lam0", "/background/lam0")
    if "data" in cfg:
        d = cfg["data"]
        given = [k for k in ("gdot", "metric", "conformal") if k in d]
        if len(given) != 1:
            raise ConfigError("give exactly one of gdot, metric, conformal", "/data")
        for key in ("gdot", "metric", "kdot"):
            if key in d:
                _check_matrix(d[key], f"/data/{key}", n, params, chart)
        if "conformal" in d:
            _parse_checked(d["conformal"], "/data/conformal", n, params, chart)
    for k, item in enumerate(cfg.get("potentials", [])):
        if isinstance(item, dict):
            if "f" in item:
                _parse_checked(item["f"], f"/potentials/{k}/f", n, params, chart)
            if "alpha" in item:
                if len(item["alpha"]) != n:
                    raise ConfigError(f"alpha needs {n} components", f"/potentials/{k}/alpha")
                for i, t in enumerate(item["alpha"]):
                    _parse_checked(t, f"/potentials/{k}/alpha/{i}", n, params, chart)
            if "f" not in item and "alpha" not in item:
                raise ConfigError("explicit potential needs f or alpha", f"/potentials/{k}")
    if "zeta" in cfg:
        z = cfg["zeta"]
        if len(z["components"]) != n:
            raise ConfigError(f"zeta needs {n} components", "/zeta/components")
        zchart = "cartesian" if z["form"] == "ambient_covector" else chart
        for i, t in enumerate(z["components"]):
            _parse_checked(t, f"/zeta/components/{i}", n, params, zchart)
    s = cfg["surfaces"]
    radii = s.get("radii", [])
    if any(b2 <= a for a, b2 in zip(radii, radii[1:])):
        raise ConfigError("radii must be strictly increasing", "/surfaces/radii")
    for k, p in enumerate(s["parametrized"]):
        for i, t in enumerate(p["components"]):
            _parse_checked(t, f"/surfaces/parametrized/{k}/components/{i}", 2, params, "cartesian")
    if (s["ellipsoids"] or s["parametrized"]) and (b["kind"] != "flat" or n != 3):
        raise ConfigError("non-spherical surfaces need a flat background with n = 3", "/surfaces")
    smp = cfg["sampling"]
    if smp["r_hi"] <= smp["r_lo"]:
        raise ConfigError("r_hi must exceed r_lo", "/sampling/r_hi")
    if "isometry" in cfg:
        iso = cfg["isometry"]
        want = "flat" if iso["kind"] == "rotation" else "hyperbolic" if iso["kind"] == "boost" else b["kind"]
        if want != b["kind"]:
            raise ConfigError(f"a {iso['kind']} isometry does not act on the {b['kind']} background", "/isometry/kind")


def validate_config(raw):
    """Schema plus expression checks; returns a :class:`RunConfig` or raises ConfigError."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            allowed = set(err.schema.get("properties", {}))
            extra = sorted(k for k in err.instance if k not in allowed)
            if extra:
                raise ConfigError(f"unknown key {extra[0]!r}", _pointer(path + [extra[0]]))
        raise ConfigError(err.message, _pointer(path))
    cfg = _with_defaults(raw)
    _semantic_checks(cfg)
    return RunConfig(cfg, config_hash(cfg))


def bundled_configs():
    root = resources.files("asympcharge") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _resolve(path):
    p = Path(path)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if str(p) == p.name and name in bundled_configs():
        return Path(str(resources.files("asympcharge") / "configs" / f"{name}.json"))
    raise ConfigError(f"config file not found: {path}", "")


def load_config(path, overrides=None):
    """Read, merge flag overrides (dotted keys), validate."""
    p = _resolve(path)
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "") from None
    for key, value in (overrides or {}).items():
        block, leaf = key.split(".")
        raw.setdefault(block, {})[leaf] = value
    return validate_config(raw)


# --- building objects from a config ---------------------------------------------------------


def build_perturbation(rc, bg):
    rc.require("data")
    d = rc.data["data"]
    n, params, chart = rc.n, rc.params, bg.chart
    label = d.get("label", "data")
    if "gdot" in d:
        gdot = tensor_field(d["gdot"], n, params, chart, label=label)
    elif "metric" in d:
        gdot = tensor_field(d["metric"], n, params, chart, label=label) - bg.metric
    else:
        phi = scalar_field(d["conformal"], n, params, chart)
        gdot = bg.metric.scale(phi) - bg.metric
    gdot.symmetry = ("symmetric", (0, 1))
    kdot = tensor_field(d["kdot"], n, params, chart, label=f"{label}:k") if "kdot" in d else None
    return Perturbation(gdot, kdot, label)


def build_potentials(rc, bg, default_all=True):
    items = rc.data.get("potentials")
    if items is None:
        if not default_all:
            raise ConfigError("block required by this command is missing", "/potentials")
        items = ["all"]
    out = []
    basis = None
    for k, item in enumerate(items):
        if isinstance(item, str):
            if basis is None:
                try:
                    basis = kernel_basis(bg, rc.kind)
                except UnsupportedKernel as exc:
                    raise ConfigError(str(exc), f"/potentials/{k}") from None
            if item == "all":
                out.extend(basis)
                continue
            match = [V for V in basis if V.label == item]
            if not match:
                raise ConfigError(f"unknown basis label {item!r}; known: {[V.label for V in basis]}", f"/potentials/{k}")
            out.append(match[0])
        else:
            f = scalar_field(item["f"], rc.n, rc.params, bg.chart, label=item["label"]) if "f" in item else None
            a = covector_field(item["alpha"], rc.n, rc.params, bg.chart, label=item["label"]) if "alpha" in item else None
            out.append(StaticPotential(f, a, item["label"]))
    return out


def build_zeta(rc, bg):
    rc.require("zeta")
    z = rc.data["zeta"]
    label = z.get("label") or "zeta=(" + ", ".join(z["components"]) + ")"
    if z["form"] == "ambient_covector":
        return bg.vector_from_ambient(z["components"], rc.params, label=label)
    return vector_field(z["components"], rc.n, rc.params, bg.chart, label=label)


def build_surfaces(rc, bg):
    s = rc.data["surfaces"]
    out = [coord_sphere(bg, r) for r in rc.radii()]
    out += [ellipsoid(*abc) for abc in s["ellipsoids"]]
    for k, p in enumerate(s["parametrized"]):
        out.append(parametrized_surface(p["components"], 3, rc.params, label=p.get("label", f"surface{k}")))
    return out


def build_isometry(rc, bg):
    rc.require("isometry")
    iso = rc.data["isometry"]
    n = rc.n
    try:
        if iso["kind"] == "rotation":
            i, j = iso.get("axes", [1, 2])
            if max(i, j) > n or i == j:
                raise ConfigError("rotation axes must be two distinct indices <= n", "/isometry/axes")
            T = iso.get("translation")
            return FlatIsometry(rotation(n, iso.get("angle", 0.0), i - 1, j - 1), T)
        if iso["kind"] == "boost":
            axis = iso.get("axis", 1)
            if axis > n:
                raise ConfigError("boost axis exceeds the dimension", "/isometry/axis")
            return boost(n, iso.get("rapidity", 0.0), axis)
        M = np.asarray(iso.get("matrix", []), dtype=float)
        if bg.kind == "flat":
            return FlatIsometry(M, iso.get("translation"))
        return LorentzIsometry(M)
    except NotAnIsometry as exc:
        raise ConfigError(str(exc), "/isometry") from None
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed isometry: {exc}", "/isometry") from None


# --- report emission --------------------------------------------------------------------------


def _scalar_text(x):
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    return json.dumps(str(x))


def dumps(obj, indent=0):
    """JSON text with doubles at 17 significant digits and non-finite values as null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj.tolist() if isinstance(obj, np.ndarray) else obj)
        if not items:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            return "[" + ", ".join(_scalar_text(v) for v in items) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in items) + "\n" + pad + "]"
    return _scalar_text(obj)


def _meta(rc, command, workers):
    return {
        "command": command,
        "config_hash": rc.hash,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "workers": workers,
        "normalization": rc.data["output"]["normalization"],
        "background": dict(rc.data["background"]),
        "operator": rc.kind,
        "c_n": adm_constant(rc.n),
    }


def _verification_dict(rep, rc):
    d = rep.to_dict()
    d.pop("runtime", None)  # wall time would break byte-identical reports
    d["config_hash"] = rc.hash
    return d


def _charge_dict(rep, rc):
    d = rep.to_dict()
    d["config_hash"] = rc.hash
    return d


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_") or "potential"


def write_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["radius", "integral", "quad_error", "extrapolated"])
        for row in report.rows():
            w.writerow([_scalar_text(v) if _scalar_text(v) != "null" else "nan" for v in row])


def emit(bundle, charges, rc, out_dir):
    """Write ``<stem>.json`` and one CSV per charge report; returns the written paths."""
    out = Path(out_dir)
    if not out.is_dir():
        raise IoError("output directory does not exist", str(out))
    stem = rc.data["output"]["stem"]
    paths = []
    jpath = out / f"{stem}.json"
    try:
        jpath.write_text(dumps(bundle) + "\n")
        paths.append(jpath)
        if rc.data["output"]["csv"]:
            for k, rep in enumerate(charges):
                name = f"{stem}.csv" if len(charges) == 1 else f"{stem}_{k}_{_slug(rep.potential)}.csv"
                write_csv(rep, out / name)
                paths.append(out / name)
    except OSError as exc:
        raise IoError(f"cannot write report ({exc.strerror})", str(exc.filename or out)) from None
    return paths


# --- commands ---------------------------------------------------------------------------------


def _compute(rc, bg, workers):
    e = build_perturbation(rc, bg)
    tol = rc.data["tolerances"]
    norm = rc.data["output"]["normalization"]
    reports = []
    for V in build_potentials(rc, bg):
        reports.append(
            total_charge(
                rc.kind, bg, V, e, rc.radii(), rc.rule(),
                normalization=norm, rtol=tol["charge_rtol"], atol=tol["charge_atol"],
                workers=workers, qtol=tol["quadrature"],
            )
        )
    code = EXIT_OK if all(r.converged for r in reports) else EXIT_NONCONVERGENT
    return reports, [], code


def _kid(rc, bg, workers):
    smp = rc.data["sampling"]
    pts = bg.sample_points(rc.rng(), smp["points"], smp["r_lo"], smp["r_hi"])
    reps = [verify.check_kid(bg, rc.kind, V, points=pts, tol=rc.data["tolerances"]["kid"]) for V in build_potentials(rc, bg)]
    return [], reps, None


def _cancel(rc, bg, workers):
    zeta = build_zeta(rc, bg)
    pots = build_potentials(rc, bg)
    smp = rc.data["sampling"]
    pts = bg.sample_points(rc.rng(), min(smp["points"], 200), smp["r_lo"], smp["r_hi"])
    rep = verify.check_cancellation(
        bg, rc.kind, pots, zeta, surfaces=build_surfaces(rc, bg), rule=rc.rule(),
        tol=rc.data["tolerances"]["cancel"], points=pts, decay_radii=rc.radii(),
    )
    return [], [rep], None


def _invariance(rc, bg, workers):
    e1 = build_perturbation(rc, bg)
    zeta = build_zeta(rc, bg)
    tol = rc.data["tolerances"]
    reps = []
    for V in build_potentials(rc, bg):
        rep = verify.check_invariance(
            bg, rc.kind, e1, zeta, V, rc.radii(), rc.rule(),
            rtol=tol["invariance_rtol"], atol=tol["invariance_atol"], workers=workers,
            charge_rtol=tol["charge_rtol"], charge_atol=tol["charge_atol"],
        )
        rep.inputs["tau"] = rc.data["zeta"]["tau"]
        reps.append(rep)
    return [], reps, None


def _equivariance(rc, bg, workers):
    e = build_perturbation(rc, bg)
    A = build_isometry(rc, bg)
    tol = rc.data["tolerances"]
    pots = build_potentials(rc, bg)
    rep = verify.check_equivariance(
        bg, rc.kind, e, A, pots, rc.radii(), rc.rule(),
        rtol=tol["equivariance_rtol"], workers=workers, charge_rtol=tol["charge_rtol"],
    )
    return [], [rep], None


def _bounds(rc, bg, workers):
    b = rc.data["bounds"]
    rep = verify.check_bounds(bg, draws=b["draws"], rng=rc.rng(), m=b["geodesic_samples"])
    return [], [rep], None


_DISPATCH = {
    "compute": _compute,
    "kid": _kid,
    "cancel": _cancel,
    "invariance": _invariance,
    "equivariance": _equivariance,
    "bounds": _bounds,
}


def summary(rc):
    """Derived quantities listed by ``validate``."""
    bg = rc.background()
    lines = [
        f"background: {bg.kind} n={bg.n} lam0={bg.lam0}",
        f"operator: {rc.kind}",
        f"c_n = {adm_constant(bg.n):.17g}",
        f"config hash: {rc.hash}",
    ]
    for kind in ("scal", "constraints"):
        try:
            lines.append(f"kernel basis ({kind}): {len(kernel_basis(bg, kind))} potentials")
        except UnsupportedKernel:
            lines.append(f"kernel basis ({kind}): not available")
    if "surfaces" in rc.data and "radii" in rc.data["surfaces"]:
        lines.append(f"radii: {rc.data['surfaces']['radii']}")
    return lines


def run(command, config, workers=None, normalize=None, out=None, stream=None):
    """Execute a command; returns ``(exit code, written paths)``."""
    stream = sys.stdout if stream is None else stream
    overrides = {}
    if normalize is not None:
        overrides["output.normalization"] = normalize
    if out is not None:
        overrides["output.dir"] = str(out)
    rc = config if isinstance(config, RunConfig) else load_config(config, overrides)
    if command == "validate":
        print("OK", file=stream)
        for line in summary(rc):
            print("  " + line, file=stream)
        return EXIT_OK, []
    workers = (os.cpu_count() or 1) if workers is None else workers
    try:
        bg = rc.background()
    except ValueError as exc:
        raise ConfigError(str(exc), "/background") from None
    t0 = time.perf_counter()
    try:
        charges, verifications, code = _DISPATCH[command](rc, bg, workers)
    except (WrongBackground, NotAnIsometry, UnsupportedKernel) as exc:
        raise ConfigError(str(exc), "") from None
    if code is None:
        code = EXIT_OK if all(v.passed for v in verifications) else EXIT_FAIL
    bundle = {
        "meta": _meta(rc, command, workers),
        "charges": [_charge_dict(r, rc) for r in charges],
        "verifications": [_verification_dict(v, rc) for v in verifications],
    }
    paths = emit(bundle, charges, rc, rc.data["output"]["dir"])
    for r in charges:
        x = r.value
        print(f"{r.potential}: {_scalar_text(x)} ({r.normalization}){'' if r.converged else ' NOT CONVERGED'}", file=stream)
    for v in verifications:
        print(f"{v.claim}: {'pass' if v.passed else 'FAIL'} max residual {max(v.residuals, default=float('nan')):.3e} tol {v.tolerance:.1e}", file=stream)
    print(f"wrote {', '.join(str(p) for p in paths)} in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return code, paths


def build_parser():
    ap = argparse.ArgumentParser(prog="asympcharge", description="Asymptotic charges and their verification.")
    ap.add_argument("--version", action="version", version=f"asympcharge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file, or the name of a bundled config")
        if name != "validate":
            p.add_argument("--workers", type=int, default=None, help="worker threads (default: machine parallelism)")
            p.add_argument("--normalize", choices=["raw", "adm"], default=None)
            p.add_argument("--out", default=None, help="existing output directory")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code, _ = run(
            args.command,
            args.config,
            workers=getattr(args, "workers", None),
            normalize=getattr(args, "normalize", None),
            out=getattr(args, "out", None),
        )
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergent as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AsympChargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
