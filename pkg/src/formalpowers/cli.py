"""Command-line entry point.

One JSON configuration document drives each run; ``--n-max``, ``--out`` and
``--set key=value`` override scalar fields only. Artifacts are named from a
hash of the effective configuration, so identical configurations write
identical files.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from formalpowers import export
from formalpowers.bvp import ILL_CONDITIONED, BvpProblem, evaluate_solution, make_basis, make_problem, preset_data, solve
from formalpowers.core.geometry import as_complex, domain_from_dict
from formalpowers.core.profile import KINDS, profile_from_dict
from formalpowers.errors import (
    ConfigError,
    DomainError,
    EvaluationError,
    PathDependenceError,
    PathError,
    PreconditionError,
    ProfileError,
)
from formalpowers.meridional import build_x_sequence, default_grid, meridional_powers
from formalpowers.transverse import build_formal_powers, transverse_sequence
from formalpowers.verify import run_suite

log = logging.getLogger("formalpowers")

COMMANDS = ("powers-meridional", "powers-transverse", "solve-bvp", "verify", "report")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_SPAN = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "profile": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": list(KINDS)}},
        },
        "z0": _POINT,
        "n_max": {"type": "integer", "minimum": 0},
        "targets": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "items": _POINT, "minItems": 1},
                "grid": {
                    "type": "object",
                    "required": ["x", "y", "n"],
                    "properties": {"x": _SPAN, "y": _SPAN, "n": {"type": "integer", "minimum": 1}},
                    "additionalProperties": False,
                },
                "random": {
                    "type": "object",
                    "required": ["x", "y", "count"],
                    "properties": {
                        "x": _SPAN,
                        "y": _SPAN,
                        "count": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer"},
                    },
                    "additionalProperties": False,
                },
            },
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
        },
        "domain": {"type": "object", "required": ["kind"], "properties": {"kind": {"enum": ["rectangle", "disk", "polygon"]}}},
        "case": {"enum": ["meridional", "transverse"]},
        "boundary": {
            "oneOf": [
                {"type": "object", "required": ["preset"], "properties": {"preset": {"type": "string"}}},
                {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                },
            ]
        },
        "oversampling": {"type": "integer", "minimum": 1},
        "field_grid": {"type": "integer", "minimum": 1},
        "quadrature": {
            "type": "object",
            "properties": {
                "nodes_per_segment": {"type": "integer", "minimum": 2},
                "path_order": {"enum": ["radial-first", "arc-first"]},
                "refine": {"type": "boolean"},
                "panels": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {"n_max": {"type": "integer", "minimum": 0, "maximum": 8}, "quick": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
    },
    "additionalProperties": False,
}

REQUIRED = {
    "powers-meridional": ("profile", "z0", "n_max", "targets"),
    "powers-transverse": ("profile", "z0", "n_max", "targets"),
    "solve-bvp": ("profile", "n_max", "domain", "case", "boundary"),
    "verify": (),
    "report": (),
}


@dataclass
class RunConfig:
    command: str
    config_path: Path | None
    output_dir: Path | None
    overrides: list[str] = field(default_factory=list)
    n_max: int | None = None


class NumericalFailure(Exception):
    """Carries the report of the failing check."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _line_of(text: str, path: Sequence[Any]) -> int | None:
    """Best-effort line number of the JSON node at ``path`` (keys searched in order)."""
    pos, found = 0, None
    for key in path:
        if isinstance(key, int):
            continue
        idx = text.find(json.dumps(key), pos)
        if idx < 0:
            break
        pos, found = idx, idx
    return None if found is None else text.count("\n", 0, found) + 1


def load_config(path: Path | None) -> tuple[dict[str, Any], str]:
    if path is None:
        return {}, "{}"
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return doc, text


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(doc: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``key.sub=value`` overrides; only scalar values are accepted."""
    out = copy.deepcopy(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set {item!r}: expected key=value")
        value = _parse_value(raw)
        if isinstance(value, (list, dict)):
            raise ConfigError(f"--set {key}: only scalar fields can be overridden")
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part!r} is not an object")
        node[parts[-1]] = value
    return out


def validate_config(doc: Mapping[str, Any], command: str, text: str = "", source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = _line_of(text, list(err.absolute_path))
        prefix = f"{source}:{line}" if line else source
        raise ConfigError(f"{prefix}: {where}: {err.message}")
    missing = [k for k in REQUIRED[command] if k not in doc]
    if missing:
        raise ConfigError(f"{source}: {command} requires {', '.join(missing)}")


def _targets(spec: Mapping[str, Any]) -> tuple[np.ndarray, dict[str, Any]]:
    if "points" in spec:
        return np.array([complex(x, y) for x, y in spec["points"]]), {}
    if "grid" in spec:
        g = spec["grid"]
        xs = np.linspace(g["x"][0], g["x"][1], g["n"])
        ys = np.linspace(g["y"][0], g["y"][1], g["n"])
        X, Y = np.meshgrid(xs, ys)
        return (X + 1j * Y).ravel(), {}
    r = spec["random"]
    seed = int(r.get("seed", 0))
    rng = np.random.default_rng(seed)
    x = rng.uniform(r["x"][0], r["x"][1], r["count"])
    y = rng.uniform(r["y"][0], r["y"][1], r["count"])
    return x + 1j * y, {"seed": seed}


def _profile(doc):
    try:
        return profile_from_dict(doc["profile"])
    except ProfileError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _powers_transverse(doc, out: Path, tag: str) -> list[Path]:
    p = _profile(doc)
    z0 = as_complex(doc["z0"])
    targets, seeds = _targets(doc["targets"])
    q = doc.get("quadrature", {})
    nodes = int(q.get("nodes_per_segment", 16))
    refine = bool(q.get("refine", True))
    log.info("transverse powers: n_max=%d nodes_per_segment=%d path_order=%s refine=%s seeds=%s",
             doc["n_max"], nodes, q.get("path_order", "radial-first"), refine, seeds)
    domain = domain_from_dict(doc["domain"]) if "domain" in doc else None
    tab = build_formal_powers(transverse_sequence(p), z0, doc["n_max"], targets, domain,
                              path_order=q.get("path_order", "radial-first"), nodes_per_segment=nodes,
                              refine=refine)
    if not np.all(np.isfinite(tab.values)):
        raise NumericalFailure("non-finite formal power values")
    if tab.refinement is not None:
        log.info("max refinement estimate %.3e", float(tab.refinement.max()))
    return [export.write_powers(out / f"powers_{tag}.csv", export.PowerValues(tab.targets, tab.values, tab.refinement, True))]


def _powers_meridional(doc, out: Path, tag: str) -> list[Path]:
    p = _profile(doc)
    z0 = as_complex(doc["z0"])
    targets, seeds = _targets(doc["targets"])
    q = doc.get("quadrature", {})
    nodes = int(q.get("nodes_per_segment", 16))
    panels = int(q.get("panels", 32))
    lo = min(float(targets.real.min()), z0.real)
    hi = max(float(targets.real.max()), z0.real)
    if lo <= 0:
        raise DomainError("meridional targets need Re z > 0")
    log.info("meridional powers: n_max=%d panels=%d nodes_per_panel=%d seeds=%s", doc["n_max"], panels, nodes, seeds)
    xs = build_x_sequence(p, z0.real, default_grid(lo, hi, z0.real, panels), doc["n_max"], nodes_per_panel=nodes)
    vals = meridional_powers(xs, z0, targets)
    if not np.all(np.isfinite(vals)):
        raise NumericalFailure("non-finite formal power values")
    return [
        export.write_powers(out / f"powers_{tag}.csv", export.PowerValues(targets, vals)),
        export.write_xseq(out / f"xseq_{tag}.csv", xs.grid, xs.X, xs.Xt),
    ]


def _solve_bvp(doc, out: Path, tag: str) -> list[Path]:
    p = _profile(doc)
    domain = domain_from_dict(doc["domain"])
    case = doc["case"]
    (domain.validate_meridional if case == "meridional" else domain.validate_transverse)()
    z0 = as_complex(doc["z0"]) if "z0" in doc else domain.centroid
    n_max = doc["n_max"]
    over = int(doc.get("oversampling", 4))
    log.info("solve-bvp: case=%s n_max=%d oversampling=%d condition threshold=%.0e", case, n_max, over,
             ILL_CONDITIONED)
    boundary = doc["boundary"]
    if isinstance(boundary, list):
        arr = np.asarray(boundary, dtype=float)
        prob = BvpProblem(case, domain, p, z0, arr[:, 0] + 1j * arr[:, 1], arr[:, 2], n_max)
    else:
        params = {k: v for k, v in boundary.items() if k != "preset"}
        data = preset_data(boundary["preset"], params, case=case, profile=p, z0=z0, domain=domain)
        prob = make_problem(case, domain, p, n_max, data, z0=z0, oversampling=over)
    src = make_basis(case, p, z0, n_max, domain)
    sol = solve(prob, src)
    if not np.all(np.isfinite(sol.coefficients)):
        raise NumericalFailure("least-squares solve produced non-finite coefficients", sol.to_report())
    pts = domain.interior_grid(int(doc.get("field_grid", 11)), margin=0.05)
    vals = evaluate_solution(sol, prob, pts, src)
    names = ("E_r", "E_3") if case == "meridional" else ("E_1", "E_2")
    report = {
        "config_hash": tag,
        "case": case,
        "n_max": n_max,
        "z0": [z0.real, z0.imag],
        "boundary_points": int(prob.boundary_points.size),
        **sol.to_report(),
        "rank_deficient": bool(sol.rank_deficient),
    }
    log.info("boundary residual max %.3e, condition %.3e, rank %d/%d", sol.boundary_residual_max,
             sol.condition_estimate, sol.rank, sol.basis_size)
    return [
        export.write_json(out / "bvp_solution.json", report),
        export.write_field_map(out / "field_map.csv", vals.points, vals.u, vals.field, names),
    ]


def _verify(doc, out: Path, tag: str) -> list[Path]:
    v = doc.get("verify", {})
    n_max = int(v.get("n_max", min(doc.get("n_max", 4), 8)))
    quick = bool(v.get("quick", True))
    log.info("verify: n_max=%d quick=%s min_order=1.8 successor_tol=1e-6 asymptotic_tol=5e-3", n_max, quick)
    checks = run_suite(n_max, quick)
    ok = all(c["pass"] for c in checks)
    path = export.write_json(out / "verify_report.json", {"config_hash": tag, "pass": ok, "checks": checks})
    if not ok:
        raise NumericalFailure("verification suite failed", [c for c in checks if not c["pass"]])
    return [path]


def _report(doc, out: Path, tag: str) -> list[Path]:
    entries = []
    for f in sorted(out.glob("*")):
        if f.name == "report.json" or not f.is_file():
            continue
        entry = {"name": f.name, "sha256": hashlib.sha256(f.read_bytes()).hexdigest()}
        if f.suffix == ".csv":
            entry["rows"] = sum(1 for _ in f.open(encoding="utf-8")) - 1
        elif f.name == "verify_report.json":
            rep = json.loads(f.read_text(encoding="utf-8"))
            entry["pass"] = rep["pass"]
            entry["checks"] = len(rep["checks"])
        elif f.name == "bvp_solution.json":
            rep = json.loads(f.read_text(encoding="utf-8"))
            entry["boundary_residual_max"] = rep["boundary_residual_max"]
            entry["condition_estimate"] = rep["condition_estimate"]
        entries.append(entry)
    for e in entries:
        print(" ".join(f"{k}={v}" for k, v in e.items() if k != "sha256"))
    return [export.write_json(out / "report.json", {"artifacts": entries})]


HANDLERS = {
    "powers-meridional": _powers_meridional,
    "powers-transverse": _powers_transverse,
    "solve-bvp": _solve_bvp,
    "verify": _verify,
    "report": _report,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    try:
        doc, text = load_config(cfg.config_path)
        overrides = list(cfg.overrides)
        if cfg.n_max is not None:
            overrides.append(f"n_max={cfg.n_max}")
        doc = apply_overrides(doc, overrides)
        validate_config(doc, cfg.command, text, str(cfg.config_path or "<config>"))
        out = cfg.output_dir or Path(doc.get("output_dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        hashed = {k: v for k, v in doc.items() if k != "output_dir"}
        tag = export.config_hash({"command": cfg.command, "config": hashed})
        paths = HANDLERS[cfg.command](doc, out, tag)
    except (ConfigError, ProfileError, DomainError, PathError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(json.dumps(exc.report, indent=2, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERICAL
    except (EvaluationError, PathDependenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="formalpowers", description="Formal powers for axially symmetric permittivity.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON configuration document")
    ap.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    ap.add_argument("--n-max", type=int, help="override n_max")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a scalar config field, dotted keys allowed")
    ap.add_argument("-q", "--quiet", action="store_true", help="log warnings only")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    return run(RunConfig(args.command, args.config, args.out, args.overrides, args.n_max))


if __name__ == "__main__":
    sys.exit(main())
