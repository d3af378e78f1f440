"""Command line front end: ``fluxtrap run|sweep|presets``.

A scenario is one JSON document with a ``kind`` and its parameters.  The
configuration is validated against the table in ``SCHEMAS`` (defaults are
filled in and echoed in the report), dispatched to ``scenarios.RUNNERS`` and
written as ``report.json`` plus ``table.csv`` in the output directory.

Exit statuses: 0 success, 2 validation error, 3 convergence failure,
4 input/output error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError, FluxtrapError
from .fields import make_current, make_field
from .scenarios import RUNNERS

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

REQUIRED = object()

# per-kind parameters: name -> (type, default)
SCHEMAS = {
    "special-functions": {
        "m_values": ("float_list", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
        "legendre_tol": ("float", 1e-10),
    },
    "flux": {
        "field": ("field", REQUIRED),
        "points": ("point_list", [[0.0, 0.0], [2.0, 0.0]]),
    },
    "zero-modes": {
        "field": ("field", REQUIRED),
        "balance": ("dict", None),
    },
    "count": {
        "field": ("field", REQUIRED),
        "g": ("float", REQUIRED),
        "spin": ("spin", -1),
        "ells": ("int_list", None),
        "radial_check": ("bool", True),
        "balance": ("dict", None),
    },
    "radial-spectrum": {
        "field": ("field", None),
        "current": ("current", None),
        "lam": ("float", 1.0),
        "g": ("float", REQUIRED),
        "spin": ("spin", -1),
        "ells": ("int_list", [0]),
    },
    "vortex": {
        "current": ("current", REQUIRED),
        "lam": ("float", 1.0),
        "g": ("float", 3.0),
        "radii": ("float_list", [0.5, 1.0, 2.0, 5.0]),
        "ells": ("int_list", [-1, 1, 2]),
    },
    "critical-lambda": {
        "current": ("current", REQUIRED),
        "ell": ("int", REQUIRED),
        "spin": ("spin", -1),
        "g": ("float", REQUIRED),
        "bracket": ("float_list", REQUIRED),
        "rel_width": ("float", 1e-3),
    },
    "weak-coupling": {
        "current": ("current", REQUIRED),
        "g": ("float", REQUIRED),
        "lams": ("float_list", [0.04, 0.03, 0.025, 0.02, 0.017, 0.015]),
        "spins": ("int_list", [-1]),
        "tolerance": ("float", 0.25),
    },
    "strong-coupling": {
        "current": ("current", REQUIRED),
        "g": ("float", REQUIRED),
        "ell": ("int", 0),
        "lams": ("float_list", [1000.0, 4000.0]),
    },
    "planar-verify": {
        "field": ("field", REQUIRED),
        "g": ("float", REQUIRED),
        "spin": ("spin", -1),
        "k": ("int", 3),
        "L": ("float", None),
        "grids": ("int_list", [64, 128]),
        "check": ("choice:none,zero-modes,radial-oracle", "none"),
        "tolerance": ("float", 0.02),
    },
    "identity-check": {
        "current": ("current", REQUIRED),
        "g_values": ("float_list", [1.9, 2.0, 2.1]),
        "tolerance": ("float", 1e-4),
    },
    "oscillator": {
        "mu": ("float", 1.0),
        "g": ("float", 3.0),
        "ells": ("int_list", [0, 1, -1]),
        "levels": ("int", 3),
        "grids": ("int_list", [200, 400, 800, 1600]),
        "r_max": ("float", 10.0),
    },
}

COMMON = {"name": ("str", None), "description": ("str", ""), "kind": ("str", REQUIRED),
          "numerics": ("dict", {}),
          "sweep": ("dict", None)}


class ValidationError(FluxtrapError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check(name, typ, value, problems):
    if value is None:
        return None
    if typ == "float":
        if not _is_number(value):
            problems.append(f"{name}: expected a number, got {value!r}")
            return value
        return float(value)
    if typ == "int":
        if not (isinstance(value, int) and not isinstance(value, bool)):
            problems.append(f"{name}: expected an integer, got {value!r}")
        return value
    if typ == "spin":
        if value not in (-1, 1):
            problems.append(f"{name}: spin must be -1 or 1")
        return value
    if typ == "bool":
        if not isinstance(value, bool):
            problems.append(f"{name}: expected true/false")
        return value
    if typ == "str":
        if not isinstance(value, str):
            problems.append(f"{name}: expected a string")
        return value
    if typ == "dict":
        if not isinstance(value, dict):
            problems.append(f"{name}: expected an object")
        return value
    if typ in ("field", "current"):
        if not isinstance(value, dict) or "profile" not in value:
            problems.append(f"{name}: expected an object with a 'profile' entry")
            return value
        try:
            (make_field if typ == "field" else make_current)(value)
        except DomainError as exc:
            problems.append(f"{name}: {exc}")
        return value
    if typ in ("float_list", "int_list"):
        ok = isinstance(value, list) and all(
            _is_number(v) and (typ == "float_list" or (isinstance(v, int) and not isinstance(v, bool)))
            for v in value)
        if not ok:
            problems.append(f"{name}: expected a list of {'numbers' if typ == 'float_list' else 'integers'}")
            return value
        if not value:
            problems.append(f"{name}: list must not be empty")
        return [float(v) for v in value] if typ == "float_list" else value
    if typ == "point_list":
        if not (isinstance(value, list) and all(isinstance(p, list) and len(p) == 2
                                                and all(_is_number(c) for c in p) for p in value)):
            problems.append(f"{name}: expected a list of [x, y] pairs")
        return value
    if typ.startswith("choice:"):
        options = typ.split(":", 1)[1].split(",")
        if value not in options:
            problems.append(f"{name}: must be one of {options}")
        return value
    raise AssertionError(typ)


def validate(config: dict) -> dict:
    """Return the resolved configuration or raise ValidationError listing every problem."""
    if not isinstance(config, dict):
        raise ValidationError(["configuration must be a JSON object"])
    problems = []
    kind = config.get("kind")
    if kind not in SCHEMAS:
        raise ValidationError([f"kind: must be one of {sorted(SCHEMAS)}, got {kind!r}"])
    schema = dict(COMMON)
    schema.update(SCHEMAS[kind])
    resolved = {}
    for key in config:
        if key not in schema:
            problems.append(f"{key}: unknown parameter for kind {kind!r}")
    for key, (typ, default) in schema.items():
        if key in config:
            resolved[key] = _check(key, typ, config[key], problems)
        elif default is REQUIRED:
            problems.append(f"{key}: missing required parameter")
        else:
            resolved[key] = copy.deepcopy(default)
    if resolved.get("name") is None:
        resolved["name"] = kind
    g = resolved.get("g")
    if _is_number(g) and not g > 0:
        problems.append("g: must be positive")
    lam = resolved.get("lam")
    if _is_number(lam) and lam < 0:
        problems.append("lam: must be non-negative")
    for key in ("lams",):
        if isinstance(resolved.get(key), list) and any(_is_number(v) and v <= 0 for v in resolved[key]):
            problems.append(f"{key}: strengths must be positive")
    if kind == "radial-spectrum" and not (resolved.get("field") or resolved.get("current")):
        problems.append("field/current: one of them is required")
    if kind == "critical-lambda" and isinstance(resolved.get("bracket"), list):
        b = resolved["bracket"]
        if len(b) != 2 or not (0 < b[0] < b[1]):
            problems.append("bracket: expected [lo, hi] with 0 < lo < hi")
    if resolved.get("sweep") is not None:
        _sweep_values(resolved["sweep"], problems)
    if problems:
        raise ValidationError(problems)
    return resolved


def _sweep_values(sweep: dict, problems=None):
    own = problems is None
    problems = [] if own else problems
    values = None
    if "parameter" not in sweep or not isinstance(sweep["parameter"], str):
        problems.append("sweep.parameter: missing parameter name")
    if "values" in sweep:
        values = sweep["values"]
        if not isinstance(values, list) or not all(_is_number(v) for v in values):
            problems.append("sweep.values: expected a list of numbers")
            values = None
    elif all(k in sweep for k in ("start", "stop", "num")):
        num = sweep["num"]
        if not isinstance(num, int) or num < 1:
            problems.append("sweep.num: expected a positive integer")
        elif sweep.get("spacing", "linear") == "log":
            if not (sweep["start"] > 0 and sweep["stop"] > 0):
                problems.append("sweep: log spacing needs positive start and stop")
            else:
                values = np.geomspace(sweep["start"], sweep["stop"], num).tolist()
        else:
            values = np.linspace(sweep["start"], sweep["stop"], num).tolist()
        if values is not None:
            values = [float(f"{v:.12g}") for v in values]
    else:
        problems.append("sweep: give 'values' or 'start', 'stop', 'num'")
    if values is not None:
        if len(values) == 0:
            problems.append("sweep: range is empty")
        else:
            d = np.diff(values)
            if len(d) and not (np.all(d > 0) or np.all(d < 0)):
                problems.append("sweep: values must be strictly monotone")
    if own and problems:
        raise ValidationError(problems)
    return values


# --------------------------------------------------------------------------
# configuration input


def preset_dir():
    return resources.files("fluxtrap") / "presets"


def list_presets():
    return sorted(p.name[:-5] for p in preset_dir().iterdir() if p.name.endswith(".json"))


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        candidate = preset_dir() / (path if path.endswith(".json") else path + ".json")
        if candidate.is_file():
            return json.loads(candidate.read_text())
        raise FileNotFoundError(path)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError([f"config is not valid JSON: {exc}"]) from exc


def apply_overrides(config: dict, overrides) -> dict:
    cfg = copy.deepcopy(config)
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError([f"override {item!r}: expected key=value"])
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(cfg, key, value)
    return cfg


def _set_path(cfg: dict, dotted: str, value):
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


# --------------------------------------------------------------------------
# output


def _clean(obj):
    """Make results JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_report(out: Path, report: dict):
    out.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"
    (out / "report.json").write_text(text)


def write_table(path: Path, rows):
    if not rows:
        return
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in keys})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_plot_data(path: Path, xs, ys, header: str):
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{x!r} {'nan' if y is None else repr(float(y))}\n")


# --------------------------------------------------------------------------


def run_scenario(config: dict):
    """Validate and execute one scenario; returns (report, rows, exit status)."""
    cfg = validate(config)
    runner = RUNNERS[cfg["kind"]]
    t0 = time.perf_counter()
    status = "ok"
    code = EXIT_OK
    diagnostics = {}
    try:
        results, rows = runner(cfg)
    except ConvergenceError as exc:
        results, rows = {}, []
        status, code = "convergence_failure", EXIT_CONVERGENCE
        diagnostics = {"message": str(exc), "estimate": _clean(np.asarray(exc.estimate).tolist())
                       if exc.estimate is not None else None,
                       "error": exc.error, "details": _clean({k: str(v) for k, v in exc.diagnostics.items()})}
    except (DomainError, FluxtrapError) as exc:
        results, rows = {}, []
        status, code = "validation_error", EXIT_VALIDATION
        diagnostics = {"message": str(exc)}
    report = {
        "tool": "fluxtrap",
        "version": __version__,
        "kind": cfg["kind"],
        "name": cfg["name"],
        "status": status,
        "config": cfg,
        "results": results,
        "diagnostics": diagnostics,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return report, rows, code


_PRIMARY = {
    "strong-coupling": lambda r: r["rescaled"][0]["value"],
    "radial-spectrum": lambda r: next(iter(r["channels"].values()))["count"],
    "critical-lambda": lambda r: r["lambda_c"]["value"],
    "count": lambda r: r["n_B"],
    "identity-check": lambda r: r["relative_difference"]["value"],
    "flux": lambda r: r["F"]["value"],
    "zero-modes": lambda r: r["modes"][0]["I_j"]["value"] if r["modes"] else None,
}


def _row_summary(kind, results, rows):
    row = {}
    if kind == "radial-spectrum" and len(results["channels"]) == 1:
        ch = next(iter(results["channels"].values()))
        row.update({"count": ch["count"], "lowest": ch["eigenvalues"][0]["value"] if ch["count"] else None})
    elif kind == "radial-spectrum":
        for ell, ch in results["channels"].items():
            row[f"count_l{ell}"] = ch["count"]
            row[f"lowest_l{ell}"] = ch["eigenvalues"][0]["value"] if ch["count"] else None
    elif kind == "strong-coupling":
        row.update({"rescaled": results["rescaled"][0]["value"], "target": results["target"]["value"]})
    elif rows and len(rows) == 1:
        row.update(rows[0])
    elif kind == "count":
        row.update({"n_B": results["n_B"], "n_certified": results["n_certified"]})
    return row


def run_sweep(config: dict):
    cfg = validate(config)
    sweep = cfg["sweep"]
    if sweep is None:
        raise ValidationError(["sweep: missing sweep block"])
    values = _sweep_values(sweep)
    param = sweep["parameter"]
    base = {k: v for k, v in config.items() if k != "sweep"}
    t0 = time.perf_counter()
    table = []
    xs, ys = [], []
    for v in values:
        c = copy.deepcopy(base)
        if param in ("ell", "ells"):
            key = "ells" if "ells" in SCHEMAS[cfg["kind"]] else "ell"
            c[key] = [int(v)] if key == "ells" else int(v)
        elif param in ("lam", "lams") and "lams" in SCHEMAS[cfg["kind"]]:
            c["lams"] = [float(v)]
        else:
            _set_path(c, param, v)
        row = {param: v}
        try:
            report, rows, code = run_scenario(c)
            if code != EXIT_OK:
                row["error"] = report["diagnostics"].get("message", report["status"])
                ys.append(None)
            else:
                row.update(_row_summary(cfg["kind"], report["results"], rows))
                prim = _PRIMARY.get(cfg["kind"])
                ys.append(prim(report["results"]) if prim else None)
        except FluxtrapError as exc:
            row["error"] = str(exc)
            ys.append(None)
        xs.append(v)
        table.append(row)
    report = {
        "tool": "fluxtrap",
        "version": __version__,
        "kind": cfg["kind"],
        "name": cfg["name"],
        "status": "ok",
        "config": cfg,
        "sweep": {"parameter": param, "values": values},
        "rows": table,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return report, table, xs, ys


def _out_dir(args, name):
    return Path(args.out) if args.out else Path("fluxtrap-out") / name


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fluxtrap", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"fluxtrap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        p = sub.add_parser(name, help=f"{name} a scenario config (path or preset name)")
        p.add_argument("config")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a (dotted) config entry; VALUE is parsed as JSON when possible")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true", help="do not echo the resolved config")
    pp = sub.add_parser("presets", help="built-in scenarios")
    pp.add_argument("action", choices=["list", "show"])
    pp.add_argument("name", nargs="?")
    args = parser.parse_args(argv)

    if args.command == "presets":
        if args.action == "list":
            for name in list_presets():
                cfg = json.loads((preset_dir() / f"{name}.json").read_text())
                print(f"{name}\t{cfg.get('kind')}\t{cfg.get('description', '')}")
            return EXIT_OK
        if not args.name or args.name not in list_presets():
            print(f"unknown preset {args.name!r}", file=sys.stderr)
            return EXIT_VALIDATION
        print((preset_dir() / f"{args.name}.json").read_text(), end="")
        return EXIT_OK

    try:
        raw = load_config(args.config)
        raw = apply_overrides(raw, args.override)
        resolved = validate(raw)
    except ValidationError as exc:
        for p in exc.problems:
            print(f"validation error: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(json.dumps(_clean(resolved), indent=2))
    out = _out_dir(args, resolved["name"])
    try:
        if args.command == "run":
            report, rows, code = run_scenario(raw)
            write_report(out, report)
            write_table(out / "table.csv", rows)
        else:
            report, rows, xs, ys = run_sweep(raw)
            code = EXIT_OK
            write_report(out, report)
            write_table(out / "table.csv", rows)
            write_plot_data(out / "plot.dat", xs, ys, f"{report['sweep']['parameter']} {resolved['kind']}")
    except ValidationError as exc:
        for p in exc.problems:
            print(f"validation error: {p}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{report['status']}: wrote {out / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
