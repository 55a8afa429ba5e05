"""Command-line front end.

    python -m fbm_bismut run CONFIG.json [--out DIR] [--workers N] [--verbose]
    python -m fbm_bismut validate CONFIG.json
    python -m fbm_bismut list-presets

``run`` writes ``results.csv`` and ``manifest.json`` into the output
directory and exits 0 iff no row is FAIL.  Any config error goes to stderr
with its line or field and exits 2 before anything is written.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import jsonschema

from . import __version__
from .experiments import EXPERIMENTS, ResultRow, build_functional_model, build_model, run_experiment
from .models import describe_presets, make_test_function

__all__ = ["CONFIG_SCHEMA", "CSV_COLUMNS", "load_config", "write_results", "main"]

log = logging.getLogger("fbm_bismut")

CSV_SCHEMA_LINE = "#schema=1"
CSV_COLUMNS = ("experiment", "row_id", "hurst", "n", "N", "seed", "params", "estimate", "se", "oracle",
               "oracle_err", "verdict", "note")

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_pos_list = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "model", "numerics"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "id": {"type": "string"},
        "output": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["drift", "hurst"],
            "additionalProperties": False,
            "properties": {
                "drift": {"enum": ["ZERO", "LINEAR", "TANH_BOUNDED", "DELAY_LINEAR"]},
                "drift_params": {"type": "object"},
                "sigma": {"enum": ["IDENTITY", "DIAG_HOLDER"]},
                "sigma_params": {"type": "object"},
                "hurst": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "x0": _vector,
                "xi": _vector,
            },
        },
        "numerics": {
            "type": "object",
            "required": ["seed"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 4},
                "N": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "route": {"enum": ["discrete", "generic", "explicit", "lowh"]},
                "fd_step": {"type": "number", "minimum": 1e-5, "maximum": 1e-1},
                "lambda0": {"type": ["number", "null"]},
                "p": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
                "v_grid": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "lambda_grid": _pos_list,
                "eps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
                        "minItems": 2},
                "hursts": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                      "exclusiveMaximum": 1}, "minItems": 1},
                "chunk": {"type": "integer", "minimum": 1},
            },
        },
        "f": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
        "v": _vector,
        "eta": _vector,
        "mode": {"enum": ["FITTED", "SUPPLIED"]},
        "constants": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2},
    },
}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> dict:
    """Parse, schema-check and semantically check a config; raise :class:`ConfigError`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: field {field}: {exc.message}") from exc
    _semantic_checks(cfg, path)
    return cfg


def _semantic_checks(cfg: dict, path: Path) -> None:
    kind = cfg["experiment"]
    m = cfg["model"]
    if kind != "VALIDATE_OPERATORS" and m["hurst"] == 0.5:
        raise ConfigError(f"{path}: field model/hurst: H = 1/2 is only allowed for VALIDATE_OPERATORS")
    functional = m["drift"] == "DELAY_LINEAR"
    if kind == "SFDE_GRADIENT" and not functional:
        raise ConfigError(f"{path}: field model/drift: SFDE_GRADIENT needs DELAY_LINEAR")
    if functional and kind not in ("SFDE_GRADIENT", "SHIFT_TEST"):
        raise ConfigError(f"{path}: field model/drift: DELAY_LINEAR only runs SFDE_GRADIENT or SHIFT_TEST")
    if kind in ("HARNACK", "LOG_HARNACK") and min(cfg["numerics"].get("v_grid", [1.0])) <= 0:
        raise ConfigError(f"{path}: field numerics/v_grid: Harnack shifts must be nonzero (v = 0 is the Jensen row)")
    if cfg.get("mode") == "SUPPLIED" and "constants" not in cfg:
        raise ConfigError(f"{path}: field constants: SUPPLIED mode needs two constants")
    try:
        if functional:
            model = build_functional_model(cfg)
        else:
            model = build_model(cfg)
        if "f" in cfg:
            make_test_function(cfg["f"]["name"], **cfg["f"].get("params", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: field model: {exc}") from exc
    for key in ("v", "eta"):
        if key in cfg and len(cfg[key]) != model.d:
            raise ConfigError(f"{path}: field {key}: length {len(cfg[key])} does not match dimension {model.d}")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows: list[ResultRow], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_LINE + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.get("output") or ".")
    start = time.perf_counter()
    log.info("running %s with %d worker(s)", cfg["experiment"], args.workers)
    rows = run_experiment(cfg, workers=args.workers)
    wall = time.perf_counter() - start
    out.mkdir(parents=True, exist_ok=True)
    write_results(rows, out / "results.csv")
    fails = sum(r.verdict == "FAIL" for r in rows)
    manifest = {"version": __version__, "config": cfg, "workers": args.workers, "rows": len(rows),
                "fail_rows": fails, "wall_time_s": wall}
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in rows:
        log.info("%-18s %-40s %s", r.experiment, r.row_id, r.verdict)
    log.info("%d rows, %d FAIL, %.1f s", len(rows), fails, wall)
    return 0 if fails == 0 else 1


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"ok: {cfg['experiment']}")
    return 0


def _cmd_presets(args) -> int:
    print(describe_presets())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbm-bismut", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory (default: config 'output' or cwd)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("validate", help="parse and check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("list-presets", help="print drift, sigma and test-function presets")
    p.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    if getattr(args, "workers", 1) < 1:
        print("config error: --workers must be at least 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
