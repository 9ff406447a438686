"""Command-line experiment runner.

    spdedist list-scenarios
    spdedist run CONFIG.json [--seed N] [--out DIR] [--threads N] [--format csv|json]
    spdedist defaults SCENARIO

A config is a JSON object with a ``scenario`` name, an optional ``seed``
and optional ``model``, ``set`` and ``numerics`` blocks; omitted fields
take the scenario defaults (printed by ``spdedist defaults``). Each run
writes one table file per result table, ``report.json`` with pass/fail
per assertion and ``manifest.json`` with the resolved config. The exit
status is 0 when every hard assertion passes, 1 when one fails and 2 on
a config error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError
from .parallel import THREADS_ENV, resolve_threads
from .scenarios import SCENARIOS

__all__ = ["main", "load_config", "resolve_config", "config_schema", "run_config", "format_value"]

DEFAULT_SEED = 20240601
U64_MAX = 2 ** 64 - 1
BLOCKS = ("model", "set", "numerics")


def _value_schema(value):
    if value is None:
        return {}
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer"}
    if isinstance(value, float):
        return {"type": "number"}
    if isinstance(value, str):
        return {"type": "string"}
    if isinstance(value, list):
        if value and all(isinstance(v, list) for v in value):
            return {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
        if value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            return {"type": "array", "items": {"type": "integer"}, "minItems": 1}
        return {"type": "array", "items": {"type": "number"}, "minItems": 1}
    raise TypeError(f"no schema for default {value!r}")


def config_schema(name):
    """JSON schema of a config for scenario ``name``, derived from its defaults."""
    sc = SCENARIOS[name]
    props = {
        "scenario": {"const": name},
        "seed": {"type": "integer", "minimum": 0, "maximum": U64_MAX},
        "description": {"type": "string"},
    }
    for block in BLOCKS:
        fields = {}
        for key, default in sc.defaults[block].items():
            s = _value_schema(default)
            s.update(sc.constraints.get(f"{block}/{key}", {}))
            fields[key] = s
        props[block] = {"type": "object", "properties": fields, "additionalProperties": False}
    return {"type": "object", "required": ["scenario"], "properties": props, "additionalProperties": False}


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and fill in defaults. Raises ConfigError with a field path."""
    if not isinstance(raw, dict):
        raise ConfigError([], "config must be a JSON object")
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(["scenario"], f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    validator = jsonschema.Draft202012Validator(config_schema(name))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            path, msg = path + extra[:1], "unknown field"
        else:
            msg = err.message
        raise ConfigError(path, msg)
    cfg = {"scenario": name, "seed": raw.get("seed", DEFAULT_SEED)}
    for block in BLOCKS:
        merged = copy.deepcopy(SCENARIOS[name].defaults[block])
        merged.update(copy.deepcopy(raw.get(block, {})))
        cfg[block] = merged
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([], f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError([], f"cannot read config: {exc}") from exc
    return resolve_config(raw)


def format_value(v):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def table_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    return v


def run_config(cfg: dict, out_dir, threads=None, fmt="csv", stream=None):
    """Run a resolved config and write its artifacts. Returns the exit status."""
    stream = stream or sys.stdout
    threads = resolve_threads(threads)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = SCENARIOS[cfg["scenario"]]
    start = time.perf_counter()
    result = sc.runner(cfg, int(cfg["seed"]), threads)
    elapsed = time.perf_counter() - start
    files = []
    for name, table in result.tables.items():
        if fmt == "csv":
            path = out / f"{name}.csv"
            path.write_text(table_csv(table))
        else:
            path = out / f"{name}.json"
            rows = [dict(zip(table.header, (_jsonable(v) for v in row))) for row in table.rows]
            path.write_text(json.dumps(rows, indent=1) + "\n")
        files.append(path.name)
    manifest = {
        "scenario": cfg["scenario"],
        "version": __version__,
        "seed": cfg["seed"],
        "seed_lineage": "Philox streams keyed by (seed, purpose, index, ...): "
                        "1 panels by path and level, 2 bound tables by block, 3 Nagumo sampling, "
                        "4 random curves, 5 random starting points",
        "model": cfg["model"],
        "set": cfg["set"],
        "numerics": cfg["numerics"],
        "output_directory": str(out),
        "format": fmt,
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=1, sort_keys=True) + "\n")
    report = {
        "scenario": cfg["scenario"],
        "passed": result.passed,
        "assertions": [
            {"name": a.name, "passed": a.passed, "hard": a.hard, "detail": a.detail}
            for a in result.assertions
        ],
        "summary": result.summary,
        "tables": files,
        "threads": threads,
        "runtime_seconds": elapsed,
    }
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=1) + "\n")
    for a in result.assertions:
        tag = "PASS" if a.passed else ("FAIL" if a.hard else "WARN")
        print(f"{tag}  {a.name}", file=stream)
    print(f"{cfg['scenario']}: {'passed' if result.passed else 'FAILED'} in {elapsed:.2f} s -> {out}",
          file=stream)
    return 0 if result.passed else 1


def _parser():
    p = argparse.ArgumentParser(prog="spdedist", description="Distance-bound experiments for evolution equations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list-scenarios", help="print scenario names and descriptions")
    d = sub.add_parser("defaults", help="print the default config of a scenario")
    d.add_argument("scenario")
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")
    r.add_argument("--out", default=None, help="output directory (default: results/<scenario>)")
    r.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1); never changes results")
    r.add_argument("--format", choices=["csv", "json"], default="csv", help="table file format")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, sc in SCENARIOS.items():
            print(f"{name:22s} {sc.description}")
        return 0
    if args.command == "defaults":
        if args.scenario not in SCENARIOS:
            print(f"error: scenario: unknown scenario {args.scenario!r}", file=sys.stderr)
            return 2
        sc = SCENARIOS[args.scenario]
        cfg = {"scenario": sc.name, "seed": DEFAULT_SEED, **copy.deepcopy(sc.defaults)}
        print(json.dumps(cfg, indent=2))
        return 0
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed <= U64_MAX:
                raise ConfigError(["seed"], "seed must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: threads: {exc}", file=sys.stderr)
        return 2
    out = args.out or os.path.join("results", cfg["scenario"])
    return run_config(cfg, out, threads, args.format)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
