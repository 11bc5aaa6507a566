"""Report assembly: canonical JSON payloads (byte-stable for a fixed config
and seed), flat CSV alongside, and schema validation for run configs."""

from __future__ import annotations

import csv
import datetime
import json

REPORT_SCHEMA = "heatlab-report/1"
CONFIG_SCHEMA = "heatlab-config/1"

_ALLOWED_KEYS = {
    "schema", "group", "t_ladder", "truncation_N", "quadrature_exactness",
    "band", "n_random", "mc", "seed", "suites", "_selftest_corrupt_structure",
}
_ALLOWED_MC_KEYS = {"samples", "mesh"}

DEFAULT_CONFIG = {
    "schema": CONFIG_SCHEMA,
    "group": "torus:1",
    "t_ladder": [1.0, 0.5, 0.1],
    "truncation_N": 6,
    "quadrature_exactness": 8,
    "band": 3,
    "n_random": 5,
    "mc": {"samples": 20000, "mesh": 500},
    "seed": 42,
    "suites": ["transform-unitarity", "taylor-isometry", "hermite", "operators",
               "ccr", "resolution", "stochastic", "bounds", "phase-density", "euclid"],
}


class ConfigError(ValueError):
    pass


def validate_config(cfg):
    """Fill defaults and reject unknown keys or malformed values."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _ALLOWED_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = json.loads(json.dumps(DEFAULT_CONFIG))
    out.update(cfg)
    if not isinstance(out["t_ladder"], list) or not out["t_ladder"] or \
            any(not isinstance(t, (int, float)) or t <= 0 for t in out["t_ladder"]):
        raise ConfigError("t_ladder must be a non-empty list of positive numbers")
    for key in ("truncation_N", "quadrature_exactness", "band", "n_random", "seed"):
        if not isinstance(out[key], int) or out[key] < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    if not isinstance(out["mc"], dict) or set(out["mc"]) - _ALLOWED_MC_KEYS:
        raise ConfigError("mc must be an object with keys 'samples' and 'mesh'")
    for key in _ALLOWED_MC_KEYS:
        out["mc"].setdefault(key, DEFAULT_CONFIG["mc"][key])
        if not isinstance(out["mc"][key], int) or out["mc"][key] < 1:
            raise ConfigError(f"mc.{key} must be a positive integer")
    if not isinstance(out["suites"], list) or any(not isinstance(s, str) for s in out["suites"]):
        raise ConfigError("suites must be a list of suite names")
    return out


def _jsonable(value):
    import numpy as np
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def build_report(config, results):
    payload = {
        "schema": REPORT_SCHEMA,
        "config": _jsonable(config),
        "results": _jsonable(results),
        "all_pass": bool(all(r.get("pass", False) for r in results)),
    }
    return payload


def payload_bytes(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def write_report(payload, path):
    envelope = {
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "payload": payload,
    }
    with open(path, "w") as fh:
        json.dump(envelope, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_results_csv(results, path):
    """Flat delimited companion to the JSON report, one row per test."""
    cols = ["suite", "test", "group", "t", "lhs", "rhs", "rel_err", "tail", "pass"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in results:
            row = {c: r.get(c, "") for c in cols}
            w.writerow(row)
    return path
